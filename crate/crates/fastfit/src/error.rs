use std::path::PathBuf;

/// Everything the file formats and commands can fail with.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Wav(String),
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported {format} version {found}")]
    Version { format: &'static str, found: u64 },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("out of bounds: {0}")]
    Bounds(String),
    #[error("payload size: header implies {expected} bytes, found {found}")]
    PayloadSize { expected: u64, found: u64 },
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),
    #[error(transparent)]
    Core(#[from] fastfit_core::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Wav(_) => "wav",
            Error::BadMagic { .. } => "bad-magic",
            Error::Version { .. } => "version",
            Error::Header(_) => "header",
            Error::Bounds(_) => "bounds",
            Error::PayloadSize { .. } => "payload-size",
            Error::Checksum { .. } => "checksum",
            Error::ConfigMismatch(_) => "config",
            Error::Core(_) => "core",
            Error::Json(_) => "json",
            Error::Usage(_) => "usage",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use alloc::string::String;

/// Errors produced by the vocoder core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("overlap-add normalization vanishes at sample {index} (denominator {value:e})")]
    ColaViolation { index: usize, value: f64 },
    #[error("filterbank has {n_mels} bands but only {bins} frequency bins")]
    OverResolved { n_mels: usize, bins: usize },
    #[error("step {t} outside 1..={t_max}")]
    StepOutOfRange { t: usize, t_max: usize },
    #[error("weights do not match model: {0}")]
    Integrity(String),
    #[error("refinement step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Attach the refinement step index to an error.
    pub fn at_step(self, step: usize) -> Self {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep {
                step,
                source: alloc::boxed::Box::new(e),
            },
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

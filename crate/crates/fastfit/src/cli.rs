//! Command-line definitions and dispatch.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fastfit_core::model::{EncoderKind, StftRepresentation};
use fastfit_core::refine::PriorKind;

use crate::bench::{self, BenchSettings};
use crate::commands::{self, VocodeSettings, WeightSource};
use crate::error::{Error, Result};
use crate::fmel::Analysis;

#[derive(Debug, Parser)]
#[command(name = "fastfit", version, about = "Mel-spectrogram to waveform with few refinement steps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract log-mel features from a 24 kHz mono WAV.
    Analyze(AnalyzeArgs),
    /// Vocode .fmel files to WAV.
    Vocode(VocodeArgs),
    /// Write the shaped initial noise for a .fmel file.
    Noise(NoiseArgs),
    /// Print the multi-resolution STFT distance between two WAVs as JSON.
    Metric(MetricArgs),
    /// Time the refinement loop for both encoder variants.
    Benchmark(BenchArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub wav_in: PathBuf,
    pub mel_out: PathBuf,
    #[arg(long, default_value_t = 1024)]
    pub n_fft: usize,
    #[arg(long, default_value_t = 256)]
    pub hop: usize,
    #[arg(long, default_value_t = 1024)]
    pub win: usize,
    #[arg(long, default_value_t = 100)]
    pub n_mels: usize,
    #[arg(long, default_value_t = 0.0)]
    pub fmin: f64,
    #[arg(long, default_value_t = 12000.0)]
    pub fmax: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Spectrogram,
    Envelope,
    GriffinLim,
    /// White noise, for debugging.
    Identity,
}

impl From<PriorArg> for PriorKind {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::Spectrogram => PriorKind::Spectrogram,
            PriorArg::Envelope => PriorKind::Envelope,
            PriorArg::GriffinLim => PriorKind::GriffinLim,
            PriorArg::Identity => PriorKind::Identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncoderArg {
    Stft,
    Neural,
    NoSkip,
}

impl From<EncoderArg> for EncoderKind {
    fn from(e: EncoderArg) -> Self {
        match e {
            EncoderArg::Stft => EncoderKind::StftBank,
            EncoderArg::Neural => EncoderKind::Neural,
            EncoderArg::NoSkip => EncoderKind::SingleStftNoSkip,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RepresentationArg {
    Cartesian,
    Magnitude,
}

impl From<RepresentationArg> for StftRepresentation {
    fn from(r: RepresentationArg) -> Self {
        match r {
            RepresentationArg::Cartesian => StftRepresentation::Cartesian,
            RepresentationArg::Magnitude => StftRepresentation::Magnitude,
        }
    }
}

#[derive(Debug, Args)]
pub struct VocodeArgs {
    /// One or more .fmel files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output WAV for a single input, otherwise a directory.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Trained weights (.ffw).
    #[arg(long, conflicts_with = "random_seed")]
    pub weights: Option<PathBuf>,
    /// Initialize random weights from this seed instead of loading a file.
    #[arg(long)]
    pub random_seed: Option<u64>,
    #[arg(long, default_value_t = 3)]
    pub iterations: usize,
    #[arg(long, value_enum, default_value_t = PriorArg::Spectrogram)]
    pub prior: PriorArg,
    #[arg(long, default_value_t = 0.5)]
    pub gain_exponent: f64,
    #[arg(long, value_enum)]
    pub encoder: Option<EncoderArg>,
    #[arg(long, value_enum)]
    pub representation: Option<RepresentationArg>,
    /// Seed for the prior noise and the latent vector.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Append a JSON-lines run report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Files vocoded in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    pub mel_in: PathBuf,
    pub wav_out: PathBuf,
    #[arg(long, value_enum, default_value_t = PriorArg::Spectrogram)]
    pub prior: PriorArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    pub reference: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 6.0)]
    pub seconds: f64,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    /// Variants to time; both by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub encoder: Vec<EncoderArg>,
    #[arg(long, default_value_t = 3)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn write_line(out: &mut dyn Write, line: &str) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Analyze(a) => {
            let analysis = Analysis {
                n_fft: a.n_fft,
                hop: a.hop,
                win_length: a.win,
                n_mels: a.n_mels,
                fmin: a.fmin,
                fmax: a.fmax,
                ..Analysis::default()
            };
            commands::analyze(&a.wav_in, &a.mel_out, &analysis)?;
        }
        Command::Vocode(a) => {
            let weights = match (a.weights, a.random_seed) {
                (Some(p), None) => WeightSource::File(p),
                (None, Some(s)) => WeightSource::Random(s),
                _ => return Err(Error::Usage("pass exactly one of --weights or --random-seed".into())),
            };
            let settings = VocodeSettings {
                weights,
                iterations: a.iterations,
                prior: a.prior.into(),
                gain_exponent: a.gain_exponent,
                encoder: a.encoder.map(Into::into),
                representation: a.representation.map(Into::into),
                seed: a.seed,
                jobs: a.jobs,
            };
            let report = commands::vocode_files(&a.inputs, &a.output, &settings)?;
            if let Some(path) = a.report {
                report.append_to(&path)?;
            }
        }
        Command::Noise(a) => {
            commands::noise(&a.mel_in, &a.wav_out, a.prior.into(), a.seed)?;
        }
        Command::Metric(a) => {
            let line = commands::metric(&a.reference, &a.test)?;
            write_line(out, &serde_json::to_string(&line)?)?;
        }
        Command::Benchmark(a) => {
            let encoders = if a.encoder.is_empty() {
                vec![EncoderKind::StftBank, EncoderKind::Neural]
            } else {
                a.encoder.iter().map(|&e| e.into()).collect()
            };
            if encoders.contains(&EncoderKind::SingleStftNoSkip) {
                return Err(Error::Usage("benchmark compares the stft and neural encoders".into()));
            }
            let report = bench::run(&BenchSettings {
                seconds: a.seconds,
                runs: a.runs,
                encoders,
                iterations: a.iterations,
                seed: a.seed,
            })?;
            let json = serde_json::to_string(&report)?;
            write_line(out, &json)?;
            if let Some(path) = a.report {
                std::fs::write(&path, format!("{json}\n")).map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    Ok(())
}

/// One-line description of an error for the terminal.
pub fn error_line(e: &Error) -> String {
    let mut msg = e.to_string();
    let mut source = std::error::Error::source(e);
    while let Some(s) = source {
        let text = s.to_string();
        if !msg.contains(&text) {
            msg.push_str(": ");
            msg.push_str(&text);
        }
        source = s.source();
    }
    format!("error[{}]: {}", e.kind(), msg.replace('\n', " "))
}

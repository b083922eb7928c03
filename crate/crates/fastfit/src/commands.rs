//! The work behind each CLI subcommand, callable without a process.

use std::path::{Path, PathBuf};
use std::time::Instant;

use fastfit_core::dsp::{log_mel, AudioBuffer, MelFilterbank, MelSpectrogram};
use fastfit_core::losses::{mr_stft, MrStftConfig};
use fastfit_core::model::{init_weights, EncoderKind, ModelConfig, StftRepresentation, WeightStore};
use fastfit_core::refine::{initial_point, vocode, PriorKind, VocodeOptions, DEFAULT_ITERATIONS};
use log::{debug, info};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmel::Analysis;
use crate::report::{FileRecord, RunReport};
use crate::{ffw, fmel, wav};

/// Extend `x` to a whole number of hops by mirroring its tail.
pub fn pad_to_hop(x: &[f64], hop: usize) -> Vec<f64> {
    let len = x.len().div_ceil(hop).max(1) * hop;
    let mut out = x.to_vec();
    let mut i = x.len().saturating_sub(2);
    while out.len() < len {
        out.push(if x.len() >= 2 { x[i] } else { 0.0 });
        i = i.saturating_sub(1);
    }
    out
}

/// Log-mel features of a waveform, padded so `frames = len / hop + 1`.
pub fn analyze_audio(audio: &AudioBuffer, analysis: &Analysis, fb: &MelFilterbank) -> Result<MelSpectrogram> {
    if audio.sample_rate != analysis.sample_rate {
        return Err(Error::Usage(format!(
            "audio is {} Hz, analysis expects {} Hz",
            audio.sample_rate, analysis.sample_rate
        )));
    }
    if audio.is_empty() {
        return Err(Error::Usage("audio has no samples".into()));
    }
    let padded = AudioBuffer::new(pad_to_hop(&audio.samples, analysis.hop), audio.sample_rate);
    Ok(log_mel(&padded, &analysis.params(), fb)?)
}

pub fn analyze(wav_in: &Path, mel_out: &Path, analysis: &Analysis) -> Result<MelSpectrogram> {
    let audio = wav::read(wav_in)?;
    let fb = analysis.filterbank()?;
    let c = analyze_audio(&audio, analysis, &fb)?;
    fmel::write(&c, mel_out)?;
    info!("{}: {} frames", mel_out.display(), c.frames);
    Ok(c)
}

/// Where the generator weights come from.
#[derive(Debug, Clone)]
pub enum WeightSource {
    File(PathBuf),
    Random(u64),
}

#[derive(Debug, Clone)]
pub struct VocodeSettings {
    pub weights: WeightSource,
    pub iterations: usize,
    pub prior: PriorKind,
    pub gain_exponent: f64,
    pub encoder: Option<EncoderKind>,
    pub representation: Option<StftRepresentation>,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for VocodeSettings {
    fn default() -> Self {
        VocodeSettings {
            weights: WeightSource::Random(0),
            iterations: DEFAULT_ITERATIONS,
            prior: PriorKind::Spectrogram,
            gain_exponent: 0.5,
            encoder: None,
            representation: None,
            seed: 0,
            jobs: 1,
        }
    }
}

/// Config for freshly initialized weights; `t_max` grows to cover the
/// requested iteration count.
pub fn random_config(encoder: EncoderKind, representation: StftRepresentation, iterations: usize) -> ModelConfig {
    ModelConfig {
        t_max: iterations.max(3),
        encoder_kind: encoder,
        stft_representation: representation,
        ..ModelConfig::default()
    }
}

pub fn load_model(s: &VocodeSettings) -> Result<(ModelConfig, WeightStore)> {
    match &s.weights {
        WeightSource::Random(seed) => {
            let config = random_config(
                s.encoder.unwrap_or(EncoderKind::StftBank),
                s.representation.unwrap_or(StftRepresentation::Cartesian),
                s.iterations,
            );
            let store = init_weights(&config, *seed)?;
            Ok((config, store))
        }
        WeightSource::File(path) => {
            let (config, store) = ffw::load(path, None)?;
            if s.encoder.is_some_and(|e| e != config.encoder_kind) {
                return Err(Error::Usage(format!(
                    "weights were built for the {} encoder",
                    config.encoder_kind.as_str()
                )));
            }
            if s.representation.is_some_and(|r| r != config.stft_representation) {
                return Err(Error::Usage("weights were built for another STFT representation".into()));
            }
            Ok((config, store))
        }
    }
}

/// The analysis settings a model consumes.
pub fn model_analysis(config: &ModelConfig) -> Analysis {
    Analysis {
        n_fft: config.analysis.n_fft,
        hop: config.analysis.hop,
        win_length: config.analysis.win_length,
        n_mels: config.n_mels,
        ..Analysis::default()
    }
}

/// A loaded model ready to vocode any number of feature files.
pub struct Vocoder {
    pub config: ModelConfig,
    pub weights: WeightStore,
    pub analysis: Analysis,
    pub fb: MelFilterbank,
    pub options: VocodeOptions,
}

impl Vocoder {
    pub fn new(s: &VocodeSettings) -> Result<Self> {
        if !(s.gain_exponent.is_finite() && s.gain_exponent > 0.0) {
            return Err(Error::Usage(format!("gain exponent {} must be positive", s.gain_exponent)));
        }
        if s.iterations == 0 {
            return Err(Error::Usage("at least one iteration is required".into()));
        }
        let (config, weights) = load_model(s)?;
        let analysis = model_analysis(&config);
        let fb = analysis.filterbank()?;
        Ok(Vocoder {
            config,
            weights,
            analysis,
            fb,
            options: VocodeOptions {
                iterations: s.iterations,
                prior: s.prior,
                gain_exponent: s.gain_exponent,
                seed: s.seed,
            },
        })
    }

    /// Vocode one feature set; returns audio, wall time and forward calls.
    pub fn run(&self, c: &MelSpectrogram) -> Result<(AudioBuffer, f64, usize)> {
        self.analysis.check(c)?;
        let start = Instant::now();
        let out = vocode(c, &self.config, &self.weights, &self.fb, &self.options, &mut ())?;
        let wall = start.elapsed().as_secs_f64();
        Ok((out.audio, wall, out.forward_calls))
    }

    pub fn run_file(&self, input: &Path, output: &Path) -> Result<FileRecord> {
        let c = fmel::read(input, Some(&self.analysis))?;
        let (audio, wall, calls) = self.run(&c)?;
        info!("{}: forward calls: {calls}", input.display());
        wav::write(&audio, output)?;
        Ok(FileRecord::new(
            input.display().to_string(),
            output.display().to_string(),
            c.frames,
            audio.duration_s(),
            wall,
            calls,
        ))
    }
}

/// Output paths for `inputs`: `output` itself for one input, otherwise
/// `output/<stem>.wav`.
pub fn output_paths(inputs: &[PathBuf], output: &Path) -> Result<Vec<PathBuf>> {
    if inputs.is_empty() {
        return Err(Error::Usage("no input files".into()));
    }
    if inputs.len() == 1 && !output.is_dir() {
        return Ok(vec![output.to_path_buf()]);
    }
    std::fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;
    let paths: Vec<PathBuf> = inputs
        .iter()
        .map(|p| {
            let stem = p.file_stem().map(|s| s.to_os_string()).unwrap_or_else(|| "out".into());
            output.join(stem).with_extension("wav")
        })
        .collect();
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = paths.iter().find(|p| !seen.insert(*p)) {
        return Err(Error::Usage(format!("two inputs map to {}", dup.display())));
    }
    Ok(paths)
}

pub fn vocode_files(inputs: &[PathBuf], output: &Path, s: &VocodeSettings) -> Result<RunReport> {
    let outputs = output_paths(inputs, output)?;
    let vocoder = Vocoder::new(s)?;
    debug!(
        "{} encoder, {} parameters, config {:016x}",
        vocoder.config.encoder_kind.as_str(),
        vocoder.weights.param_count(),
        vocoder.config.hash()
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(s.jobs.max(1))
        .build()
        .map_err(|e| Error::Usage(e.to_string()))?;
    let records = pool.install(|| {
        inputs
            .par_iter()
            .zip(&outputs)
            .map(|(i, o)| vocoder.run_file(i, o))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(RunReport::new(
        records,
        vocoder.weights.param_count(),
        vocoder.config.encoder_kind.as_str(),
        s.iterations,
    ))
}

/// The initial point `y_T` alone.
pub fn noise(mel_in: &Path, wav_out: &Path, prior: PriorKind, seed: u64) -> Result<AudioBuffer> {
    let analysis = Analysis::default();
    let c = fmel::read(mel_in, Some(&analysis))?;
    let fb = analysis.filterbank()?;
    let y = initial_point(&c, &fb, &analysis.params(), prior, seed)?;
    wav::write(&y, wav_out)?;
    Ok(y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricLine {
    pub reference: String,
    pub test: String,
    pub duration_s: f64,
    pub mr_stft: f64,
}

pub fn metric(reference: &Path, test: &Path) -> Result<MetricLine> {
    let x = wav::read(reference)?;
    let y = wav::read(test)?;
    if x.len() != y.len() {
        return Err(Error::Usage(format!(
            "reference has {} samples, test has {}",
            x.len(),
            y.len()
        )));
    }
    Ok(MetricLine {
        reference: reference.display().to_string(),
        test: test.display().to_string(),
        duration_s: x.duration_s(),
        mr_stft: mr_stft(&x, &y, &MrStftConfig::default())?,
    })
}

//! Wall-clock comparison of the encoder variants.

use std::time::Instant;

use fastfit_core::dsp::{AudioBuffer, MelSpectrogram, SAMPLE_RATE};
use fastfit_core::model::{init_weights, param_count, EncoderKind, StftRepresentation};
use fastfit_core::refine::{vocode, Marker, Observer, PriorKind, VocodeOptions};
use fastfit_core::rng::normal_vec;
use log::info;
use serde::{Deserialize, Serialize};

use crate::commands::{analyze_audio, model_analysis, random_config};
use crate::error::{Error, Result};
use crate::report::rtf;

#[derive(Debug, Clone)]
pub struct BenchSettings {
    pub seconds: f64,
    pub runs: usize,
    pub encoders: Vec<EncoderKind>,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings {
            seconds: 6.0,
            runs: 20,
            encoders: vec![EncoderKind::StftBank, EncoderKind::Neural],
            iterations: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantResult {
    pub encoder_kind: String,
    pub params: usize,
    /// Empty when the variant was not timed.
    pub wall_times_s: Vec<f64>,
    pub mean_wall_time_s: Option<f64>,
    pub rtf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchReport {
    pub seconds: f64,
    pub samples: usize,
    pub frames: usize,
    pub runs: usize,
    #[serde(rename = "T")]
    pub iterations: usize,
    /// What the wall times cover.
    pub measured: String,
    pub variants: Vec<VariantResult>,
    /// stft_bank params over neural params.
    pub param_ratio: f64,
    /// neural mean wall time over stft_bank mean wall time.
    pub speed_ratio: Option<f64>,
}

/// Records the instants at which the refinement loop starts and ends.
#[derive(Debug, Default)]
pub struct LoopTimer {
    start: Option<Instant>,
    end: Option<Instant>,
}

impl Observer for LoopTimer {
    fn mark(&mut self, marker: Marker) {
        match marker {
            Marker::LoopStart => self.start = Some(Instant::now()),
            Marker::LoopEnd => self.end = Some(Instant::now()),
            Marker::StepDone(_) => {}
        }
    }
}

impl LoopTimer {
    pub fn elapsed_s(&self) -> Option<f64> {
        Some(self.end?.checked_duration_since(self.start?)?.as_secs_f64())
    }
}

/// Log-mel of seeded white noise with `frames * hop` samples.
pub fn synthetic_mel(seconds: f64, seed: u64) -> Result<MelSpectrogram> {
    if !(seconds.is_finite() && seconds > 0.0 && seconds <= 600.0) {
        return Err(Error::Usage(format!("benchmark duration {seconds} s outside (0, 600]")));
    }
    let analysis = crate::fmel::Analysis::default();
    let hop = analysis.hop;
    // One hop less so that padding yields exactly the target sample count.
    let len = ((seconds * SAMPLE_RATE as f64).round() as usize).div_ceil(hop).max(2) * hop - hop;
    let audio = AudioBuffer::from_samples(normal_vec(seed, "bench-mel", len).iter().map(|v| 0.1 * v).collect());
    analyze_audio(&audio, &analysis, &analysis.filterbank()?)
}

pub fn run(s: &BenchSettings) -> Result<BenchReport> {
    if s.runs == 0 || s.iterations == 0 || s.encoders.is_empty() {
        return Err(Error::Usage("benchmark needs runs, iterations and an encoder".into()));
    }
    let c = synthetic_mel(s.seconds, s.seed)?;
    let samples = c.frames * c.params.hop;
    let duration = samples as f64 / SAMPLE_RATE as f64;
    let kinds = [EncoderKind::StftBank, EncoderKind::Neural];
    let configs: Vec<_> = kinds
        .iter()
        .map(|&k| random_config(k, StftRepresentation::Cartesian, s.iterations))
        .collect();
    let fb = model_analysis(&configs[0]).filterbank()?;
    let options = VocodeOptions {
        iterations: s.iterations,
        prior: PriorKind::Spectrogram,
        gain_exponent: 0.5,
        seed: s.seed,
    };
    let timed: Vec<usize> = (0..kinds.len()).filter(|&i| s.encoders.contains(&kinds[i])).collect();
    let weights: Vec<_> = timed
        .iter()
        .map(|&i| init_weights(&configs[i], s.seed))
        .collect::<Result<_, _>>()?;
    let mut times = vec![Vec::new(); kinds.len()];
    // Run 0 warms caches and is discarded; variants alternate within a run.
    for run in 0..=s.runs {
        for (&i, w) in timed.iter().zip(&weights) {
            let mut timer = LoopTimer::default();
            vocode(&c, &configs[i], w, &fb, &options, &mut timer)?;
            let t = timer
                .elapsed_s()
                .ok_or_else(|| Error::Usage("refinement loop markers missing".into()))?;
            if run > 0 {
                info!("run {run} {}: {t:.3} s", kinds[i].as_str());
                times[i].push(t);
            }
        }
    }
    let variants: Vec<VariantResult> = kinds
        .iter()
        .zip(&configs)
        .zip(times)
        .map(|((k, cfg), t)| {
            let mean = (!t.is_empty()).then(|| t.iter().sum::<f64>() / t.len() as f64);
            VariantResult {
                encoder_kind: k.as_str().into(),
                params: param_count(cfg),
                wall_times_s: t,
                mean_wall_time_s: mean,
                rtf: mean.map(|m| rtf(duration, m)),
            }
        })
        .collect();
    let speed_ratio = match (variants[0].mean_wall_time_s, variants[1].mean_wall_time_s) {
        (Some(a), Some(b)) => Some(b / a),
        _ => None,
    };
    Ok(BenchReport {
        seconds: duration,
        samples,
        frames: c.frames,
        runs: s.runs,
        iterations: s.iterations,
        measured: "refinement loop (LoopStart..LoopEnd markers)".into(),
        param_ratio: variants[0].params as f64 / variants[1].params as f64,
        variants,
        speed_ratio,
    })
}

//! Fixed-point refinement: start from shaped noise, then repeatedly subtract
//! the predicted noise and renormalize the power to that of the mel input.

use alloc::format;
use core::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::dsp::{griffin_lim, mean_power, mel_to_linear_amplitude, mel_to_linear_power, stft, AudioBuffer};
use crate::dsp::{MelFilterbank, MelSpectrogram, StftParams};
use crate::error::{Error, Result};
use crate::model::{sample_latent, ConditioningBundle, Generator, ModelConfig, WeightStore};
use crate::prior::{
    build_filter_from_envelope, build_filter_from_spectrogram, prior_noise, sample_prior, DEFAULT_LIFTER_ORDER,
};

/// Added to the measured power before dividing.
pub const POWER_EPS: f64 = 1e-8;
/// Square-root gain: the renormalized signal's power equals the target.
pub const DEFAULT_GAIN_EXPONENT: f64 = 0.5;
pub const GRIFFIN_LIM_ITERS: usize = 32;
pub const DEFAULT_ITERATIONS: usize = 3;

/// Source of the initial point `y_T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    /// Noise shaped by the pseudoinverse spectrogram of `c`.
    Spectrogram,
    /// Noise shaped by a cepstral envelope of that spectrogram.
    Envelope,
    /// Griffin-Lim reconstruction used directly.
    GriffinLim,
    /// Unshaped white noise.
    Identity,
}

impl PriorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PriorKind::Spectrogram => "spectrogram",
            PriorKind::Envelope => "envelope",
            PriorKind::GriffinLim => "griffin-lim",
            PriorKind::Identity => "identity",
        }
    }
}

/// Anything that estimates the noise in `y` at step `t`.
pub trait NoisePredictor {
    fn predict(&self, y: &AudioBuffer, t: usize) -> Result<AudioBuffer>;
}

/// A generator bound to one utterance's conditioning.
pub struct BoundGenerator<'a, 'w> {
    pub generator: &'a Generator<'w>,
    pub bundle: &'a ConditioningBundle,
}

impl NoisePredictor for BoundGenerator<'_, '_> {
    fn predict(&self, y: &AudioBuffer, t: usize) -> Result<AudioBuffer> {
        self.generator.forward(y, self.bundle, t)
    }
}

/// Counts calls to the wrapped predictor.
pub struct CountingPredictor<P> {
    pub inner: P,
    calls: Cell<usize>,
}

impl<P> CountingPredictor<P> {
    pub fn new(inner: P) -> Self {
        CountingPredictor {
            inner,
            calls: Cell::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.get()
    }
}

impl<P: NoisePredictor> NoisePredictor for CountingPredictor<P> {
    fn predict(&self, y: &AudioBuffer, t: usize) -> Result<AudioBuffer> {
        self.calls.set(self.calls.get() + 1);
        self.inner.predict(y, t)
    }
}

/// Progress markers emitted while vocoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    /// Initial point drawn; the refinement loop starts.
    LoopStart,
    /// Step `t` finished.
    StepDone(usize),
    LoopEnd,
}

pub trait Observer {
    fn mark(&mut self, marker: Marker);
}

impl Observer for () {
    fn mark(&mut self, _: Marker) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementState {
    pub y: AudioBuffer,
    pub t: usize,
    pub p_c: f64,
    pub gain_exponent: f64,
    pub s: f64,
}

impl RefinementState {
    pub fn new(y: AudioBuffer, t: usize, p_c: f64) -> Self {
        RefinementState {
            y,
            t,
            p_c,
            gain_exponent: DEFAULT_GAIN_EXPONENT,
            s: POWER_EPS,
        }
    }
}

/// Mean power of the pseudoinverse power spectrogram of `c`.
pub fn target_power(c: &MelSpectrogram, fb: &MelFilterbank) -> Result<f64> {
    mean_power(&mel_to_linear_power(c, fb)?.values)
}

/// Mean of `|STFT(y)|^2`.
pub fn signal_power(y: &AudioBuffer, params: &StftParams) -> Result<f64> {
    mean_power(&stft(y, params)?.power().values)
}

/// One application of the denoising map: subtract the predicted noise, then
/// scale by `(p_c / (P + s))^gain_exponent`.
pub fn denoise_step(
    state: RefinementState,
    predictor: &dyn NoisePredictor,
    params: &StftParams,
) -> Result<RefinementState> {
    let t = state.t;
    if t == 0 {
        return Err(Error::StepOutOfRange { t, t_max: 0 });
    }
    if !(state.p_c >= 0.0) || !state.p_c.is_finite() {
        return Err(Error::param(format!("target power {} must be finite and nonnegative", state.p_c)).at_step(t));
    }
    let noise = predictor.predict(&state.y, t).map_err(|e| e.at_step(t))?;
    if noise.len() != state.y.len() {
        return Err(Error::shape(format!(
            "noise estimate has {} samples, iterate {}",
            noise.len(),
            state.y.len()
        ))
        .at_step(t));
    }
    if noise.samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("noise estimate").at_step(t));
    }
    let mut y = state.y;
    for (v, n) in y.samples.iter_mut().zip(&noise.samples) {
        *v -= n;
    }
    let power = signal_power(&y, params).map_err(|e| e.at_step(t))?;
    let gain = libm::pow(state.p_c / (power + state.s), state.gain_exponent);
    if !gain.is_finite() {
        return Err(Error::NonFinite("power gain").at_step(t));
    }
    y.samples.iter_mut().for_each(|v| *v *= gain);
    Ok(RefinementState {
        y,
        t: t - 1,
        p_c: state.p_c,
        gain_exponent: state.gain_exponent,
        s: state.s,
    })
}

/// Initial point `y_T` of `frames * hop` samples.
pub fn initial_point(
    c: &MelSpectrogram,
    fb: &MelFilterbank,
    params: &StftParams,
    prior: PriorKind,
    seed: u64,
) -> Result<AudioBuffer> {
    let len = c.frames * params.hop;
    match prior {
        PriorKind::Spectrogram => sample_prior(&build_filter_from_spectrogram(c, fb, params)?, params, len, seed),
        PriorKind::Envelope => sample_prior(
            &build_filter_from_envelope(c, fb, params, DEFAULT_LIFTER_ORDER)?,
            params,
            len,
            seed,
        ),
        PriorKind::GriffinLim => {
            let y = griffin_lim(&mel_to_linear_amplitude(c, fb)?, params, GRIFFIN_LIM_ITERS)?;
            let mut samples = y.samples;
            samples.resize(len, 0.0);
            Ok(AudioBuffer::new(samples, y.sample_rate))
        }
        PriorKind::Identity => {
            c.validate()?;
            Ok(prior_noise(len, seed))
        }
    }
}

/// Runs `iterations` denoising steps from `y_T`, `t = iterations..=1`.
pub fn refine(
    y_t: AudioBuffer,
    p_c: f64,
    iterations: usize,
    gain_exponent: f64,
    predictor: &dyn NoisePredictor,
    params: &StftParams,
    observer: &mut dyn Observer,
) -> Result<AudioBuffer> {
    let mut state = RefinementState::new(y_t, iterations, p_c);
    state.gain_exponent = gain_exponent;
    observer.mark(Marker::LoopStart);
    while state.t > 0 {
        let t = state.t;
        state = denoise_step(state, predictor, params)?;
        observer.mark(Marker::StepDone(t));
    }
    observer.mark(Marker::LoopEnd);
    Ok(state.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocodeOptions {
    pub iterations: usize,
    pub prior: PriorKind,
    pub gain_exponent: f64,
    pub seed: u64,
}

impl Default for VocodeOptions {
    fn default() -> Self {
        VocodeOptions {
            iterations: DEFAULT_ITERATIONS,
            prior: PriorKind::Spectrogram,
            gain_exponent: DEFAULT_GAIN_EXPONENT,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocoded {
    pub audio: AudioBuffer,
    pub forward_calls: usize,
}

/// Mel features to waveform with the given generator weights.
pub fn vocode(
    c: &MelSpectrogram,
    config: &ModelConfig,
    weights: &WeightStore,
    fb: &MelFilterbank,
    options: &VocodeOptions,
    observer: &mut dyn Observer,
) -> Result<Vocoded> {
    if options.iterations > config.t_max {
        return Err(Error::StepOutOfRange {
            t: options.iterations,
            t_max: config.t_max,
        });
    }
    let params = config.analysis;
    c.validate()?;
    if c.params != params {
        return Err(Error::shape("mel analysis parameters differ from the model's"));
    }
    let generator = Generator::new(config, weights)?;
    let p_c = target_power(c, fb)?;
    let y_t = initial_point(c, fb, &params, options.prior, options.seed)?;
    let bundle = generator.condition(c, &sample_latent(options.seed, config.z_dim))?;
    let predictor = CountingPredictor::new(BoundGenerator {
        generator: &generator,
        bundle: &bundle,
    });
    let audio = refine(
        y_t,
        p_c,
        options.iterations,
        options.gain_exponent,
        &predictor,
        &params,
        observer,
    )?;
    Ok(Vocoded {
        audio,
        forward_calls: predictor.calls(),
    })
}

//! Prior-adapted initial point `y_T = istft(M * stft(eps))`.
//!
//! `M` is a per-frame minimum-phase transfer function whose magnitude comes
//! from the conditioning mel-spectrogram, either directly (pseudoinverse
//! spectrogram) or through a cepstral envelope.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dsp::cepstrum;
use crate::dsp::{istft, mel_to_linear_amplitude, stft, AudioBuffer, FftPlan, MelFilterbank, MelSpectrogram, StftParams};
use crate::error::{Error, Result};
use crate::rng;

/// Default cepstral lifter order for the envelope variant.
pub const DEFAULT_LIFTER_ORDER: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorSource {
    Spectrogram,
    SpectralEnvelope,
    Identity,
}

/// Frames x bins complex transfer functions.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorFilter {
    pub frames: usize,
    pub bins: usize,
    pub values: Vec<Complex64>,
    pub source: PriorSource,
}

impl PriorFilter {
    pub fn identity(frames: usize, bins: usize) -> Self {
        PriorFilter {
            frames,
            bins,
            values: vec![Complex64::new(1.0, 0.0); frames * bins],
            source: PriorSource::Identity,
        }
    }

    pub fn frame(&self, m: usize) -> &[Complex64] {
        &self.values[m * self.bins..(m + 1) * self.bins]
    }

    pub fn scaled(&self, a: f64) -> Self {
        PriorFilter {
            values: self.values.iter().map(|v| v * a).collect(),
            ..self.clone()
        }
    }
}

fn check_params(fb: &MelFilterbank, params: &StftParams) -> Result<()> {
    params.validate()?;
    if params.n_fft != fb.n_fft {
        return Err(Error::shape(format!(
            "filterbank n_fft {} vs analysis n_fft {}",
            fb.n_fft, params.n_fft
        )));
    }
    Ok(())
}

/// `M` from the pseudoinverse spectrogram of `c`: amplitude
/// `sqrt(mel_to_linear_power(c))` floored at 1e-8, minimum phase per frame.
pub fn build_filter_from_spectrogram(
    c: &MelSpectrogram,
    fb: &MelFilterbank,
    params: &StftParams,
) -> Result<PriorFilter> {
    check_params(fb, params)?;
    let amp = mel_to_linear_amplitude(c, fb)?;
    let plan = FftPlan::new(params.n_fft);
    let mut values = Vec::with_capacity(amp.values.len());
    for m in 0..amp.frames {
        let log_mag = cepstrum::log_magnitude(amp.frame(m))?;
        values.extend(cepstrum::minimum_phase_with_plan(&log_mag, params.n_fft, &plan)?);
    }
    Ok(PriorFilter {
        frames: amp.frames,
        bins: amp.bins,
        values,
        source: PriorSource::Spectrogram,
    })
}

/// `M` from a cepstral spectral envelope: the floored log amplitude of each
/// frame is low-pass liftered to `lifter_order` coefficients, then completed
/// to minimum phase.
pub fn build_filter_from_envelope(
    c: &MelSpectrogram,
    fb: &MelFilterbank,
    params: &StftParams,
    lifter_order: usize,
) -> Result<PriorFilter> {
    check_params(fb, params)?;
    let bins = params.bins();
    if lifter_order >= bins {
        return Err(Error::param(format!(
            "lifter order {lifter_order} must be below {bins} bins"
        )));
    }
    let amp = mel_to_linear_amplitude(c, fb)?;
    let plan = FftPlan::new(params.n_fft);
    let mut values = Vec::with_capacity(amp.values.len());
    for m in 0..amp.frames {
        let log_mag = cepstrum::log_magnitude(amp.frame(m))?;
        let smooth = cepstrum::lifter_log_magnitude(&log_mag, params.n_fft, lifter_order, &plan);
        values.extend(cepstrum::minimum_phase_with_plan(&smooth, params.n_fft, &plan)?);
    }
    Ok(PriorFilter {
        frames: amp.frames,
        bins,
        values,
        source: PriorSource::SpectralEnvelope,
    })
}

/// Log envelope of one amplitude frame (used for diagnostics and tests).
pub fn log_envelope(amplitude: &[f64], n_fft: usize, lifter_order: usize) -> Result<Vec<f64>> {
    let log_mag = cepstrum::log_magnitude(amplitude)?;
    let plan = FftPlan::new(n_fft);
    Ok(cepstrum::lifter_log_magnitude(&log_mag, n_fft, lifter_order, &plan))
}

/// Filters `eps` frame by frame: `istft(M * stft(eps))`. `eps` must hold
/// exactly `filter.frames * hop` samples. The centered analysis yields one
/// frame more than the filter has; it reuses the last filter frame.
pub fn apply_prior(filter: &PriorFilter, params: &StftParams, eps: &AudioBuffer) -> Result<AudioBuffer> {
    params.validate()?;
    if filter.bins != params.bins() || filter.values.len() != filter.frames * filter.bins {
        return Err(Error::shape("prior filter dimensions disagree with parameters"));
    }
    if filter.frames == 0 {
        return Err(Error::EmptyInput("prior filter"));
    }
    if eps.len() != filter.frames * params.hop {
        return Err(Error::shape(format!(
            "noise of {} samples for {} filter frames at hop {}",
            eps.len(),
            filter.frames,
            params.hop
        )));
    }
    let mut spec = stft(eps, params)?;
    for m in 0..spec.frames {
        let h = filter.frame(m.min(filter.frames - 1));
        for (v, g) in spec.frame_mut(m).iter_mut().zip(h) {
            *v *= g;
        }
    }
    let mut out = istft(&spec)?;
    out.sample_rate = eps.sample_rate;
    Ok(out)
}

/// Standard normal noise of `len` samples from the prior stream of `seed`.
pub fn prior_noise(len: usize, seed: u64) -> AudioBuffer {
    AudioBuffer::from_samples(rng::normal_vec(seed, rng::PRIOR_STREAM, len))
}

/// Draws `eps ~ N(0, I)` and shapes it with `filter`.
pub fn sample_prior(filter: &PriorFilter, params: &StftParams, length: usize, seed: u64) -> Result<AudioBuffer> {
    if length != filter.frames * params.hop {
        return Err(Error::shape(format!(
            "requested {length} samples for {} frames at hop {}",
            filter.frames, params.hop
        )));
    }
    apply_prior(filter, params, &prior_noise(length, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{log_mel, LOG_FLOOR};
    use core::f64::consts::PI;

    fn sine_mel(freq: f64, len: usize, fb: &MelFilterbank) -> MelSpectrogram {
        let x: Vec<f64> = (0..len).map(|n| libm::sin(2.0 * PI * freq * n as f64 / 24000.0)).collect();
        log_mel(&AudioBuffer::from_samples(x), &StftParams::default(), fb).unwrap()
    }

    #[test]
    fn silent_conditioning_gives_floor_level_filter() {
        let fb = MelFilterbank::default_24k();
        let c = MelSpectrogram::silent(6, &fb, StftParams::default());
        let f = build_filter_from_spectrogram(&c, &fb, &StftParams::default()).unwrap();
        assert_eq!(f.frames, 6);
        for v in &f.values {
            let mag = v.norm();
            assert!(mag >= cepstrum::MAG_FLOOR * (1.0 - 1e-9) && mag <= 10.0 * LOG_FLOOR, "{mag}");
        }
    }

    #[test]
    fn sine_conditioning_peaks_near_sine_bin() {
        let fb = MelFilterbank::default_24k();
        let c = sine_mel(440.0, 24000, &fb);
        let f = build_filter_from_spectrogram(&c, &fb, &StftParams::default()).unwrap();
        let target = libm::round(440.0 / 23.4375) as usize;
        for m in 3..f.frames - 3 {
            let row = f.frame(m);
            let best = (0..row.len())
                .max_by(|&a, &b| row[a].norm().partial_cmp(&row[b].norm()).unwrap())
                .unwrap();
            assert!(best.abs_diff(target) <= 1, "frame {m}: bin {best}");
        }
    }

    #[test]
    fn linear_scaling_of_conditioning_scales_filter() {
        let fb = MelFilterbank::default_24k();
        let c = sine_mel(1000.0, 6000, &fb);
        let mut c2 = c.clone();
        for v in c2.values.iter_mut() {
            *v = (*v as f64 + core::f64::consts::LN_2) as f32;
        }
        let p = StftParams::default();
        let a = build_filter_from_spectrogram(&c, &fb, &p).unwrap();
        let b = build_filter_from_spectrogram(&c2, &fb, &p).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            if x.norm() > 1e-3 {
                assert!((y.norm() / x.norm() - 2.0).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn envelope_of_flat_spectrum_is_flat() {
        let env = log_envelope(&[0.25; 513], 1024, 24).unwrap();
        for v in env {
            assert!((v - libm::log(0.25)).abs() < 1e-9);
        }
    }

    #[test]
    fn envelope_is_smoother_than_harmonic_spectrum() {
        // Harmonic comb at 200 Hz under a decaying tilt.
        let amp: Vec<f64> = (0..513)
            .map(|k| {
                let f = k as f64 * 23.4375;
                let comb = 0.05 + libm::pow(libm::cos(PI * f / 200.0), 8.0);
                comb / (1.0 + f / 1000.0)
            })
            .collect();
        let raw: Vec<f64> = amp.iter().map(|a| libm::log(*a)).collect();
        let env = log_envelope(&amp, 1024, 24).unwrap();
        let tv = |v: &[f64]| v.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>();
        assert!(tv(&env) < tv(&raw), "{} vs {}", tv(&env), tv(&raw));
    }

    #[test]
    fn full_order_envelope_equals_raw_log_magnitude() {
        let amp: Vec<f64> = (0..513).map(|k| 1.0 + libm::sin(k as f64 * 0.3).abs()).collect();
        let env = log_envelope(&amp, 1024, 512).unwrap();
        for (e, a) in env.iter().zip(&amp) {
            assert!((e - libm::log(*a)).abs() < 1e-6);
        }
    }

    #[test]
    fn lifter_order_is_bounded() {
        let fb = MelFilterbank::default_24k();
        let c = MelSpectrogram::silent(2, &fb, StftParams::default());
        assert!(build_filter_from_envelope(&c, &fb, &StftParams::default(), 513).is_err());
    }

    #[test]
    fn identity_and_zero_filters() {
        let p = StftParams::default();
        let eps = prior_noise(20 * 256, 11);
        let y = apply_prior(&PriorFilter::identity(20, 513), &p, &eps).unwrap();
        let err: f64 = y.samples.iter().zip(&eps.samples).map(|(a, b)| (a - b) * (a - b)).sum();
        let nrm: f64 = eps.samples.iter().map(|a| a * a).sum();
        assert!((err / nrm).sqrt() < 1e-6);
        let zero = PriorFilter::identity(20, 513).scaled(0.0);
        let z = sample_prior(&zero, &p, 20 * 256, 11).unwrap();
        assert!(z.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_in_filter_and_deterministic() {
        let fb = MelFilterbank::default_24k();
        let p = StftParams::default();
        let c = sine_mel(700.0, 4000, &fb);
        let f = build_filter_from_spectrogram(&c, &fb, &p).unwrap();
        let len = f.frames * 256;
        let a = sample_prior(&f, &p, len, 3).unwrap();
        let b = sample_prior(&f, &p, len, 3).unwrap();
        assert_eq!(a, b);
        let s = sample_prior(&f.scaled(2.5), &p, len, 3).unwrap();
        for (x, y) in a.samples.iter().zip(&s.samples) {
            assert!((y - 2.5 * x).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn length_mismatch_is_shape_error() {
        let p = StftParams::default();
        let f = PriorFilter::identity(4, 513);
        assert!(matches!(sample_prior(&f, &p, 1000, 0), Err(Error::Shape(_))));
    }
}

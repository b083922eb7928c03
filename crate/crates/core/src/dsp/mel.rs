//! Mel filterbank, log-mel features and their linear-power inversion.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::linalg;
use super::stft::{stft, AudioBuffer, RealSpectrogram, StftParams};
use crate::error::{Error, Result};

/// Floor applied before the log in mel features.
pub const LOG_FLOOR: f64 = 1e-5;
/// Relative singular-value cutoff for the filterbank pseudoinverse.
pub const PINV_RCOND: f64 = 1e-8;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * libm::log10(1.0 + hz / 700.0)
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (libm::pow(10.0, mel / 2595.0) - 1.0)
}

/// Triangular HTK-scale filterbank together with its pseudoinverse.
///
/// Each weight is the mean of the filter's triangle over the frequency span
/// of its FFT bin (`k * df +/- df / 2`) rather than a point sample at the bin
/// center. Narrow low-frequency filters therefore always touch at least one
/// bin, and the DC bin receives weight from the first filter.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    /// `n_mels x bins`, row-major.
    pub matrix: Vec<f64>,
    /// `bins x n_mels`, row-major.
    pub pseudoinverse: Vec<f64>,
}

impl MelFilterbank {
    /// The 100-band, 0-12 kHz filterbank for 24 kHz audio and 1024-point FFTs.
    pub fn default_24k() -> Self {
        mel_filterbank(24_000, 1024, 100, 0.0, 12_000.0).expect("default filterbank is valid")
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn row(&self, m: usize) -> &[f64] {
        let b = self.bins();
        &self.matrix[m * b..(m + 1) * b]
    }

    /// `matrix * v` for a magnitude frame.
    pub fn apply(&self, frame: &[f64], out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate() {
            *o = self.row(m).iter().zip(frame).map(|(w, x)| w * x).sum();
        }
    }

    /// `pseudoinverse * v` for a mel-domain (linear amplitude) frame.
    pub fn invert(&self, mel: &[f64], out: &mut [f64]) {
        let n = self.n_mels;
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.pseudoinverse[k * n..(k + 1) * n];
            *o = row.iter().zip(mel).map(|(w, x)| w * x).sum();
        }
    }
}

/// Integral of the unit-height triangle `(lo, peak, hi)` from `-inf` to `f`.
fn triangle_integral(f: f64, lo: f64, peak: f64, hi: f64) -> f64 {
    if f <= lo {
        0.0
    } else if f <= peak {
        (f - lo) * (f - lo) / (2.0 * (peak - lo))
    } else if f <= hi {
        (peak - lo) / 2.0 + (hi - peak) / 2.0 - (hi - f) * (hi - f) / (2.0 * (hi - peak))
    } else {
        (hi - lo) / 2.0
    }
}

pub fn mel_filterbank(
    sample_rate: u32,
    n_fft: usize,
    n_mels: usize,
    fmin: f64,
    fmax: f64,
) -> Result<MelFilterbank> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
        return Err(Error::param(format!(
            "need 0 <= fmin < fmax <= {nyquist}, got {fmin}..{fmax}"
        )));
    }
    if n_fft < 2 || n_mels == 0 {
        return Err(Error::param("n_fft must be >= 2 and n_mels >= 1"));
    }
    let bins = n_fft / 2 + 1;
    if n_mels > bins {
        return Err(Error::OverResolved { n_mels, bins });
    }
    let (mlo, mhi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mlo + (mhi - mlo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let df = sample_rate as f64 / n_fft as f64;
    let mut matrix = vec![0.0; n_mels * bins];
    for m in 0..n_mels {
        let (lo, peak, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..bins {
            let f = k as f64 * df;
            let w = (triangle_integral(f + df / 2.0, lo, peak, hi)
                - triangle_integral(f - df / 2.0, lo, peak, hi))
                / df;
            matrix[m * bins + k] = if w > 1e-15 { w } else { 0.0 };
        }
    }
    let pseudoinverse = linalg::pinv(&matrix, n_mels, bins, PINV_RCOND);
    Ok(MelFilterbank {
        sample_rate,
        n_fft,
        n_mels,
        fmin,
        fmax,
        matrix,
        pseudoinverse,
    })
}

/// Log-mel features, frames x n_mels, stored in single precision.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub frames: usize,
    pub n_mels: usize,
    pub values: Vec<f32>,
    pub sample_rate: u32,
    pub params: StftParams,
    pub fmin: f64,
    pub fmax: f64,
}

impl MelSpectrogram {
    pub fn frame(&self, m: usize) -> &[f32] {
        &self.values[m * self.n_mels..(m + 1) * self.n_mels]
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.frames * self.n_mels {
            return Err(Error::shape(format!(
                "{} mel values for {} frames x {} bands",
                self.values.len(),
                self.frames,
                self.n_mels
            )));
        }
        if self.frames == 0 {
            return Err(Error::EmptyInput("mel spectrogram"));
        }
        if !self.values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("mel spectrogram"));
        }
        Ok(())
    }

    /// All-floor (silent) features of the given size.
    pub fn silent(frames: usize, fb: &MelFilterbank, params: StftParams) -> Self {
        MelSpectrogram {
            frames,
            n_mels: fb.n_mels,
            values: vec![libm::log(LOG_FLOOR) as f32; frames * fb.n_mels],
            sample_rate: fb.sample_rate,
            params,
            fmin: fb.fmin,
            fmax: fb.fmax,
        }
    }
}

/// `ln(max(fb * |STFT(x)|, 1e-5))` per frame.
pub fn log_mel(audio: &AudioBuffer, params: &StftParams, fb: &MelFilterbank) -> Result<MelSpectrogram> {
    if params.n_fft != fb.n_fft {
        return Err(Error::shape(format!(
            "filterbank built for n_fft {} used with n_fft {}",
            fb.n_fft, params.n_fft
        )));
    }
    let spec = stft(audio, params)?;
    let mag = spec.magnitude();
    let mut values = Vec::with_capacity(spec.frames * fb.n_mels);
    let mut mel = vec![0.0; fb.n_mels];
    for m in 0..spec.frames {
        fb.apply(mag.frame(m), &mut mel);
        values.extend(mel.iter().map(|&v| libm::log(v.max(LOG_FLOOR)) as f32));
    }
    Ok(MelSpectrogram {
        frames: spec.frames,
        n_mels: fb.n_mels,
        values,
        sample_rate: audio.sample_rate,
        params: *params,
        fmin: fb.fmin,
        fmax: fb.fmax,
    })
}

fn check_compatible(c: &MelSpectrogram, fb: &MelFilterbank) -> Result<()> {
    c.validate()?;
    if c.n_mels != fb.n_mels {
        return Err(Error::shape(format!(
            "mel has {} bands, filterbank {}",
            c.n_mels, fb.n_mels
        )));
    }
    Ok(())
}

/// Linear amplitude estimate `max(pinv * exp(c), 0)`, frames x bins.
pub fn mel_to_linear_amplitude(c: &MelSpectrogram, fb: &MelFilterbank) -> Result<RealSpectrogram> {
    check_compatible(c, fb)?;
    let bins = fb.bins();
    let mut values = vec![0.0; c.frames * bins];
    let mut lin = vec![0.0; c.n_mels];
    for m in 0..c.frames {
        for (l, &v) in lin.iter_mut().zip(c.frame(m)) {
            *l = libm::exp(v as f64);
        }
        let out = &mut values[m * bins..(m + 1) * bins];
        fb.invert(&lin, out);
        for v in out.iter_mut() {
            *v = v.max(0.0);
        }
    }
    Ok(RealSpectrogram {
        frames: c.frames,
        bins,
        values,
    })
}

/// Power spectrogram implied by log-mel features: exponentiate, apply the
/// filterbank pseudoinverse, clamp negatives, square.
pub fn mel_to_linear_power(c: &MelSpectrogram, fb: &MelFilterbank) -> Result<RealSpectrogram> {
    let mut amp = mel_to_linear_amplitude(c, fb)?;
    for v in amp.values.iter_mut() {
        *v *= *v;
    }
    Ok(amp)
}

/// Arithmetic mean over every entry of a power spectrogram.
pub fn mean_power(power: &[f64]) -> Result<f64> {
    if power.is_empty() {
        return Err(Error::EmptyInput("power spectrogram"));
    }
    Ok(power.iter().sum::<f64>() / power.len() as f64)
}

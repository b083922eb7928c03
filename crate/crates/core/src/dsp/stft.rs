//! Short-time Fourier analysis and overlap-add synthesis.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::FftPlan;
use crate::error::{Error, Result};

/// Default sample rate in Hz.
pub const SAMPLE_RATE: u32 = 24_000;

/// Denominators of the overlap-add normalization below this value are
/// treated as uncovered samples.
pub const COLA_FLOOR: f64 = 1e-10;

/// Largest accepted transform size.
pub const MAX_FFT: usize = 1 << 20;

/// Analysis/synthesis parameters. The window is always a periodic Hann of
/// `win_length` samples, zero-padded symmetrically to `n_fft`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftParams {
    pub n_fft: usize,
    pub hop: usize,
    pub win_length: usize,
    pub center: bool,
}

impl Default for StftParams {
    fn default() -> Self {
        StftParams::new(1024, 256, 1024)
    }
}

impl StftParams {
    /// Centered parameters with the given sizes.
    pub const fn new(n_fft: usize, hop: usize, win_length: usize) -> Self {
        StftParams {
            n_fft,
            hop,
            win_length,
            center: true,
        }
    }

    pub const fn uncentered(mut self) -> Self {
        self.center = false;
        self
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fft == 0 || self.hop == 0 || self.win_length == 0 {
            return Err(Error::param("STFT sizes must be positive"));
        }
        if self.n_fft > MAX_FFT {
            return Err(Error::param(format!("n_fft {} exceeds {MAX_FFT}", self.n_fft)));
        }
        if self.win_length > self.n_fft {
            return Err(Error::param(format!(
                "win_length {} exceeds n_fft {}",
                self.win_length, self.n_fft
            )));
        }
        if self.hop > self.win_length {
            return Err(Error::param(format!(
                "hop {} exceeds win_length {}",
                self.hop, self.win_length
            )));
        }
        Ok(())
    }

    /// Periodic Hann window of `win_length`, centered inside `n_fft` samples.
    pub fn window(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n_fft];
        let offset = (self.n_fft - self.win_length) / 2;
        for (i, v) in hann(self.win_length).into_iter().enumerate() {
            w[offset + i] = v;
        }
        w
    }

    /// Number of frames produced for a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        let padded = if self.center { len + self.n_fft } else { len };
        if padded < self.n_fft {
            0
        } else {
            (padded - self.n_fft) / self.hop + 1
        }
    }
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * libm::cos(2.0 * PI * n as f64 / len as f64))
        .collect()
}

/// Mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        AudioBuffer {
            samples,
            sample_rate,
        }
    }

    /// Buffer at the default 24 kHz rate.
    pub fn from_samples(samples: Vec<f64>) -> Self {
        AudioBuffer::new(samples, SAMPLE_RATE)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.samples.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("audio samples"))
        }
    }
}

/// Frames x bins complex STFT values, row-major by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub frames: usize,
    pub bins: usize,
    pub values: Vec<Complex64>,
    pub params: StftParams,
    /// Length of the signal `istft` reconstructs.
    pub signal_len: usize,
}

impl ComplexSpectrogram {
    /// Wraps raw values. The synthesis length defaults to `frames * hop` for
    /// centered parameters and to the full overlap-add span otherwise.
    pub fn new(frames: usize, values: Vec<Complex64>, params: StftParams) -> Result<Self> {
        params.validate()?;
        let bins = params.bins();
        if values.len() != frames * bins {
            return Err(Error::shape(format!(
                "{} values for {frames} frames x {bins} bins",
                values.len()
            )));
        }
        let signal_len = if params.center {
            frames * params.hop
        } else if frames == 0 {
            0
        } else {
            (frames - 1) * params.hop + params.n_fft
        };
        Ok(ComplexSpectrogram {
            frames,
            bins,
            values,
            params,
            signal_len,
        })
    }

    pub fn frame(&self, m: usize) -> &[Complex64] {
        &self.values[m * self.bins..(m + 1) * self.bins]
    }

    pub fn frame_mut(&mut self, m: usize) -> &mut [Complex64] {
        &mut self.values[m * self.bins..(m + 1) * self.bins]
    }

    pub fn magnitude(&self) -> RealSpectrogram {
        RealSpectrogram {
            frames: self.frames,
            bins: self.bins,
            values: self.values.iter().map(|v| v.norm()).collect(),
        }
    }

    pub fn power(&self) -> RealSpectrogram {
        RealSpectrogram {
            frames: self.frames,
            bins: self.bins,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }
}

/// Frames x bins real values (magnitudes or powers), row-major by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSpectrogram {
    pub frames: usize,
    pub bins: usize,
    pub values: Vec<f64>,
}

impl RealSpectrogram {
    pub fn frame(&self, m: usize) -> &[f64] {
        &self.values[m * self.bins..(m + 1) * self.bins]
    }
}

/// Index into a signal of length `len` under symmetric (edge-excluded)
/// reflection, valid for any integer position.
fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= len as isize {
        j = period - j;
    }
    j as usize
}

pub(crate) fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len() as isize;
    (-(pad as isize)..n + pad as isize)
        .map(|i| x[reflect_index(i, x.len())])
        .collect()
}

/// Frames of an already padded signal, no centering.
pub(crate) fn analyze_frames(
    padded: &[f64],
    params: &StftParams,
    window: &[f64],
    plan: &FftPlan,
) -> (usize, Vec<Complex64>) {
    let n = params.n_fft;
    let bins = params.bins();
    let frames = if padded.len() < n {
        0
    } else {
        (padded.len() - n) / params.hop + 1
    };
    let mut out = vec![Complex64::new(0.0, 0.0); frames * bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    // Two real frames share one complex transform: frame a in the real part,
    // frame b in the imaginary part.
    let mut m = 0;
    while m < frames {
        let pair = m + 1 < frames;
        let a = &padded[m * params.hop..m * params.hop + n];
        if pair {
            let b = &padded[(m + 1) * params.hop..(m + 1) * params.hop + n];
            for i in 0..n {
                buf[i] = Complex64::new(a[i] * window[i], b[i] * window[i]);
            }
        } else {
            for i in 0..n {
                buf[i] = Complex64::new(a[i] * window[i], 0.0);
            }
        }
        plan.forward(&mut buf);
        for k in 0..bins {
            let z = buf[k];
            let zc = buf[(n - k) % n].conj();
            out[m * bins + k] = (z + zc) * 0.5;
            if pair {
                out[(m + 1) * bins + k] = (z - zc) * Complex64::new(0.0, -0.5);
            }
        }
        m += if pair { 2 } else { 1 };
    }
    (frames, out)
}

/// Forward STFT. Centered parameters reflect-pad by `n_fft / 2` on each side.
pub fn stft(audio: &AudioBuffer, params: &StftParams) -> Result<ComplexSpectrogram> {
    params.validate()?;
    if audio.is_empty() {
        return Err(Error::EmptyInput("stft audio"));
    }
    audio.check_finite()?;
    let padded = if params.center {
        reflect_pad(&audio.samples, params.n_fft / 2)
    } else {
        audio.samples.clone()
    };
    if padded.len() < params.n_fft {
        return Err(Error::shape(format!(
            "signal of {} samples is shorter than n_fft {}",
            padded.len(),
            params.n_fft
        )));
    }
    let plan = FftPlan::new(params.n_fft);
    let window = params.window();
    let (frames, values) = analyze_frames(&padded, params, &window, &plan);
    Ok(ComplexSpectrogram {
        frames,
        bins: params.bins(),
        values,
        params: *params,
        signal_len: audio.len(),
    })
}

/// Windowed overlap-add of all frames over the full (padded) span. Returns
/// the unnormalized sum and the squared-window normalization.
pub(crate) fn overlap_add(
    values: &[Complex64],
    frames: usize,
    params: &StftParams,
    window: &[f64],
    plan: &FftPlan,
) -> (Vec<f64>, Vec<f64>) {
    let n = params.n_fft;
    let bins = params.bins();
    let span = if frames == 0 { 0 } else { (frames - 1) * params.hop + n };
    let mut acc = vec![0.0; span];
    let mut norm = vec![0.0; span];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let hermitian = |frame: &[Complex64], k: usize| -> Complex64 {
        if k < bins {
            let v = frame[k];
            // DC and Nyquist of a real signal carry no imaginary part.
            if k == 0 || (n % 2 == 0 && k == n / 2) {
                Complex64::new(v.re, 0.0)
            } else {
                v
            }
        } else {
            frame[n - k].conj()
        }
    };
    let mut m = 0;
    while m < frames {
        let pair = m + 1 < frames;
        let fa = &values[m * bins..(m + 1) * bins];
        if pair {
            let fb = &values[(m + 1) * bins..(m + 2) * bins];
            for k in 0..n {
                buf[k] = hermitian(fa, k) + Complex64::new(0.0, 1.0) * hermitian(fb, k);
            }
        } else {
            for k in 0..n {
                buf[k] = hermitian(fa, k);
            }
        }
        plan.inverse(&mut buf);
        let start = m * params.hop;
        for i in 0..n {
            acc[start + i] += buf[i].re * window[i];
            norm[start + i] += window[i] * window[i];
        }
        if pair {
            let start = (m + 1) * params.hop;
            for i in 0..n {
                acc[start + i] += buf[i].im * window[i];
                norm[start + i] += window[i] * window[i];
            }
        }
        m += if pair { 2 } else { 1 };
    }
    (acc, norm)
}

/// Inverse STFT by least-squares overlap-add (squared-window normalization).
/// Returns `spec.signal_len` samples; centered spectrograms are trimmed by
/// `n_fft / 2` at the start.
pub fn istft(spec: &ComplexSpectrogram) -> Result<AudioBuffer> {
    spec.params.validate()?;
    if spec.bins != spec.params.bins() || spec.values.len() != spec.frames * spec.bins {
        return Err(Error::shape("spectrogram dimensions disagree with parameters"));
    }
    if !spec.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::NonFinite("spectrogram"));
    }
    let params = &spec.params;
    let plan = FftPlan::new(params.n_fft);
    let window = params.window();
    let (acc, norm) = overlap_add(&spec.values, spec.frames, params, &window, &plan);
    let start = if params.center { params.n_fft / 2 } else { 0 };
    if start + spec.signal_len > acc.len() {
        return Err(Error::shape(format!(
            "{} frames cannot cover {} output samples",
            spec.frames, spec.signal_len
        )));
    }
    let mut out = Vec::with_capacity(spec.signal_len);
    for i in start..start + spec.signal_len {
        if norm[i] < COLA_FLOOR {
            return Err(Error::ColaViolation {
                index: i - start,
                value: norm[i],
            });
        }
        out.push(acc[i] / norm[i]);
    }
    Ok(AudioBuffer::from_samples(out))
}

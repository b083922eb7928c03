//! Griffin-Lim phase reconstruction.
//!
//! Iterates in the padded frame domain so both projections are exact: the
//! consistency step is the least-squares overlap-add inverse, the magnitude
//! step keeps the current phase. Centered parameters are trimmed only once
//! at the end.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::fft::FftPlan;
use super::stft::{analyze_frames, overlap_add, AudioBuffer, RealSpectrogram, StftParams, COLA_FLOOR};
use crate::error::{Error, Result};

pub fn griffin_lim(magnitude: &RealSpectrogram, params: &StftParams, iters: usize) -> Result<AudioBuffer> {
    griffin_lim_trace(magnitude, params, iters).map(|(audio, _)| audio)
}

/// Griffin-Lim returning also the inconsistency `|| |STFT(x_i)| - magnitude ||_F`
/// of every iterate `x_0..=x_iters`.
pub fn griffin_lim_trace(
    magnitude: &RealSpectrogram,
    params: &StftParams,
    iters: usize,
) -> Result<(AudioBuffer, Vec<f64>)> {
    params.validate()?;
    if magnitude.bins != params.bins() || magnitude.values.len() != magnitude.frames * magnitude.bins {
        return Err(Error::shape("magnitude dimensions disagree with parameters"));
    }
    if magnitude.frames == 0 {
        return Err(Error::EmptyInput("magnitude"));
    }
    if magnitude.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("magnitude"));
    }
    if magnitude.values.iter().any(|&v| v < 0.0) {
        return Err(Error::param("magnitude must be nonnegative"));
    }
    let plan = FftPlan::new(params.n_fft);
    let window = params.window();
    let frames = magnitude.frames;
    let synth = |spec: &[Complex64]| -> Vec<f64> {
        let (acc, norm) = overlap_add(spec, frames, params, &window, &plan);
        acc.iter()
            .zip(&norm)
            .map(|(a, n)| if *n < COLA_FLOOR { 0.0 } else { a / n })
            .collect()
    };
    let mut spec: Vec<Complex64> = magnitude.values.iter().map(|&m| Complex64::new(m, 0.0)).collect();
    let mut signal = synth(&spec);
    let mut trace = Vec::with_capacity(iters + 1);
    for i in 0..=iters {
        let (_, analysed) = analyze_frames(&signal, params, &window, &plan);
        let mut dist = 0.0;
        for ((s, a), &m) in spec.iter_mut().zip(&analysed).zip(&magnitude.values) {
            let norm = a.norm();
            dist += (norm - m) * (norm - m);
            *s = if norm > 0.0 { a * (m / norm) } else { Complex64::new(m, 0.0) };
        }
        trace.push(libm::sqrt(dist));
        if i < iters {
            signal = synth(&spec);
        }
    }
    let (start, len) = if params.center {
        (params.n_fft / 2, frames * params.hop)
    } else {
        (0, signal.len())
    };
    let out = signal[start..start + len].to_vec();
    Ok((AudioBuffer::from_samples(out), trace))
}

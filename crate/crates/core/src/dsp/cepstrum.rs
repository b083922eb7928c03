//! Real cepstrum, liftering and minimum-phase reconstruction.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::fft::FftPlan;
use crate::error::{Error, Result};

/// Floor applied to magnitudes before taking logs.
pub const MAG_FLOOR: f64 = 1e-8;

fn check_bins(len: usize, n_fft: usize) -> Result<()> {
    if n_fft < 2 || len != n_fft / 2 + 1 {
        return Err(Error::shape(alloc::format!(
            "{len} magnitude bins for n_fft {n_fft}"
        )));
    }
    Ok(())
}

/// Floored natural log of a half-spectrum magnitude.
pub fn log_magnitude(magnitude: &[f64]) -> Result<Vec<f64>> {
    magnitude
        .iter()
        .map(|&m| {
            if !m.is_finite() {
                Err(Error::NonFinite("magnitude"))
            } else if m < 0.0 {
                Err(Error::param("magnitude must be nonnegative"))
            } else {
                Ok(libm::log(m.max(MAG_FLOOR)))
            }
        })
        .collect()
}

/// Real cepstrum of a real, even log spectrum given by its half-spectrum.
pub fn real_cepstrum(log_mag: &[f64], n_fft: usize, plan: &FftPlan) -> Vec<f64> {
    let bins = log_mag.len();
    let mut buf: Vec<Complex64> = (0..n_fft)
        .map(|k| {
            let idx = if k < bins { k } else { n_fft - k };
            Complex64::new(log_mag[idx], 0.0)
        })
        .collect();
    plan.inverse(&mut buf);
    buf.into_iter().map(|v| v.re).collect()
}

/// Half-spectrum of `exp(FFT(cepstrum))`.
fn exp_spectrum(cep: &[f64], bins: usize, plan: &FftPlan) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = cep.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan.forward(&mut buf);
    buf.truncate(bins);
    buf.into_iter().map(|v| v.exp()).collect()
}

/// Fold a real cepstrum onto positive quefrencies: keep index 0 (and the
/// Nyquist index for even sizes), double the rest of the causal half, zero
/// the anticausal half.
fn fold_causal(cep: &mut [f64]) {
    let n = cep.len();
    let half = n / 2;
    for q in 1..n {
        let causal = q < half || (n % 2 == 1 && q == half);
        if causal {
            cep[q] *= 2.0;
        } else if !(n % 2 == 0 && q == half) {
            cep[q] = 0.0;
        }
    }
}

/// Minimum-phase transfer function with the given magnitude response, via
/// the homomorphic (folded cepstrum) method.
pub fn minimum_phase_filter(magnitude: &[f64], n_fft: usize) -> Result<Vec<Complex64>> {
    check_bins(magnitude.len(), n_fft)?;
    let plan = FftPlan::new(n_fft);
    minimum_phase_with_plan(&log_magnitude(magnitude)?, n_fft, &plan)
}

pub(crate) fn minimum_phase_with_plan(
    log_mag: &[f64],
    n_fft: usize,
    plan: &FftPlan,
) -> Result<Vec<Complex64>> {
    let mut cep = real_cepstrum(log_mag, n_fft, plan);
    fold_causal(&mut cep);
    let h = exp_spectrum(&cep, log_mag.len(), plan);
    if h.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(h)
    } else {
        Err(Error::NonFinite("minimum-phase filter"))
    }
}

/// Low-quefrency liftering of a log-magnitude half-spectrum: keeps cepstral
/// coefficients `0..=order` (and their mirror), returns the smoothed log
/// magnitude.
pub fn lifter_log_magnitude(log_mag: &[f64], n_fft: usize, order: usize, plan: &FftPlan) -> Vec<f64> {
    let mut cep = real_cepstrum(log_mag, n_fft, plan);
    for q in 0..n_fft {
        let quefrency = q.min(n_fft - q);
        if quefrency > order {
            cep[q] = 0.0;
        }
    }
    let mut buf: Vec<Complex64> = cep.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    plan.forward(&mut buf);
    buf[..log_mag.len()].iter().map(|v| v.re).collect()
}

/// Time-domain impulse response of a half-spectrum transfer function.
pub fn impulse_response(h: &[Complex64], n_fft: usize) -> Vec<f64> {
    let bins = h.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for k in 0..n_fft {
        buf[k] = if k < bins { h[k] } else { h[n_fft - k].conj() };
    }
    FftPlan::new(n_fft).inverse(&mut buf);
    buf.into_iter().map(|v| v.re).collect()
}

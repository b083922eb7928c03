//! Evaluation losses: multi-resolution STFT distance and least-squares GAN
//! objectives over externally supplied discriminator outputs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dsp::{stft, AudioBuffer, StftParams};
use crate::error::{Error, Result};

pub const MAGNITUDE_FLOOR: f64 = 1e-7;
pub const DEFAULT_LAMBDA_AUX: f64 = 2.5;
/// Lower bound on the feature-matching loss when computing its weight.
pub const FM_DENOM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrStftConfig {
    pub resolutions: Vec<StftParams>,
    pub magnitude_floor: f64,
}

impl Default for MrStftConfig {
    fn default() -> Self {
        MrStftConfig {
            resolutions: vec![
                StftParams::new(1024, 120, 600),
                StftParams::new(2048, 240, 1200),
                StftParams::new(512, 50, 240),
            ],
            magnitude_floor: MAGNITUDE_FLOOR,
        }
    }
}

impl MrStftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolutions.is_empty() {
            return Err(Error::EmptyInput("MR-STFT resolutions"));
        }
        if !(self.magnitude_floor > 0.0) {
            return Err(Error::param("magnitude floor must be positive"));
        }
        self.resolutions.iter().try_for_each(StftParams::validate)
    }
}

/// Spectral convergence and mean absolute log-magnitude difference at one
/// resolution; `x` is the reference.
pub fn stft_distance(x: &AudioBuffer, y: &AudioBuffer, params: &StftParams, floor: f64) -> Result<(f64, f64)> {
    let mx = stft(x, params)?.magnitude();
    let my = stft(y, params)?.magnitude();
    let (mut diff, mut reference, mut log_l1) = (0.0, 0.0, 0.0);
    for (&a, &b) in mx.values.iter().zip(&my.values) {
        let (a, b) = (a.max(floor), b.max(floor));
        diff += (a - b) * (a - b);
        reference += a * a;
        log_l1 += (libm::log(a) - libm::log(b)).abs();
    }
    Ok((libm::sqrt(diff) / libm::sqrt(reference), log_l1 / mx.values.len() as f64))
}

/// Mean over resolutions of spectral convergence plus log-magnitude L1.
pub fn mr_stft(x: &AudioBuffer, y: &AudioBuffer, config: &MrStftConfig) -> Result<f64> {
    config.validate()?;
    if x.len() != y.len() {
        return Err(Error::shape(format!("MR-STFT of {} vs {} samples", x.len(), y.len())));
    }
    let mut total = 0.0;
    for p in &config.resolutions {
        let (sc, mag) = stft_distance(x, y, p, config.magnitude_floor)?;
        total += sc + mag;
    }
    Ok(total / config.resolutions.len() as f64)
}

/// Score map and intermediate feature maps of one sub-discriminator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubDiscriminatorOutput {
    pub score: Vec<f64>,
    pub features: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscriminatorOutputs {
    pub subs: Vec<SubDiscriminatorOutput>,
}

impl DiscriminatorOutputs {
    pub fn validate(&self) -> Result<()> {
        if self.subs.is_empty() {
            return Err(Error::EmptyInput("discriminator outputs"));
        }
        for s in &self.subs {
            if s.score.is_empty() {
                return Err(Error::EmptyInput("discriminator score"));
            }
            let finite = s.score.iter().chain(s.features.iter().flatten()).all(|v| v.is_finite());
            if !finite {
                return Err(Error::NonFinite("discriminator outputs"));
            }
        }
        Ok(())
    }
}

fn mean_sq_offset(v: &[f64], target: f64) -> f64 {
    v.iter().map(|s| (s - target) * (s - target)).sum::<f64>() / v.len() as f64
}

/// Discriminator objective averaged over iterates and sub-discriminators:
/// `mean((D(x) - 1)^2) + mean(D(y_t)^2)`.
pub fn lsgan_disc_loss(real: &DiscriminatorOutputs, fakes: &[DiscriminatorOutputs]) -> Result<f64> {
    real.validate()?;
    if fakes.is_empty() {
        return Err(Error::EmptyInput("generated iterates"));
    }
    let k = real.subs.len();
    let real_term: f64 = real.subs.iter().map(|s| mean_sq_offset(&s.score, 1.0)).sum();
    let mut total = 0.0;
    for fake in fakes {
        fake.validate()?;
        if fake.subs.len() != k {
            return Err(Error::shape(format!("{} fake vs {k} real sub-discriminators", fake.subs.len())));
        }
        total += real_term + fake.subs.iter().map(|s| mean_sq_offset(&s.score, 0.0)).sum::<f64>();
    }
    Ok(total / (fakes.len() * k) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenLossBreakdown {
    pub adversarial: f64,
    /// Unweighted feature-matching distance.
    pub feature_matching: f64,
    pub lambda_fm: f64,
    /// `lambda_fm * feature_matching`.
    pub feature_matching_term: f64,
    pub aux: f64,
    pub lambda_aux: f64,
    /// `lambda_aux * aux`.
    pub aux_term: f64,
    pub total: f64,
}

/// Generator objective for one iterate with the feature-matching weight set
/// so that its term balances the auxiliary term.
pub fn gen_loss(
    fake: &DiscriminatorOutputs,
    real: &DiscriminatorOutputs,
    l_aux: f64,
    lambda_aux: f64,
) -> Result<GenLossBreakdown> {
    fake.validate()?;
    real.validate()?;
    if !(l_aux >= 0.0) || !l_aux.is_finite() {
        return Err(Error::param(format!("auxiliary loss {l_aux} must be finite and nonnegative")));
    }
    if fake.subs.len() != real.subs.len() {
        return Err(Error::shape(format!(
            "{} fake vs {} real sub-discriminators",
            fake.subs.len(),
            real.subs.len()
        )));
    }
    let k = fake.subs.len() as f64;
    let adversarial = fake.subs.iter().map(|s| mean_sq_offset(&s.score, 1.0)).sum::<f64>() / k;

    let (mut fm_sum, mut layers) = (0.0, 0usize);
    for (f, r) in fake.subs.iter().zip(&real.subs) {
        if f.features.len() != r.features.len() {
            return Err(Error::shape(format!(
                "{} fake vs {} real feature layers",
                f.features.len(),
                r.features.len()
            )));
        }
        for (a, b) in f.features.iter().zip(&r.features) {
            if a.len() != b.len() || a.is_empty() {
                return Err(Error::shape(format!("feature maps of {} vs {} values", a.len(), b.len())));
            }
            fm_sum += a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum::<f64>() / a.len() as f64;
            layers += 1;
        }
    }
    let feature_matching = if layers == 0 { 0.0 } else { fm_sum / layers as f64 };
    let aux_term = lambda_aux * l_aux;
    let (lambda_fm, feature_matching_term) = if feature_matching == 0.0 {
        (0.0, 0.0)
    } else {
        let lambda_fm = aux_term / feature_matching.max(FM_DENOM_FLOOR);
        (lambda_fm, lambda_fm * feature_matching)
    };
    Ok(GenLossBreakdown {
        adversarial,
        feature_matching,
        lambda_fm,
        feature_matching_term,
        aux: l_aux,
        lambda_aux,
        aux_term,
        total: adversarial + feature_matching_term + aux_term,
    })
}

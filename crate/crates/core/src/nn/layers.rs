//! Pointwise activations, normalization, dense layers, embeddings and the
//! LVC kernel predictor.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::conv::{conv1d, LvcKernels};
use super::tensor::{FeatureMap, Tensor};
use crate::error::{Error, Result};

/// Variance epsilon of the adaptive layer norm.
pub const ADALN_EPS: f64 = 1e-5;
/// Negative slope of the kernel predictor's activations.
pub const LEAKY_SLOPE: f32 = 0.1;

/// Dense layer, weight `(out, in)`.
#[derive(Debug, Clone, Copy)]
pub struct Linear<'a> {
    pub weight: &'a Tensor,
    pub bias: &'a Tensor,
}

impl Linear<'_> {
    pub fn forward(&self, x: &[f32]) -> Result<Vec<f32>> {
        let (out, inp) = self.weight.dims2()?;
        if x.len() != inp || self.bias.numel() != out {
            return Err(Error::shape(format!(
                "linear {inp}->{out} applied to {} inputs",
                x.len()
            )));
        }
        Ok((0..out)
            .map(|o| {
                let row = &self.weight.data[o * inp..(o + 1) * inp];
                let dot: f64 = row.iter().zip(x).map(|(&w, &v)| w as f64 * v as f64).sum();
                (dot + self.bias.data[o] as f64) as f32
            })
            .collect())
    }
}

pub fn swish(x: f32) -> f32 {
    x / (1.0 + libm::expf(-x))
}

fn swish_in_place(v: &mut [f32]) {
    v.iter_mut().for_each(|x| *x = swish(*x));
}

/// Snake activation `x + sin^2(alpha x) / alpha` with per-channel `alpha`.
pub fn snake(x: &FeatureMap, alpha: &[f32]) -> Result<FeatureMap> {
    let mut y = x.clone();
    snake_in_place(&mut y, alpha)?;
    Ok(y)
}

pub fn snake_in_place(x: &mut FeatureMap, alpha: &[f32]) -> Result<()> {
    if alpha.len() != x.channels {
        return Err(Error::shape(format!(
            "{} snake alphas for {} channels",
            alpha.len(),
            x.channels
        )));
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
        return Err(Error::param(format!("snake alpha must be positive, got {a}")));
    }
    for (c, &a) in alpha.iter().enumerate() {
        let inv = 1.0 / a;
        for v in x.channel_mut(c) {
            let s = libm::sinf(a * *v);
            *v += inv * (s * s);
        }
    }
    Ok(())
}

/// Per-step normalization across channels, without modulation.
pub fn layer_norm_channels(x: &FeatureMap) -> FeatureMap {
    let (c, n) = (x.channels, x.steps);
    let mut mean = vec![0.0f64; n];
    for ch in 0..c {
        for (m, &v) in mean.iter_mut().zip(x.channel(ch)) {
            *m += v as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= c as f64);
    let mut var = vec![0.0f64; n];
    for ch in 0..c {
        for ((s, &v), m) in var.iter_mut().zip(x.channel(ch)).zip(&mean) {
            let d = v as f64 - m;
            *s += d * d;
        }
    }
    let inv: Vec<f64> = var.iter().map(|s| 1.0 / libm::sqrt(s / c as f64 + ADALN_EPS)).collect();
    let mut out = x.clone();
    for ch in 0..c {
        for (((o, &v), m), k) in out.channel_mut(ch).iter_mut().zip(x.channel(ch)).zip(&mean).zip(&inv) {
            *o = ((v as f64 - m) * k) as f32;
        }
    }
    out
}

/// Channel-wise scale and shift computed from the latent `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulation {
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
}

impl Modulation {
    pub fn from_latent(w: &[f32], gamma: Linear<'_>, beta: Linear<'_>) -> Result<Self> {
        Ok(Modulation {
            gamma: gamma.forward(w)?,
            beta: beta.forward(w)?,
        })
    }
}

/// Adaptive layer norm: normalize each step across channels, then scale by
/// `1 + gamma(w)` and shift by `beta(w)`.
pub fn adaln(x: &FeatureMap, w: &[f32], gamma: Linear<'_>, beta: Linear<'_>) -> Result<FeatureMap> {
    adaln_modulated(x, &Modulation::from_latent(w, gamma, beta)?)
}

pub fn adaln_modulated(x: &FeatureMap, m: &Modulation) -> Result<FeatureMap> {
    if m.gamma.len() != x.channels || m.beta.len() != x.channels {
        return Err(Error::shape("modulation width differs from channel count"));
    }
    let mut y = layer_norm_channels(x);
    for ch in 0..y.channels {
        let (g, b) = (1.0 + m.gamma[ch], m.beta[ch]);
        for v in y.channel_mut(ch) {
            *v = g * *v + b;
        }
    }
    Ok(y)
}

/// Sinusoidal encoding of a (possibly fractional) step: the first half holds
/// `sin(t * 10^(4 i / (half - 1)))`, the second half the matching cosines.
pub fn sinusoidal_encoding(t: f64, dim: usize) -> Vec<f64> {
    let half = dim / 2;
    let mut out = vec![0.0; 2 * half];
    for i in 0..half {
        let exponent = if half > 1 { 4.0 * i as f64 / (half - 1) as f64 } else { 0.0 };
        let arg = t * libm::pow(10.0, exponent);
        out[i] = libm::sin(arg);
        out[half + i] = libm::cos(arg);
    }
    out
}

/// Step embedding: sinusoidal encoding of `t`, then two dense layers with
/// swish activations.
pub fn step_embedding(t: usize, t_max: usize, dim: usize, fc1: Linear<'_>, fc2: Linear<'_>) -> Result<Vec<f32>> {
    if t == 0 || t > t_max {
        return Err(Error::StepOutOfRange { t, t_max });
    }
    if dim == 0 || dim % 2 != 0 {
        return Err(Error::param(format!("embedding dim {dim} must be even")));
    }
    let base: Vec<f32> = sinusoidal_encoding(t as f64, dim).into_iter().map(|v| v as f32).collect();
    let mut h = fc1.forward(&base)?;
    swish_in_place(&mut h);
    let mut h = fc2.forward(&h)?;
    swish_in_place(&mut h);
    Ok(h)
}

/// Latent mapping `z -> w`: dense, swish, dense, swish.
pub fn mapping_network(z: &[f32], fc1: Linear<'_>, fc2: Linear<'_>) -> Result<Vec<f32>> {
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("latent z"));
    }
    let mut h = fc1.forward(z)?;
    swish_in_place(&mut h);
    let mut h = fc2.forward(&h)?;
    swish_in_place(&mut h);
    Ok(h)
}

/// Convolution weight and bias pair.
#[derive(Debug, Clone, Copy)]
pub struct ConvParams<'a> {
    pub weight: &'a Tensor,
    pub bias: &'a Tensor,
}

impl ConvParams<'_> {
    /// Stride-1 convolution with "same" padding.
    pub fn same(&self, x: &FeatureMap) -> Result<FeatureMap> {
        let (_, _, k) = self.weight.dims3()?;
        conv1d(x, self.weight, Some(self.bias), 1, 1, k / 2)
    }
}

/// Kernel predictor weights: a stack of conditioning convolutions followed by
/// separate kernel and bias heads.
#[derive(Debug, Clone)]
pub struct KernelPredictorWeights<'a> {
    pub stack: Vec<ConvParams<'a>>,
    pub kernel_head: ConvParams<'a>,
    pub bias_head: ConvParams<'a>,
}

/// Layout of the predicted kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LvcLayout {
    pub layers: usize,
    pub out_ch: usize,
    pub in_ch: usize,
    pub kernel: usize,
}

impl LvcLayout {
    pub fn kernel_channels(&self) -> usize {
        self.layers * self.out_ch * self.in_ch * self.kernel
    }

    pub fn bias_channels(&self) -> usize {
        self.layers * self.out_ch
    }

    /// Parameters predicted per frame and layer.
    pub fn per_layer(&self) -> usize {
        self.out_ch * self.in_ch * self.kernel + self.out_ch
    }
}

/// Predicts one set of LVC kernels per layer from conditioning features
/// `c` (mel channels x frames).
pub fn kernel_predictor(c: &FeatureMap, w: &KernelPredictorWeights<'_>, layout: LvcLayout) -> Result<Vec<LvcKernels>> {
    let mut h = c.clone();
    for conv in &w.stack {
        h = conv.same(&h)?;
        for v in h.values.iter_mut() {
            if *v < 0.0 {
                *v *= LEAKY_SLOPE;
            }
        }
    }
    let k = w.kernel_head.same(&h)?;
    let b = w.bias_head.same(&h)?;
    if k.channels != layout.kernel_channels() || b.channels != layout.bias_channels() {
        return Err(Error::shape(format!(
            "kernel predictor heads give {}/{} channels, layout needs {}/{}",
            k.channels,
            b.channels,
            layout.kernel_channels(),
            layout.bias_channels()
        )));
    }
    let frames = c.steps;
    let per_kernel = layout.out_ch * layout.in_ch * layout.kernel;
    let mut out = Vec::with_capacity(layout.layers);
    for l in 0..layout.layers {
        let mut weights = vec![0.0f32; frames * per_kernel];
        for j in 0..per_kernel {
            let src = k.channel(l * per_kernel + j);
            for (f, &v) in src.iter().enumerate() {
                weights[f * per_kernel + j] = v;
            }
        }
        let mut bias = vec![0.0f32; frames * layout.out_ch];
        for o in 0..layout.out_ch {
            for (f, &v) in b.channel(l * layout.out_ch + o).iter().enumerate() {
                bias[f * layout.out_ch + o] = v;
            }
        }
        out.push(LvcKernels {
            frames,
            out_ch: layout.out_ch,
            in_ch: layout.in_ch,
            kernel: layout.kernel,
            weights,
            bias,
        });
    }
    Ok(out)
}

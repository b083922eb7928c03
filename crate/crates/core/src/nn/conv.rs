//! 1-D convolutions: plain (strided, dilated), transposed, and
//! location-variable. Products are accumulated in f64 in a fixed order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::tensor::{FeatureMap, Tensor};
use crate::error::{Error, Result};

fn check_bias(bias: Option<&Tensor>, out_ch: usize) -> Result<()> {
    match bias {
        Some(b) if b.numel() != out_ch => Err(Error::shape(format!(
            "bias of {} for {out_ch} output channels",
            b.numel()
        ))),
        _ => Ok(()),
    }
}

/// `acc[t] += w * x[t * stride + offset]` over every `t` whose source index is
/// inside `x`.
#[inline]
fn accumulate(acc: &mut [f64], x: &[f32], w: f64, stride: usize, offset: isize) {
    let len = x.len() as isize;
    let n = acc.len() as isize;
    let s = stride as isize;
    // first t with t*s + offset >= 0, last with t*s + offset < len
    let t0 = if offset >= 0 { 0 } else { (-offset + s - 1) / s };
    let t1 = if len - offset <= 0 { 0 } else { ((len - offset + s - 1) / s).min(n) };
    if t0 >= t1 {
        return;
    }
    let (t0, t1) = (t0 as usize, t1 as usize);
    if stride == 1 {
        let src = &x[(t0 as isize + offset) as usize..(t1 as isize + offset) as usize];
        for (a, &v) in acc[t0..t1].iter_mut().zip(src) {
            *a += w * v as f64;
        }
    } else {
        for t in t0..t1 {
            acc[t] += w * x[(t as isize * s + offset) as usize] as f64;
        }
    }
}

/// Cross-correlation with weight `(out_ch, in_ch, k)`.
/// `out_steps = (steps + 2*padding - dilation*(k-1) - 1) / stride + 1`.
pub fn conv1d(
    x: &FeatureMap,
    weight: &Tensor,
    bias: Option<&Tensor>,
    stride: usize,
    dilation: usize,
    padding: usize,
) -> Result<FeatureMap> {
    let (out_ch, in_ch, k) = weight.dims3()?;
    if in_ch != x.channels {
        return Err(Error::shape(format!(
            "conv expects {in_ch} input channels, got {}",
            x.channels
        )));
    }
    check_bias(bias, out_ch)?;
    if stride == 0 || dilation == 0 || k == 0 {
        return Err(Error::param("stride, dilation and kernel size must be positive"));
    }
    let span = dilation * (k - 1) + 1;
    let padded = x.steps + 2 * padding;
    if padded < span {
        return Err(Error::shape(format!("{padded} padded steps shorter than kernel span {span}")));
    }
    let out_steps = (padded - span) / stride + 1;
    let mut out = Vec::with_capacity(out_ch * out_steps);
    let mut acc = vec![0.0f64; out_steps];
    for o in 0..out_ch {
        let b = bias.map_or(0.0, |b| b.data[o] as f64);
        acc.iter_mut().for_each(|a| *a = b);
        for i in 0..in_ch {
            let xi = x.channel(i);
            let wrow = &weight.data[(o * in_ch + i) * k..(o * in_ch + i + 1) * k];
            for (kk, &w) in wrow.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let offset = (kk * dilation) as isize - padding as isize;
                accumulate(&mut acc, xi, w as f64, stride, offset);
            }
        }
        out.extend(acc.iter().map(|&a| a as f32));
    }
    Ok(FeatureMap {
        channels: out_ch,
        steps: out_steps,
        values: out,
    })
}

/// Transposed convolution with weight `(in_ch, out_ch, k)` and symmetric
/// cropping `(k - stride) / 2`, so `out_steps = steps * stride`.
pub fn transposed_conv1d(x: &FeatureMap, weight: &Tensor, bias: Option<&Tensor>, stride: usize) -> Result<FeatureMap> {
    let (in_ch, out_ch, k) = weight.dims3()?;
    if in_ch != x.channels {
        return Err(Error::shape(format!(
            "transposed conv expects {in_ch} input channels, got {}",
            x.channels
        )));
    }
    check_bias(bias, out_ch)?;
    if stride == 0 || k < stride || (k - stride) % 2 != 0 {
        return Err(Error::shape(format!(
            "kernel {k} incompatible with stride {stride} (need k >= stride, k - stride even)"
        )));
    }
    let crop = (k - stride) / 2;
    let out_steps = x.steps * stride;
    let mut out = Vec::with_capacity(out_ch * out_steps);
    let mut acc = vec![0.0f64; out_steps];
    for o in 0..out_ch {
        let b = bias.map_or(0.0, |b| b.data[o] as f64);
        acc.iter_mut().for_each(|a| *a = b);
        for i in 0..in_ch {
            let xi = x.channel(i);
            let wrow = &weight.data[(i * out_ch + o) * k..(i * out_ch + o + 1) * k];
            // out[n] gets x[m] * w[kk] where n = m*stride + kk - crop.
            for (kk, &w) in wrow.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let w = w as f64;
                let shift = kk as isize - crop as isize;
                for (m, &v) in xi.iter().enumerate() {
                    let n = (m * stride) as isize + shift;
                    if n >= 0 && (n as usize) < out_steps {
                        acc[n as usize] += w * v as f64;
                    }
                }
            }
        }
        out.extend(acc.iter().map(|&a| a as f32));
    }
    Ok(FeatureMap {
        channels: out_ch,
        steps: out_steps,
        values: out,
    })
}

/// Per-frame convolution kernels for one location-variable layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LvcKernels {
    pub frames: usize,
    pub out_ch: usize,
    pub in_ch: usize,
    pub kernel: usize,
    /// `frames x out_ch x in_ch x kernel`.
    pub weights: Vec<f32>,
    /// `frames x out_ch`.
    pub bias: Vec<f32>,
}

impl LvcKernels {
    pub fn per_frame(&self) -> usize {
        self.out_ch * self.in_ch * self.kernel
    }

    /// The same static kernel at every frame.
    pub fn broadcast(weight: &Tensor, bias: &[f32], frames: usize) -> Result<Self> {
        let (out_ch, in_ch, kernel) = weight.dims3()?;
        if bias.len() != out_ch {
            return Err(Error::shape("bias length differs from output channels"));
        }
        let mut weights = Vec::with_capacity(frames * weight.numel());
        let mut b = Vec::with_capacity(frames * out_ch);
        for _ in 0..frames {
            weights.extend_from_slice(&weight.data);
            b.extend_from_slice(bias);
        }
        Ok(LvcKernels {
            frames,
            out_ch,
            in_ch,
            kernel,
            weights,
            bias: b,
        })
    }
}

/// Location-variable convolution: the segment of `hop` steps belonging to
/// frame `f` is convolved ("same" zero padding over the whole sequence) with
/// frame `f`'s kernel and bias.
pub fn location_variable_conv(x: &FeatureMap, kernels: &LvcKernels, hop: usize, dilation: usize) -> Result<FeatureMap> {
    let LvcKernels {
        frames,
        out_ch,
        in_ch,
        kernel,
        ..
    } = *kernels;
    if x.channels != in_ch {
        return Err(Error::shape(format!(
            "LVC expects {in_ch} input channels, got {}",
            x.channels
        )));
    }
    if hop == 0 || x.steps != frames * hop {
        return Err(Error::shape(format!(
            "LVC over {} steps with {frames} frames of hop {hop}",
            x.steps
        )));
    }
    if kernel == 0 || kernel % 2 == 0 || dilation == 0 {
        return Err(Error::param("LVC kernel must be odd and dilation positive"));
    }
    if kernels.weights.len() != frames * kernels.per_frame() || kernels.bias.len() != frames * out_ch {
        return Err(Error::shape("LVC kernel tensor has the wrong size"));
    }
    let pad = dilation * (kernel - 1) / 2;
    let mut out = vec![0.0f32; out_ch * x.steps];
    let mut acc = vec![0.0f64; hop];
    for f in 0..frames {
        let start = f * hop;
        let wf = &kernels.weights[f * kernels.per_frame()..(f + 1) * kernels.per_frame()];
        for o in 0..out_ch {
            let b = kernels.bias[f * out_ch + o] as f64;
            acc.iter_mut().for_each(|a| *a = b);
            for i in 0..in_ch {
                let xi = x.channel(i);
                let wrow = &wf[(o * in_ch + i) * kernel..(o * in_ch + i + 1) * kernel];
                for (kk, &w) in wrow.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let offset = start as isize + (kk * dilation) as isize - pad as isize;
                    accumulate(&mut acc, xi, w as f64, 1, offset);
                }
            }
            let dst = &mut out[o * x.steps + start..o * x.steps + start + hop];
            for (d, &a) in dst.iter_mut().zip(&acc) {
                *d = a as f32;
            }
        }
    }
    Ok(FeatureMap {
        channels: out_ch,
        steps: x.steps,
        values: out,
    })
}

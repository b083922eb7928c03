use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::config::{EncoderKind, ModelConfig};
use crate::error::{Error, Result};
use crate::nn::{ConvParams, Init, KernelPredictorWeights, Linear, Tensor, TensorSpec};
use crate::rng::{stream, WEIGHT_STREAM};

/// Standard deviation of [`Init::Normal`].
pub const NORMAL_INIT_STD: f32 = 0.01;

fn push_linear(out: &mut Vec<TensorSpec>, prefix: &str, out_dim: usize, in_dim: usize) {
    out.push(TensorSpec::new(format!("{prefix}.weight"), vec![out_dim, in_dim], Init::KaimingUniform));
    out.push(TensorSpec::new(format!("{prefix}.bias"), vec![out_dim], Init::Zeros));
}

fn push_conv(out: &mut Vec<TensorSpec>, prefix: &str, shape: [usize; 3], init: Init) {
    out.push(TensorSpec::new(format!("{prefix}.weight"), shape.to_vec(), init));
    out.push(TensorSpec::new(format!("{prefix}.bias"), vec![shape[0]], Init::Zeros));
}

/// Kernel predictor plus the dilated sub-layers it drives.
fn push_lvc_stage(out: &mut Vec<TensorSpec>, prefix: &str, config: &ModelConfig) {
    let c = config.channels;
    let k = config.kp_kernel;
    let mut fan = config.n_mels;
    for j in 0..config.kp_layers {
        push_conv(out, &format!("{prefix}.kp.stack.{j}"), [config.kp_hidden, fan, k], Init::KaimingUniform);
        fan = config.kp_hidden;
    }
    let layers = config.dilations.len();
    push_conv(
        out,
        &format!("{prefix}.kp.kernel"),
        [layers * c * c * config.lvc_kernel, fan, k],
        Init::Normal,
    );
    push_conv(out, &format!("{prefix}.kp.bias"), [layers * c, fan, k], Init::Normal);
    for j in 0..layers {
        let p = format!("{prefix}.sub.{j}");
        out.push(TensorSpec::new(format!("{p}.alpha"), vec![c], Init::Ones));
        push_linear(out, &format!("{p}.step"), c, config.step_dim);
        push_linear(out, &format!("{p}.gamma"), c, config.w_dim);
        push_linear(out, &format!("{p}.beta"), c, config.w_dim);
    }
}

/// Every learnable tensor of the generator, in serialization order.
pub fn tensor_specs(config: &ModelConfig) -> Vec<TensorSpec> {
    let c = config.channels;
    let mut out = Vec::new();
    push_linear(&mut out, "mapping.fc1", config.w_dim, config.z_dim);
    push_linear(&mut out, "mapping.fc2", config.w_dim, config.w_dim);
    push_linear(&mut out, "step.fc1", config.step_dim, config.step_base_dim);
    push_linear(&mut out, "step.fc2", config.step_dim, config.step_dim);

    match config.encoder_kind {
        EncoderKind::StftBank | EncoderKind::SingleStftNoSkip => {
            let used = if config.encoder_kind == EncoderKind::StftBank { config.n_blocks() } else { 1 };
            for (n, p) in config.stft_bank().iter().take(used).enumerate() {
                let in_ch = config.stft_representation.channels(p.bins());
                push_conv(&mut out, &format!("encoder.proj.{n}"), [c, in_ch, 1], Init::KaimingUniform);
            }
        }
        EncoderKind::Neural => {
            push_conv(&mut out, "encoder.pre", [c, 1, config.head_kernel], Init::KaimingUniform);
            for (n, s) in config.encoder_strides().into_iter().enumerate() {
                let prefix = format!("encoder.blocks.{n}");
                push_lvc_stage(&mut out, &prefix, config);
                push_conv(&mut out, &format!("{prefix}.down"), [c, c, 2 * s], Init::KaimingUniform);
            }
        }
    }

    for (n, &r) in config.upsample_ratios.iter().enumerate() {
        let prefix = format!("decoder.blocks.{n}");
        let fuse_in = if config.has_skip(n) { 2 * c } else { c };
        push_conv(&mut out, &format!("{prefix}.fuse"), [c, fuse_in, 1], Init::KaimingUniform);
        // Transposed convolution weights are (in, out, kernel).
        out.push(TensorSpec::new(format!("{prefix}.up.weight"), vec![c, c, 2 * r], Init::KaimingUniform));
        out.push(TensorSpec::new(format!("{prefix}.up.bias"), vec![c], Init::Zeros));
        push_lvc_stage(&mut out, &prefix, config);
    }

    out.push(TensorSpec::new("head.alpha", vec![c], Init::Ones));
    push_conv(&mut out, "head", [1, c, config.head_kernel], Init::KaimingUniform);
    out
}

pub fn param_count(config: &ModelConfig) -> usize {
    tensor_specs(config).iter().map(TensorSpec::numel).sum()
}

/// Named generator tensors in serialization order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStore {
    pub seed: u64,
    pub config_hash: u64,
    tensors: Vec<(String, Tensor)>,
    index: BTreeMap<String, usize>,
}

impl WeightStore {
    /// Checks names, order, shapes and finiteness against `config`.
    pub fn from_tensors(config: &ModelConfig, seed: u64, tensors: Vec<(String, Tensor)>) -> Result<Self> {
        config.validate()?;
        let specs = tensor_specs(config);
        if specs.len() != tensors.len() {
            return Err(Error::Integrity(format!(
                "model has {} tensors, store has {}",
                specs.len(),
                tensors.len()
            )));
        }
        let mut index = BTreeMap::new();
        for (i, (spec, (name, t))) in specs.iter().zip(&tensors).enumerate() {
            if &spec.name != name {
                return Err(Error::Integrity(format!("tensor {i} is `{name}`, expected `{}`", spec.name)));
            }
            if spec.shape != t.shape || t.data.len() != spec.numel() {
                return Err(Error::Integrity(format!(
                    "`{name}` has shape {:?}, expected {:?}",
                    t.shape, spec.shape
                )));
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Integrity(format!("`{name}` holds non-finite values")));
            }
            index.insert(name.clone(), i);
        }
        Ok(WeightStore {
            seed,
            config_hash: config.hash(),
            tensors,
            index,
        })
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.index
            .get(name)
            .map(|&i| &self.tensors[i].1)
            .ok_or_else(|| Error::Integrity(format!("missing tensor `{name}`")))
    }

    pub fn tensors(&self) -> &[(String, Tensor)] {
        &self.tensors
    }

    pub fn into_tensors(self) -> Vec<(String, Tensor)> {
        self.tensors
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn check_config(&self, config: &ModelConfig) -> Result<()> {
        if self.config_hash != config.hash() {
            return Err(Error::Integrity(format!(
                "weights built for config {:016x}, model is {:016x}",
                self.config_hash,
                config.hash()
            )));
        }
        Ok(())
    }

    pub(crate) fn linear(&self, prefix: &str) -> Result<Linear<'_>> {
        Ok(Linear {
            weight: self.get(&format!("{prefix}.weight"))?,
            bias: self.get(&format!("{prefix}.bias"))?,
        })
    }

    pub(crate) fn conv(&self, prefix: &str) -> Result<ConvParams<'_>> {
        Ok(ConvParams {
            weight: self.get(&format!("{prefix}.weight"))?,
            bias: self.get(&format!("{prefix}.bias"))?,
        })
    }

    pub(crate) fn kernel_predictor(&self, prefix: &str, layers: usize) -> Result<KernelPredictorWeights<'_>> {
        Ok(KernelPredictorWeights {
            stack: (0..layers)
                .map(|j| self.conv(&format!("{prefix}.kp.stack.{j}")))
                .collect::<Result<_>>()?,
            kernel_head: self.conv(&format!("{prefix}.kp.kernel"))?,
            bias_head: self.conv(&format!("{prefix}.kp.bias"))?,
        })
    }
}

fn unit_uniform(rng: &mut impl RngCore) -> f32 {
    (rng.next_u32() >> 8) as f32 / (1u32 << 24) as f32
}

/// Deterministic initialization from the `weights` stream of `seed`.
pub fn init_weights(config: &ModelConfig, seed: u64) -> Result<WeightStore> {
    config.validate()?;
    let mut rng = stream(seed, WEIGHT_STREAM);
    let tensors = tensor_specs(config)
        .into_iter()
        .map(|spec| {
            let n = spec.numel();
            let data = match spec.init {
                Init::Zeros => vec![0.0; n],
                Init::Ones => vec![1.0; n],
                Init::Normal => (0..n)
                    .map(|_| {
                        let v: f32 = StandardNormal.sample(&mut rng);
                        v * NORMAL_INIT_STD
                    })
                    .collect(),
                Init::KaimingUniform => {
                    let fan_in: usize = spec.shape[1..].iter().product();
                    let bound = 1.0 / libm::sqrtf(fan_in.max(1) as f32);
                    (0..n).map(|_| (2.0 * unit_uniform(&mut rng) - 1.0) * bound).collect()
                }
            };
            (spec.name, Tensor { shape: spec.shape, data })
        })
        .collect();
    WeightStore::from_tensors(config, seed, tensors)
}

use alloc::format;
use alloc::vec::Vec;

use super::config::{EncoderKind, ModelConfig, StftRepresentation};
use super::weights::WeightStore;
use crate::dsp::{stft, AudioBuffer, MelSpectrogram};
use crate::error::{Error, Result};
use crate::nn::{
    adaln_modulated, conv1d, kernel_predictor, location_variable_conv, mapping_network, snake, step_embedding,
    transposed_conv1d, FeatureMap, LvcKernels, LvcLayout, Modulation,
};
use crate::rng::{normal_vec, LATENT_STREAM};

/// Step-independent conditioning of one LVC stage: predicted kernels and
/// AdaLN modulations for each sub-layer.
#[derive(Debug, Clone)]
pub struct StageConditioning {
    pub kernels: Vec<LvcKernels>,
    pub modulations: Vec<Modulation>,
}

/// Everything the generator derives from `c` and `z`, computed once per
/// utterance and reused across refinement steps.
#[derive(Debug, Clone)]
pub struct ConditioningBundle {
    pub frames: usize,
    pub z: Vec<f32>,
    pub w: Vec<f32>,
    pub encoder: Vec<StageConditioning>,
    pub decoder: Vec<StageConditioning>,
}

/// Latent `z` for an utterance, drawn from the `latent-z` stream.
pub fn sample_latent(seed: u64, dim: usize) -> Vec<f32> {
    normal_vec(seed, LATENT_STREAM, dim).into_iter().map(|v| v as f32).collect()
}

/// Mel features as a channel-major map (bands x frames).
pub fn mel_feature_map(c: &MelSpectrogram) -> Result<FeatureMap> {
    c.validate()?;
    let mut values = alloc::vec![0.0f32; c.values.len()];
    for m in 0..c.frames {
        for (b, &v) in c.frame(m).iter().enumerate() {
            values[b * c.frames + m] = v;
        }
    }
    FeatureMap::new(c.n_mels, c.frames, values)
}

/// The noise predictor bound to a config and its weights.
#[derive(Debug, Clone)]
pub struct Generator<'w> {
    config: ModelConfig,
    weights: &'w WeightStore,
}

impl<'w> Generator<'w> {
    pub fn new(config: &ModelConfig, weights: &'w WeightStore) -> Result<Self> {
        config.validate()?;
        weights.check_config(config)?;
        Ok(Generator {
            config: config.clone(),
            weights,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn weights(&self) -> &WeightStore {
        self.weights
    }

    fn layout(&self) -> LvcLayout {
        LvcLayout {
            layers: self.config.dilations.len(),
            out_ch: self.config.channels,
            in_ch: self.config.channels,
            kernel: self.config.lvc_kernel,
        }
    }

    fn stage(&self, prefix: &str, mel: &FeatureMap, w: &[f32]) -> Result<StageConditioning> {
        let kp = self.weights.kernel_predictor(prefix, self.config.kp_layers)?;
        let kernels = kernel_predictor(mel, &kp, self.layout())?;
        let modulations = (0..self.config.dilations.len())
            .map(|j| {
                Modulation::from_latent(
                    w,
                    self.weights.linear(&format!("{prefix}.sub.{j}.gamma"))?,
                    self.weights.linear(&format!("{prefix}.sub.{j}.beta"))?,
                )
            })
            .collect::<Result<_>>()?;
        Ok(StageConditioning { kernels, modulations })
    }

    /// Maps `z` to `w` and predicts every stage's kernels from `c`.
    pub fn condition(&self, c: &MelSpectrogram, z: &[f32]) -> Result<ConditioningBundle> {
        if c.n_mels != self.config.n_mels {
            return Err(Error::shape(format!(
                "model expects {} mel bands, got {}",
                self.config.n_mels, c.n_mels
            )));
        }
        if c.params.hop != self.config.hop() {
            return Err(Error::shape(format!(
                "mel hop {} differs from model hop {}",
                c.params.hop,
                self.config.hop()
            )));
        }
        if z.len() != self.config.z_dim {
            return Err(Error::shape(format!("latent has {} dims, expected {}", z.len(), self.config.z_dim)));
        }
        let mel = mel_feature_map(c)?;
        let w = mapping_network(
            z,
            self.weights.linear("mapping.fc1")?,
            self.weights.linear("mapping.fc2")?,
        )?;
        let encoder = if self.config.encoder_kind == EncoderKind::Neural {
            (0..self.config.n_blocks())
                .map(|n| self.stage(&format!("encoder.blocks.{n}"), &mel, &w))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let decoder = (0..self.config.n_blocks())
            .map(|n| self.stage(&format!("decoder.blocks.{n}"), &mel, &w))
            .collect::<Result<_>>()?;
        Ok(ConditioningBundle {
            frames: c.frames,
            z: z.to_vec(),
            w,
            encoder,
            decoder,
        })
    }

    pub fn step_embedding(&self, t: usize) -> Result<Vec<f32>> {
        step_embedding(
            t,
            self.config.t_max,
            self.config.step_base_dim,
            self.weights.linear("step.fc1")?,
            self.weights.linear("step.fc2")?,
        )
    }

    fn check_alignment(&self, y: &AudioBuffer, frames: usize) -> Result<()> {
        if y.len() != frames * self.config.hop() {
            return Err(Error::shape(format!(
                "audio of {} samples is not {frames} frames of {}",
                y.len(),
                self.config.hop()
            )));
        }
        Ok(())
    }

    /// STFT of `y` at each bank resolution, projected to the decoder width.
    /// The list is ordered like the decoder blocks (coarse to fine).
    pub fn encode_stft_bank(&self, y: &AudioBuffer, frames: usize) -> Result<Vec<FeatureMap>> {
        self.check_alignment(y, frames)?;
        let used = match self.config.encoder_kind {
            EncoderKind::SingleStftNoSkip => 1,
            _ => self.config.n_blocks(),
        };
        let mut out = Vec::with_capacity(used);
        for (n, params) in self.config.stft_bank().iter().take(used).enumerate() {
            let spec = stft(y, params)?;
            let steps = frames * (self.config.hop() / params.hop);
            let bins = spec.bins;
            let channels = self.config.stft_representation.channels(bins);
            let mut values = alloc::vec![0.0f32; channels * steps];
            for m in 0..steps {
                for (k, z) in spec.frame(m).iter().enumerate() {
                    match self.config.stft_representation {
                        StftRepresentation::Cartesian => {
                            values[k * steps + m] = z.re as f32;
                            values[(bins + k) * steps + m] = z.im as f32;
                        }
                        StftRepresentation::Magnitude => values[k * steps + m] = z.norm() as f32,
                    }
                }
            }
            let x = FeatureMap::new(channels, steps, values)?;
            out.push(self.weights.conv(&format!("encoder.proj.{n}"))?.same(&x)?);
        }
        Ok(out)
    }

    /// Dilated snake/LVC/AdaLN residual sub-layers of one stage.
    fn lvc_stage(
        &self,
        prefix: &str,
        mut h: FeatureMap,
        cond: &StageConditioning,
        frames: usize,
        t_emb: &[f32],
    ) -> Result<FeatureMap> {
        let hop = h.steps / frames;
        for (j, &dilation) in self.config.dilations.iter().enumerate() {
            let p = format!("{prefix}.sub.{j}");
            let a = snake(&h, &self.weights.get(&format!("{p}.alpha"))?.data)?;
            let mut a = location_variable_conv(&a, &cond.kernels[j], hop, dilation)?;
            let shift = self.weights.linear(&format!("{p}.step"))?.forward(t_emb)?;
            for (ch, s) in shift.iter().enumerate() {
                a.channel_mut(ch).iter_mut().for_each(|v| *v += s);
            }
            a.add_assign(&h)?;
            h = adaln_modulated(&a, &cond.modulations[j])?;
        }
        Ok(h)
    }

    /// Convolutional encoder: a wide input convolution, then per block the
    /// dilated sub-layers followed by a strided downsampling convolution.
    /// Outputs are returned coarse to fine, matching the STFT bank.
    pub fn encode_neural(&self, y: &AudioBuffer, bundle: &ConditioningBundle, t_emb: &[f32]) -> Result<Vec<FeatureMap>> {
        self.check_alignment(y, bundle.frames)?;
        if bundle.encoder.len() != self.config.n_blocks() {
            return Err(Error::Integrity("conditioning has no encoder stages".into()));
        }
        let x = FeatureMap::new(1, y.len(), y.samples.iter().map(|&v| v as f32).collect())?;
        let mut h = self.weights.conv("encoder.pre")?.same(&x)?;
        let mut outs = Vec::with_capacity(self.config.n_blocks());
        for (n, s) in self.config.encoder_strides().into_iter().enumerate() {
            let prefix = format!("encoder.blocks.{n}");
            h = self.lvc_stage(&prefix, h, &bundle.encoder[n], bundle.frames, t_emb)?;
            let down = self.weights.conv(&format!("{prefix}.down"))?;
            h = conv1d(&h, down.weight, Some(down.bias), s, 1, s / 2)?;
            outs.push(h.clone());
        }
        outs.reverse();
        Ok(outs)
    }

    /// One decoder block: concatenate the skip, fuse, upsample, then the
    /// conditioned sub-layers.
    pub fn decoder_block(
        &self,
        n: usize,
        x: &FeatureMap,
        skip: Option<&FeatureMap>,
        bundle: &ConditioningBundle,
        t_emb: &[f32],
    ) -> Result<FeatureMap> {
        let prefix = format!("decoder.blocks.{n}");
        let joined;
        let input = match (skip, self.config.has_skip(n)) {
            (Some(s), true) => {
                if s.steps != x.steps {
                    return Err(Error::shape(format!("skip has {} steps, input {}", s.steps, x.steps)));
                }
                joined = x.concat(s)?;
                &joined
            }
            (None, false) => x,
            (Some(_), false) => return Err(Error::shape(format!("block {n} takes no skip"))),
            (None, true) => return Err(Error::shape(format!("block {n} needs a skip input"))),
        };
        let h = self.weights.conv(&format!("{prefix}.fuse"))?.same(input)?;
        let up = self.weights.conv(&format!("{prefix}.up"))?;
        let h = transposed_conv1d(&h, up.weight, Some(up.bias), self.config.upsample_ratios[n])?;
        let cond = bundle
            .decoder
            .get(n)
            .ok_or_else(|| Error::Integrity(format!("conditioning has no decoder stage {n}")))?;
        self.lvc_stage(&prefix, h, cond, bundle.frames, t_emb)
    }

    /// Noise estimate for `y` at step `t`, same length as `y`.
    pub fn forward(&self, y: &AudioBuffer, bundle: &ConditioningBundle, t: usize) -> Result<AudioBuffer> {
        self.check_alignment(y, bundle.frames)?;
        y.check_finite()?;
        let t_emb = self.step_embedding(t)?;
        let feats = match self.config.encoder_kind {
            EncoderKind::Neural => self.encode_neural(y, bundle, &t_emb)?,
            _ => self.encode_stft_bank(y, bundle.frames)?,
        };
        let mut h = feats[0].clone();
        for n in 0..self.config.n_blocks() {
            let skip = if self.config.has_skip(n) { Some(&feats[n]) } else { None };
            h = self.decoder_block(n, &h, skip, bundle, &t_emb)?;
        }
        let h = snake(&h, &self.weights.get("head.alpha")?.data)?;
        let out = self.weights.conv("head")?.same(&h)?;
        let samples = out.values.iter().map(|&v| libm::tanhf(v) as f64).collect();
        Ok(AudioBuffer::new(samples, y.sample_rate))
    }
}

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::dsp::StftParams;
use crate::error::{Error, Result};
use crate::rng::fnv1a64;

use super::weights::tensor_specs;

/// What feeds the decoder's main input and skip connections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    /// One STFT per decoder resolution, projected by 1x1 convolutions.
    StftBank,
    /// Strided-convolution encoder mirroring the decoder.
    Neural,
    /// Only the coarsest STFT, feeding the first block; no skips.
    SingleStftNoSkip,
}

impl EncoderKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EncoderKind::StftBank => "stft_bank",
            EncoderKind::Neural => "neural",
            EncoderKind::SingleStftNoSkip => "single_stft_no_skip",
        }
    }
}

/// How an STFT is laid out as encoder channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StftRepresentation {
    /// Real parts then imaginary parts, `2 * bins` channels.
    Cartesian,
    /// Magnitudes, `bins` channels.
    Magnitude,
}

impl StftRepresentation {
    pub fn channels(&self, bins: usize) -> usize {
        match self {
            StftRepresentation::Cartesian => 2 * bins,
            StftRepresentation::Magnitude => bins,
        }
    }
}

/// Upper bound on any width or embedding size.
pub const MAX_WIDTH: usize = 4096;
/// Upper bound on the total number of parameters.
pub const MAX_PARAMS: u128 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Decoder upsampling factors, coarse to fine. Their product is the
    /// analysis hop.
    pub upsample_ratios: Vec<usize>,
    pub channels: usize,
    /// One residual sub-layer per dilation in every block.
    pub dilations: Vec<usize>,
    pub lvc_kernel: usize,
    pub kp_hidden: usize,
    pub kp_layers: usize,
    pub kp_kernel: usize,
    pub head_kernel: usize,
    pub n_mels: usize,
    pub z_dim: usize,
    pub w_dim: usize,
    pub step_base_dim: usize,
    pub step_dim: usize,
    pub t_max: usize,
    pub encoder_kind: EncoderKind,
    pub stft_representation: StftRepresentation,
    pub analysis: StftParams,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            upsample_ratios: vec![8, 8, 4],
            channels: 32,
            dilations: vec![1, 3, 9],
            lvc_kernel: 3,
            kp_hidden: 64,
            kp_layers: 3,
            kp_kernel: 3,
            head_kernel: 7,
            n_mels: 100,
            z_dim: 100,
            w_dim: 256,
            step_base_dim: 128,
            step_dim: 512,
            t_max: 3,
            encoder_kind: EncoderKind::StftBank,
            stft_representation: StftRepresentation::Cartesian,
            analysis: StftParams::default(),
        }
    }
}

impl ModelConfig {
    pub fn with_encoder(mut self, kind: EncoderKind) -> Self {
        self.encoder_kind = kind;
        self
    }

    pub fn n_blocks(&self) -> usize {
        self.upsample_ratios.len()
    }

    pub fn hop(&self) -> usize {
        self.analysis.hop
    }

    pub fn validate(&self) -> Result<()> {
        self.analysis.validate()?;
        if self.upsample_ratios.is_empty() || self.upsample_ratios.len() > 8 {
            return Err(Error::param("between 1 and 8 upsampling stages required"));
        }
        if self.upsample_ratios.iter().any(|&r| r == 0 || r > 1024) {
            return Err(Error::param("upsample ratios must lie in 1..=1024"));
        }
        let product = self
            .upsample_ratios
            .iter()
            .try_fold(1usize, |acc, &r| acc.checked_mul(r))
            .unwrap_or(usize::MAX);
        if product != self.analysis.hop {
            return Err(Error::param(format!(
                "upsample ratios multiply to {product}, analysis hop is {}",
                self.analysis.hop
            )));
        }
        if self.dilations.is_empty() || self.dilations.len() > 16 || self.dilations.iter().any(|&d| d == 0 || d > 4096) {
            return Err(Error::param("between 1 and 16 dilations in 1..=4096 required"));
        }
        if self.kp_layers != self.dilations.len() {
            return Err(Error::param("kernel predictor must cover every dilated sub-layer"));
        }
        for (name, k) in [
            ("lvc_kernel", self.lvc_kernel),
            ("kp_kernel", self.kp_kernel),
            ("head_kernel", self.head_kernel),
        ] {
            if k == 0 || k % 2 == 0 || k > 255 {
                return Err(Error::param(format!("{name} must be odd, got {k}")));
            }
        }
        for (name, v) in [
            ("channels", self.channels),
            ("kp_hidden", self.kp_hidden),
            ("n_mels", self.n_mels),
            ("z_dim", self.z_dim),
            ("w_dim", self.w_dim),
            ("step_dim", self.step_dim),
        ] {
            if v == 0 || v > MAX_WIDTH {
                return Err(Error::param(format!("{name} must lie in 1..={MAX_WIDTH}")));
            }
        }
        if self.t_max == 0 || self.t_max > 10_000 {
            return Err(Error::param("t_max must lie in 1..=10000"));
        }
        if self.step_base_dim == 0 || self.step_base_dim % 2 != 0 || self.step_base_dim > MAX_WIDTH {
            return Err(Error::param("step_base_dim must be even"));
        }
        if self.encoder_kind == EncoderKind::Neural && self.upsample_ratios.iter().any(|r| r % 2 != 0 && *r != 1) {
            return Err(Error::param("neural encoder needs even strides"));
        }
        let params: u128 = tensor_specs(self)
            .iter()
            .map(|t| t.shape.iter().map(|&d| d as u128).product::<u128>())
            .sum();
        if params > MAX_PARAMS {
            return Err(Error::param(format!("{params} parameters exceed the limit of {MAX_PARAMS}")));
        }
        Ok(())
    }

    /// Samples per step at the input of decoder block `n`; the last entry is
    /// the output resolution (1).
    pub fn resolutions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_blocks() + 1);
        let mut hop = self.analysis.hop;
        out.push(hop);
        for r in &self.upsample_ratios {
            hop /= r;
            out.push(hop);
        }
        out
    }

    /// One STFT per decoder input resolution: hop equal to the resolution,
    /// FFT size and window four times the hop.
    pub fn stft_bank(&self) -> Vec<StftParams> {
        self.resolutions()[..self.n_blocks()]
            .iter()
            .map(|&h| StftParams::new(4 * h, h, 4 * h))
            .collect()
    }

    /// Downsampling strides of the neural encoder, fine to coarse.
    pub fn encoder_strides(&self) -> Vec<usize> {
        self.upsample_ratios.iter().rev().copied().collect()
    }

    /// Whether decoder block `n` takes a skip input.
    pub fn has_skip(&self, n: usize) -> bool {
        n > 0 && self.encoder_kind != EncoderKind::SingleStftNoSkip
    }

    /// Canonical text form used for hashing.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "ratios={:?};channels={};dilations={:?};lvc_kernel={};kp={}x{}x{};head={};mels={};z={};w={};step={}/{};t_max={};encoder={};repr={:?};analysis={}/{}/{}/{}",
            self.upsample_ratios,
            self.channels,
            self.dilations,
            self.lvc_kernel,
            self.kp_hidden,
            self.kp_layers,
            self.kp_kernel,
            self.head_kernel,
            self.n_mels,
            self.z_dim,
            self.w_dim,
            self.step_base_dim,
            self.step_dim,
            self.t_max,
            self.encoder_kind.as_str(),
            self.stft_representation,
            self.analysis.n_fft,
            self.analysis.hop,
            self.analysis.win_length,
            self.analysis.center
        );
        s
    }

    pub fn hash(&self) -> u64 {
        fnv1a64(self.canonical().as_bytes())
    }
}

//! Generator configuration, weights and forward pass.

pub mod config;
pub mod generator;
pub mod weights;

pub use config::{EncoderKind, ModelConfig, StftRepresentation};
pub use generator::{mel_feature_map, sample_latent, ConditioningBundle, Generator, StageConditioning};
pub use weights::{init_weights, param_count, tensor_specs, WeightStore};

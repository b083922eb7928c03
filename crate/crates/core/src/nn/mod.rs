//! Forward-pass primitives of the generator.

pub mod conv;
pub mod layers;
pub mod tensor;

pub use conv::{conv1d, location_variable_conv, transposed_conv1d, LvcKernels};
pub use layers::{
    adaln, adaln_modulated, kernel_predictor, layer_norm_channels, mapping_network, sinusoidal_encoding, snake,
    step_embedding, swish, ConvParams, KernelPredictorWeights, Linear, LvcLayout, Modulation,
};
pub use tensor::{FeatureMap, Init, Tensor, TensorSpec};

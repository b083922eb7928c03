use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense f32 tensor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(format!("shape {shape:?} holds {n} values, got {}", data.len())));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor { shape, data: vec![0.0; n] }
    }

    pub fn filled(shape: Vec<usize>, value: f32) -> Self {
        let n = shape.iter().product();
        Tensor { shape, data: vec![value; n] }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn dims3(&self) -> Result<(usize, usize, usize)> {
        match self.shape[..] {
            [a, b, c] => Ok((a, b, c)),
            _ => Err(Error::shape(format!("expected a 3-d tensor, got {:?}", self.shape))),
        }
    }

    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [a, b] => Ok((a, b)),
            _ => Err(Error::shape(format!("expected a 2-d tensor, got {:?}", self.shape))),
        }
    }
}

/// Initialization rule for a named tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Uniform in `+-1/sqrt(fan_in)`, fan-in being the product of all but the
    /// leading dimension.
    KaimingUniform,
    Zeros,
    Ones,
    /// Normal with mean 0 and standard deviation 0.01.
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

impl TensorSpec {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, init: Init) -> Self {
        TensorSpec {
            name: name.into(),
            shape,
            init,
        }
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Activations, channels x steps, row-major by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub steps: usize,
    pub values: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: usize, steps: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != channels * steps {
            return Err(Error::shape(format!(
                "{} values for {channels} channels x {steps} steps",
                values.len()
            )));
        }
        Ok(FeatureMap { channels, steps, values })
    }

    pub fn zeros(channels: usize, steps: usize) -> Self {
        FeatureMap {
            channels,
            steps,
            values: vec![0.0; channels * steps],
        }
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        &self.values[c * self.steps..(c + 1) * self.steps]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        &mut self.values[c * self.steps..(c + 1) * self.steps]
    }

    /// Channel-wise concatenation.
    pub fn concat(&self, other: &FeatureMap) -> Result<FeatureMap> {
        if self.steps != other.steps {
            return Err(Error::shape(format!(
                "cannot concatenate {} and {} steps",
                self.steps, other.steps
            )));
        }
        let mut values = Vec::with_capacity(self.values.len() + other.values.len());
        values.extend_from_slice(&self.values);
        values.extend_from_slice(&other.values);
        Ok(FeatureMap {
            channels: self.channels + other.channels,
            steps: self.steps,
            values,
        })
    }

    pub fn add_assign(&mut self, other: &FeatureMap) -> Result<()> {
        if self.channels != other.channels || self.steps != other.steps {
            return Err(Error::shape("feature maps differ in shape"));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

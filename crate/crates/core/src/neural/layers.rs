use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Nonlinearity shared by every hidden layer, stored in the weight header.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum Activation {
    /// `0.5·x·(1 + tanh(√(2/π)·(x + 0.044715·x³)))`
    GeluTanh = 0,
    Silu = 1,
    Tanh = 2,
    Relu = 3,
}

impl Activation {
    pub fn from_id(id: u8) -> Option<Self> {
        Some(match id {
            0 => Self::GeluTanh,
            1 => Self::Silu,
            2 => Self::Tanh,
            3 => Self::Relu,
            _ => return None,
        })
    }

    pub fn id(self) -> u8 {
        self as u8
    }

    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Self::GeluTanh => {
                let c = T::lit((2.0 / std::f64::consts::PI).sqrt());
                let inner = c * (x + T::lit(0.044715) * x * x * x);
                T::lit(0.5) * x * (T::one() + inner.tanh())
            }
            Self::Silu => x / (T::one() + (-x).exp()),
            Self::Tanh => x.tanh(),
            Self::Relu => x.max(T::zero()),
        }
    }
}

/// Where the feature extractor's skip connection sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum FeWiring {
    /// `h = fc1(x) + fc2(act(fc1(x)))`
    Residual = 0,
    /// `h = fc2(act(fc1(x)))`
    Plain = 1,
    /// `h = act(fc1(x)) + fc2(act(fc1(x)))`
    ActivatedResidual = 2,
}

impl FeWiring {
    pub fn from_id(id: u8) -> Option<Self> {
        Some(match id {
            0 => Self::Residual,
            1 => Self::Plain,
            2 => Self::ActivatedResidual,
            _ => return None,
        })
    }

    pub fn id(self) -> u8 {
        self as u8
    }
}

/// Affine layer `W·x + b` with `W` stored row-major as `[outputs, inputs]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    inputs: usize,
    outputs: usize,
    weight: Vec<T>,
    bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(inputs: usize, outputs: usize, weight: Vec<T>, bias: Vec<T>) -> Result<Self> {
        if weight.len() != inputs * outputs || bias.len() != outputs {
            return Err(Error::invalid(format!(
                "dense layer {inputs}->{outputs}: got {} weights and {} biases",
                weight.len(),
                bias.len()
            )));
        }
        Ok(Self {
            inputs,
            outputs,
            weight,
            bias,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weight(&self) -> &[T] {
        &self.weight
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.inputs);
        self.weight
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (&w, &v)| acc + w * v))
            .collect()
    }

    pub fn cast<U: Scalar>(&self) -> Dense<U> {
        Dense {
            inputs: self.inputs,
            outputs: self.outputs,
            weight: cast_vec(&self.weight),
            bias: cast_vec(&self.bias),
        }
    }
}

pub(crate) fn cast_vec<T: Scalar, U: Scalar>(v: &[T]) -> Vec<U> {
    v.iter().map(|&x| U::lit(x.as_f64())).collect()
}

/// Two affine layers, a skip combination and layer normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureExtractor<T> {
    pub fc1: Dense<T>,
    pub fc2: Dense<T>,
    pub norm_gain: Vec<T>,
    pub norm_bias: Vec<T>,
}

impl<T: Scalar> FeatureExtractor<T> {
    pub fn input_len(&self) -> usize {
        self.fc1.inputs()
    }

    pub fn hidden(&self) -> usize {
        self.fc1.outputs()
    }

    /// Layer-normalized features before the gain and bias are applied.
    pub fn normalized(
        &self,
        input: &[T],
        activation: Activation,
        wiring: FeWiring,
        eps: T,
    ) -> Result<Vec<T>> {
        if input.len() != self.input_len() {
            return Err(Error::invalid(format!(
                "feature extractor expects {} inputs, got {}",
                self.input_len(),
                input.len()
            )));
        }
        let h1 = self.fc1.forward(input);
        let a1: Vec<T> = h1.iter().map(|&v| activation.apply(v)).collect();
        let h2 = self.fc2.forward(&a1);
        let h: Vec<T> = match wiring {
            FeWiring::Residual => h1.iter().zip(&h2).map(|(&a, &b)| a + b).collect(),
            FeWiring::Plain => h2,
            FeWiring::ActivatedResidual => a1.iter().zip(&h2).map(|(&a, &b)| a + b).collect(),
        };
        Ok(layer_norm(&h, eps))
    }

    pub fn forward(
        &self,
        input: &[T],
        activation: Activation,
        wiring: FeWiring,
        eps: T,
    ) -> Result<Vec<T>> {
        let mut out = self.normalized(input, activation, wiring, eps)?;
        for ((v, &g), &b) in out.iter_mut().zip(&self.norm_gain).zip(&self.norm_bias) {
            *v = *v * g + b;
        }
        Ok(out)
    }

    pub fn cast<U: Scalar>(&self) -> FeatureExtractor<U> {
        FeatureExtractor {
            fc1: self.fc1.cast(),
            fc2: self.fc2.cast(),
            norm_gain: cast_vec(&self.norm_gain),
            norm_bias: cast_vec(&self.norm_bias),
        }
    }
}

/// Encoder MLP: hidden layer, activation, scalar output.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderHead<T> {
    pub fc1: Dense<T>,
    pub fc2: Dense<T>,
}

impl<T: Scalar> EncoderHead<T> {
    pub fn forward(&self, features: &[T], activation: Activation) -> T {
        let h: Vec<T> = self
            .fc1
            .forward(features)
            .into_iter()
            .map(|v| activation.apply(v))
            .collect();
        self.fc2.forward(&h)[0]
    }

    pub fn cast<U: Scalar>(&self) -> EncoderHead<U> {
        EncoderHead {
            fc1: self.fc1.cast(),
            fc2: self.fc2.cast(),
        }
    }
}

fn layer_norm<T: Scalar>(h: &[T], eps: T) -> Vec<T> {
    let n = T::lit(h.len() as f64);
    let mean = h.iter().copied().sum::<T>() / n;
    let var = h.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    let inv = T::one() / (var + eps).sqrt();
    h.iter().map(|&v| (v - mean) * inv).collect()
}

/// `softmax(v)_i = e^{v_i} / Σ_j e^{v_j}`, shifted by the maximum for stability.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| a.max(b));
    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total = exps.iter().copied().sum::<T>();
    exps.into_iter().map(|e| e / total).collect()
}

//! Fully connected layers and the softmax head.

use crate::error::{shape, Result};
use crate::tensor::{Scalar, Tensor};

use super::layer::Activation;

#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T = f32> {
    pub inputs: usize,
    pub outputs: usize,
    /// `(outputs, inputs)`, row-major.
    pub weights: Tensor<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Result<Self> {
        Ok(Dense {
            inputs,
            outputs,
            weights: Tensor::zeros(&[outputs, inputs])?,
            bias: vec![T::zero(); outputs],
            activation,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.shape() != [self.outputs, self.inputs] || self.bias.len() != self.outputs {
            return Err(shape(format!(
                "dense {}x{} with weights {:?} and {} biases",
                self.outputs,
                self.inputs,
                self.weights.shape(),
                self.bias.len()
            )));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.outputs * (self.inputs + 1)
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.inputs {
            return Err(shape(format!(
                "dense expects {} inputs, got {}",
                self.inputs,
                x.len()
            )));
        }
        let z: Vec<T> = self
            .weights
            .data()
            .chunks(self.inputs)
            .zip(&self.bias)
            .map(|(row, &b)| row.iter().zip(x).map(|(&w, &v)| w * v).sum::<T>() + b)
            .collect();
        Ok(match self.activation {
            Activation::Softmax => softmax(&z),
            act => z.into_iter().map(|v| act.apply(v)).collect(),
        })
    }

    /// Returns `(∂W, ∂b, ∂x)` given the gradient with respect to the
    /// pre-activation `z`.
    pub(crate) fn backward_pre(&self, x: &[T], dz: &[T]) -> (Tensor<T>, Vec<T>, Vec<T>) {
        let mut gw = Vec::with_capacity(self.outputs * self.inputs);
        for &g in dz {
            gw.extend(x.iter().map(|&v| g * v));
        }
        let mut gx = vec![T::zero(); self.inputs];
        for (row, &g) in self.weights.data().chunks(self.inputs).zip(dz) {
            for (a, &w) in gx.iter_mut().zip(row) {
                *a += g * w;
            }
        }
        let gw = Tensor::new(vec![self.outputs, self.inputs], gw).expect("consistent dims");
        (gw, dz.to_vec(), gx)
    }

    pub fn cast<U: Scalar>(&self) -> Dense<U> {
        Dense {
            inputs: self.inputs,
            outputs: self.outputs,
            weights: self.weights.cast(),
            bias: self.bias.iter().map(|&b| U::from_f64(b.as_f64())).collect(),
            activation: self.activation,
        }
    }
}

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

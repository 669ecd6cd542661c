//! Polynomial convolution layers.
//!
//! Output channel `i` computes `f(Σ_{d=1..D} W_{i,d} ⋆ Y^d + b_i)` where
//! `Y^d` is the elementwise `d`-th power of the input, `⋆` is a valid
//! cross-correlation summed over input channels, and `f` the activation.
//! With `D = 1` this is an ordinary convolution layer.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, shape, Error, Result};
use crate::tensor::{convolve_input_grad, convolve_valid, correlate_kernel_grad, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
    /// Only valid on the dense classification head.
    Softmax,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
            Activation::Softmax => "softmax",
        }
    }

    /// Elementwise activation; softmax is applied by the dense head itself.
    pub(crate) fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            // NaN passes through so divergence stays visible
            Activation::Relu => {
                if z < T::zero() {
                    T::zero()
                } else {
                    z
                }
            }
            Activation::Identity | Activation::Softmax => z,
        }
    }

    /// Derivative expressed through the activation output.
    pub(crate) fn derivative_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Identity | Activation::Softmax => T::one(),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            "softmax" => Ok(Activation::Softmax),
            _ => Err(invalid(format!("unknown activation '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyConvLayer<T = f32> {
    pub rank: usize,
    pub kernel: Vec<usize>,
    pub in_channels: usize,
    pub out_channels: usize,
    /// `weights[d - 1]` is the `(out, in, kernel...)` bank applied to `Y^d`.
    pub weights: Vec<Tensor<T>>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

/// Gradients of a scalar loss with respect to a layer's parameters and input.
#[derive(Clone, Debug)]
pub struct PolyConvGrads<T = f32> {
    pub weights: Vec<Tensor<T>>,
    pub bias: Vec<T>,
    pub input: Tensor<T>,
}

impl<T: Scalar> PolyConvLayer<T> {
    /// A layer with all weights and biases zero.
    pub fn zeros(
        rank: usize,
        kernel: &[usize],
        in_channels: usize,
        out_channels: usize,
        degree: usize,
        activation: Activation,
    ) -> Result<Self> {
        if degree < 1 {
            return Err(invalid("polynomial degree must be >= 1"));
        }
        let mut kshape = vec![out_channels, in_channels];
        kshape.extend_from_slice(kernel);
        let bank = Tensor::zeros(&kshape)?;
        let layer = PolyConvLayer {
            rank,
            kernel: kernel.to_vec(),
            in_channels,
            out_channels,
            weights: vec![bank; degree],
            bias: vec![T::zero(); out_channels],
            activation,
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn degree(&self) -> usize {
        self.weights.len()
    }

    pub fn receptive_field(&self) -> usize {
        self.kernel.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.rank) || self.kernel.len() != self.rank {
            return Err(invalid(format!(
                "rank {} layer with kernel {:?}",
                self.rank, self.kernel
            )));
        }
        if self.weights.is_empty() {
            return Err(invalid("polynomial degree must be >= 1"));
        }
        if self.activation == Activation::Softmax {
            return Err(invalid("softmax is reserved for the dense head"));
        }
        let mut kshape = vec![self.out_channels, self.in_channels];
        kshape.extend_from_slice(&self.kernel);
        if let Some(bad) = self.weights.iter().find(|w| w.shape() != kshape.as_slice()) {
            return Err(shape(format!(
                "weight bank {:?} differs from expected {kshape:?}",
                bad.shape()
            )));
        }
        if self.bias.len() != self.out_channels {
            return Err(shape(format!(
                "{} biases for {} output channels",
                self.bias.len(),
                self.out_channels
            )));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.degree() * self.out_channels * self.in_channels * self.receptive_field()
            + self.out_channels
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.len() != self.rank + 1 || input[0] != self.in_channels {
            return Err(shape(format!(
                "layer expects ({}, {} spatial axes), got {input:?}",
                self.in_channels, self.rank
            )));
        }
        let mut out = vec![self.out_channels];
        for (&i, &k) in input[1..].iter().zip(&self.kernel) {
            if k > i {
                return Err(shape(format!(
                    "kernel {:?} exceeds input {input:?}",
                    self.kernel
                )));
            }
            out.push(i - k + 1);
        }
        Ok(out)
    }

    /// `Y, Y², …, Y^D`, each computed once.
    fn powers(&self, x: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        let mut out: Vec<Tensor<T>> = Vec::with_capacity(self.degree());
        out.push(x.clone());
        for _ in 1..self.degree() {
            let next = out.last().expect("non-empty").hadamard(x)?;
            out.push(next);
        }
        Ok(out)
    }

    fn preactivation_from_powers(&self, powers: &[Tensor<T>]) -> Result<Tensor<T>> {
        let mut z: Option<Tensor<T>> = None;
        for (w, p) in self.weights.iter().zip(powers) {
            let part = convolve_valid(p, w, self.rank)?;
            z = Some(match z {
                None => part,
                Some(mut acc) => {
                    for (a, &b) in acc.data_mut().iter_mut().zip(part.data()) {
                        *a += b;
                    }
                    acc
                }
            });
        }
        let mut z = z.expect("degree >= 1");
        let plane = z.len() / self.out_channels;
        for (o, chunk) in z.data_mut().chunks_mut(plane).enumerate() {
            for v in chunk {
                *v += self.bias[o];
            }
        }
        Ok(z)
    }

    pub fn preactivation(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.output_shape(x.shape())?;
        self.preactivation_from_powers(&self.powers(x)?)
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let act = self.activation;
        Ok(self.preactivation(x)?.map(|z| act.apply(z)))
    }

    /// Recomputes the forward pass and returns exact gradients given the
    /// upstream gradient `∂L/∂y`.
    pub fn backward(&self, x: &Tensor<T>, grad_out: &Tensor<T>) -> Result<PolyConvGrads<T>> {
        let y = self.forward(x)?;
        self.backward_with_output(x, &y, grad_out)
    }

    pub(crate) fn backward_with_output(
        &self,
        x: &Tensor<T>,
        y: &Tensor<T>,
        grad_out: &Tensor<T>,
    ) -> Result<PolyConvGrads<T>> {
        let out_shape = self.output_shape(x.shape())?;
        if grad_out.shape() != out_shape.as_slice() || y.shape() != out_shape.as_slice() {
            return Err(shape(format!(
                "upstream gradient {:?} does not match layer output {out_shape:?}",
                grad_out.shape()
            )));
        }
        let act = self.activation;
        let mut dz = grad_out.clone();
        for (g, &yv) in dz.data_mut().iter_mut().zip(y.data()) {
            *g *= act.derivative_from_output(yv);
        }
        let plane = dz.len() / self.out_channels;
        let bias = dz
            .data()
            .chunks(plane)
            .map(|c| c.iter().copied().sum())
            .collect();
        let powers = self.powers(x)?;
        let spatial = &x.shape()[1..];
        let mut weights = Vec::with_capacity(self.degree());
        let mut input = Tensor::zeros(x.shape())?;
        for (d, (w, p)) in self.weights.iter().zip(&powers).enumerate() {
            weights.push(correlate_kernel_grad(p, &dz, self.rank, &self.kernel)?);
            let back = convolve_input_grad(&dz, w, self.rank, spatial)?;
            // ∂(Y^{d+1})/∂Y = (d+1)·Y^d
            let scale = T::from_f64((d + 1) as f64);
            let inp = input.data_mut();
            if d == 0 {
                for (a, &b) in inp.iter_mut().zip(back.data()) {
                    *a += b;
                }
            } else {
                for ((a, &b), &pw) in inp.iter_mut().zip(back.data()).zip(powers[d - 1].data()) {
                    *a += scale * pw * b;
                }
            }
        }
        Ok(PolyConvGrads {
            weights,
            bias,
            input,
        })
    }

    pub fn cast<U: Scalar>(&self) -> PolyConvLayer<U> {
        PolyConvLayer {
            rank: self.rank,
            kernel: self.kernel.clone(),
            in_channels: self.in_channels,
            out_channels: self.out_channels,
            weights: self.weights.iter().map(|w| w.cast()).collect(),
            bias: self.bias.iter().map(|&b| U::from_f64(b.as_f64())).collect(),
            activation: self.activation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_layer(ws: &[f64], b: f64, act: Activation) -> PolyConvLayer<f64> {
        let mut l = PolyConvLayer::zeros(1, &[1], 1, 1, ws.len(), act).unwrap();
        for (bank, &w) in l.weights.iter_mut().zip(ws) {
            bank.data_mut()[0] = w;
        }
        l.bias[0] = b;
        l
    }

    #[test]
    fn scalar_expansion() {
        let l = scalar_layer(&[1.0, 1.0], 0.0, Activation::Identity);
        let x = Tensor::new(vec![1, 1], vec![2.0]).unwrap();
        assert_eq!(l.forward(&x).unwrap().data(), &[6.0]);
    }

    #[test]
    fn per_sample_polynomial_with_relu() {
        let l = scalar_layer(&[1.0, 0.5], 1.0, Activation::Relu);
        let x = Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap();
        assert_eq!(l.forward(&x).unwrap().data(), &[2.5, 5.0]);
    }

    #[test]
    fn scalar_gradients_by_hand() {
        let l = scalar_layer(&[1.0, 1.0], 0.0, Activation::Identity);
        let x = Tensor::new(vec![1, 1], vec![2.0]).unwrap();
        let g = l
            .backward(&x, &Tensor::new(vec![1, 1], vec![1.0]).unwrap())
            .unwrap();
        assert_eq!(g.weights[0].data(), &[2.0]);
        assert_eq!(g.weights[1].data(), &[4.0]);
        assert_eq!(g.bias, vec![1.0]);
        assert_eq!(g.input.data(), &[5.0]);
    }

    #[test]
    fn degree_one_is_a_convolution() {
        let mut l = PolyConvLayer::<f64>::zeros(2, &[2, 2], 1, 1, 1, Activation::Identity).unwrap();
        l.weights[0] = Tensor::new(vec![1, 1, 2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        l.bias[0] = 0.5;
        let x = Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let expected = convolve_valid(&x, &l.weights[0], 2).unwrap();
        assert_eq!(l.forward(&x).unwrap().data(), &[expected.data()[0] + 0.5]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let l = PolyConvLayer::<f32>::zeros(1, &[3], 2, 1, 2, Activation::Relu).unwrap();
        assert!(l.forward(&Tensor::zeros(&[1, 5]).unwrap()).is_err());
        assert!(l.forward(&Tensor::zeros(&[2, 2]).unwrap()).is_err());
        assert!(PolyConvLayer::<f32>::zeros(1, &[3], 2, 1, 0, Activation::Relu).is_err());
        assert!(PolyConvLayer::<f32>::zeros(1, &[3], 2, 1, 1, Activation::Softmax).is_err());
        let x = Tensor::zeros(&[2, 5]).unwrap();
        assert!(matches!(
            l.backward(&x, &Tensor::zeros(&[1, 4]).unwrap()),
            Err(Error::ShapeMismatch(_))
        ));
    }
}

//! Central finite-difference verification of polynomial layer gradients.
//!
//! The analytic gradients of `L = Σ g ⊙ layer(x)` are compared with
//! central differences evaluated in f64 on the same parameters. Errors are
//! normwise per block: `max|analytic − numeric| / max|numeric|`.

use rand::Rng;

use crate::error::Result;
use crate::tensor::{Scalar, Tensor};

use super::layer::{Activation, PolyConvLayer};

const STEP: f64 = 1e-6;
/// Pre-activations closer than this to the relu kink make differences
/// meaningless; such draws are rejected by [`random_case`].
pub const KINK_MARGIN: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    /// One entry per degree bank.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub input: f64,
}

impl GradCheck {
    pub fn max_error(&self) -> f64 {
        self.weights
            .iter()
            .copied()
            .fold(self.bias.max(self.input), f64::max)
    }
}

fn loss(layer: &PolyConvLayer<f64>, x: &Tensor<f64>, g: &Tensor<f64>) -> Result<f64> {
    Ok(layer
        .forward(x)?
        .data()
        .iter()
        .zip(g.data())
        .map(|(a, b)| a * b)
        .sum())
}

fn central(mut f: impl FnMut(f64) -> Result<f64>, at: f64) -> Result<f64> {
    let h = STEP * at.abs().max(1.0);
    Ok((f(at + h)? - f(at - h)?) / (2.0 * h))
}

fn normwise(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = analytic
        .iter()
        .zip(numeric)
        .fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Checks the layer's analytic gradients (computed in `T`) against f64
/// central differences.
pub fn check_layer<T: Scalar>(
    layer: &PolyConvLayer<T>,
    x: &Tensor<T>,
    upstream: &Tensor<T>,
) -> Result<GradCheck> {
    let analytic = layer.backward(x, upstream)?;
    let mut l64: PolyConvLayer<f64> = layer.cast();
    let mut x64: Tensor<f64> = x.cast();
    let g64: Tensor<f64> = upstream.cast();

    let mut weights = Vec::with_capacity(layer.degree());
    for d in 0..layer.degree() {
        let mut numeric = Vec::with_capacity(l64.weights[d].len());
        for i in 0..l64.weights[d].len() {
            let at = l64.weights[d].data()[i];
            numeric.push(central(
                |v| {
                    l64.weights[d].data_mut()[i] = v;
                    loss(&l64, &x64, &g64)
                },
                at,
            )?);
            l64.weights[d].data_mut()[i] = at;
        }
        let a: Vec<f64> = analytic.weights[d]
            .data()
            .iter()
            .map(|v| v.as_f64())
            .collect();
        weights.push(normwise(&a, &numeric));
    }

    let mut numeric = Vec::with_capacity(l64.bias.len());
    for i in 0..l64.bias.len() {
        let at = l64.bias[i];
        numeric.push(central(
            |v| {
                l64.bias[i] = v;
                loss(&l64, &x64, &g64)
            },
            at,
        )?);
        l64.bias[i] = at;
    }
    let a: Vec<f64> = analytic.bias.iter().map(|v| v.as_f64()).collect();
    let bias = normwise(&a, &numeric);

    let mut numeric = Vec::with_capacity(x64.len());
    for i in 0..x64.len() {
        let at = x64.data()[i];
        numeric.push(central(
            |v| {
                x64.data_mut()[i] = v;
                loss(&l64, &x64, &g64)
            },
            at,
        )?);
        x64.data_mut()[i] = at;
    }
    let a: Vec<f64> = analytic.input.data().iter().map(|v| v.as_f64()).collect();
    let input = normwise(&a, &numeric);

    Ok(GradCheck {
        weights,
        bias,
        input,
    })
}

/// A random layer, input and upstream gradient of the given rank and
/// degree: 1–3 channels each way, kernels of 1–3 taps per axis, inputs up to
/// 3 samples larger than the kernel, values in `[-1, 1]`. Relu layers are
/// redrawn until no pre-activation lies within [`KINK_MARGIN`] of zero.
pub fn random_case<T: Scalar, R: Rng>(
    rng: &mut R,
    rank: usize,
    degree: usize,
    activation: Activation,
) -> Result<(PolyConvLayer<T>, Tensor<T>, Tensor<T>)> {
    loop {
        let in_ch = rng.gen_range(1..=3);
        let out_ch = rng.gen_range(1..=3);
        let kernel: Vec<usize> = (0..rank).map(|_| rng.gen_range(1..=3)).collect();
        let mut layer =
            PolyConvLayer::<T>::zeros(rank, &kernel, in_ch, out_ch, degree, activation)?;
        for bank in &mut layer.weights {
            for w in bank.data_mut() {
                *w = T::from_f64(rng.gen_range(-1.0..1.0));
            }
        }
        for b in &mut layer.bias {
            *b = T::from_f64(rng.gen_range(-0.5..0.5));
        }
        let mut shape = vec![in_ch];
        shape.extend(kernel.iter().map(|&k| k + rng.gen_range(0..=3)));
        let n: usize = shape.iter().product();
        let x = Tensor::new(
            shape,
            (0..n)
                .map(|_| T::from_f64(rng.gen_range(-1.0..1.0)))
                .collect(),
        )?;
        if activation == Activation::Relu {
            let z = layer.cast::<f64>().preactivation(&x.cast())?;
            if z.data().iter().any(|v| v.abs() < KINK_MARGIN) {
                continue;
            }
        }
        let out = layer.output_shape(x.shape())?;
        let m: usize = out.iter().product();
        let g = Tensor::new(
            out,
            (0..m)
                .map(|_| T::from_f64(rng.gen_range(-1.0..1.0)))
                .collect(),
        )?;
        return Ok((layer, x, g));
    }
}

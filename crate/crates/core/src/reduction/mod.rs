//! Greedy layer-wise degree reduction of trained polynomial networks.
//!
//! Every weight tap of a polynomial layer, together with its share
//! `b_i / (N·K)` of the bias, is a scalar polynomial in the tap's input.
//! Reducing a layer projects all of them onto a lower degree over the
//! symmetric interval bounding that layer's inputs.

pub mod poly;

use std::fmt::Write as _;

use crate::engine::{Layer, ModelSpec, PolyConvLayer};
use crate::error::{invalid, Result};
use crate::tensor::{Scalar, Tensor};

pub use poly::{projection_matrix, reduce_poly, Poly};

/// Lower bound for interval half-widths, so dead layers stay reducible.
pub const BOUND_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionStep {
    pub iter: usize,
    /// 1-based index among the polynomial layers.
    pub layer: usize,
    pub new_degree: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionPlan {
    pub original_degrees: Vec<usize>,
    pub reductions: Vec<usize>,
    pub bounds: Vec<f64>,
    pub threshold: f64,
    pub baseline: f64,
    pub history: Vec<ReductionStep>,
    pub original_params: usize,
    pub reduced_params: usize,
}

impl ReductionPlan {
    pub fn degrees(&self) -> Vec<usize> {
        self.original_degrees
            .iter()
            .zip(&self.reductions)
            .map(|(d, r)| d - r)
            .collect()
    }

    pub fn param_ratio(&self) -> f64 {
        self.original_params as f64 / self.reduced_params as f64
    }

    /// `iter, layer, new_degree, score` per committed step, then a summary.
    pub fn report(&self) -> String {
        let mut out = String::from("iter, layer, new_degree, score\n");
        for s in &self.history {
            let _ = writeln!(
                out,
                "{}, {}, {}, {:.6}",
                s.iter, s.layer, s.new_degree, s.score
            );
        }
        let degrees: Vec<String> = self
            .original_degrees
            .iter()
            .zip(self.degrees())
            .map(|(a, b)| format!("{a}->{b}"))
            .collect();
        let _ = writeln!(
            out,
            "degrees {}; params {} / {} = {:.4}",
            degrees.join(" "),
            self.original_params,
            self.reduced_params,
            self.param_ratio()
        );
        out
    }
}

/// Largest absolute value entering each polynomial layer over `inputs`,
/// floored at [`BOUND_FLOOR`].
pub fn compute_layer_bounds<T: Scalar>(
    model: &ModelSpec<T>,
    inputs: &[Tensor<T>],
) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    if inputs.is_empty() {
        return Err(invalid("bounds need at least one sample"));
    }
    let per: Vec<Vec<f64>> = inputs
        .par_iter()
        .map(|x| {
            Ok(model
                .poly_inputs(x)?
                .iter()
                .map(|t| t.max_abs().as_f64())
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut bounds = vec![BOUND_FLOOR; model.poly_layer_indices().len()];
    for row in per {
        for (b, v) in bounds.iter_mut().zip(row) {
            *b = b.max(v);
        }
    }
    Ok(bounds)
}

/// Projects every tap polynomial of `layer` to degree `target` on
/// `[-half_width, half_width]`; reduced constants are summed back into the
/// biases.
pub fn reduce_layer_weights<T: Scalar>(
    layer: &PolyConvLayer<T>,
    target: usize,
    half_width: f64,
) -> Result<PolyConvLayer<T>> {
    let degree = layer.degree();
    if target < 1 || target > degree {
        return Err(invalid(format!(
            "cannot reduce degree {degree} to {target}"
        )));
    }
    if target == degree {
        return Ok(layer.clone());
    }
    let proj = projection_matrix(degree, target, half_width)?;
    let per_channel = layer.in_channels * layer.receptive_field();
    let share: Vec<f64> = layer
        .bias
        .iter()
        .map(|b| b.as_f64() / per_channel as f64)
        .collect();
    let mut out = layer.clone();
    out.weights.truncate(target);
    let mut bias = vec![0.0f64; layer.out_channels];
    let mut coeffs = vec![0.0; degree + 1];
    for idx in 0..layer.weights[0].len() {
        let o = idx / per_channel;
        coeffs[0] = share[o];
        for d in 0..degree {
            coeffs[d + 1] = layer.weights[d].data()[idx].as_f64();
        }
        for (k, row) in proj.iter().enumerate() {
            let v: f64 = row.iter().zip(&coeffs).map(|(a, b)| a * b).sum();
            if k == 0 {
                bias[o] += v;
            } else {
                out.weights[k - 1].data_mut()[idx] = T::from_f64(v);
            }
        }
    }
    out.bias = bias.into_iter().map(T::from_f64).collect();
    Ok(out)
}

/// `model` with polynomial layer `l` reduced by `reductions[l]` degrees on
/// `[-bounds[l], bounds[l]]`.
pub fn apply_reductions<T: Scalar>(
    model: &ModelSpec<T>,
    bounds: &[f64],
    reductions: &[usize],
) -> Result<ModelSpec<T>> {
    let idx = model.poly_layer_indices();
    if bounds.len() != idx.len() || reductions.len() != idx.len() {
        return Err(invalid(
            "one bound and one reduction per polynomial layer required",
        ));
    }
    let mut out = model.clone();
    for ((&i, &a), &r) in idx.iter().zip(bounds).zip(reductions) {
        if r == 0 {
            continue;
        }
        if let Layer::PolyConv(l) = &model.layers[i] {
            if r >= l.degree() {
                return Err(invalid(format!(
                    "layer {i} of degree {} cannot lose {r}",
                    l.degree()
                )));
            }
            out.layers[i] = Layer::PolyConv(reduce_layer_weights(l, l.degree() - r, a)?);
        }
    }
    Ok(out)
}

/// Greedy reduction: each iteration tries one more degree off every
/// reducible layer, keeps the best-scoring candidate (lowest layer on ties)
/// if it scores at least `threshold`, and stops otherwise or once every
/// layer is linear. `eval` scores a model, higher being better.
pub fn reduce_network<T: Scalar>(
    model: &ModelSpec<T>,
    inputs: &[Tensor<T>],
    mut eval: impl FnMut(&ModelSpec<T>) -> Result<f64>,
    threshold: f64,
) -> Result<(ModelSpec<T>, ReductionPlan)> {
    let bounds = compute_layer_bounds(model, inputs)?;
    let degrees = model.poly_degrees();
    let baseline = eval(model)?;
    let mut reductions = vec![0; degrees.len()];
    let mut history = Vec::new();
    let mut current = model.clone();
    loop {
        let mut best: Option<(usize, f64, ModelSpec<T>)> = None;
        for l in 0..degrees.len() {
            if degrees[l] - reductions[l] <= 1 {
                // already linear: scores 0 and is never selected
                continue;
            }
            let mut trial = reductions.clone();
            trial[l] += 1;
            let candidate = apply_reductions(model, &bounds, &trial)?;
            let score = eval(&candidate)?;
            if best.as_ref().is_none_or(|b| score > b.1) {
                best = Some((l, score, candidate));
            }
        }
        match best {
            Some((l, score, candidate)) if score >= threshold => {
                reductions[l] += 1;
                current = candidate;
                history.push(ReductionStep {
                    iter: history.len() + 1,
                    layer: l + 1,
                    new_degree: degrees[l] - reductions[l],
                    score,
                });
            }
            _ => break,
        }
    }
    let plan = ReductionPlan {
        original_degrees: degrees,
        reductions,
        bounds,
        threshold,
        baseline,
        history,
        original_params: model.param_count(),
        reduced_params: current.param_count(),
    };
    Ok((current, plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Activation;

    fn scalar_layer(ws: &[f64], b: f64) -> PolyConvLayer<f64> {
        let mut l = PolyConvLayer::zeros(1, &[1], 1, 1, ws.len(), Activation::Identity).unwrap();
        for (bank, &w) in l.weights.iter_mut().zip(ws) {
            bank.data_mut()[0] = w;
        }
        l.bias[0] = b;
        l
    }

    #[test]
    fn square_tap_becomes_bias() {
        let r = reduce_layer_weights(&scalar_layer(&[0.0, 1.0], 0.0), 1, 1.0).unwrap();
        assert_eq!(r.degree(), 1);
        assert!(r.weights[0].data()[0].abs() < 1e-15);
        assert!((r.bias[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_high_banks_reduce_exactly() {
        let mut l = PolyConvLayer::<f64>::zeros(2, &[2, 2], 2, 3, 3, Activation::Relu).unwrap();
        for (i, w) in l.weights[0].data_mut().iter_mut().enumerate() {
            *w = (i as f64 * 0.37).sin();
        }
        l.bias = vec![0.3, -0.2, 0.9];
        let r = reduce_layer_weights(&l, 1, 2.0).unwrap();
        assert_eq!(r.weights.len(), 1);
        for (a, b) in r.weights[0].data().iter().zip(l.weights[0].data()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in r.bias.iter().zip(&l.bias) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bias_is_shared_across_taps() {
        // 2 taps, bias 1: each tap carries 0.5 + x²; projection on [-1,1]
        // gives 0.5 + 1/3 per tap
        let mut l = PolyConvLayer::<f64>::zeros(1, &[2], 1, 1, 2, Activation::Identity).unwrap();
        l.weights[1].data_mut().copy_from_slice(&[1.0, 1.0]);
        l.bias[0] = 1.0;
        let r = reduce_layer_weights(&l, 1, 1.0).unwrap();
        assert!((r.bias[0] - (1.0 + 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn target_outside_range_is_rejected() {
        let l = scalar_layer(&[1.0, 1.0], 0.0);
        assert!(reduce_layer_weights(&l, 0, 1.0).is_err());
        assert!(reduce_layer_weights(&l, 3, 1.0).is_err());
        assert_eq!(reduce_layer_weights(&l, 2, 1.0).unwrap(), l);
    }
}

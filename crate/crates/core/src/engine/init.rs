//! Architecture presets, weight initialization and prior-matched biases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::tensor::Tensor;

use super::dense::Dense;
use super::layer::{Activation, PolyConvLayer};
use super::model::{Layer, ModelSpec};
use super::pool::MaxPool;

/// Output biases whose softmax equals the (renormalized) class priors,
/// with the gauge `b_N = 0`.
pub fn init_output_bias(priors: &[f64]) -> Result<Vec<f64>> {
    if priors.is_empty() {
        return Err(invalid("no priors given"));
    }
    if let Some(p) = priors.iter().find(|&&p| !(p > 0.0 && p.is_finite())) {
        return Err(invalid(format!("prior {p} is not strictly positive")));
    }
    let total: f64 = priors.iter().sum();
    let last = priors[priors.len() - 1] / total;
    Ok(priors.iter().map(|&p| (p / total / last).ln()).collect())
}

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Layer template for a feature extractor followed by a dense classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub rank: usize,
    pub conv_channels: Vec<usize>,
    pub degree: usize,
    pub kernel: usize,
    /// Pooling window per spatial axis after every polynomial layer; empty
    /// disables pooling.
    pub pool: Vec<usize>,
    pub dense_hidden: Vec<usize>,
}

impl Architecture {
    /// Small network used for desk-scale runs.
    pub fn desk(rank: usize) -> Self {
        let mut pool = vec![2; rank];
        if rank == 3 {
            // keep the window axis; only halve the image plane
            pool[0] = 1;
        }
        Architecture {
            rank,
            conv_channels: vec![4, 8],
            degree: 3,
            kernel: 3,
            pool,
            dense_hidden: Vec::new(),
        }
    }

    /// Template with 32 first-layer and 64 last-layer channels and a
    /// 128-unit dense layer; `depth` polynomial layers, the inner ones
    /// `inner` channels wide.
    pub fn wsiscmc(rank: usize, depth: usize, inner: usize) -> Self {
        let mut conv_channels = vec![32];
        for _ in 2..depth.max(2) {
            conv_channels.push(inner);
        }
        conv_channels.push(64);
        Architecture {
            rank,
            conv_channels,
            degree: 7,
            kernel: 3,
            pool: vec![2; rank],
            dense_hidden: vec![128],
        }
    }

    pub fn preset(name: &str, rank: usize) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk(rank)),
            "wsiscmc" => Ok(Self::wsiscmc(rank, 4, 64)),
            _ => Err(invalid(format!("unknown architecture preset '{name}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.rank) {
            return Err(invalid(format!("spatial rank {} not in 1..=3", self.rank)));
        }
        if self.conv_channels.is_empty() || self.conv_channels.contains(&0) {
            return Err(invalid("every polynomial layer needs at least one channel"));
        }
        if self.degree < 1 || self.kernel < 1 {
            return Err(invalid("degree and kernel size must be >= 1"));
        }
        if !self.pool.is_empty() && (self.pool.len() != self.rank || self.pool.contains(&0)) {
            return Err(invalid(format!(
                "pool {:?} does not fit rank {}",
                self.pool, self.rank
            )));
        }
        if self.dense_hidden.contains(&0) {
            return Err(invalid("dense layers need at least one unit"));
        }
        Ok(())
    }

    /// Builds a randomly initialized model. Degree-`d` kernels are Glorot
    /// uniform scaled by `1/d!`; the head bias matches `priors` when given.
    pub fn build(
        &self,
        input_shape: &[usize],
        classes: usize,
        priors: Option<&[f64]>,
        seed: u64,
    ) -> Result<ModelSpec<f32>> {
        self.validate()?;
        if input_shape.len() != self.rank + 1 {
            return Err(invalid(format!(
                "input {input_shape:?} is not (C, {} spatial axes)",
                self.rank
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kernel = vec![self.kernel; self.rank];
        let taps = kernel.iter().product::<usize>();
        let mut layers = Vec::new();
        let mut cur = input_shape.to_vec();
        for &out_ch in &self.conv_channels {
            let in_ch = cur[0];
            let mut l = PolyConvLayer::zeros(
                self.rank,
                &kernel,
                in_ch,
                out_ch,
                self.degree,
                Activation::Relu,
            )?;
            let limit = glorot_limit(in_ch * taps, out_ch * taps);
            let mut fact = 1.0;
            for (d, bank) in l.weights.iter_mut().enumerate() {
                fact *= (d + 1) as f64;
                fill_uniform(bank, limit / fact, &mut rng);
            }
            cur = l.output_shape(&cur)?;
            layers.push(Layer::PolyConv(l));
            if !self.pool.is_empty() {
                let p = MaxPool::new(self.pool.clone())?;
                cur = p.output_shape(&cur)?;
                layers.push(Layer::MaxPool(p));
            }
        }
        layers.push(Layer::Flatten);
        let mut features: usize = cur.iter().product();
        for &units in &self.dense_hidden {
            let mut d = Dense::zeros(features, units, Activation::Relu)?;
            fill_uniform(&mut d.weights, glorot_limit(features, units), &mut rng);
            layers.push(Layer::Dense(d));
            features = units;
        }
        let mut head = Dense::zeros(features, classes, Activation::Softmax)?;
        fill_uniform(&mut head.weights, glorot_limit(features, classes), &mut rng);
        if let Some(p) = priors {
            if p.len() != classes {
                return Err(invalid(format!("{} priors for {classes} classes", p.len())));
            }
            head.bias = init_output_bias(p)?.into_iter().map(|b| b as f32).collect();
        }
        layers.push(Layer::Dense(head));
        ModelSpec::new(layers, classes, input_shape.to_vec(), seed)
    }
}

fn fill_uniform(t: &mut Tensor<f32>, limit: f64, rng: &mut ChaCha8Rng) {
    for v in t.data_mut() {
        *v = rng.gen_range(-limit..=limit) as f32;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::dense::softmax;
    use proptest::prelude::*;

    #[test]
    fn uniform_priors_give_zero_bias() {
        assert_eq!(init_output_bias(&[0.25; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn two_class_bias() {
        let b = init_output_bias(&[0.75, 0.25]).unwrap();
        assert!((b[0] - 3f64.ln()).abs() < 1e-15);
        assert_eq!(b[1], 0.0);
    }

    #[test]
    fn reworked_priors_are_reproduced_after_renormalization() {
        let p = [0.04, 0.11, 0.23, 0.12, 0.19, 0.14, 0.13, 0.03];
        let total: f64 = p.iter().sum();
        let s = softmax(&init_output_bias(&p).unwrap());
        for (a, b) in s.iter().zip(p) {
            assert!((a - b / total).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_positive_priors() {
        assert!(init_output_bias(&[0.5, 0.0, 0.5]).is_err());
        assert!(init_output_bias(&[]).is_err());
    }

    #[test]
    fn desk_build_shapes_and_determinism() {
        let arch = Architecture::desk(3);
        let a = arch
            .build(&[1, 9, 35, 35], 2, Some(&[0.5, 0.5]), 7)
            .unwrap();
        let b = arch
            .build(&[1, 9, 35, 35], 2, Some(&[0.5, 0.5]), 7)
            .unwrap();
        assert_eq!(a, b);
        let shapes = a.layer_shapes().unwrap();
        assert_eq!(shapes[5], vec![1960]);
        assert_eq!(a.poly_degrees(), vec![3, 3]);
    }

    #[test]
    fn higher_degrees_are_damped() {
        let m = Architecture::desk(1).build(&[1, 32], 2, None, 1).unwrap();
        let Layer::PolyConv(l) = &m.layers[0] else {
            panic!()
        };
        let limit = glorot_limit(3, 12);
        assert!(l.weights[0].max_abs() as f64 <= limit);
        assert!(l.weights[2].max_abs() as f64 <= limit / 6.0);
    }

    proptest! {
        #[test]
        fn bias_softmax_matches_priors(raw in prop::collection::vec(0.01f64..1.0, 2..10)) {
            let total: f64 = raw.iter().sum();
            let b = init_output_bias(&raw).unwrap();
            let s = softmax(&b);
            for (a, p) in s.iter().zip(&raw) {
                prop_assert!((a - p / total).abs() < 1e-12);
            }
            prop_assert_eq!(crate::engine::model::argmax(&s), crate::engine::model::argmax(&raw));
        }
    }
}

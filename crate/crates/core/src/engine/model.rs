//! Whole-network description, inference and backpropagation.

use rayon::prelude::*;

use crate::error::{invalid, shape, Result};
use crate::tensor::{Scalar, Tensor};

use super::dense::{softmax, Dense};
use super::layer::{Activation, PolyConvLayer};
use super::pool::MaxPool;

#[derive(Clone, Debug, PartialEq)]
pub enum Layer<T = f32> {
    PolyConv(PolyConvLayer<T>),
    MaxPool(MaxPool),
    Flatten,
    Dense(Dense<T>),
}

impl<T: Scalar> Layer<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::PolyConv(_) => "polyconv",
            Layer::MaxPool(_) => "maxpool",
            Layer::Flatten => "flatten",
            Layer::Dense(_) => "dense",
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Layer::PolyConv(l) => l.param_count(),
            Layer::Dense(d) => d.param_count(),
            _ => 0,
        }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::PolyConv(l) => {
                l.validate()?;
                l.output_shape(input)
            }
            Layer::MaxPool(p) => p.output_shape(input),
            Layer::Flatten => Ok(vec![input.iter().product()]),
            Layer::Dense(d) => {
                d.validate()?;
                if input.len() != 1 || input[0] != d.inputs {
                    return Err(shape(format!(
                        "dense layer expects {} features, got {input:?}",
                        d.inputs
                    )));
                }
                Ok(vec![d.outputs])
            }
        }
    }

    fn cast<U: Scalar>(&self) -> Layer<U> {
        match self {
            Layer::PolyConv(l) => Layer::PolyConv(l.cast()),
            Layer::MaxPool(p) => Layer::MaxPool(p.clone()),
            Layer::Flatten => Layer::Flatten,
            Layer::Dense(d) => Layer::Dense(d.cast()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec<T = f32> {
    pub layers: Vec<Layer<T>>,
    pub classes: usize,
    /// `(C, spatial...)` of a single sample.
    pub input_shape: Vec<usize>,
    pub seed: u64,
}

/// Everything the backward pass needs from one forward pass.
struct Trace<T> {
    /// `acts[0]` is the input, `acts[i + 1]` the output of layer `i`.
    acts: Vec<Tensor<T>>,
    argmax: Vec<Option<Vec<usize>>>,
    logits: Vec<T>,
}

impl<T: Scalar> ModelSpec<T> {
    pub fn new(
        layers: Vec<Layer<T>>,
        classes: usize,
        input_shape: Vec<usize>,
        seed: u64,
    ) -> Result<Self> {
        let m = ModelSpec {
            layers,
            classes,
            input_shape,
            seed,
        };
        m.validate()?;
        Ok(m)
    }

    /// Shapes of the input and of every layer output, in order.
    pub fn layer_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut shapes = vec![self.input_shape.clone()];
        for layer in &self.layers {
            let next = layer.output_shape(shapes.last().expect("non-empty"))?;
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(invalid("a classifier needs at least 2 classes"));
        }
        if self.input_shape.is_empty() || self.input_shape.contains(&0) {
            return Err(invalid(format!("bad input shape {:?}", self.input_shape)));
        }
        match self.layers.last() {
            Some(Layer::Dense(d))
                if d.activation == Activation::Softmax && d.outputs == self.classes => {}
            _ => {
                return Err(invalid(format!(
                    "the last layer must be a dense softmax head with {} units",
                    self.classes
                )))
            }
        }
        let head = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            if let Layer::Dense(d) = layer {
                if i != head && d.activation == Activation::Softmax {
                    return Err(invalid(format!("softmax on hidden layer {i}")));
                }
            }
        }
        self.layer_shapes().map(|_| ())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Indices into `layers` of the polynomial convolution layers.
    pub fn poly_layer_indices(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter_map(|(i, l)| matches!(l, Layer::PolyConv(_)).then_some(i))
            .collect()
    }

    pub fn poly_degrees(&self) -> Vec<usize> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::PolyConv(p) => Some(p.degree()),
                _ => None,
            })
            .collect()
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.shape() != self.input_shape.as_slice() {
            return Err(shape(format!(
                "model expects input {:?}, got {:?}",
                self.input_shape,
                x.shape()
            )));
        }
        Ok(())
    }

    fn trace(&self, x: &Tensor<T>) -> Result<Trace<T>> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut argmax = Vec::with_capacity(self.layers.len());
        let mut logits = Vec::new();
        acts.push(x.clone());
        let head = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let cur = acts.last().expect("non-empty");
            let (next, arg) = match layer {
                Layer::PolyConv(l) => (l.forward(cur)?, None),
                Layer::MaxPool(p) => {
                    let (y, a) = p.forward_indexed(cur)?;
                    (y, Some(a))
                }
                Layer::Flatten => (cur.clone().reshape(vec![cur.len()])?, None),
                Layer::Dense(d) if i == head => {
                    let mut pre = d.clone();
                    pre.activation = Activation::Identity;
                    logits = pre.forward(cur.data())?;
                    (Tensor::new(vec![d.outputs], softmax(&logits))?, None)
                }
                Layer::Dense(d) => (Tensor::new(vec![d.outputs], d.forward(cur.data())?)?, None),
            };
            acts.push(next);
            argmax.push(arg);
        }
        Ok(Trace {
            acts,
            argmax,
            logits,
        })
    }

    /// Class probabilities for one sample.
    pub fn forward_sample(&self, x: &Tensor<T>) -> Result<Vec<T>> {
        let t = self.trace(x)?;
        Ok(t.acts.last().expect("non-empty").data().to_vec())
    }

    /// `(B, classes)` probability matrix; samples are processed in parallel.
    pub fn forward_network(&self, batch: &[Tensor<T>]) -> Result<Tensor<T>> {
        if batch.is_empty() {
            return Err(invalid("empty batch"));
        }
        let rows: Vec<Vec<T>> = batch
            .par_iter()
            .map(|x| self.forward_sample(x))
            .collect::<Result<_>>()?;
        Tensor::new(vec![batch.len(), self.classes], rows.concat())
    }

    /// Cross-entropy of one sample together with its class probabilities.
    pub fn sample_loss(&self, x: &Tensor<T>, label: usize) -> Result<(f64, Vec<T>)> {
        if label >= self.classes {
            return Err(invalid(format!(
                "label {label} outside 0..{}",
                self.classes
            )));
        }
        let t = self.trace(x)?;
        let loss = cross_entropy(&t.logits, label);
        Ok((loss, t.acts.last().expect("non-empty").data().to_vec()))
    }

    pub fn predict(&self, x: &Tensor<T>) -> Result<usize> {
        Ok(argmax(&self.forward_sample(x)?))
    }

    /// The tensor entering each polynomial layer, in layer order.
    pub fn poly_inputs(&self, x: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        let mut t = self.trace(x)?;
        let idx = self.poly_layer_indices();
        Ok(idx
            .into_iter()
            .map(|i| {
                std::mem::replace(
                    &mut t.acts[i],
                    Tensor::full(&[1], T::zero()).expect("valid"),
                )
            })
            .collect())
    }

    /// Cross-entropy loss of one sample and its parameter gradients, laid
    /// out like [`ModelSpec::params`].
    pub fn loss_and_grads(&self, x: &Tensor<T>, label: usize) -> Result<(f64, Vec<Vec<T>>)> {
        if label >= self.classes {
            return Err(invalid(format!(
                "label {label} outside 0..{}",
                self.classes
            )));
        }
        let t = self.trace(x)?;
        let loss = cross_entropy(&t.logits, label);
        let probs = t.acts.last().expect("non-empty").data();
        // softmax + cross-entropy: ∂L/∂z = p − onehot
        let mut g: Vec<T> = probs.to_vec();
        g[label] -= T::one();
        let mut grad = Tensor::new(vec![g.len()], g)?;
        let mut groups: Vec<Vec<Vec<T>>> = Vec::with_capacity(self.layers.len());
        let head = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &t.acts[i];
            let output = &t.acts[i + 1];
            match layer {
                Layer::PolyConv(l) => {
                    let gr = l.backward_with_output(input, output, &grad)?;
                    let mut group: Vec<Vec<T>> =
                        gr.weights.into_iter().map(Tensor::into_data).collect();
                    group.push(gr.bias);
                    groups.push(group);
                    grad = gr.input;
                }
                Layer::MaxPool(_) => {
                    let arg = t.argmax[i].as_ref().expect("pool records argmax");
                    grad = MaxPool::backward(input.shape(), arg, &grad)?;
                }
                Layer::Flatten => grad = grad.reshape(input.shape().to_vec())?,
                Layer::Dense(d) => {
                    let mut dz = grad.into_data();
                    if i != head {
                        for (g, &y) in dz.iter_mut().zip(output.data()) {
                            *g *= d.activation.derivative_from_output(y);
                        }
                    }
                    let (gw, gb, gx) = d.backward_pre(input.data(), &dz);
                    groups.push(vec![gw.into_data(), gb]);
                    grad = Tensor::new(vec![gx.len()], gx)?;
                }
            }
        }
        groups.reverse();
        Ok((loss, groups.into_iter().flatten().collect()))
    }

    /// Parameter slices in a fixed order: per layer, each degree bank then
    /// the bias for polynomial layers, weights then bias for dense layers.
    pub fn params(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::PolyConv(l) => {
                    out.extend(l.weights.iter().map(|w| w.data()));
                    out.push(&l.bias[..]);
                }
                Layer::Dense(d) => {
                    out.push(d.weights.data());
                    out.push(&d.bias[..]);
                }
                _ => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::PolyConv(l) => {
                    out.extend(l.weights.iter_mut().map(|w| w.data_mut()));
                    out.push(&mut l.bias[..]);
                }
                Layer::Dense(d) => {
                    out.push(d.weights.data_mut());
                    out.push(&mut d.bias[..]);
                }
                _ => {}
            }
        }
        out
    }

    pub fn cast<U: Scalar>(&self) -> ModelSpec<U> {
        ModelSpec {
            layers: self.layers.iter().map(Layer::cast).collect(),
            classes: self.classes,
            input_shape: self.input_shape.clone(),
            seed: self.seed,
        }
    }
}

/// `−ln softmax(z)[label]`, evaluated in f64 via log-sum-exp.
pub(crate) fn cross_entropy<T: Scalar>(logits: &[T], label: usize) -> f64 {
    let m = logits
        .iter()
        .map(|v| v.as_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits
        .iter()
        .map(|v| (v.as_f64() - m).exp())
        .sum::<f64>()
        .ln();
    lse - logits[label].as_f64()
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

//! Deterministic minibatch training with adaptive moment estimation.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::tensor::{Scalar, Tensor};

use super::metrics::ConfusionMatrix;
use super::model::{argmax, ModelSpec};

/// Samples whose gradients are summed sequentially before chunks are
/// combined; fixed so results do not depend on the thread count.
const CHUNK: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: 100,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Collects every violated constraint. A zero learning rate is allowed
    /// and freezes the weights.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            v.push(format!(
                "lr must be finite and >= 0 (got {})",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            v.push("batch-size must be positive".into());
        }
        if self.epochs == 0 {
            v.push("epochs must be positive".into());
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                v.push(format!("{name} must lie in [0, 1) (got {b})"));
            }
        }
        if !(self.epsilon > 0.0) {
            v.push(format!("epsilon must be positive (got {})", self.epsilon));
        }
        v
    }

    pub fn validate(&self, dataset_len: usize) -> Result<()> {
        let mut v = self.violations();
        if dataset_len == 0 {
            v.push("training set is empty".into());
        } else if self.batch_size > dataset_len {
            v.push(format!(
                "batch-size {} exceeds the {dataset_len} training samples",
                self.batch_size
            ));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(invalid(v.join("; ")))
        }
    }
}

#[derive(Clone, Debug)]
pub struct Sample<T = f32> {
    pub input: Tensor<T>,
    /// Zero-based class index.
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}, {:.6}, {:.6}, ",
            self.epoch, self.loss, self.train_acc
        )?;
        match self.val_acc {
            Some(v) => write!(f, "{v:.6}"),
            None => f.write_str("nan"),
        }
    }
}

/// Mean cross-entropy and accuracy over `samples`.
pub fn evaluate<T: Scalar>(model: &ModelSpec<T>, samples: &[Sample<T>]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(invalid("cannot evaluate on an empty set"));
    }
    let per: Vec<(f64, bool)> = samples
        .par_iter()
        .map(|s| {
            let (loss, p) = model.sample_loss(&s.input, s.label)?;
            Ok((loss, argmax(&p) == s.label))
        })
        .collect::<Result<_>>()?;
    let n = samples.len() as f64;
    let loss = per.iter().map(|p| p.0).sum::<f64>() / n;
    let acc = per.iter().filter(|p| p.1).count() as f64 / n;
    Ok((loss, acc))
}

pub fn accuracy<T: Scalar>(model: &ModelSpec<T>, samples: &[Sample<T>]) -> Result<f64> {
    Ok(confusion(model, samples)?.accuracy())
}

pub fn confusion<T: Scalar>(
    model: &ModelSpec<T>,
    samples: &[Sample<T>],
) -> Result<ConfusionMatrix> {
    let preds: Vec<usize> = samples
        .par_iter()
        .map(|s| model.predict(&s.input))
        .collect::<Result<_>>()?;
    let mut cm = ConfusionMatrix::new(model.classes);
    for (s, p) in samples.iter().zip(preds) {
        cm.record(s.label, p)?;
    }
    Ok(cm)
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl Adam {
    fn new<T: Scalar>(model: &ModelSpec<T>) -> Self {
        let zeros: Vec<Vec<f64>> = model.params().iter().map(|p| vec![0.0; p.len()]).collect();
        Adam {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    fn update<T: Scalar>(
        &mut self,
        model: &mut ModelSpec<T>,
        grads: &[Vec<f64>],
        cfg: &TrainConfig,
    ) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        for (((w, g), m), v) in model
            .params_mut()
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for (((w, &g), m), v) in w.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                let step = cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon);
                *w -= T::from_f64(step);
            }
        }
    }
}

fn add_into<T: Scalar>(acc: &mut [Vec<f64>], g: &[Vec<T>]) {
    for (a, g) in acc.iter_mut().zip(g) {
        for (a, &g) in a.iter_mut().zip(g) {
            *a += g.as_f64();
        }
    }
}

/// Summed loss and gradients over a batch, reduced in a fixed order.
fn batch_gradient<T: Scalar>(
    model: &ModelSpec<T>,
    batch: &[&Sample<T>],
) -> Result<(f64, Vec<Vec<f64>>)> {
    let zero = || -> Vec<Vec<f64>> { model.params().iter().map(|p| vec![0.0; p.len()]).collect() };
    let partial: Vec<(f64, Vec<Vec<f64>>)> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = zero();
            let mut loss = 0.0;
            for s in chunk {
                let (l, g) = model.loss_and_grads(&s.input, s.label)?;
                loss += l;
                add_into(&mut acc, &g);
            }
            Ok((loss, acc))
        })
        .collect::<Result<_>>()?;
    let mut total = zero();
    let mut loss = 0.0;
    for (l, g) in &partial {
        loss += l;
        for (a, g) in total.iter_mut().zip(g) {
            for (a, &g) in a.iter_mut().zip(g) {
                *a += g;
            }
        }
    }
    Ok((loss, total))
}

/// Trains a copy of `model`; `on_epoch` sees each log line as it is made.
/// The logged loss and accuracy are measured on the full training set after
/// the epoch's updates.
pub fn train<T: Scalar>(
    model: &ModelSpec<T>,
    train_set: &[Sample<T>],
    val_set: &[Sample<T>],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<(ModelSpec<T>, Vec<EpochLog>)> {
    config.validate(train_set.len())?;
    model.validate()?;
    if let Some(s) = train_set
        .iter()
        .chain(val_set)
        .find(|s| s.label >= model.classes)
    {
        return Err(invalid(format!(
            "label {} outside 0..{}",
            s.label, model.classes
        )));
    }
    let mut model = model.clone();
    let mut opt = Adam::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut logs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<&Sample<T>> = idx.iter().map(|&i| &train_set[i]).collect();
            let (loss, mut grads) = batch_gradient(&model, &batch)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, loss });
            }
            let scale = 1.0 / batch.len() as f64;
            grads.iter_mut().flatten().for_each(|g| *g *= scale);
            opt.update(&mut model, &grads, config);
        }
        let (loss, train_acc) = evaluate(&model, train_set)?;
        if loss.is_nan() {
            return Err(Error::TrainingDiverged { epoch, loss });
        }
        let val_acc = if val_set.is_empty() {
            None
        } else {
            Some(evaluate(&model, val_set)?.1)
        };
        let log = EpochLog {
            epoch,
            loss,
            train_acc,
            val_acc,
        };
        on_epoch(&log);
        logs.push(log);
    }
    Ok((model, logs))
}

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::layers::Mode;
use crate::model::Model;
use crate::numeric::{grad_check, Matrix};
use crate::rng::{rng_from, streams};
use crate::training::{adam_step, bce_grad_logits, bce_loss, sgd_step, AdamParams, AdamState, OptimizerKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub adam: AdamParams,
    pub seed: u64,
    pub ema_beta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: None,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            adam: AdamParams::default(),
            seed: 0,
            ema_beta: 0.9,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if !(self.ema_beta > 0.0 && self.ema_beta < 1.0) {
            return Err(Error::invalid("ema_beta must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Trains `model` on a normalized dataset, returning it with frozen SE
/// statistics and a per-epoch loss log. The dataset is not modified.
pub fn train(mut model: Model, dataset: &Dataset, cfg: &TrainConfig) -> Result<Model> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    if dataset.n_features() != model.input_dim() {
        return Err(Error::Shape {
            op: "train",
            left: dataset.features.shape(),
            right: (dataset.len(), model.input_dim()),
        });
    }
    model.feature_names = dataset.feature_names();
    model.norm_stats = dataset.norm_stats.clone();
    for se in model.se_layers_mut() {
        se.ema_beta = cfg.ema_beta;
    }

    let n = dataset.len();
    let batch = cfg.batch_size.unwrap_or(n).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle = rng_from(cfg.seed, streams::SHUFFLE);
    let mut adam = AdamState::default();
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        if batch < n {
            order.shuffle(&mut shuffle);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let (x, y) = if batch == n {
                (dataset.features.clone(), dataset.labels.clone())
            } else {
                (
                    dataset.features.select_rows(chunk),
                    chunk.iter().map(|&i| dataset.labels[i]).collect(),
                )
            };
            let fwd = model.forward(&x, Mode::Train)?;
            let loss = bce_loss(&fwd.probs, &y)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, value: loss });
            }
            let grads = model.backward(&fwd, &bce_grad_logits(&fwd.probs, &y))?;
            if grads.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, value: f64::NAN });
            }
            {
                let mut params = model.params_mut();
                match cfg.optimizer {
                    OptimizerKind::Adam => adam_step(&mut params, &grads, &mut adam, cfg.learning_rate, &cfg.adam)?,
                    OptimizerKind::Sgd => sgd_step(&mut params, &grads, cfg.learning_rate)?,
                }
            }
            for (se, z) in model.se_layers_mut().zip(&fwd.artifacts.se_descriptors) {
                se.update_ema(z);
            }
            epoch_loss += loss * chunk.len() as f64;
        }
        log.push(epoch_loss / n as f64);
    }
    model.train_log = log;
    Ok(model)
}

/// Writes `epoch,loss` rows (1-based epochs).
pub fn write_loss_csv<W: Write>(log: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "epoch,loss")?;
    for (i, l) in log.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, l)?;
    }
    Ok(())
}

/// Train-mode BCE of `model` on `(x, labels)`.
pub fn model_loss(model: &Model, x: &Matrix, labels: &[u8]) -> Result<f64> {
    bce_loss(&model.forward(x, Mode::Train)?.probs, labels)
}

/// Finite-difference check of every parameter block of `model` under the
/// train-mode BCE loss. Returns `(block name, max relative error)` pairs.
pub fn check_model_gradients(model: &Model, x: &Matrix, labels: &[u8], eps: f64) -> Result<Vec<(String, f64)>> {
    let fwd = model.forward(x, Mode::Train)?;
    let grads = model.backward(&fwd, &bce_grad_logits(&fwd.probs, labels))?;
    let names = model.param_names();
    let mut out = Vec::with_capacity(names.len());
    for (b, (name, grad)) in names.into_iter().zip(&grads).enumerate() {
        let point = Matrix::row_vector(model.params()[b]);
        let mut probe = model.clone();
        let err = grad_check(
            |p| {
                probe.params_mut()[b].copy_from_slice(p.as_slice());
                model_loss(&probe, x, labels).unwrap_or(f64::NAN)
            },
            &point,
            &Matrix::row_vector(grad),
            eps,
        )?;
        out.push((name, err));
    }
    Ok(out)
}

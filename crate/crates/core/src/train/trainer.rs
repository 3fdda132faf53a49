//! Mini-batch training with Adam, per-step history and best-validation
//! model retention.

use emocpd_autograd::{Adam, AdamConfig, Graph, Tensor, TensorError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dataset::Dataset;
use super::predict::argmax;
use crate::net::{ConfigError, Fwd, Mode, Model, ModelConfig};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss {loss} at step {step} (lr {lr}, gradient norm {grad_norm})")]
    NonFinite { step: usize, loss: f64, lr: f64, grad_norm: f64 },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error(transparent)]
    Model(#[from] ConfigError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Optimiser and schedule settings. The defaults are the published
/// recipe; step counts derive from the dataset size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stops after this many optimiser steps even if epochs remain.
    pub max_steps: Option<usize>,
    /// Seeds weight initialisation and shuffling. Not part of the serialized
    /// table: front ends keep one run-wide seed and copy it in.
    #[serde(skip)]
    pub seed: u64,
    /// Validation runs every this many steps and after the last step.
    pub val_every: usize,
    pub eval_batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            lr: adam.lr,
            weight_decay: adam.weight_decay,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            batch_size: 150,
            epochs: 8,
            max_steps: None,
            seed: 0,
            val_every: 500,
            eval_batch: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.val_every == 0 || self.eval_batch == 0 {
            return bad("val_every and eval_batch must be at least 1");
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) || !(self.weight_decay >= 0.0) {
            return bad("lr and weight_decay must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return bad("betas must lie in [0, 1) and eps must be positive");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
        }
    }

    pub fn steps_per_epoch(&self, samples: usize) -> usize {
        samples.div_ceil(self.batch_size)
    }

    pub fn total_steps(&self, samples: usize) -> usize {
        let all = self.steps_per_epoch(samples) * self.epochs;
        self.max_steps.map_or(all, |m| m.min(all))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub step: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

pub fn history_csv(rows: &[HistoryRow]) -> String {
    let mut s = String::from("step,epoch,train_loss,train_acc,val_acc\n");
    for r in rows {
        let val = r.val_acc.map(|v| format!("{v:?}")).unwrap_or_default();
        s.push_str(&format!("{},{},{:?},{:?},{}\n", r.step, r.epoch, r.train_loss, r.train_acc, val));
    }
    s
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub last: Model<f32>,
    /// Model state at the highest validation accuracy (earliest on ties);
    /// the final state when no validation set was given.
    pub best: Model<f32>,
    pub best_step: usize,
    pub best_val_acc: Option<f64>,
    pub history: Vec<HistoryRow>,
}

/// Result of a single optimisation step.
#[derive(Debug, Clone, Copy)]
pub struct StepStats {
    pub loss: f64,
    pub accuracy: f64,
    pub grad_norm: f64,
}

/// Forward, loss, backward and one Adam update on a batch. Batch-norm
/// running statistics are folded in after the update.
pub fn train_step(
    model: &mut Model<f32>,
    adam: &mut Adam<f32>,
    x: Tensor<f32>,
    labels: &[usize],
    step: usize,
) -> Result<StepStats, TrainError> {
    let mut graph = Graph::new();
    let xv = graph.constant(x);
    let mut f = Fwd::new(&mut graph, &model.store, Mode::Train);
    let logits = model.forward(&mut f, xv)?;
    let Fwd { binder, updates, .. } = f;
    let loss_var = graph.cross_entropy(logits, labels)?;
    let loss = graph.value(loss_var).item().expect("scalar loss") as f64;
    let correct = graph
        .value(logits)
        .data()
        .chunks(model.config.classes)
        .zip(labels)
        .filter(|(row, &l)| argmax(row) == l)
        .count();
    let grads = graph.backward(loss_var)?;
    model.store.zero_grad();
    model.store.accumulate_grads(&binder, &grads);
    let grad_norm = model.store.grad_norm();
    if !loss.is_finite() || !grad_norm.is_finite() {
        return Err(TrainError::NonFinite {
            step,
            loss,
            lr: adam.config.lr,
            grad_norm,
        });
    }
    adam.step(&mut model.store)?;
    model.apply_stat_updates(&updates);
    Ok(StepStats {
        loss,
        accuracy: correct as f64 / labels.len() as f64,
        grad_norm,
    })
}

/// Eval-mode accuracy over a dataset; the model is not modified.
pub fn evaluate_accuracy(model: &Model<f32>, data: &Dataset, batch: usize) -> Result<f64, TensorError> {
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut correct = 0;
    for chunk in idx.chunks(batch.max(1)) {
        let (x, labels) = data.batch::<f32>(chunk);
        let logits = model.logits(x)?;
        correct += logits
            .data()
            .chunks(model.config.classes)
            .zip(&labels)
            .filter(|(row, &l)| argmax(row) == l)
            .count();
    }
    Ok(correct as f64 / data.len().max(1) as f64)
}

/// Trains a freshly initialised model. `on_step` sees every history row as
/// it is produced.
pub fn train(
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    train_set: &Dataset,
    val_set: Option<&Dataset>,
    mut on_step: impl FnMut(&HistoryRow),
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }
    let val_set = val_set.filter(|v| !v.is_empty());
    let mut model = Model::<f32>::new(model_cfg, cfg.seed)?;
    let mut adam = Adam::new(cfg.adam());
    let total = cfg.total_steps(train_set.len());
    let mut history = Vec::with_capacity(total);
    let mut best: Option<(Model<f32>, usize, f64)> = None;
    let mut step = 0;
    'epochs: for epoch in 0..cfg.epochs {
        let order = train_set.epoch_order(cfg.seed, epoch as u64);
        for chunk in order.chunks(cfg.batch_size) {
            if step == total {
                break 'epochs;
            }
            step += 1;
            let (x, labels) = train_set.batch::<f32>(chunk);
            let stats = train_step(&mut model, &mut adam, x, &labels, step)?;
            let val_acc = match val_set {
                Some(v) if step % cfg.val_every == 0 || step == total => Some(evaluate_accuracy(&model, v, cfg.eval_batch)?),
                _ => None,
            };
            if let Some(acc) = val_acc {
                if best.as_ref().is_none_or(|(_, _, b)| acc > *b) {
                    best = Some((model.clone(), step, acc));
                }
            }
            let row = HistoryRow {
                step,
                epoch,
                train_loss: stats.loss,
                train_acc: stats.accuracy,
                val_acc,
            };
            on_step(&row);
            history.push(row);
        }
    }
    let (best, best_step, best_val_acc) = match best {
        Some((m, s, a)) => (m, s, Some(a)),
        None => (model.clone(), step, None),
    };
    Ok(TrainOutcome {
        last: model,
        best,
        best_step,
        best_val_acc,
        history,
    })
}

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Gradients, Pipeline};
use crate::error::{Error, Result};
use crate::linalg::RealMatrix;
use crate::random::seeded;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: RealMatrix,
    pub target: RealMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            momentum: 0.9,
            batch_size: 10,
            epochs: 30,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Contract(format!(
                "learning rate must be finite and nonnegative, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Contract(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Contract("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Full-dataset evaluation at the end of an epoch (epoch 0 is the initial
/// state). `aux` holds the mean of every loss diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub aux: BTreeMap<String, f64>,
}

/// Per-sample result seen while computing a step's gradient, i.e. at the
/// iterate before the update.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: usize,
    pub sample: usize,
    pub loss: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub records: Vec<EpochRecord>,
}

impl TrainingLog {
    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.loss)
    }
}

pub fn sgd_train(p: &mut Pipeline, data: &[Sample], cfg: &SgdConfig) -> Result<TrainingLog> {
    sgd_train_observed(p, data, cfg, |_| Ok(()))
}

type SampleResult = (f64, BTreeMap<String, f64>, Gradients);

/// Momentum SGD (`v ← μv − η·g`, `θ ← θ + v`) with per-sample gradients
/// averaged over each mini-batch. `observe` sees every per-sample forward
/// made during training and may abort it.
///
/// On a non-finite loss or gradient the error is returned before the
/// update, so `p` holds the last stable parameters.
pub fn sgd_train_observed(
    p: &mut Pipeline,
    data: &[Sample],
    cfg: &SgdConfig,
    mut observe: impl FnMut(&StepRecord) -> Result<()>,
) -> Result<TrainingLog> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Contract("training set is empty".into()));
    }
    let mut rng = seeded(cfg.seed);
    let mut velocity: Vec<Vec<RealMatrix>> = p
        .layers
        .iter()
        .map(|l| {
            l.parameters()
                .iter()
                .map(|w| RealMatrix::zeros(w.rows(), w.cols()))
                .collect()
        })
        .collect();
    let mut log = TrainingLog::default();
    log.records.push(evaluate(p, data, 0)?);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut step = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<Result<SampleResult>> = batch
                .par_iter()
                .map(|&i| {
                    let trace = p.forward(&data[i].input, &data[i].target)?;
                    let diag = p.loss.diagnostics(trace.loss_cache());
                    let grads = p.backward(&trace)?;
                    Ok((trace.loss, diag, grads))
                })
                .collect();
            let mut sum: Option<Vec<Vec<RealMatrix>>> = None;
            for (&i, r) in batch.iter().zip(results) {
                let (loss, diagnostics, grads) = r?;
                if !loss.is_finite() || grads.params.iter().flatten().any(|g| !g.is_finite()) {
                    return Err(Error::TrainingFailure { epoch, step, loss });
                }
                observe(&StepRecord {
                    epoch,
                    step,
                    sample: i,
                    loss,
                    diagnostics,
                })?;
                sum = Some(match sum {
                    None => grads.params,
                    Some(acc) => acc
                        .iter()
                        .zip(&grads.params)
                        .map(|(a, g)| a.iter().zip(g).map(|(x, y)| x + y).collect())
                        .collect(),
                });
            }
            let scale = 1.0 / batch.len() as f64;
            let sum = sum.expect("nonempty batch");
            for ((layer, vel), grads) in p.layers.iter_mut().zip(&mut velocity).zip(&sum) {
                for ((param, v), g) in layer
                    .parameters_mut()
                    .into_iter()
                    .zip(vel.iter_mut())
                    .zip(grads)
                {
                    *v = &v.scale(cfg.momentum) - &g.scale(cfg.learning_rate * scale);
                    *param = &*param + &*v;
                }
            }
            step += 1;
        }
        let record = evaluate(p, data, epoch)?;
        if !record.loss.is_finite() {
            return Err(Error::TrainingFailure {
                epoch,
                step,
                loss: record.loss,
            });
        }
        log.records.push(record);
    }
    Ok(log)
}

/// Mean loss and mean diagnostics over `data`.
pub fn evaluate(p: &Pipeline, data: &[Sample], epoch: usize) -> Result<EpochRecord> {
    let results: Vec<Result<(f64, BTreeMap<String, f64>)>> = data
        .par_iter()
        .map(|s| {
            let trace = p.forward(&s.input, &s.target)?;
            Ok((trace.loss, p.loss.diagnostics(trace.loss_cache())))
        })
        .collect();
    let mut loss = 0.0;
    let mut aux: BTreeMap<String, f64> = BTreeMap::new();
    for r in results {
        let (l, d) = r?;
        loss += l;
        for (k, v) in d {
            *aux.entry(k).or_insert(0.0) += v;
        }
    }
    let n = data.len() as f64;
    aux.values_mut().for_each(|v| *v /= n);
    Ok(EpochRecord {
        epoch,
        loss: loss / n,
        aux,
    })
}

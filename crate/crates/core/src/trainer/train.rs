//! Training loop and deterministic evaluation.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::optim::{clip_store_grads, Adam, EarlyStopper, StopDecision};
use crate::data::{batches, Batch, BatchOrder, Dataset};
use crate::diffcore::{Graph, Rng, Tensor};
use crate::error::{Error, Result};
use crate::fusion::FusionMode;
use crate::losses::{objective, LossReport};
use crate::metrics::{self, CategoryHistogram, Thresholds};
use crate::model::Tf4Ctr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_auc: f64,
    pub valid_gauc: Option<f64>,
    pub lr: f64,
    pub train_seconds: f64,
    pub valid_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradNormRecord {
    pub epoch: usize,
    pub batch_index: usize,
    pub report: LossReport,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters restored to the best validation epoch.
    pub model: Tf4Ctr,
    pub history: Vec<EpochRecord>,
    pub gradnorm: Vec<GradNormRecord>,
    pub best_epoch: usize,
    pub best_valid_auc: f64,
    pub stopped_early: bool,
    /// Per-epoch parameter snapshots, kept only when requested.
    pub epoch_params: Vec<(usize, Vec<Tensor>)>,
}

/// Forward, backward, clip and update on one batch.
pub fn train_step(
    model: &mut Tf4Ctr,
    opt: &mut Adam,
    batch: &Batch,
    cfg: &ModelConfig,
    noise: &mut Rng,
) -> Result<LossReport> {
    let (grads, report) = {
        let mut g = Graph::new(&model.params);
        let trace = model.forward(&mut g, batch, FusionMode::Train(noise))?;
        let obj = objective(
            &mut g,
            cfg.loss,
            trace.fusion.y,
            trace.simple.y,
            trace.complex.y,
            &batch.labels,
            &cfg.tf,
        )?;
        let total = g.value(obj.total).item();
        if !total.is_finite() {
            return Err(Error::NonFinite("training loss".into()));
        }
        let grads = g.backward(obj.total)?;
        let report = LossReport::from_nodes(&g, &obj, &grads, trace.simple.z, trace.complex.z);
        (grads, report)
    };
    model.params.zero_grad();
    model.params.accumulate(&grads);
    clip_store_grads(&mut model.params, cfg.clip_norm);
    opt.step(&mut model.params)?;
    Ok(report)
}

fn valid_scores(model: &Tf4Ctr, valid: &Dataset, batch_size: usize) -> Result<(f64, Option<f64>)> {
    let scores = model.predict(valid, batch_size)?;
    let auc = metrics::auc(&scores, valid.labels())?;
    let gauc = match valid.user_ids() {
        Some(u) => metrics::gauc(&scores, valid.labels(), u)?,
        None => None,
    };
    Ok((auc, gauc))
}

pub fn train(cfg: &ModelConfig, train_ds: &Dataset, valid_ds: &Dataset) -> Result<TrainOutcome> {
    cfg.validate()?;
    let model = Tf4Ctr::new(cfg.arch.clone(), &train_ds.field_sizes(), cfg.seed)?;
    train_model(cfg, model, train_ds, valid_ds)
}

/// Runs the epoch loop on an already-built model.
pub fn train_model(
    cfg: &ModelConfig,
    mut model: Tf4Ctr,
    train_ds: &Dataset,
    valid_ds: &Dataset,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if valid_ds.is_empty() {
        return Err(Error::config("split_ratios", "validation split is empty"));
    }
    if train_ds.is_empty() {
        return Err(Error::config("split_ratios", "training split is empty"));
    }
    let mut opt = Adam::new(&model.params, cfg.lr);
    let mut noise = Rng::new(cfg.seed).substream("gumbel");
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut best = model.params.snapshot();
    let mut history = Vec::new();
    let mut gradnorm = Vec::new();
    let mut epoch_params = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        let start = Instant::now();
        let order = BatchOrder::Shuffled { seed: cfg.seed, epoch };
        let (mut loss_sum, mut rows) = (0.0, 0usize);
        for (batch_index, batch) in batches(train_ds, cfg.batch_size, order)?.enumerate() {
            let report = train_step(&mut model, &mut opt, &batch, cfg, &mut noise)?;
            loss_sum += report.loss_total * batch.len() as f64;
            rows += batch.len();
            gradnorm.push(GradNormRecord {
                epoch,
                batch_index,
                report,
            });
        }
        let train_seconds = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let (valid_auc, valid_gauc) = valid_scores(&model, valid_ds, cfg.eval_batch_size)?;
        let valid_seconds = start.elapsed().as_secs_f64();
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / rows as f64,
            valid_auc,
            valid_gauc,
            lr: opt.lr,
            train_seconds,
            valid_seconds,
        });
        if cfg.save_epoch_checkpoints {
            epoch_params.push((epoch, model.params.snapshot()));
        }
        opt.lr *= cfg.lr_decay;
        match stopper.observe(epoch, valid_auc) {
            StopDecision::Improved => best = model.params.snapshot(),
            StopDecision::NoImprovement => {}
            StopDecision::Stop => {
                stopped_early = true;
                break;
            }
        }
    }
    model.params.restore(&best);
    Ok(TrainOutcome {
        model,
        history,
        gradnorm,
        best_epoch: stopper.best_epoch,
        best_valid_auc: stopper.best.unwrap_or(f64::NAN),
        stopped_early,
        epoch_params,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub split: String,
    pub n: usize,
    /// Absent when the split holds a single class.
    pub auc: Option<f64>,
    pub gauc: Option<f64>,
    pub logloss: Option<f64>,
    pub category_counts: CategoryHistogram,
    pub seconds: f64,
}

impl MetricsReport {
    /// Same report with the wall-clock field zeroed, for comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            seconds: 0.0,
            ..self.clone()
        }
    }
}

/// Full-pass inference followed by every metric; no loss is evaluated.
pub fn evaluate(
    model: &Tf4Ctr,
    ds: &Dataset,
    split: &str,
    thresholds: Thresholds,
    batch_size: usize,
) -> Result<MetricsReport> {
    let start = Instant::now();
    let scores = model.predict(ds, batch_size)?;
    let seconds = start.elapsed().as_secs_f64();
    report_from_scores(&scores, ds, split, thresholds, seconds)
}

pub fn report_from_scores(
    scores: &[f64],
    ds: &Dataset,
    split: &str,
    thresholds: Thresholds,
    seconds: f64,
) -> Result<MetricsReport> {
    let labels = ds.labels();
    let auc = match metrics::auc(scores, labels) {
        Ok(v) => Some(v),
        Err(Error::MetricUndefined(_)) => None,
        Err(e) => return Err(e),
    };
    let gauc = match ds.user_ids() {
        Some(u) => metrics::gauc(scores, labels, u)?,
        None => None,
    };
    let logloss = if scores.is_empty() {
        None
    } else {
        Some(metrics::logloss(scores, labels)?)
    };
    Ok(MetricsReport {
        split: split.to_string(),
        n: ds.len(),
        auc,
        gauc,
        logloss,
        category_counts: metrics::categorize(scores, labels, thresholds)?,
        seconds,
    })
}

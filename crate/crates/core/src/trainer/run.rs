//! Data loading from a config and the on-disk run directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::checkpoint::{load_params, save_params};
use super::config::ModelConfig;
use super::train::{report_from_scores, train, GradNormRecord, MetricsReport, TrainOutcome};
use crate::data::{
    build_vocabs, read_csv, read_vocab_sidecar, split_indices, write_vocab_sidecar, CsvOptions, Dataset, FieldVocab,
    RawTable,
};
use crate::error::{Error, Result};
use crate::metrics::timeit;
use crate::model::Tf4Ctr;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.cfg";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const HISTORY_FILE: &str = "history.csv";
pub const GRADNORM_FILE: &str = "gradnorm.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const COMPLETED_FILE: &str = "completed.json";

pub fn epoch_checkpoint_file(epoch: usize) -> String {
    format!("checkpoint_epoch{epoch}.bin")
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Option<Dataset>,
}

impl Splits {
    pub fn get(&self, name: &str) -> Result<&Dataset> {
        match name {
            "train" => Ok(&self.train),
            "valid" => Ok(&self.valid),
            "test" => self
                .test
                .as_ref()
                .ok_or_else(|| Error::Data("this run has no test split".into())),
            other => Err(Error::Argument(format!("unknown split `{other}` (train, valid, test)"))),
        }
    }
}

fn csv_options(cfg: &ModelConfig) -> CsvOptions {
    CsvOptions {
        numeric_fields: cfg.numeric_fields.clone(),
        user_field: cfg.user_field.clone(),
    }
}

fn raw_splits(cfg: &ModelConfig) -> Result<(RawTable, RawTable, Option<RawTable>)> {
    let opts = csv_options(cfg);
    if let Some(train_path) = &cfg.train_path {
        let valid_path = cfg
            .valid_path
            .as_ref()
            .ok_or_else(|| Error::config("valid_path", "required together with train_path"))?;
        let train = read_csv(train_path, &opts)?;
        let valid = read_csv(valid_path, &opts)?;
        let test = cfg.test_path.as_ref().map(|p| read_csv(p, &opts)).transpose()?;
        return Ok((train, valid, test));
    }
    let path = cfg
        .data_path
        .as_ref()
        .ok_or_else(|| Error::config("data_path", "set data_path or train_path/valid_path"))?;
    let table = read_csv(path, &opts)?;
    let [a, b, c] = split_indices(table.len(), cfg.split_ratios, cfg.split_strategy, cfg.seed)?;
    let test = (!c.is_empty()).then(|| table.subset(&c));
    Ok((table.subset(&a), table.subset(&b), test))
}

/// Reads the configured files; the vocabulary is built on the training split only.
pub fn load_splits(cfg: &ModelConfig) -> Result<Splits> {
    let (train, valid, test) = raw_splits(cfg)?;
    let vocabs = Arc::new(build_vocabs(&train.field_names, &train.rows, cfg.min_frequency)?);
    encode_splits(&vocabs, &train, &valid, test.as_ref())
}

fn encode_splits(
    vocabs: &Arc<Vec<FieldVocab>>,
    train: &RawTable,
    valid: &RawTable,
    test: Option<&RawTable>,
) -> Result<Splits> {
    Ok(Splits {
        train: train.encode(vocabs)?,
        valid: valid.encode(vocabs)?,
        test: test.map(|t| t.encode(vocabs)).transpose()?,
    })
}

/// Reloads the splits of a finished run against its stored vocabulary.
pub fn reload_splits(cfg: &ModelConfig, vocabs: &Arc<Vec<FieldVocab>>) -> Result<Splits> {
    let (train, valid, test) = raw_splits(cfg)?;
    encode_splits(vocabs, &train, &valid, test.as_ref())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config: String,
    pub seed: u64,
    pub version: String,
    pub started_at: u64,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCompletion {
    pub ended_at: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_valid_auc: f64,
    pub stopped_early: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub run_dir: PathBuf,
    pub outcome: TrainOutcome,
    pub valid: MetricsReport,
    pub test: Option<MetricsReport>,
    /// Warm-started inference seconds per validation sample.
    pub inference_per_sample: f64,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn default_run_id(cfg: &ModelConfig) -> String {
    format!(
        "{}-{}-{}-s{}-{}",
        cfg.arch.ssem,
        cfg.arch.dfm,
        cfg.loss,
        cfg.seed,
        unix_now()
    )
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn history_csv(outcome: &TrainOutcome) -> String {
    let mut s = String::from("epoch,train_loss,valid_auc,valid_gauc\n");
    for r in &outcome.history {
        let _ = writeln!(s, "{},{},{},{}", r.epoch, r.train_loss, r.valid_auc, opt(r.valid_gauc));
    }
    s
}

pub fn gradnorm_csv(rows: &[GradNormRecord]) -> String {
    let mut s = String::from("epoch,batch_index,grad_norm_zs,grad_norm_zc,loss_ctr,loss_tf\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.epoch, r.batch_index, r.report.grad_norm_zs, r.report.grad_norm_zc, r.report.loss_ctr, r.report.loss_tf
        );
    }
    s
}

fn timing_csv(outcome: &TrainOutcome, valid_rows: usize, inference: f64, inference_total: f64) -> String {
    let mut s = String::from("phase,epoch,seconds,per_sample\n");
    for r in &outcome.history {
        let _ = writeln!(s, "train,{},{},", r.epoch, r.train_seconds);
        let per = if valid_rows == 0 {
            0.0
        } else {
            r.valid_seconds / valid_rows as f64
        };
        let _ = writeln!(s, "valid,{},{},{}", r.epoch, r.valid_seconds, per);
    }
    let _ = writeln!(s, "inference,{},{},{}", outcome.best_epoch, inference_total, inference);
    s
}

/// Loads data per `cfg`, trains and writes a complete run directory.
pub fn run_experiment(cfg: &ModelConfig, run_dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let splits = load_splits(cfg)?;
    run_on_splits(cfg, &splits, run_dir)
}

/// Trains on in-memory splits and writes the run directory.
pub fn run_on_splits(cfg: &ModelConfig, splits: &Splits, run_dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(run_dir).map_err(|e| Error::io(run_dir, e))?;
    let run_id = run_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| default_run_id(cfg));
    let mut outputs: Vec<String> = [
        CONFIG_FILE,
        VOCAB_FILE,
        HISTORY_FILE,
        GRADNORM_FILE,
        TIMING_FILE,
        CHECKPOINT_FILE,
        METRICS_FILE,
        COMPLETED_FILE,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    if cfg.save_epoch_checkpoints {
        outputs.push("checkpoint_epoch{N}.bin".into());
    }
    let manifest = RunManifest {
        run_id,
        config: cfg.to_text(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_at: unix_now(),
        outputs,
    };
    write(&run_dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    write(&run_dir.join(CONFIG_FILE), cfg.to_text())?;
    write_vocab_sidecar(&run_dir.join(VOCAB_FILE), splits.train.fields())?;

    let outcome = train(cfg, &splits.train, &splits.valid)?;
    write(&run_dir.join(HISTORY_FILE), history_csv(&outcome))?;
    write(&run_dir.join(GRADNORM_FILE), gradnorm_csv(&outcome.gradnorm))?;
    save_params(&outcome.model.params, &run_dir.join(CHECKPOINT_FILE))?;
    if cfg.save_epoch_checkpoints {
        let mut store = outcome.model.params.clone();
        for (epoch, snap) in &outcome.epoch_params {
            store.restore(snap);
            save_params(&store, &run_dir.join(epoch_checkpoint_file(*epoch)))?;
        }
    }

    let thresholds = cfg.thresholds()?;
    let model = &outcome.model;
    let (timing, valid_scores) = timeit(splits.valid.len(), || model.predict(&splits.valid, cfg.eval_batch_size))?;
    let valid = report_from_scores(&valid_scores, &splits.valid, "valid", thresholds, timing.seconds)?;
    let test = match &splits.test {
        Some(ds) if !ds.is_empty() => {
            let start = std::time::Instant::now();
            let scores = model.predict(ds, cfg.eval_batch_size)?;
            Some(report_from_scores(
                &scores,
                ds,
                "test",
                thresholds,
                start.elapsed().as_secs_f64(),
            )?)
        }
        _ => None,
    };
    let mut lines = String::new();
    for r in std::iter::once(&valid).chain(test.iter()) {
        lines.push_str(&serde_json::to_string(r)?);
        lines.push('\n');
    }
    write(&run_dir.join(METRICS_FILE), lines)?;
    write(
        &run_dir.join(TIMING_FILE),
        timing_csv(&outcome, splits.valid.len(), timing.per_sample, timing.seconds),
    )?;
    let completion = RunCompletion {
        ended_at: unix_now(),
        epochs_run: outcome.history.len(),
        best_epoch: outcome.best_epoch,
        best_valid_auc: outcome.best_valid_auc,
        stopped_early: outcome.stopped_early,
    };
    write(
        &run_dir.join(COMPLETED_FILE),
        serde_json::to_string_pretty(&completion)?,
    )?;
    Ok(RunSummary {
        run_dir: run_dir.to_path_buf(),
        outcome,
        valid,
        test,
        inference_per_sample: timing.per_sample,
    })
}

#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub config: ModelConfig,
    pub vocabs: Arc<Vec<FieldVocab>>,
    pub model: Tf4Ctr,
}

/// Rebuilds the model of a run directory from its config, vocabulary and
/// a checkpoint (`checkpoint.bin` unless another file is named).
pub fn load_run(run_dir: &Path, checkpoint: Option<&Path>) -> Result<LoadedRun> {
    let ckpt = checkpoint
        .map(Path::to_path_buf)
        .unwrap_or_else(|| run_dir.join(CHECKPOINT_FILE));
    if !ckpt.exists() {
        return Err(Error::MissingCheckpoint(ckpt));
    }
    let config = ModelConfig::from_file(&run_dir.join(CONFIG_FILE))?;
    let vocabs = Arc::new(read_vocab_sidecar(&run_dir.join(VOCAB_FILE))?);
    let sizes: Vec<usize> = vocabs.iter().map(FieldVocab::size).collect();
    let mut model = Tf4Ctr::new(config.arch.clone(), &sizes, config.seed)?;
    load_params(&mut model.params, &ckpt)?;
    Ok(LoadedRun { config, vocabs, model })
}

/// Epoch checkpoints present in a run directory, sorted by epoch.
pub fn epoch_checkpoints(run_dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(run_dir).map_err(|e| Error::io(run_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(run_dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(n) = name
            .strip_prefix("checkpoint_epoch")
            .and_then(|s| s.strip_suffix(".bin"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            out.push((n, entry.path()));
        }
    }
    out.sort();
    Ok(out)
}

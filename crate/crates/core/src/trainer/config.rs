//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::SplitStrategy;
use crate::error::{Error, Result};
use crate::losses::{LossKind, TfHyper};
use crate::metrics::Thresholds;
use crate::model::ArchConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Separate pre-split files; take precedence over `data_path`.
    pub train_path: Option<PathBuf>,
    pub valid_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    /// Single file split by `split_ratios`.
    pub data_path: Option<PathBuf>,
    pub split_ratios: [f64; 3],
    pub split_strategy: SplitStrategy,
    pub min_frequency: usize,
    pub numeric_fields: Vec<String>,
    pub user_field: Option<String>,

    pub arch: ArchConfig,
    pub loss: LossKind,
    pub tf: TfHyper,

    pub batch_size: usize,
    pub eval_batch_size: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub clip_norm: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub eval_thresholds: (f64, f64),
    pub save_epoch_checkpoints: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            train_path: None,
            valid_path: None,
            test_path: None,
            data_path: None,
            split_ratios: [0.8, 0.1, 0.1],
            split_strategy: SplitStrategy::Random,
            min_frequency: 1,
            numeric_fields: Vec::new(),
            user_field: None,
            arch: ArchConfig::default(),
            loss: LossKind::Tf,
            tf: TfHyper::default(),
            batch_size: 10_000,
            eval_batch_size: 10_000,
            lr: 1e-3,
            lr_decay: 1.0,
            clip_norm: 10.0,
            patience: 2,
            max_epochs: 100,
            seed: 2023,
            eval_thresholds: (0.3, 0.6),
            save_epoch_checkpoints: false,
        }
    }
}

/// Every key accepted by [`ModelConfig::set`], in serialization order.
pub const CONFIG_KEYS: &[&str] = &[
    "train_path",
    "valid_path",
    "test_path",
    "data_path",
    "split_ratios",
    "split_strategy",
    "min_frequency",
    "numeric_fields",
    "user_field",
    "embedding_dim",
    "ssem",
    "dfm",
    "simple_hidden",
    "complex_hidden",
    "expert_hidden",
    "gate_hidden",
    "head_bias",
    "tau",
    "loss",
    "alpha",
    "c",
    "gamma",
    "focal_gamma",
    "batch_size",
    "eval_batch_size",
    "lr",
    "lr_decay",
    "clip_norm",
    "patience",
    "max_epochs",
    "seed",
    "eval_thresholds",
    "save_epoch_checkpoints",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let v = value.trim().trim_start_matches('[').trim_end_matches(']');
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::config(key, format!("expected a boolean, got `{other}`"))),
    }
}

fn opt_path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl ModelConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "train_path" => self.train_path = opt_path(value),
            "valid_path" => self.valid_path = opt_path(value),
            "test_path" => self.test_path = opt_path(value),
            "data_path" => self.data_path = opt_path(value),
            "split_ratios" => {
                let v: Vec<f64> = parse_list(key, value)?;
                self.split_ratios = v
                    .try_into()
                    .map_err(|_| Error::config(key, "expected three comma-separated ratios"))?;
            }
            "split_strategy" => self.split_strategy = parse(key, value)?,
            "min_frequency" => self.min_frequency = parse(key, value)?,
            "numeric_fields" => self.numeric_fields = parse_list(key, value)?,
            "user_field" => self.user_field = Some(value.trim().to_string()).filter(|s| !s.is_empty()),
            "embedding_dim" => self.arch.embedding_dim = parse(key, value)?,
            "ssem" => self.arch.ssem = parse(key, value)?,
            "dfm" => self.arch.dfm = parse(key, value)?,
            "simple_hidden" => self.arch.simple_hidden = parse_list(key, value)?,
            "complex_hidden" => self.arch.complex_hidden = parse_list(key, value)?,
            "expert_hidden" => self.arch.expert_hidden = parse_list(key, value)?,
            "gate_hidden" => self.arch.gate_hidden = parse_list(key, value)?,
            "head_bias" => self.arch.head_bias = parse_bool(key, value)?,
            "tau" => self.arch.tau = parse(key, value)?,
            "loss" => self.loss = parse(key, value)?,
            "alpha" => self.tf.alpha = parse(key, value)?,
            "c" => self.tf.c = parse(key, value)?,
            "gamma" => self.tf.gamma = parse(key, value)?,
            "focal_gamma" => self.tf.focal_gamma = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "eval_batch_size" => self.eval_batch_size = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "lr_decay" => self.lr_decay = parse(key, value)?,
            "clip_norm" => self.clip_norm = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "eval_thresholds" => {
                let v: Vec<f64> = parse_list(key, value)?;
                match v[..] {
                    [lo, hi] => self.eval_thresholds = (lo, hi),
                    _ => return Err(Error::config(key, "expected two comma-separated thresholds")),
                }
            }
            "save_epoch_checkpoints" => self.save_epoch_checkpoints = parse_bool(key, value)?,
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Result<String> {
        let a = &self.arch;
        Ok(match key {
            "train_path" => show_path(&self.train_path),
            "valid_path" => show_path(&self.valid_path),
            "test_path" => show_path(&self.test_path),
            "data_path" => show_path(&self.data_path),
            "split_ratios" => join(&self.split_ratios),
            "split_strategy" => self.split_strategy.to_string(),
            "min_frequency" => self.min_frequency.to_string(),
            "numeric_fields" => self.numeric_fields.join(","),
            "user_field" => self.user_field.clone().unwrap_or_default(),
            "embedding_dim" => a.embedding_dim.to_string(),
            "ssem" => a.ssem.to_string(),
            "dfm" => a.dfm.to_string(),
            "simple_hidden" => join(&a.simple_hidden),
            "complex_hidden" => join(&a.complex_hidden),
            "expert_hidden" => join(&a.expert_hidden),
            "gate_hidden" => join(&a.gate_hidden),
            "head_bias" => a.head_bias.to_string(),
            "tau" => a.tau.to_string(),
            "loss" => self.loss.to_string(),
            "alpha" => self.tf.alpha.to_string(),
            "c" => self.tf.c.to_string(),
            "gamma" => self.tf.gamma.to_string(),
            "focal_gamma" => self.tf.focal_gamma.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "eval_batch_size" => self.eval_batch_size.to_string(),
            "lr" => self.lr.to_string(),
            "lr_decay" => self.lr_decay.to_string(),
            "clip_norm" => self.clip_norm.to_string(),
            "patience" => self.patience.to_string(),
            "max_epochs" => self.max_epochs.to_string(),
            "seed" => self.seed.to_string(),
            "eval_thresholds" => format!("{},{}", self.eval_thresholds.0, self.eval_thresholds.1),
            "save_epoch_checkpoints" => self.save_epoch_checkpoints.to_string(),
            other => return Err(Error::UnknownKey(other.to_string())),
        })
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    "config",
                    format!("line {}: expected `key = value`, got `{}`", lineno + 1, raw.trim()),
                )
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// `key=value` override as given on the command line.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::config(kv, "override must look like key=value"))?;
        self.set(k, v)
    }

    /// Every key in canonical order; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }

    pub fn thresholds(&self) -> Result<Thresholds> {
        Thresholds::new(self.eval_thresholds.0, self.eval_thresholds.1)
    }

    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        self.tf.validate()?;
        self.thresholds()?;
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if self.eval_batch_size == 0 {
            return Err(Error::config("eval_batch_size", "must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", format!("must be positive, got {}", self.lr)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::config(
                "lr_decay",
                format!("must be in (0, 1], got {}", self.lr_decay),
            ));
        }
        if !(self.clip_norm > 0.0 && self.clip_norm.is_finite()) {
            return Err(Error::config(
                "clip_norm",
                format!("must be positive, got {}", self.clip_norm),
            ));
        }
        if self.patience == 0 {
            return Err(Error::config("patience", "must be at least 1"));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("max_epochs", "must be at least 1"));
        }
        if self.min_frequency == 0 {
            return Err(Error::config("min_frequency", "must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::DfmKind;
    use crate::ssem::SsemKind;

    #[test]
    fn text_round_trip() {
        let mut cfg = ModelConfig::default();
        cfg.set("ssem", "MMoE").unwrap();
        cfg.set("simple_hidden", "800,800").unwrap();
        cfg.set("train_path", "/tmp/a.csv").unwrap();
        cfg.set("user_field", "user").unwrap();
        let back = ModelConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn parses_comments_and_overrides() {
        let cfg = ModelConfig::from_text("# baseline\nssem = Share # shared\n\ndfm=sum\nloss = logloss\n").unwrap();
        assert_eq!(cfg.arch.ssem, SsemKind::Share);
        assert_eq!(cfg.arch.dfm, DfmKind::Sum);
        assert_eq!(cfg.loss, LossKind::LogLoss);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ModelConfig::from_text("learning_rate = 0.1").unwrap_err();
        assert!(matches!(err, Error::UnknownKey(k) if k == "learning_rate"));
    }

    #[test]
    fn bad_value_reports_key() {
        let err = ModelConfig::from_text("patience = two").unwrap_err();
        assert!(matches!(err, Error::Config { key, .. } if key == "patience"));
    }

    #[test]
    fn validation() {
        assert!(ModelConfig::default().validate().is_ok());
        let cfg = ModelConfig {
            patience: 0,
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::default();
        cfg.arch.embedding_dim = 15;
        assert!(cfg.validate().is_err());
        cfg.arch.ssem = SsemKind::Gm;
        assert!(cfg.validate().is_ok());
    }
}

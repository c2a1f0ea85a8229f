//! Command-line front end: `train`, `eval`, `analyze`, `grid` and `synth`.
//!
//! Exit codes: 0 success, 1 other failure, 2 bad configuration or usage,
//! 3 data error, 4 missing checkpoint.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{synth_generate, write_csv, SynthParams};
use crate::error::{Error, Result};
use crate::trainer::{
    epoch_checkpoints, evaluate, load_run, reload_splits, run_experiment, ModelConfig, RunCompletion, COMPLETED_FILE,
    GRADNORM_FILE,
};

pub const RUN_ROOT_ENV: &str = "TF4CTR_RUN_ROOT";

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_MISSING_CHECKPOINT: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::UnknownKey(_) | Error::Argument(_) => EXIT_CONFIG,
        Error::Data(_) | Error::Csv(_) | Error::MetricUndefined(_) => EXIT_DATA,
        Error::MissingCheckpoint(_) => EXIT_MISSING_CHECKPOINT,
        _ => EXIT_OTHER,
    }
}

#[derive(Debug, Parser)]
#[command(name = "tf4ctr", version, about = "Two-branch CTR model training and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one configuration into a run directory.
    Train(ConfigArgs),
    /// Re-evaluate a finished run on one split.
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Checkpoint to evaluate instead of the best one.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Write per-epoch category histograms for a finished run.
    Analyze {
        #[arg(long)]
        run: PathBuf,
        /// `train`, `valid`, `test` or `all` (valid and test).
        #[arg(long, default_value = "all")]
        split: String,
    },
    /// Run the cartesian product of every `axis.KEY = a | b | c` line.
    Grid(ConfigArgs),
    /// Generate a planted-logistic dataset with a truth sidecar.
    Synth {
        #[arg(long, default_value_t = 20_000)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        fields: usize,
        #[arg(long, default_value_t = 20)]
        vocab: usize,
        #[arg(long, default_value_t = 0.0)]
        hard_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6.0)]
        logit_scale: f64,
        /// CSV path; the truth goes next to it as `<stem>.truth.json`.
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve_config(args: &ConfigArgs, text: Option<&str>) -> Result<ModelConfig> {
    let mut cfg = ModelConfig::default();
    if let Some(t) = text {
        cfg.apply_text(t)?;
    }
    for kv in &args.overrides {
        cfg.apply_override(kv)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn read_config_text(path: &Option<PathBuf>) -> Result<Option<String>> {
    path.as_ref()
        .map(|p| {
            std::fs::read_to_string(p).map_err(|e| Error::config("config", format!("cannot read {}: {e}", p.display())))
        })
        .transpose()
}

fn default_out(run_id: &str) -> PathBuf {
    let root = std::env::var_os(RUN_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"));
    root.join(run_id)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn cmd_train(args: &ConfigArgs) -> Result<PathBuf> {
    let text = read_config_text(&args.config)?;
    let cfg = resolve_config(args, text.as_deref())?;
    cfg.validate()?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_out(&crate::trainer::default_run_id(&cfg)));
    let summary = run_experiment(&cfg, &out)?;
    Ok(summary.run_dir)
}

pub fn cmd_eval(run: &Path, split: &str, checkpoint: Option<&Path>) -> Result<PathBuf> {
    let loaded = load_run(run, checkpoint)?;
    let splits = reload_splits(&loaded.config, &loaded.vocabs)?;
    let ds = splits.get(split)?;
    let report = evaluate(
        &loaded.model,
        ds,
        split,
        loaded.config.thresholds()?,
        loaded.config.eval_batch_size,
    )?;
    let path = run.join(format!("eval_{split}.json"));
    write(&path, serde_json::to_string_pretty(&report)?)?;
    Ok(path)
}

pub fn cmd_analyze(run: &Path, split: &str) -> Result<PathBuf> {
    let loaded = load_run(run, None)?;
    let splits = reload_splits(&loaded.config, &loaded.vocabs)?;
    let names: Vec<&str> = match split {
        "all" => {
            let mut v = vec!["valid"];
            if splits.test.is_some() {
                v.push("test");
            }
            v
        }
        s => vec![s],
    };
    let mut checkpoints = epoch_checkpoints(run)?;
    let mut model = loaded.model.clone();
    if checkpoints.is_empty() {
        let best = std::fs::read_to_string(run.join(COMPLETED_FILE))
            .ok()
            .and_then(|t| serde_json::from_str::<RunCompletion>(&t).ok())
            .map_or(0, |c| c.best_epoch);
        checkpoints.push((best, run.join(crate::trainer::CHECKPOINT_FILE)));
    }
    let thresholds = loaded.config.thresholds()?;
    let mut csv = String::from("epoch,split,class,category,count\n");
    for (epoch, path) in &checkpoints {
        crate::trainer::load_params(&mut model.params, path)?;
        for name in &names {
            let ds = splits.get(name)?;
            let report = evaluate(&model, ds, name, thresholds, loaded.config.eval_batch_size)?;
            for (class, category, count) in report.category_counts.rows() {
                let _ = writeln!(csv, "{epoch},{name},{class},{category},{count}");
            }
        }
    }
    let path = run.join("category_hist.csv");
    write(&path, csv)?;
    Ok(path)
}

/// Ordered `(key, values)` axes of a grid file.
pub type GridAxes = Vec<(String, Vec<String>)>;

/// Base config text and axes of a grid file.
pub fn parse_grid(text: &str) -> Result<(String, GridAxes)> {
    let mut base = String::new();
    let mut axes: GridAxes = Vec::new();
    for line in text.lines() {
        let body = line.split('#').next().unwrap_or("").trim();
        let Some(rest) = body.strip_prefix("axis.") else {
            base.push_str(line);
            base.push('\n');
            continue;
        };
        let (k, v) = rest
            .split_once('=')
            .ok_or_else(|| Error::config("grid", format!("expected `axis.KEY = a | b`, got `{body}`")))?;
        let key = k.trim().to_string();
        let values: Vec<String> = v
            .split('|')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if values.is_empty() {
            return Err(Error::config(&key, "axis has no values"));
        }
        if axes.iter().any(|(a, _)| *a == key) {
            return Err(Error::config(&key, "axis listed twice"));
        }
        axes.push((key, values));
    }
    Ok((base, axes))
}

/// Every combination of axis values, first axis varying slowest.
pub fn grid_cells(axes: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    let mut cells: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in axes {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push((key.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    cells
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCellResult {
    pub settings: Vec<(String, String)>,
    pub run_dir: PathBuf,
    pub best_epoch: Option<usize>,
    pub valid_auc: Option<f64>,
    pub valid_gauc: Option<f64>,
    pub test_auc: Option<f64>,
    pub test_gauc: Option<f64>,
    pub error: Option<String>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn summary_csv(axes: &[(String, Vec<String>)], results: &[GridCellResult]) -> String {
    let mut s = String::from("cell");
    for (k, _) in axes {
        s.push(',');
        s.push_str(&csv_field(k));
    }
    s.push_str(",status,best_epoch,valid_auc,valid_gauc,test_auc,test_gauc,error\n");
    for (i, r) in results.iter().enumerate() {
        let _ = write!(s, "{i}");
        for (_, v) in &r.settings {
            s.push(',');
            s.push_str(&csv_field(v));
        }
        let status = if r.error.is_some() { "failed" } else { "ok" };
        let _ = writeln!(
            s,
            ",{status},{},{},{},{},{},{}",
            r.best_epoch.map(|e| e.to_string()).unwrap_or_default(),
            cell(r.valid_auc),
            cell(r.valid_gauc),
            cell(r.test_auc),
            cell(r.test_gauc),
            csv_field(r.error.as_deref().unwrap_or(""))
        );
    }
    s
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// SSEM rows against fusion columns; each cell is `AUC/gAUC` averaged over
/// the remaining axes, on the test split when present.
pub fn pivot_csv(axes: &[(String, Vec<String>)], results: &[GridCellResult]) -> Option<String> {
    let values = |key: &str| axes.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    let (rows, cols) = (values("ssem")?, values("dfm")?);
    let get = |r: &GridCellResult, key: &str| r.settings.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    let mut s = String::from("ssem");
    for c in &cols {
        s.push(',');
        s.push_str(c);
    }
    s.push('\n');
    for row in &rows {
        s.push_str(row);
        for col in &cols {
            let hits: Vec<&GridCellResult> = results
                .iter()
                .filter(|r| r.error.is_none())
                .filter(|r| get(r, "ssem").as_deref() == Some(row) && get(r, "dfm").as_deref() == Some(col))
                .collect();
            let aucs: Vec<f64> = hits.iter().filter_map(|r| r.test_auc.or(r.valid_auc)).collect();
            let gaucs: Vec<f64> = hits.iter().filter_map(|r| r.test_gauc.or(r.valid_gauc)).collect();
            s.push(',');
            match (mean(&aucs), mean(&gaucs)) {
                (Some(a), Some(g)) => {
                    let _ = write!(s, "{a:.6}/{g:.6}");
                }
                (Some(a), None) => {
                    let _ = write!(s, "{a:.6}");
                }
                _ => {}
            }
        }
        s.push('\n');
    }
    Some(s)
}

pub fn cmd_grid(args: &ConfigArgs) -> Result<(PathBuf, Vec<GridCellResult>)> {
    let text = read_config_text(&args.config)?.unwrap_or_default();
    let (base, axes) = parse_grid(&text)?;
    let base_cfg = resolve_config(args, Some(&base))?;
    for (key, _) in &axes {
        base_cfg.get(key)?;
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_out(&format!("grid-{}", crate::trainer::default_run_id(&base_cfg))));
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let mut results = Vec::new();
    for (i, settings) in grid_cells(&axes).into_iter().enumerate() {
        let run_dir = out.join(format!("cell{i:03}"));
        let outcome = (|| {
            let mut cfg = base_cfg.clone();
            for (k, v) in &settings {
                cfg.set(k, v)?;
            }
            run_experiment(&cfg, &run_dir)
        })();
        let mut r = GridCellResult {
            settings,
            run_dir,
            best_epoch: None,
            valid_auc: None,
            valid_gauc: None,
            test_auc: None,
            test_gauc: None,
            error: None,
        };
        match outcome {
            Ok(summary) => {
                r.best_epoch = Some(summary.outcome.best_epoch);
                r.valid_auc = summary.valid.auc;
                r.valid_gauc = summary.valid.gauc;
                r.test_auc = summary.test.as_ref().and_then(|t| t.auc);
                r.test_gauc = summary.test.as_ref().and_then(|t| t.gauc);
            }
            Err(e) => {
                eprintln!("cell {i} failed: {e}");
                r.error = Some(e.to_string());
            }
        }
        results.push(r);
    }
    let summary = out.join("summary.csv");
    write(&summary, summary_csv(&axes, &results))?;
    if let Some(p) = pivot_csv(&axes, &results) {
        write(&out.join("table.csv"), p)?;
    }
    Ok((summary, results))
}

pub fn cmd_synth(params: &SynthParams, out: &Path) -> Result<(PathBuf, PathBuf)> {
    let (ds, truth) = synth_generate(params)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_csv(out, &ds)?;
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "synth".into());
    let sidecar = out.with_file_name(format!("{stem}.truth.json"));
    truth.write_json(&sidecar)?;
    Ok((out.to_path_buf(), sidecar))
}

fn dispatch(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::Train(args) => Ok(vec![cmd_train(&args)?]),
        Command::Eval { run, split, checkpoint } => Ok(vec![cmd_eval(&run, &split, checkpoint.as_deref())?]),
        Command::Analyze { run, split } => Ok(vec![cmd_analyze(&run, &split)?, run.join(GRADNORM_FILE)]),
        Command::Grid(args) => Ok(vec![cmd_grid(&args)?.0]),
        Command::Synth {
            n,
            fields,
            vocab,
            hard_fraction,
            seed,
            logit_scale,
            out,
        } => {
            let params = SynthParams {
                n,
                num_fields: fields,
                vocab_per_field: vocab,
                hard_fraction,
                seed,
                logit_scale,
            };
            let (a, b) = cmd_synth(&params, &out)?;
            Ok(vec![a, b])
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

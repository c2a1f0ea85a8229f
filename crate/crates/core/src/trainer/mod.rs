//! Optimization loop, evaluation, checkpoints and run directories.

mod checkpoint;
mod config;
mod optim;
mod run;
mod train;

pub use checkpoint::{decode_params, encode_params, load_params, restore_named, save_params, MAGIC, VERSION};
pub use config::{ModelConfig, CONFIG_KEYS};
pub use optim::{clip_global_norm, clip_store_grads, global_norm, Adam, EarlyStopper, StopDecision};
pub use run::{
    default_run_id, epoch_checkpoint_file, epoch_checkpoints, gradnorm_csv, history_csv, load_run, load_splits,
    reload_splits, run_experiment, run_on_splits, LoadedRun, RunCompletion, RunManifest, RunSummary, Splits,
    CHECKPOINT_FILE, COMPLETED_FILE, CONFIG_FILE, GRADNORM_FILE, HISTORY_FILE, MANIFEST_FILE, METRICS_FILE,
    TIMING_FILE, VOCAB_FILE,
};
pub use train::{
    evaluate, report_from_scores, train, train_model, train_step, EpochRecord, GradNormRecord, MetricsReport,
    TrainOutcome,
};

//! Dataset schema, vocabulary folding, CSV ingestion, splits, batching and the
//! synthetic generator.

mod batch;
mod csv_io;
mod dataset;
mod split;
mod synth;
mod vocab;

pub use batch::{batches, BatchOrder, Batches};
pub use csv_io::{discretize_numeric, read_csv, write_csv, CsvOptions, LABEL_COLUMN, USER_COLUMN};
pub use dataset::{Batch, Dataset, RawTable};
pub use split::{split_indices, SplitStrategy};
pub use synth::{synth_generate, SynthParams, SynthTruth};
pub use vocab::{build_vocabs, read_vocab_sidecar, write_vocab_sidecar, FieldVocab, OOV_ID, OOV_TOKEN};

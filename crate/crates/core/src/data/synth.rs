//! Planted-logistic generator with a controllable share of label-inconsistent rows.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::vocab::FieldVocab;
use crate::diffcore::{sigmoid, Rng};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n: usize,
    pub num_fields: usize,
    pub vocab_per_field: usize,
    pub hard_fraction: f64,
    pub seed: u64,
    /// Standard deviation of the planted logit over rows.
    pub logit_scale: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n: 20_000,
            num_fields: 8,
            vocab_per_field: 20,
            hard_fraction: 0.0,
            seed: 0,
            logit_scale: 6.0,
        }
    }
}

/// Ground truth behind a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub params: SynthParams,
    /// `weights[field][id]`; id 0 (OOV) carries weight 0.
    pub weights: Vec<Vec<f64>>,
    pub bias: f64,
    /// Rows whose planted logit was sign-flipped before sampling the label.
    pub hard_rows: Vec<usize>,
}

impl SynthTruth {
    /// Planted (unflipped) logit of an encoded row.
    pub fn logit(&self, row: &[u32]) -> f64 {
        self.bias
            + row
                .iter()
                .zip(&self.weights)
                .map(|(&id, w)| w[id as usize])
                .sum::<f64>()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

pub fn synth_generate(p: &SynthParams) -> Result<(Dataset, SynthTruth)> {
    if !(0.0..=1.0).contains(&p.hard_fraction) {
        return Err(Error::Argument(format!(
            "hard_fraction {} outside [0, 1]",
            p.hard_fraction
        )));
    }
    if p.num_fields == 0 || p.vocab_per_field == 0 {
        return Err(Error::Argument("need at least one field and one token".into()));
    }
    let root = Rng::new(p.seed);
    let mut wrng = root.substream("synth/weights");
    let per_field = p.logit_scale / (p.num_fields as f64).sqrt();
    let weights: Vec<Vec<f64>> = (0..p.num_fields)
        .map(|_| {
            std::iter::once(0.0)
                .chain((0..p.vocab_per_field).map(|_| per_field * wrng.normal()))
                .collect()
        })
        .collect();

    let mut hard = vec![false; p.n];
    let n_hard = (p.n as f64 * p.hard_fraction).round() as usize;
    let mut order: Vec<usize> = (0..p.n).collect();
    root.substream("synth/hard").shuffle(&mut order);
    let mut hard_rows: Vec<usize> = order[..n_hard].to_vec();
    hard_rows.sort_unstable();
    for &r in &hard_rows {
        hard[r] = true;
    }

    let fields: Vec<FieldVocab> = (0..p.num_fields)
        .map(|i| FieldVocab::from_tokens(format!("f{i}"), (1..=p.vocab_per_field).map(|j| format!("v{j}"))))
        .collect();
    let truth = SynthTruth {
        params: p.clone(),
        weights,
        bias: 0.0,
        hard_rows,
    };

    let mut xrng = root.substream("synth/features");
    let mut yrng = root.substream("synth/labels");
    let mut ids = Vec::with_capacity(p.n * p.num_fields);
    let mut labels = Vec::with_capacity(p.n);
    let mut users = Vec::with_capacity(p.n);
    for &flip in &hard {
        let start = ids.len();
        for _ in 0..p.num_fields {
            ids.push(1 + xrng.below(p.vocab_per_field) as u32);
        }
        let mut z = truth.logit(&ids[start..]);
        if flip {
            z = -z;
        }
        labels.push(if yrng.uniform() < sigmoid(z) { 1.0 } else { 0.0 });
        users.push(ids[start]);
    }
    let ds = Dataset::new(Arc::new(fields), ids, labels, Some(users))?;
    Ok((ds, truth))
}

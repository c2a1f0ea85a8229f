//! AUC, grouped AUC, log loss, prediction-confidence histograms and timing.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diffcore::PROB_EPS;
use crate::error::{Error, Result};

fn check_lengths(scores: &[f64], labels: &[f64]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Argument(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&y| y != 0.0 && y != 1.0) {
        return Err(Error::Data(format!("label {bad} is not 0 or 1")));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score {bad}")));
    }
    Ok(())
}

/// Average 1-based ranks, ties sharing the mean of their positions.
fn average_ranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Mann-Whitney AUC; ties count one half.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::MetricUndefined(format!(
            "AUC needs both classes ({n_pos} positives, {n_neg} negatives)"
        )));
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 1.0)
        .map(|(r, _)| r)
        .sum();
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Impression-weighted mean of per-group AUC over groups with both classes.
/// `None` when no group qualifies.
pub fn gauc(scores: &[f64], labels: &[f64], groups: &[u32]) -> Result<Option<f64>> {
    check_lengths(scores, labels)?;
    if groups.len() != scores.len() {
        return Err(Error::Argument(format!(
            "{} group ids for {} scores",
            groups.len(),
            scores.len()
        )));
    }
    let mut by_group: BTreeMap<u32, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((&s, &y), &u) in scores.iter().zip(labels).zip(groups) {
        let e = by_group.entry(u).or_default();
        e.0.push(s);
        e.1.push(y);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (s, y) in by_group.values() {
        let pos = y.iter().filter(|&&v| v == 1.0).count();
        if pos == 0 || pos == y.len() {
            continue;
        }
        let w = y.len() as f64;
        num += w * auc(s, y)?;
        den += w;
    }
    Ok((den > 0.0).then(|| num / den))
}

/// Mean binary cross-entropy with probabilities clamped to `[ε, 1−ε]`.
pub fn logloss(scores: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(scores, labels)?;
    if scores.is_empty() {
        return Err(Error::MetricUndefined("log loss of an empty set".into()));
    }
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| {
            let p = s.clamp(PROB_EPS, 1.0 - PROB_EPS);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / scores.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Misclassified,
    Poorly,
    Well,
}

impl Category {
    pub const ALL: [Category; 3] = [Self::Misclassified, Self::Poorly, Self::Well];
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Misclassified => "misclassified",
            Self::Poorly => "poorly",
            Self::Well => "well",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { low: 0.3, high: 0.6 }
    }
}

impl Thresholds {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(0.0 <= low && low < high && high <= 1.0) {
            return Err(Error::config(
                "eval_thresholds",
                format!("need 0 <= low < high <= 1, got ({low}, {high})"),
            ));
        }
        Ok(Self { low, high })
    }

    /// Category of one prediction, judged on the label-aligned probability.
    pub fn classify(&self, score: f64, label: f64) -> Category {
        let p = if label == 1.0 { score } else { 1.0 - score };
        if p >= self.high {
            Category::Well
        } else if p >= self.low {
            Category::Poorly
        } else {
            Category::Misclassified
        }
    }
}

/// Counts indexed `[class][category]` with class 0 = negative, 1 = positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CategoryHistogram {
    pub negative: CategoryCounts,
    pub positive: CategoryCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub misclassified: usize,
    pub poorly: usize,
    pub well: usize,
}

impl CategoryCounts {
    pub fn get(&self, c: Category) -> usize {
        match c {
            Category::Misclassified => self.misclassified,
            Category::Poorly => self.poorly,
            Category::Well => self.well,
        }
    }

    fn bump(&mut self, c: Category) {
        match c {
            Category::Misclassified => self.misclassified += 1,
            Category::Poorly => self.poorly += 1,
            Category::Well => self.well += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.misclassified + self.poorly + self.well
    }
}

impl CategoryHistogram {
    pub fn total(&self) -> usize {
        self.negative.total() + self.positive.total()
    }

    /// Count for a category summed over both classes.
    pub fn count(&self, c: Category) -> usize {
        self.negative.get(c) + self.positive.get(c)
    }

    /// `(class, category, count)` rows, negatives first.
    pub fn rows(&self) -> Vec<(&'static str, Category, usize)> {
        let mut out = Vec::with_capacity(6);
        for (name, counts) in [("negative", &self.negative), ("positive", &self.positive)] {
            for c in Category::ALL {
                out.push((name, c, counts.get(c)));
            }
        }
        out
    }
}

pub fn categorize(scores: &[f64], labels: &[f64], t: Thresholds) -> Result<CategoryHistogram> {
    check_lengths(scores, labels)?;
    let mut h = CategoryHistogram::default();
    for (&s, &y) in scores.iter().zip(labels) {
        let c = t.classify(s, y);
        if y == 1.0 {
            h.positive.bump(c);
        } else {
            h.negative.bump(c);
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
    pub per_sample: f64,
}

/// Runs `phase` once untimed, then times a second run over `rows` samples.
pub fn timeit<T>(rows: usize, mut phase: impl FnMut() -> Result<T>) -> Result<(Timing, T)> {
    phase()?;
    let start = Instant::now();
    let out = phase()?;
    let seconds = start.elapsed().as_secs_f64();
    let per_sample = if rows == 0 { 0.0 } else { seconds / rows as f64 };
    Ok((Timing { seconds, per_sample }, out))
}

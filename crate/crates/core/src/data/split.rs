use std::fmt;
use std::str::FromStr;

use super::dataset::Dataset;
use crate::diffcore::Rng;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitStrategy {
    Random,
    TimeOrdered,
}

impl FromStr for SplitStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Self::Random),
            "time_ordered" | "time" => Ok(Self::TimeOrdered),
            other => Err(format!("unknown split strategy `{other}`")),
        }
    }
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Random => "random",
            Self::TimeOrdered => "time_ordered",
        })
    }
}

/// Row indices of the train/valid/test partition of `n` rows.
pub fn split_indices(n: usize, ratios: [f64; 3], strategy: SplitStrategy, seed: u64) -> Result<[Vec<usize>; 3]> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::config(
            "split_ratios",
            format!("{ratios:?} must be non-negative and sum to 1"),
        ));
    }
    let wanted = ratios.iter().filter(|&&r| r > 0.0).count();
    if n < wanted {
        return Err(Error::Data(format!("{n} rows cannot fill {wanted} splits")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if strategy == SplitStrategy::Random {
        Rng::new(seed).substream("split").shuffle(&mut order);
    }
    let cut1 = (n as f64 * ratios[0]).round() as usize;
    let cut2 = ((n as f64 * (ratios[0] + ratios[1])).round() as usize).clamp(cut1, n);
    let test = order.split_off(cut2);
    let valid = order.split_off(cut1);
    Ok([order, valid, test])
}

impl Dataset {
    pub fn split(&self, ratios: [f64; 3], strategy: SplitStrategy, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
        let [a, b, c] = split_indices(self.len(), ratios, strategy, seed)?;
        Ok((self.subset(&a), self.subset(&b), self.subset(&c)))
    }
}

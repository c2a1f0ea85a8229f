use super::dataset::{Batch, Dataset};
use crate::diffcore::Rng;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchOrder {
    Sequential,
    /// Per-epoch permutation drawn from the `(seed, epoch)` sub-stream.
    Shuffled {
        seed: u64,
        epoch: usize,
    },
}

pub struct Batches<'a> {
    dataset: &'a Dataset,
    order: Vec<usize>,
    batch_size: usize,
    pos: usize,
}

impl Iterator for Batches<'_> {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let b = self.dataset.batch(&self.order[self.pos..end]);
        self.pos = end;
        Some(b)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.order.len() - self.pos).div_ceil(self.batch_size);
        (left, Some(left))
    }
}

impl ExactSizeIterator for Batches<'_> {}

/// Mini-batches covering every row exactly once; the last batch may be short.
pub fn batches(dataset: &Dataset, batch_size: usize, order: BatchOrder) -> Result<Batches<'_>> {
    if batch_size == 0 {
        return Err(Error::config("batch_size", "must be at least 1"));
    }
    let mut rows: Vec<usize> = (0..dataset.len()).collect();
    if let BatchOrder::Shuffled { seed, epoch } = order {
        Rng::new(seed).substream(&format!("shuffle/{epoch}")).shuffle(&mut rows);
    }
    Ok(Batches {
        dataset,
        order: rows,
        batch_size,
        pos: 0,
    })
}

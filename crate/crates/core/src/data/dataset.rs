use std::collections::HashMap;
use std::sync::Arc;

use super::vocab::FieldVocab;
use crate::error::{Error, Result};

/// Encoded categorical samples: one id per field per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    fields: Arc<Vec<FieldVocab>>,
    ids: Vec<u32>,
    labels: Vec<f64>,
    user_ids: Option<Vec<u32>>,
}

impl Dataset {
    pub fn new(
        fields: Arc<Vec<FieldVocab>>,
        ids: Vec<u32>,
        labels: Vec<f64>,
        user_ids: Option<Vec<u32>>,
    ) -> Result<Self> {
        let f = fields.len();
        let n = labels.len();
        if ids.len() != n * f {
            return Err(Error::Data(format!("{} ids for {n} rows of {f} fields", ids.len())));
        }
        if let Some(u) = &user_ids {
            if u.len() != n {
                return Err(Error::Data(format!("{} user ids for {n} rows", u.len())));
            }
        }
        if let Some(l) = labels.iter().find(|&&l| l != 0.0 && l != 1.0) {
            return Err(Error::Data(format!("label {l} is not binary")));
        }
        for (k, &id) in ids.iter().enumerate() {
            let size = fields[k % f.max(1)].size();
            if id as usize >= size {
                return Err(Error::Index {
                    what: format!("field `{}`", fields[k % f].name()),
                    index: id as usize,
                    size,
                });
            }
        }
        Ok(Self {
            fields,
            ids,
            labels,
            user_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_fields(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &Arc<Vec<FieldVocab>> {
        &self.fields
    }

    pub fn field_sizes(&self) -> Vec<usize> {
        self.fields.iter().map(FieldVocab::size).collect()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let f = self.num_fields();
        &self.ids[i * f..(i + 1) * f]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn user_ids(&self) -> Option<&[u32]> {
        self.user_ids.as_deref()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1.0).count()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let f = self.num_fields();
        let mut ids = Vec::with_capacity(rows.len() * f);
        for &r in rows {
            ids.extend_from_slice(self.row(r));
        }
        Dataset {
            fields: Arc::clone(&self.fields),
            ids,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            user_ids: self.user_ids.as_ref().map(|u| rows.iter().map(|&r| u[r]).collect()),
        }
    }

    pub fn batch(&self, rows: &[usize]) -> Batch {
        let sub = self.subset(rows);
        Batch {
            num_fields: sub.num_fields(),
            ids: sub.ids,
            labels: sub.labels,
            user_ids: sub.user_ids,
        }
    }
}

/// Raw string table as read from CSV, before vocabulary encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub field_names: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub labels: Vec<f64>,
    pub groups: Option<Vec<String>>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, rows: &[usize]) -> RawTable {
        RawTable {
            field_names: self.field_names.clone(),
            rows: rows.iter().map(|&r| self.rows[r].clone()).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            groups: self
                .groups
                .as_ref()
                .map(|g| rows.iter().map(|&r| g[r].clone()).collect()),
        }
    }

    /// Maps tokens through `vocabs`; unseen tokens resolve to OOV.
    pub fn encode(&self, vocabs: &Arc<Vec<FieldVocab>>) -> Result<Dataset> {
        if vocabs.len() != self.field_names.len() || vocabs.iter().zip(&self.field_names).any(|(v, n)| v.name() != n) {
            return Err(Error::Data("table fields do not match the vocabulary fields".into()));
        }
        let ids = self
            .rows
            .iter()
            .flat_map(|row| row.iter().zip(vocabs.iter()).map(|(t, v)| v.encode(t)))
            .collect();
        let user_ids = self.groups.as_ref().map(|g| {
            let mut dense: HashMap<&str, u32> = HashMap::new();
            g.iter()
                .map(|k| {
                    let next = dense.len() as u32;
                    *dense.entry(k.as_str()).or_insert(next)
                })
                .collect()
        });
        Dataset::new(Arc::clone(vocabs), ids, self.labels.clone(), user_ids)
    }
}

/// One mini-batch; `ids` is `n×f` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub num_fields: usize,
    pub ids: Vec<u32>,
    pub labels: Vec<f64>,
    pub user_ids: Option<Vec<u32>>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn field_column(&self, field: usize) -> Vec<u32> {
        self.ids.iter().skip(field).step_by(self.num_fields).copied().collect()
    }
}

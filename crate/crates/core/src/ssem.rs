//! Embedding tables and the sample-selection embedding variants that turn one
//! batch into the `(h_es, h_hs)` inputs of the simple and complex encoders.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Batch;
use crate::diffcore::{xavier_init, Graph, NodeId, ParamId, ParamStore, Rng};
use crate::error::{Error, Result};
use crate::layers::Mlp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SsemKind {
    /// Separate tables per branch, the easy branch at half width.
    #[serde(rename = "SER")]
    Ser,
    /// One sigmoid gate splitting the shared embedding.
    #[serde(rename = "GM")]
    Gm,
    /// Two experts mixed by two softmax gates.
    #[serde(rename = "MMoE")]
    Mmoe,
    /// Both branches see the same embedding.
    Share,
}

impl SsemKind {
    pub const ALL: [SsemKind; 4] = [Self::Ser, Self::Gm, Self::Mmoe, Self::Share];
}

impl FromStr for SsemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ser" => Ok(Self::Ser),
            "gm" => Ok(Self::Gm),
            "mmoe" | "moe" => Ok(Self::Mmoe),
            "share" => Ok(Self::Share),
            other => Err(format!("unknown ssem variant `{other}` (SER, GM, MMoE, Share)")),
        }
    }
}

impl fmt::Display for SsemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ser => "SER",
            Self::Gm => "GM",
            Self::Mmoe => "MMoE",
            Self::Share => "Share",
        })
    }
}

/// One `vocab×dim` table per field.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub tables: Vec<ParamId>,
    pub dim: usize,
}

impl EmbeddingTable {
    pub fn new(store: &mut ParamStore, rng: &mut Rng, name: &str, field_sizes: &[usize], dim: usize) -> Self {
        let tables = field_sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| store.add(format!("{name}.field{i}"), xavier_init(s, dim, rng)))
            .collect();
        Self { tables, dim }
    }

    pub fn width(&self) -> usize {
        self.tables.len() * self.dim
    }

    /// Per-field lookup concatenated in field order: `n×(f·dim)`.
    pub fn embed(&self, g: &mut Graph<'_>, batch: &Batch) -> Result<NodeId> {
        if batch.num_fields != self.tables.len() {
            return Err(Error::dim(
                "embed",
                format!("batch has {} fields, table has {}", batch.num_fields, self.tables.len()),
            ));
        }
        let parts = self
            .tables
            .iter()
            .enumerate()
            .map(|(i, &t)| g.gather_rows(t, batch.field_column(i)))
            .collect::<Result<Vec<_>>>()?;
        g.concat(&parts)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SsemOutput {
    /// Shared embedding, absent under SER.
    pub h: Option<NodeId>,
    pub h_es: NodeId,
    pub h_hs: NodeId,
    /// GM: `n×1` gate; MMoE: `n×4` as `[g11, g12, g21, g22]`.
    pub gate_values: Option<NodeId>,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Ssem {
    Share {
        table: EmbeddingTable,
    },
    Ser {
        easy: EmbeddingTable,
        hard: EmbeddingTable,
    },
    Gm {
        table: EmbeddingTable,
        gate: Mlp,
    },
    Mmoe {
        table: EmbeddingTable,
        experts: [Mlp; 2],
        gates: [Mlp; 2],
    },
}

/// `gate[:,0]·m1 + gate[:,1]·m2`, row by row.
pub fn convex_mix(g: &mut Graph<'_>, gate: NodeId, m1: NodeId, m2: NodeId) -> Result<NodeId> {
    let g1 = g.slice_cols(gate, 0, 1)?;
    let g2 = g.slice_cols(gate, 1, 1)?;
    let a = g.mul_col(m1, g1)?;
    let b = g.mul_col(m2, g2)?;
    g.add(a, b)
}

pub fn ssem_share(g: &mut Graph<'_>, table: &EmbeddingTable, batch: &Batch) -> Result<SsemOutput> {
    let h = table.embed(g, batch)?;
    Ok(SsemOutput {
        h: Some(h),
        h_es: h,
        h_hs: h,
        gate_values: None,
    })
}

pub fn ssem_ser(g: &mut Graph<'_>, easy: &EmbeddingTable, hard: &EmbeddingTable, batch: &Batch) -> Result<SsemOutput> {
    let h_es = easy.embed(g, batch)?;
    let h_hs = hard.embed(g, batch)?;
    Ok(SsemOutput {
        h: None,
        h_es,
        h_hs,
        gate_values: None,
    })
}

/// `h_es = g·h`, `h_hs = h − h_es` with `g = σ(Gate(h))` per sample.
pub fn ssem_gm(g: &mut Graph<'_>, table: &EmbeddingTable, gate: &Mlp, batch: &Batch) -> Result<SsemOutput> {
    let h = table.embed(g, batch)?;
    let logit = gate.forward(g, h)?;
    let gv = g.sigmoid(logit)?;
    let h_es = g.mul_col(h, gv)?;
    // h − g·h keeps h_es + h_hs == h in floating point
    let neg = g.scale(h_es, -1.0)?;
    let h_hs = g.add(h, neg)?;
    Ok(SsemOutput {
        h: Some(h),
        h_es,
        h_hs,
        gate_values: Some(gv),
    })
}

pub fn ssem_mmoe(
    g: &mut Graph<'_>,
    table: &EmbeddingTable,
    experts: &[Mlp; 2],
    gates: &[Mlp; 2],
    batch: &Batch,
) -> Result<SsemOutput> {
    let h = table.embed(g, batch)?;
    let l1 = gates[0].forward(g, h)?;
    let g1 = g.softmax_rows(l1)?;
    let l2 = gates[1].forward(g, h)?;
    let g2 = g.softmax_rows(l2)?;
    let m1 = experts[0].forward(g, h)?;
    let m2 = experts[1].forward(g, h)?;
    let h_es = convex_mix(g, g1, m1, m2)?;
    let h_hs = convex_mix(g, g2, m1, m2)?;
    let gate_values = g.concat(&[g1, g2])?;
    Ok(SsemOutput {
        h: Some(h),
        h_es,
        h_hs,
        gate_values: Some(gate_values),
    })
}

impl Ssem {
    pub fn new(
        kind: SsemKind,
        store: &mut ParamStore,
        rng: &mut Rng,
        field_sizes: &[usize],
        dim: usize,
        expert_hidden: &[usize],
        gate_hidden: &[usize],
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("embedding_dim", "must be positive"));
        }
        let width = field_sizes.len() * dim;
        Ok(match kind {
            SsemKind::Share => Ssem::Share {
                table: EmbeddingTable::new(store, rng, "embedding", field_sizes, dim),
            },
            SsemKind::Ser => {
                if !dim.is_multiple_of(2) {
                    return Err(Error::config(
                        "embedding_dim",
                        format!("SER needs an even dimension, got {dim}"),
                    ));
                }
                Ssem::Ser {
                    easy: EmbeddingTable::new(store, rng, "embedding_es", field_sizes, dim / 2),
                    hard: EmbeddingTable::new(store, rng, "embedding_hs", field_sizes, dim),
                }
            }
            SsemKind::Gm => Ssem::Gm {
                table: EmbeddingTable::new(store, rng, "embedding", field_sizes, dim),
                gate: Mlp::new(store, rng, "ssem.gate", width, gate_hidden, Some(1)),
            },
            SsemKind::Mmoe => Ssem::Mmoe {
                table: EmbeddingTable::new(store, rng, "embedding", field_sizes, dim),
                experts: [
                    Mlp::new(store, rng, "ssem.expert0", width, expert_hidden, Some(width)),
                    Mlp::new(store, rng, "ssem.expert1", width, expert_hidden, Some(width)),
                ],
                gates: [
                    Mlp::new(store, rng, "ssem.gate0", width, gate_hidden, Some(2)),
                    Mlp::new(store, rng, "ssem.gate1", width, gate_hidden, Some(2)),
                ],
            },
        })
    }

    pub fn kind(&self) -> SsemKind {
        match self {
            Ssem::Share { .. } => SsemKind::Share,
            Ssem::Ser { .. } => SsemKind::Ser,
            Ssem::Gm { .. } => SsemKind::Gm,
            Ssem::Mmoe { .. } => SsemKind::Mmoe,
        }
    }

    /// Widths of `(h_es, h_hs)`.
    pub fn output_widths(&self) -> (usize, usize) {
        match self {
            Ssem::Ser { easy, hard } => (easy.width(), hard.width()),
            Ssem::Share { table } | Ssem::Gm { table, .. } | Ssem::Mmoe { table, .. } => (table.width(), table.width()),
        }
    }

    pub fn forward(&self, g: &mut Graph<'_>, batch: &Batch) -> Result<SsemOutput> {
        match self {
            Ssem::Share { table } => ssem_share(g, table, batch),
            Ssem::Ser { easy, hard } => ssem_ser(g, easy, hard, batch),
            Ssem::Gm { table, gate } => ssem_gm(g, table, gate, batch),
            Ssem::Mmoe { table, experts, gates } => ssem_mmoe(g, table, experts, gates, batch),
        }
    }
}

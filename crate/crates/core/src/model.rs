//! The assembled two-branch model: embedding selection, encoders and fusion.

use serde::{Deserialize, Serialize};

use crate::data::{batches, Batch, BatchOrder, Dataset};
use crate::diffcore::{Graph, ParamStore, Rng};
use crate::encoders::{default_configs, validate_depths, EncoderOutput, MlpEncoder};
use crate::error::{Error, Result};
use crate::fusion::{DfmKind, Fusion, FusionMode, FusionOutput};
use crate::ssem::{Ssem, SsemKind, SsemOutput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub embedding_dim: usize,
    pub ssem: SsemKind,
    pub dfm: DfmKind,
    pub simple_hidden: Vec<usize>,
    pub complex_hidden: Vec<usize>,
    pub expert_hidden: Vec<usize>,
    pub gate_hidden: Vec<usize>,
    pub head_bias: bool,
    pub tau: f64,
}

impl Default for ArchConfig {
    fn default() -> Self {
        let (simple_hidden, complex_hidden) = default_configs();
        Self {
            embedding_dim: 16,
            ssem: SsemKind::Ser,
            dfm: DfmKind::Wsf,
            simple_hidden,
            complex_hidden,
            expert_hidden: vec![400, 200],
            gate_hidden: vec![400, 100],
            head_bias: false,
            tau: 1.0,
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 {
            return Err(Error::config("embedding_dim", "must be positive"));
        }
        if self.ssem == SsemKind::Ser && !self.embedding_dim.is_multiple_of(2) {
            return Err(Error::config(
                "embedding_dim",
                format!("SER needs an even dimension, got {}", self.embedding_dim),
            ));
        }
        validate_depths(&self.simple_hidden, &self.complex_hidden)?;
        if self.expert_hidden.iter().chain(&self.gate_hidden).any(|&w| w == 0) {
            return Err(Error::config("expert_hidden", "layer widths must be positive"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::config("tau", format!("must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Graph nodes produced by one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct ForwardTrace {
    pub ssem: SsemOutput,
    pub simple: EncoderOutput,
    pub complex: EncoderOutput,
    pub fusion: FusionOutput,
}

#[derive(Debug, Clone)]
pub struct Tf4Ctr {
    pub arch: ArchConfig,
    pub field_sizes: Vec<usize>,
    pub params: ParamStore,
    pub ssem: Ssem,
    pub simple: MlpEncoder,
    pub complex: MlpEncoder,
    pub fusion: Fusion,
}

impl Tf4Ctr {
    pub fn new(arch: ArchConfig, field_sizes: &[usize], seed: u64) -> Result<Self> {
        arch.validate()?;
        if field_sizes.is_empty() {
            return Err(Error::Data("dataset has no feature fields".into()));
        }
        let mut params = ParamStore::new();
        let mut rng = Rng::new(seed).substream("init");
        let ssem = Ssem::new(
            arch.ssem,
            &mut params,
            &mut rng,
            field_sizes,
            arch.embedding_dim,
            &arch.expert_hidden,
            &arch.gate_hidden,
        )?;
        let (w_es, w_hs) = ssem.output_widths();
        let simple = MlpEncoder::new(
            &mut params,
            &mut rng,
            "simple",
            w_es,
            &arch.simple_hidden,
            arch.head_bias,
        );
        let complex = MlpEncoder::new(
            &mut params,
            &mut rng,
            "complex",
            w_hs,
            &arch.complex_hidden,
            arch.head_bias,
        );
        let fusion = Fusion::new(
            arch.dfm,
            &mut params,
            &mut rng,
            simple.out_dim(),
            complex.out_dim(),
            arch.tau,
            &arch.expert_hidden,
            &arch.gate_hidden,
        )?;
        Ok(Self {
            arch,
            field_sizes: field_sizes.to_vec(),
            params,
            ssem,
            simple,
            complex,
            fusion,
        })
    }

    pub fn num_params(&self) -> usize {
        self.params.num_scalars()
    }

    pub fn forward(&self, g: &mut Graph<'_>, batch: &Batch, mode: FusionMode<'_>) -> Result<ForwardTrace> {
        let ssem = self.ssem.forward(g, batch)?;
        let simple = self.simple.encode(g, ssem.h_es)?;
        let complex = self.complex.encode(g, ssem.h_hs)?;
        let fusion = self.fusion.forward(g, &simple, &complex, mode)?;
        Ok(ForwardTrace {
            ssem,
            simple,
            complex,
            fusion,
        })
    }

    /// Deterministic fused probabilities for one batch.
    pub fn predict_batch(&self, batch: &Batch) -> Result<Vec<f64>> {
        let mut g = Graph::new(&self.params);
        let trace = self.forward(&mut g, batch, FusionMode::Eval)?;
        Ok(g.value(trace.fusion.y).data().to_vec())
    }

    /// Deterministic fused probabilities for every row, in dataset order.
    pub fn predict(&self, ds: &Dataset, batch_size: usize) -> Result<Vec<f64>> {
        if ds.field_sizes() != self.field_sizes {
            return Err(Error::Data(format!(
                "dataset field sizes {:?} do not match model {:?}",
                ds.field_sizes(),
                self.field_sizes
            )));
        }
        let mut out = Vec::with_capacity(ds.len());
        for batch in batches(ds, batch_size, BatchOrder::Sequential)? {
            out.extend(self.predict_batch(&batch)?);
        }
        Ok(out)
    }
}

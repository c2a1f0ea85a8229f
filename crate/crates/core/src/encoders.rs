//! Simple and complex MLP encoders, each ending in its own logit head.

use crate::diffcore::{Graph, NodeId, ParamStore, Rng, PROB_EPS};
use crate::error::{Error, Result};
use crate::layers::{Linear, Mlp};

#[derive(Debug, Clone, Copy)]
pub struct EncoderOutput {
    /// Last hidden representation, `n×w_last`.
    pub hhat: NodeId,
    /// Logits, `n×1`.
    pub z: NodeId,
    /// Clamped probabilities, `n×1`.
    pub y: NodeId,
}

#[derive(Debug, Clone)]
pub struct MlpEncoder {
    pub mlp: Mlp,
    pub head: Linear,
}

/// `(simple, complex)` hidden widths.
pub fn default_configs() -> (Vec<usize>, Vec<usize>) {
    (vec![400], vec![400, 400, 400])
}

pub fn validate_depths(simple: &[usize], complex: &[usize]) -> Result<()> {
    if simple.iter().chain(complex).any(|&w| w == 0) {
        return Err(Error::config("hidden_units", "layer widths must be positive"));
    }
    if simple.len() >= complex.len() {
        return Err(Error::config(
            "hidden_units",
            format!(
                "simple encoder depth {} must be smaller than complex depth {}",
                simple.len(),
                complex.len()
            ),
        ));
    }
    Ok(())
}

impl MlpEncoder {
    pub fn new(
        store: &mut ParamStore,
        rng: &mut Rng,
        name: &str,
        in_dim: usize,
        hidden: &[usize],
        head_bias: bool,
    ) -> Self {
        let mlp = Mlp::new(store, rng, name, in_dim, hidden, None);
        let head = Linear::new(store, rng, &format!("{name}.head"), mlp.out_dim(), 1, head_bias);
        Self { mlp, head }
    }

    pub fn depth(&self) -> usize {
        self.mlp.depth()
    }

    pub fn in_dim(&self) -> usize {
        self.mlp.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.mlp.out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.mlp.num_params() + self.head.num_params()
    }

    pub fn encode(&self, g: &mut Graph<'_>, h: NodeId) -> Result<EncoderOutput> {
        let hhat = self.mlp.forward(g, h)?;
        let z = self.head.forward(g, hhat)?;
        let y = clamped_sigmoid(g, z)?;
        Ok(EncoderOutput { hhat, z, y })
    }
}

/// `σ(z)` clamped to `[ε, 1−ε]`.
pub fn clamped_sigmoid(g: &mut Graph<'_>, z: NodeId) -> Result<NodeId> {
    let p = g.sigmoid(z)?;
    g.clamp(p, PROB_EPS, 1.0 - PROB_EPS)
}

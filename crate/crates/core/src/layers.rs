//! Linear layers and relu MLPs shared by the encoders, gates and experts.

use crate::diffcore::{xavier_init, Graph, NodeId, ParamId, ParamStore, Rng, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new(store: &mut ParamStore, rng: &mut Rng, name: &str, in_dim: usize, out_dim: usize, bias: bool) -> Self {
        let weight = store.add(format!("{name}.weight"), xavier_init(in_dim, out_dim, rng));
        let bias = bias.then(|| store.add(format!("{name}.bias"), Tensor::zeros(1, out_dim)));
        Self {
            weight,
            bias,
            in_dim,
            out_dim,
        }
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: NodeId) -> Result<NodeId> {
        let w = g.param(self.weight);
        let y = g.matmul(x, w)?;
        match self.bias {
            Some(b) => {
                let b = g.param(b);
                g.add_row(y, b)
            }
            None => Ok(y),
        }
    }

    pub fn num_params(&self) -> usize {
        self.in_dim * self.out_dim + self.bias.map_or(0, |_| self.out_dim)
    }
}

/// Relu hidden layers followed by an optional linear output layer.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub hidden: Vec<Linear>,
    pub output: Option<Linear>,
    in_dim: usize,
}

impl Mlp {
    pub fn new(
        store: &mut ParamStore,
        rng: &mut Rng,
        name: &str,
        in_dim: usize,
        hidden: &[usize],
        output: Option<usize>,
    ) -> Self {
        let mut layers = Vec::with_capacity(hidden.len());
        let mut width = in_dim;
        for (i, &h) in hidden.iter().enumerate() {
            layers.push(Linear::new(store, rng, &format!("{name}.hidden{i}"), width, h, true));
            width = h;
        }
        let output = output.map(|o| Linear::new(store, rng, &format!("{name}.out"), width, o, true));
        Self {
            hidden: layers,
            output,
            in_dim,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        match (&self.output, self.hidden.last()) {
            (Some(o), _) => o.out_dim,
            (None, Some(h)) => h.out_dim,
            (None, None) => self.in_dim,
        }
    }

    /// Number of hidden layers.
    pub fn depth(&self) -> usize {
        self.hidden.len()
    }

    pub fn num_params(&self) -> usize {
        self.hidden
            .iter()
            .chain(self.output.iter())
            .map(Linear::num_params)
            .sum()
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: NodeId) -> Result<NodeId> {
        let width = g.value(x).cols();
        if width != self.in_dim {
            return Err(Error::config(
                "input width",
                format!("MLP expects width {}, got {width}", self.in_dim),
            ));
        }
        let mut h = x;
        for layer in &self.hidden {
            let a = layer.forward(g, h)?;
            h = g.relu(a)?;
        }
        match &self.output {
            Some(o) => o.forward(g, h),
            None => Ok(h),
        }
    }
}

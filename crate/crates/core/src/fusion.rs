//! Fusion of the two encoder outputs into the final prediction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diffcore::{Graph, NodeId, ParamId, ParamStore, Rng, Tensor};
use crate::encoders::{clamped_sigmoid, EncoderOutput};
use crate::error::{Error, Result};
use crate::layers::{Linear, Mlp};
use crate::ssem::convex_mix;

/// Floor added to the softplus projection before taking its log.
pub const VF_PI_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DfmKind {
    #[serde(rename = "WSF")]
    Wsf,
    #[serde(rename = "VF")]
    Vf,
    #[serde(rename = "CF")]
    Cf,
    #[serde(rename = "MoEF")]
    Moef,
    Sum,
}

impl DfmKind {
    pub const ALL: [DfmKind; 5] = [Self::Wsf, Self::Vf, Self::Cf, Self::Moef, Self::Sum];
}

impl FromStr for DfmKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wsf" => Ok(Self::Wsf),
            "vf" => Ok(Self::Vf),
            "cf" => Ok(Self::Cf),
            "moef" => Ok(Self::Moef),
            "sum" => Ok(Self::Sum),
            other => Err(format!("unknown fusion variant `{other}` (WSF, VF, CF, MoEF, Sum)")),
        }
    }
}

impl fmt::Display for DfmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Wsf => "WSF",
            Self::Vf => "VF",
            Self::Cf => "CF",
            Self::Moef => "MoEF",
            Self::Sum => "Sum",
        })
    }
}

/// Training draws Gumbel noise from the given stream; evaluation uses none.
pub enum FusionMode<'r> {
    Train(&'r mut Rng),
    Eval,
}

#[derive(Debug, Clone, Copy)]
pub enum FusionDiag {
    None,
    Wsf {
        w_s: NodeId,
        w_c: NodeId,
    },
    /// `n×2` selection weights `(p_s, p_c)`.
    Vf {
        p: NodeId,
    },
    /// `n×2` gate and the two `n×1` expert outputs.
    Moef {
        gate: NodeId,
        m1: NodeId,
        m2: NodeId,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct FusionOutput {
    pub logit: NodeId,
    pub y: NodeId,
    pub diag: FusionDiag,
}

#[derive(Debug, Clone)]
pub enum Fusion {
    Sum,
    Wsf { w_s: ParamId, w_c: ParamId },
    Vf { proj_es: Linear, proj_hs: Linear, tau: f64 },
    Cf { linear: Linear },
    Moef { gate: Mlp, experts: [Mlp; 2] },
}

fn finish(g: &mut Graph<'_>, logit: NodeId, diag: FusionDiag) -> Result<FusionOutput> {
    let y = clamped_sigmoid(g, logit)?;
    Ok(FusionOutput { logit, y, diag })
}

pub fn fuse_sum(g: &mut Graph<'_>, z_s: NodeId, z_c: NodeId) -> Result<FusionOutput> {
    let logit = g.add(z_s, z_c)?;
    finish(g, logit, FusionDiag::None)
}

pub fn fuse_wsf(g: &mut Graph<'_>, z_s: NodeId, z_c: NodeId, w_s: ParamId, w_c: ParamId) -> Result<FusionOutput> {
    let ws = g.param(w_s);
    let wc = g.param(w_c);
    let a = g.mul(ws, z_s)?;
    let b = g.mul(wc, z_c)?;
    let logit = g.add(a, b)?;
    finish(g, logit, FusionDiag::Wsf { w_s: ws, w_c: wc })
}

#[allow(clippy::too_many_arguments)]
pub fn fuse_vf(
    g: &mut Graph<'_>,
    hhat_es: NodeId,
    hhat_hs: NodeId,
    z_s: NodeId,
    z_c: NodeId,
    proj_es: &Linear,
    proj_hs: &Linear,
    tau: f64,
    noise: Option<&mut Rng>,
) -> Result<FusionOutput> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::config("tau", format!("must be positive, got {tau}")));
    }
    let log_pi = |g: &mut Graph<'_>, h: NodeId, proj: &Linear| -> Result<NodeId> {
        let a = proj.forward(g, h)?;
        let sp = g.softplus(a)?;
        let pi = g.add_const(sp, VF_PI_EPS)?;
        g.log(pi)
    };
    let ls = log_pi(g, hhat_es, proj_es)?;
    let lc = log_pi(g, hhat_hs, proj_hs)?;
    let mut scores = g.concat(&[ls, lc])?;
    if let Some(rng) = noise {
        let n = g.value(scores).rows();
        let gumbel = Tensor::new(n, 2, (0..2 * n).map(|_| rng.gumbel()).collect())?;
        let gn = g.input(gumbel)?;
        scores = g.add(scores, gn)?;
    }
    let scaled = g.scale(scores, 1.0 / tau)?;
    let p = g.softmax_rows(scaled)?;
    let logit = convex_mix(g, p, z_s, z_c)?;
    finish(g, logit, FusionDiag::Vf { p })
}

pub fn fuse_cf(g: &mut Graph<'_>, hhat_es: NodeId, hhat_hs: NodeId, linear: &Linear) -> Result<FusionOutput> {
    let width = g.value(hhat_es).cols() + g.value(hhat_hs).cols();
    if width != linear.in_dim {
        return Err(Error::config(
            "input width",
            format!("CF expects width {}, got {width}", linear.in_dim),
        ));
    }
    let cat = g.concat(&[hhat_es, hhat_hs])?;
    let logit = linear.forward(g, cat)?;
    finish(g, logit, FusionDiag::None)
}

pub fn fuse_moef(
    g: &mut Graph<'_>,
    hhat_es: NodeId,
    hhat_hs: NodeId,
    gate: &Mlp,
    experts: &[Mlp; 2],
) -> Result<FusionOutput> {
    let cat = g.concat(&[hhat_es, hhat_hs])?;
    let gl = gate.forward(g, cat)?;
    let gv = g.softmax_rows(gl)?;
    let m1 = experts[0].forward(g, cat)?;
    let m2 = experts[1].forward(g, cat)?;
    let logit = convex_mix(g, gv, m1, m2)?;
    finish(g, logit, FusionDiag::Moef { gate: gv, m1, m2 })
}

impl Fusion {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: DfmKind,
        store: &mut ParamStore,
        rng: &mut Rng,
        simple_width: usize,
        complex_width: usize,
        tau: f64,
        expert_hidden: &[usize],
        gate_hidden: &[usize],
    ) -> Result<Self> {
        let cat = simple_width + complex_width;
        Ok(match kind {
            DfmKind::Sum => Fusion::Sum,
            DfmKind::Wsf => Fusion::Wsf {
                w_s: store.add("fusion.w_s", Tensor::scalar(0.5)),
                w_c: store.add("fusion.w_c", Tensor::scalar(0.5)),
            },
            DfmKind::Vf => {
                if !(tau > 0.0 && tau.is_finite()) {
                    return Err(Error::config("tau", format!("must be positive, got {tau}")));
                }
                Fusion::Vf {
                    proj_es: Linear::new(store, rng, "fusion.proj_es", simple_width, 1, false),
                    proj_hs: Linear::new(store, rng, "fusion.proj_hs", complex_width, 1, false),
                    tau,
                }
            }
            DfmKind::Cf => Fusion::Cf {
                linear: Linear::new(store, rng, "fusion.cf", cat, 1, true),
            },
            DfmKind::Moef => Fusion::Moef {
                gate: Mlp::new(store, rng, "fusion.gate", cat, gate_hidden, Some(2)),
                experts: [
                    Mlp::new(store, rng, "fusion.expert0", cat, expert_hidden, Some(1)),
                    Mlp::new(store, rng, "fusion.expert1", cat, expert_hidden, Some(1)),
                ],
            },
        })
    }

    pub fn kind(&self) -> DfmKind {
        match self {
            Fusion::Sum => DfmKind::Sum,
            Fusion::Wsf { .. } => DfmKind::Wsf,
            Fusion::Vf { .. } => DfmKind::Vf,
            Fusion::Cf { .. } => DfmKind::Cf,
            Fusion::Moef { .. } => DfmKind::Moef,
        }
    }

    pub fn forward(
        &self,
        g: &mut Graph<'_>,
        simple: &EncoderOutput,
        complex: &EncoderOutput,
        mode: FusionMode<'_>,
    ) -> Result<FusionOutput> {
        match self {
            Fusion::Sum => fuse_sum(g, simple.z, complex.z),
            Fusion::Wsf { w_s, w_c } => fuse_wsf(g, simple.z, complex.z, *w_s, *w_c),
            Fusion::Vf { proj_es, proj_hs, tau } => {
                let noise = match mode {
                    FusionMode::Train(rng) => Some(rng),
                    FusionMode::Eval => None,
                };
                fuse_vf(
                    g,
                    simple.hhat,
                    complex.hhat,
                    simple.z,
                    complex.z,
                    proj_es,
                    proj_hs,
                    *tau,
                    noise,
                )
            }
            Fusion::Cf { linear } => fuse_cf(g, simple.hhat, complex.hhat, linear),
            Fusion::Moef { gate, experts } => fuse_moef(g, simple.hhat, complex.hhat, gate, experts),
        }
    }
}

//! CTR log loss, twin focus loss, focal loss and the total objective.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diffcore::{Gradients, Graph, NodeId, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Log loss on the fused prediction only.
    LogLoss,
    /// Log loss plus the twin focus auxiliary term.
    Tf,
    /// Focal loss on the fused prediction only.
    Focal,
}

impl FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "logloss" | "bce" | "ctr" => Ok(Self::LogLoss),
            "tf" => Ok(Self::Tf),
            "focal" => Ok(Self::Focal),
            other => Err(format!("unknown loss `{other}` (logloss, tf, focal)")),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LogLoss => "logloss",
            Self::Tf => "tf",
            Self::Focal => "focal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfHyper {
    pub alpha: f64,
    pub c: f64,
    pub gamma: f64,
    pub focal_gamma: f64,
}

impl Default for TfHyper {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            c: 0.5,
            gamma: 2.0,
            focal_gamma: 2.0,
        }
    }
}

impl TfHyper {
    pub fn m(&self) -> f64 {
        2.0 - self.c
    }

    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.alpha) {
            return Err(Error::config("alpha", format!("{} outside [0, 1]", self.alpha)));
        }
        if !unit.contains(&self.c) {
            return Err(Error::config("c", format!("{} outside [0, 1]", self.c)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("gamma", format!("{} must be non-negative", self.gamma)));
        }
        if !(self.focal_gamma >= 0.0 && self.focal_gamma.is_finite()) {
            return Err(Error::config(
                "focal_gamma",
                format!("{} must be non-negative", self.focal_gamma),
            ));
        }
        Ok(())
    }
}

fn check_labels(n: usize, labels: &[f64]) -> Result<()> {
    if labels.len() != n {
        return Err(Error::Data(format!("{} labels for {n} predictions", labels.len())));
    }
    if let Some(bad) = labels.iter().find(|&&y| y != 0.0 && y != 1.0) {
        return Err(Error::Data(format!("label {bad} is not 0 or 1")));
    }
    Ok(())
}

/// `p = ŷ` for positives and `1 − ŷ` for negatives.
pub fn label_aligned(g: &mut Graph<'_>, y_hat: NodeId, labels: &[f64]) -> Result<NodeId> {
    let v = g.value(y_hat);
    if v.cols() != 1 {
        return Err(Error::dim(
            "label_aligned",
            format!("expected n×1, got {:?}", v.shape()),
        ));
    }
    check_labels(v.rows(), labels)?;
    let sign = g.input(Tensor::column(labels.iter().map(|y| 2.0 * y - 1.0).collect()))?;
    let offset = g.input(Tensor::column(labels.iter().map(|y| 1.0 - y).collect()))?;
    let signed = g.mul(y_hat, sign)?;
    g.add(signed, offset)
}

/// `−mean(factor · log p)`, or plain `−mean(log p)` without a factor.
fn weighted_nll(g: &mut Graph<'_>, p: NodeId, factor: Option<NodeId>) -> Result<NodeId> {
    let lp = g.log(p)?;
    let terms = match factor {
        Some(f) => g.mul(f, lp)?,
        None => lp,
    };
    let m = g.mean(terms)?;
    g.scale(m, -1.0)
}

pub fn loss_ctr(g: &mut Graph<'_>, y_hat: NodeId, labels: &[f64]) -> Result<NodeId> {
    let p = label_aligned(g, y_hat, labels)?;
    weighted_nll(g, p, None)
}

#[derive(Debug, Clone, Copy)]
pub struct TfLossNodes {
    pub simple: NodeId,
    pub complex: NodeId,
    pub tf: NodeId,
}

pub fn loss_tf(g: &mut Graph<'_>, y_s: NodeId, y_c: NodeId, labels: &[f64], hyper: &TfHyper) -> Result<TfLossNodes> {
    hyper.validate()?;
    let ps = label_aligned(g, y_s, labels)?;
    let fs = g.add_const(ps, hyper.c)?;
    let fs = g.pow_scalar(fs, hyper.gamma)?;
    let simple = weighted_nll(g, ps, Some(fs))?;

    let pc = label_aligned(g, y_c, labels)?;
    let fc = g.rsub_const(hyper.m(), pc)?;
    let fc = g.pow_scalar(fc, hyper.gamma)?;
    let complex = weighted_nll(g, pc, Some(fc))?;

    let a = g.scale(simple, hyper.alpha)?;
    let b = g.scale(complex, 1.0 - hyper.alpha)?;
    let tf = g.add(a, b)?;
    Ok(TfLossNodes { simple, complex, tf })
}

pub fn loss_focal(g: &mut Graph<'_>, y_hat: NodeId, labels: &[f64], gamma_f: f64) -> Result<NodeId> {
    if !(gamma_f >= 0.0 && gamma_f.is_finite()) {
        return Err(Error::config("focal_gamma", format!("{gamma_f} must be non-negative")));
    }
    let p = label_aligned(g, y_hat, labels)?;
    let f = g.rsub_const(1.0, p)?;
    let f = g.pow_scalar(f, gamma_f)?;
    weighted_nll(g, p, Some(f))
}

/// Nodes of the full training objective for one batch.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveNodes {
    /// Main loss on the fused prediction (log loss or focal).
    pub ctr: NodeId,
    pub tf: Option<TfLossNodes>,
    pub total: NodeId,
}

/// `L_total = L_main + L_TF`, where the twin focus term only exists for `LossKind::Tf`.
pub fn objective(
    g: &mut Graph<'_>,
    kind: LossKind,
    y_fused: NodeId,
    y_s: NodeId,
    y_c: NodeId,
    labels: &[f64],
    hyper: &TfHyper,
) -> Result<ObjectiveNodes> {
    let ctr = match kind {
        LossKind::Focal => loss_focal(g, y_fused, labels, hyper.focal_gamma)?,
        LossKind::LogLoss | LossKind::Tf => loss_ctr(g, y_fused, labels)?,
    };
    if kind != LossKind::Tf {
        return Ok(ObjectiveNodes {
            ctr,
            tf: None,
            total: ctr,
        });
    }
    let tf = loss_tf(g, y_s, y_c, labels, hyper)?;
    let total = g.add(ctr, tf.tf)?;
    Ok(ObjectiveNodes {
        ctr,
        tf: Some(tf),
        total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossReport {
    pub loss_ctr: f64,
    pub loss_simple: f64,
    pub loss_complex: f64,
    pub loss_tf: f64,
    pub loss_total: f64,
    pub grad_norm_zs: f64,
    pub grad_norm_zc: f64,
}

impl LossReport {
    pub fn from_nodes(g: &Graph<'_>, obj: &ObjectiveNodes, grads: &Gradients, z_s: NodeId, z_c: NodeId) -> Self {
        let (grad_norm_zs, grad_norm_zc) = grad_diag(grads, z_s, z_c);
        let (loss_simple, loss_complex, loss_tf) = match obj.tf {
            Some(t) => (
                g.value(t.simple).item(),
                g.value(t.complex).item(),
                g.value(t.tf).item(),
            ),
            None => (0.0, 0.0, 0.0),
        };
        Self {
            loss_ctr: g.value(obj.ctr).item(),
            loss_simple,
            loss_complex,
            loss_tf,
            loss_total: g.value(obj.total).item(),
            grad_norm_zs,
            grad_norm_zc,
        }
    }
}

/// Per-sample gradients of a batch-mean loss are `n` times the node gradient,
/// so their mean magnitude is the sum of magnitudes.
fn per_sample_mean_abs(t: Option<&Tensor>) -> f64 {
    t.map_or(0.0, |t| t.data().iter().map(|v| v.abs()).sum())
}

/// Batch-mean per-sample `|∂ℓ/∂z|` for the simple and complex logits.
pub fn grad_diag(grads: &Gradients, z_s: NodeId, z_c: NodeId) -> (f64, f64) {
    (
        per_sample_mean_abs(grads.node(z_s)),
        per_sample_mean_abs(grads.node(z_c)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::ParamStore;

    fn col(g: &mut Graph<'_>, v: &[f64]) -> NodeId {
        g.input(Tensor::column(v.to_vec())).unwrap()
    }

    fn hyper(c: f64, gamma: f64) -> TfHyper {
        TfHyper {
            alpha: 0.5,
            c,
            gamma,
            focal_gamma: 2.0,
        }
    }

    #[test]
    fn ctr_values() {
        let s = ParamStore::new();
        let mut g = Graph::new(&s);
        let y = col(&mut g, &[0.5, 0.5, 0.5]);
        let l = loss_ctr(&mut g, y, &[1.0, 0.0, 1.0]).unwrap();
        assert!((g.value(l).item() - std::f64::consts::LN_2).abs() < 1e-15);
        let y = col(&mut g, &[0.9]);
        let l = loss_ctr(&mut g, y, &[1.0]).unwrap();
        assert!((g.value(l).item() - 0.105_360_515_657_826_3).abs() < 1e-12);
    }

    #[test]
    fn ctr_rejects_bad_labels() {
        let s = ParamStore::new();
        let mut g = Graph::new(&s);
        let y = col(&mut g, &[0.5]);
        assert!(matches!(loss_ctr(&mut g, y, &[0.5]), Err(Error::Data(_))));
    }

    #[test]
    fn tf_values() {
        let s = ParamStore::new();
        let mut g = Graph::new(&s);
        let half = col(&mut g, &[0.5]);
        let t = loss_tf(&mut g, half, half, &[1.0], &hyper(0.5, 2.0)).unwrap();
        assert!((g.value(t.simple).item() - std::f64::consts::LN_2).abs() < 1e-15);

        let ys = col(&mut g, &[0.9]);
        let yc = col(&mut g, &[0.1]);
        let t = loss_tf(&mut g, ys, yc, &[1.0], &hyper(0.5, 1.0)).unwrap();
        assert!((g.value(t.simple).item() - 1.4 * -(0.9f64.ln())).abs() < 1e-12);
        assert!((g.value(t.complex).item() - 1.4 * -(0.1f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn focal_values() {
        let s = ParamStore::new();
        let mut g = Graph::new(&s);
        let y = col(&mut g, &[0.9]);
        let l = loss_focal(&mut g, y, &[1.0], 2.0).unwrap();
        let expect = (0.1f64).powi(2) * -(0.9f64.ln());
        assert!((g.value(l).item() - expect).abs() < 1e-12);
    }

    #[test]
    fn hyper_validation() {
        assert!(hyper(1.5, 1.0).validate().is_err());
        assert!(hyper(0.5, -1.0).validate().is_err());
        assert_eq!(hyper(0.3, 1.0).m() + 0.3, 2.0);
    }
}

use super::graph::{Graph, NodeId};
use super::params::{ParamId, ParamStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    pub eps: f64,
    pub tol: f64,
    /// Probe at most this many evenly spaced coordinates per parameter.
    pub max_probes_per_param: Option<usize>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            tol: 1e-5,
            max_probes_per_param: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    pub probes: usize,
    pub max_abs_err: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tol: f64,
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn max_abs_err(&self) -> f64 {
        self.params.iter().map(|p| p.max_abs_err).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.params.iter().all(|p| p.max_abs_err <= self.tol)
    }
}

fn probe_indices(len: usize, max: Option<usize>) -> Vec<usize> {
    match max {
        Some(m) if m < len => {
            let stride = len as f64 / m as f64;
            (0..m).map(|i| (i as f64 * stride) as usize).collect()
        }
        _ => (0..len).collect(),
    }
}

fn eval_scalar<F>(store: &ParamStore, f: &F) -> Result<f64>
where
    F: Fn(&mut Graph<'_>) -> Result<NodeId>,
{
    let mut g = Graph::new(store);
    let out = f(&mut g)?;
    let v = g.value(out);
    if !v.is_scalar() {
        return Err(Error::Argument(format!(
            "grad_check needs a scalar output, got {:?}",
            v.shape()
        )));
    }
    Ok(v.item())
}

/// Compares reverse-mode gradients of `f` against central differences.
///
/// `f` rebuilds the graph from the store on every call; the store is perturbed
/// in place and restored coordinate by coordinate.
pub fn grad_check<F>(
    store: &mut ParamStore,
    params: &[ParamId],
    f: F,
    opts: GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<'_>) -> Result<NodeId>,
{
    if opts.eps <= 0.0 {
        return Err(Error::Argument("eps must be positive".into()));
    }
    let grads = {
        let mut g = Graph::new(store);
        let out = f(&mut g)?;
        if !g.value(out).is_scalar() {
            return Err(Error::Argument(format!(
                "grad_check needs a scalar output, got {:?}",
                g.value(out).shape()
            )));
        }
        g.backward(out)?
    };

    let mut report = GradCheckReport {
        tol: opts.tol,
        params: Vec::with_capacity(params.len()),
    };
    for &pid in params {
        let len = store.value(pid).len();
        let analytic = grads.param(pid).map(|t| t.data().to_vec());
        let mut max_err: f64 = 0.0;
        let idx = probe_indices(len, opts.max_probes_per_param);
        for &k in &idx {
            let orig = store.value(pid).data()[k];
            store.value_mut(pid).data_mut()[k] = orig + opts.eps;
            let plus = eval_scalar(store, &f);
            store.value_mut(pid).data_mut()[k] = orig - opts.eps;
            let minus = eval_scalar(store, &f);
            store.value_mut(pid).data_mut()[k] = orig;
            let numeric = (plus? - minus?) / (2.0 * opts.eps);
            let a = analytic.as_ref().map_or(0.0, |d| d[k]);
            max_err = max_err.max((a - numeric).abs());
        }
        report.params.push(ParamCheck {
            name: store.name(pid).to_string(),
            probes: idx.len(),
            max_abs_err: max_err,
        });
    }
    Ok(report)
}

//! Tape of eagerly evaluated ops with a reverse-mode sweep.
//!
//! Nodes are appended in evaluation order, so the tape is already topologically
//! sorted and `backward` simply walks it from the loss node down to index 0.

use std::collections::HashMap;

use super::params::{ParamId, ParamStore};
use super::tensor::{gemm, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Derivative of a custom elementwise op, given the input and output value.
pub type ElementwiseDerivative = fn(x: f64, y: f64) -> f64;

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    MulCol(NodeId, NodeId),
    Scale(NodeId, f64),
    AddConst(NodeId),
    Relu(NodeId),
    Sigmoid(NodeId),
    Log(NodeId),
    Pow(NodeId, f64),
    Softplus(NodeId),
    Clamp(NodeId, f64, f64),
    Concat(Vec<NodeId>),
    SliceCols(NodeId, usize),
    SoftmaxRows(NodeId),
    Mean(NodeId),
    Sum(NodeId),
    Gather { table: ParamId, ids: Vec<u32> },
    Custom(NodeId, ElementwiseDerivative),
}

#[derive(Debug)]
struct Node {
    op: Op,
    // `None` for parameter leaves, whose value lives in the store.
    value: Option<Tensor>,
}

pub struct Graph<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: HashMap<ParamId, NodeId>,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl<'p> Graph<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Self {
            store,
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
        }
    }

    pub fn store(&self) -> &'p ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        let node = &self.nodes[id.0];
        match (&node.op, &node.value) {
            (Op::Param(pid), _) => self.store.value(*pid),
            (_, Some(v)) => v,
            (_, None) => unreachable!("non-parameter node without value"),
        }
    }

    fn push(&mut self, op: Op, value: Tensor, name: &'static str) -> Result<NodeId> {
        if !value.all_finite() {
            return Err(Error::NonFinite(name.to_string()));
        }
        self.nodes.push(Node { op, value: Some(value) });
        Ok(NodeId(self.nodes.len() - 1))
    }

    /// Constant leaf; receives a gradient but feeds no parameter.
    pub fn input(&mut self, value: Tensor) -> Result<NodeId> {
        self.push(Op::Input, value, "input")
    }

    pub fn param(&mut self, pid: ParamId) -> NodeId {
        if let Some(&id) = self.param_nodes.get(&pid) {
            return id;
        }
        self.nodes.push(Node {
            op: Op::Param(pid),
            value: None,
        });
        let id = NodeId(self.nodes.len() - 1);
        self.param_nodes.insert(pid, id);
        id
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let out = super::tensor::matmul(self.value(a), self.value(b))?;
        self.push(Op::MatMul(a, b), out, "matmul")
    }

    fn broadcast_binary(
        &self,
        name: &'static str,
        a: NodeId,
        b: NodeId,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() == vb.shape() {
            Ok(va.zip_map(vb, f))
        } else if va.is_scalar() {
            let s = va.item();
            Ok(vb.map(|x| f(s, x)))
        } else if vb.is_scalar() {
            let s = vb.item();
            Ok(va.map(|x| f(x, s)))
        } else {
            Err(Error::dim(
                name,
                format!("cannot broadcast {:?} with {:?}", va.shape(), vb.shape()),
            ))
        }
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let out = self.broadcast_binary("add", a, b, |x, y| x + y)?;
        self.push(Op::Add(a, b), out, "add")
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let out = self.broadcast_binary("mul", a, b, |x, y| x * y)?;
        self.push(Op::Mul(a, b), out, "mul")
    }

    /// `x[n×k] + b[1×k]`, the bias add of a linear layer.
    pub fn add_row(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        let (vx, vb) = (self.value(x), self.value(bias));
        if vb.rows() != 1 || vb.cols() != vx.cols() {
            return Err(Error::dim(
                "add_row",
                format!("{:?} + row {:?}", vx.shape(), vb.shape()),
            ));
        }
        let mut out = vx.clone();
        let k = vx.cols();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v += vb.data()[i % k];
        }
        self.push(Op::AddRow(x, bias), out, "add_row")
    }

    /// `x[n×k] * s[n×1]`: scales every row of `x` by its own scalar.
    pub fn mul_col(&mut self, x: NodeId, s: NodeId) -> Result<NodeId> {
        let (vx, vs) = (self.value(x), self.value(s));
        if vs.cols() != 1 || vs.rows() != vx.rows() {
            return Err(Error::dim(
                "mul_col",
                format!("{:?} * column {:?}", vx.shape(), vs.shape()),
            ));
        }
        let mut out = vx.clone();
        let k = vx.cols().max(1);
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v *= vs.data()[i / k];
        }
        self.push(Op::MulCol(x, s), out, "mul_col")
    }

    pub fn scale(&mut self, x: NodeId, k: f64) -> Result<NodeId> {
        let out = self.value(x).map(|v| v * k);
        self.push(Op::Scale(x, k), out, "scale")
    }

    pub fn add_const(&mut self, x: NodeId, c: f64) -> Result<NodeId> {
        let out = self.value(x).map(|v| v + c);
        self.push(Op::AddConst(x), out, "add_const")
    }

    /// `c - x`
    pub fn rsub_const(&mut self, c: f64, x: NodeId) -> Result<NodeId> {
        let neg = self.scale(x, -1.0)?;
        self.add_const(neg, c)
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        let out = self.value(x).map(|v| v.max(0.0));
        self.push(Op::Relu(x), out, "relu")
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        let out = self.value(x).map(sigmoid);
        self.push(Op::Sigmoid(x), out, "sigmoid")
    }

    pub fn log(&mut self, x: NodeId) -> Result<NodeId> {
        let vx = self.value(x);
        if let Some(bad) = vx.data().iter().find(|&&v| v <= 0.0) {
            return Err(Error::Domain {
                op: "log",
                detail: format!("non-positive input {bad}"),
            });
        }
        let out = vx.map(f64::ln);
        self.push(Op::Log(x), out, "log")
    }

    pub fn pow_scalar(&mut self, x: NodeId, gamma: f64) -> Result<NodeId> {
        let out = self.value(x).map(|v| v.powf(gamma));
        self.push(Op::Pow(x, gamma), out, "pow_scalar")
    }

    pub fn softplus(&mut self, x: NodeId) -> Result<NodeId> {
        let out = self.value(x).map(softplus);
        self.push(Op::Softplus(x), out, "softplus")
    }

    pub fn clamp(&mut self, x: NodeId, lo: f64, hi: f64) -> Result<NodeId> {
        let out = self.value(x).map(|v| v.clamp(lo, hi));
        self.push(Op::Clamp(x, lo, hi), out, "clamp")
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Argument("concat of an empty list".into()))?;
        let n = self.value(*first).rows();
        if parts.iter().any(|&p| self.value(p).rows() != n) {
            return Err(Error::dim("concat", "parts differ in leading dimension"));
        }
        let width: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(n * width);
        for r in 0..n {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        let out = Tensor::new(n, width, data)?;
        self.push(Op::Concat(parts.to_vec()), out, "concat")
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, width: usize) -> Result<NodeId> {
        let vx = self.value(x);
        if start + width > vx.cols() {
            return Err(Error::dim(
                "slice_cols",
                format!("columns {start}..{} of {}", start + width, vx.cols()),
            ));
        }
        let mut data = Vec::with_capacity(vx.rows() * width);
        for r in 0..vx.rows() {
            data.extend_from_slice(&vx.row(r)[start..start + width]);
        }
        let out = Tensor::new(vx.rows(), width, data)?;
        self.push(Op::SliceCols(x, start), out, "slice_cols")
    }

    pub fn softmax_rows(&mut self, x: NodeId) -> Result<NodeId> {
        let vx = self.value(x);
        if vx.cols() == 0 {
            return Err(Error::Argument("softmax over zero columns".into()));
        }
        let mut out = vx.clone();
        let k = vx.cols();
        for row in out.data_mut().chunks_mut(k) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                total += *v;
            }
            for v in row.iter_mut() {
                *v /= total;
            }
        }
        self.push(Op::SoftmaxRows(x), out, "softmax_rows")
    }

    pub fn mean(&mut self, x: NodeId) -> Result<NodeId> {
        let vx = self.value(x);
        if vx.is_empty() {
            return Err(Error::Argument("mean of an empty tensor".into()));
        }
        let out = Tensor::scalar(vx.sum() / vx.len() as f64);
        self.push(Op::Mean(x), out, "mean")
    }

    pub fn sum(&mut self, x: NodeId) -> Result<NodeId> {
        let out = Tensor::scalar(self.value(x).sum());
        self.push(Op::Sum(x), out, "sum")
    }

    /// Row lookup into a `vocab×dim` table parameter; output is `ids.len()×dim`.
    pub fn gather_rows(&mut self, table: ParamId, ids: Vec<u32>) -> Result<NodeId> {
        let t = self.store.value(table);
        let dim = t.cols();
        let mut data = Vec::with_capacity(ids.len() * dim);
        for &id in &ids {
            let id = id as usize;
            if id >= t.rows() {
                return Err(Error::Index {
                    what: format!("embedding table `{}`", self.store.name(table)),
                    index: id,
                    size: t.rows(),
                });
            }
            data.extend_from_slice(t.row(id));
        }
        let out = Tensor::new(ids.len(), dim, data)?;
        self.push(Op::Gather { table, ids }, out, "gather_rows")
    }

    /// Elementwise op supplied by the caller.
    pub fn custom_unary(
        &mut self,
        x: NodeId,
        forward: fn(f64) -> f64,
        derivative: ElementwiseDerivative,
    ) -> Result<NodeId> {
        let out = self.value(x).map(forward);
        self.push(Op::Custom(x, derivative), out, "custom_unary")
    }

    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        if !self.value(loss).is_scalar() {
            return Err(Error::Argument(format!(
                "backward from non-scalar node of shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut params: Vec<Option<Tensor>> = (0..self.store.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.backprop_node(i, &g, &mut grads, &mut params);
            grads[i] = Some(g);
        }
        Ok(Gradients { nodes: grads, params })
    }

    fn backprop_node(&self, i: usize, g: &Tensor, grads: &mut [Option<Tensor>], params: &mut [Option<Tensor>]) {
        let y = self.nodes[i].value.as_ref();
        match &self.nodes[i].op {
            Op::Input => {}
            Op::Param(pid) => accumulate(params, pid.0, g.clone()),
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let mut da = Tensor::zeros(va.rows(), va.cols());
                gemm(g, false, vb, true, 0.0, &mut da);
                let mut db = Tensor::zeros(vb.rows(), vb.cols());
                gemm(va, true, g, false, 0.0, &mut db);
                accumulate(grads, a.0, da);
                accumulate(grads, b.0, db);
            }
            Op::Add(a, b) => {
                let (sa, sb) = (self.value(*a).shape(), self.value(*b).shape());
                accumulate(grads, a.0, reduce_like(g, sa));
                accumulate(grads, b.0, reduce_like(g, sb));
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let da = broadcast_mul(g, vb);
                let db = broadcast_mul(g, va);
                accumulate(grads, a.0, reduce_like(&da, va.shape()));
                accumulate(grads, b.0, reduce_like(&db, vb.shape()));
            }
            Op::AddRow(x, b) => {
                let k = g.cols();
                let mut db = Tensor::zeros(1, k);
                for row in g.data().chunks(k.max(1)) {
                    for (acc, v) in db.data_mut().iter_mut().zip(row) {
                        *acc += v;
                    }
                }
                accumulate(grads, x.0, g.clone());
                accumulate(grads, b.0, db);
            }
            Op::MulCol(x, s) => {
                let (vx, vs) = (self.value(*x), self.value(*s));
                let k = vx.cols().max(1);
                let mut dx = g.clone();
                let mut ds = Tensor::zeros(vs.rows(), 1);
                for (r, (grow, xrow)) in g.data().chunks(k).zip(vx.data().chunks(k)).enumerate() {
                    ds.data_mut()[r] = grow.iter().zip(xrow).map(|(a, b)| a * b).sum();
                }
                for (i, v) in dx.data_mut().iter_mut().enumerate() {
                    *v *= vs.data()[i / k];
                }
                accumulate(grads, x.0, dx);
                accumulate(grads, s.0, ds);
            }
            Op::Scale(x, k) => accumulate(grads, x.0, g.map(|v| v * k)),
            Op::AddConst(x) => accumulate(grads, x.0, g.clone()),
            Op::Relu(x) => {
                let dx = g.zip_map(self.value(*x), |gv, xv| if xv > 0.0 { gv } else { 0.0 });
                accumulate(grads, x.0, dx);
            }
            Op::Sigmoid(x) => {
                let dx = g.zip_map(y.expect("value"), |gv, s| gv * s * (1.0 - s));
                accumulate(grads, x.0, dx);
            }
            Op::Log(x) => {
                let dx = g.zip_map(self.value(*x), |gv, xv| gv / xv);
                accumulate(grads, x.0, dx);
            }
            Op::Pow(x, gamma) => {
                let gamma = *gamma;
                let dx = g.zip_map(self.value(*x), |gv, xv| {
                    if gamma == 0.0 {
                        0.0
                    } else {
                        gv * gamma * xv.powf(gamma - 1.0)
                    }
                });
                accumulate(grads, x.0, dx);
            }
            Op::Softplus(x) => {
                let dx = g.zip_map(self.value(*x), |gv, xv| gv * sigmoid(xv));
                accumulate(grads, x.0, dx);
            }
            Op::Clamp(x, lo, hi) => {
                let (lo, hi) = (*lo, *hi);
                let dx = g.zip_map(self.value(*x), |gv, xv| if (lo..=hi).contains(&xv) { gv } else { 0.0 });
                accumulate(grads, x.0, dx);
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let w = self.value(*p).cols();
                    let mut data = Vec::with_capacity(g.rows() * w);
                    for r in 0..g.rows() {
                        data.extend_from_slice(&g.row(r)[offset..offset + w]);
                    }
                    offset += w;
                    accumulate(grads, p.0, Tensor::new(g.rows(), w, data).expect("shape"));
                }
            }
            Op::SliceCols(x, start) => {
                let vx = self.value(*x);
                let mut dx = Tensor::zeros(vx.rows(), vx.cols());
                for r in 0..g.rows() {
                    for c in 0..g.cols() {
                        dx.set(r, start + c, g.get(r, c));
                    }
                }
                accumulate(grads, x.0, dx);
            }
            Op::SoftmaxRows(x) => {
                let y = y.expect("value");
                let k = y.cols();
                let mut dx = Tensor::zeros(y.rows(), k);
                for ((out, yr), gr) in dx
                    .data_mut()
                    .chunks_mut(k)
                    .zip(y.data().chunks(k))
                    .zip(g.data().chunks(k))
                {
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for ((o, yv), gv) in out.iter_mut().zip(yr).zip(gr) {
                        *o = yv * (gv - dot);
                    }
                }
                accumulate(grads, x.0, dx);
            }
            Op::Mean(x) => {
                let vx = self.value(*x);
                let fill = g.item() / vx.len() as f64;
                accumulate(grads, x.0, Tensor::filled(vx.rows(), vx.cols(), fill));
            }
            Op::Sum(x) => {
                let vx = self.value(*x);
                accumulate(grads, x.0, Tensor::filled(vx.rows(), vx.cols(), g.item()));
            }
            Op::Gather { table, ids } => {
                let t = self.store.value(*table);
                let dim = t.cols();
                let slot = &mut params[table.0];
                let dt = slot.get_or_insert_with(|| Tensor::zeros(t.rows(), dim));
                for (r, &id) in ids.iter().enumerate() {
                    let dst = &mut dt.data_mut()[id as usize * dim..(id as usize + 1) * dim];
                    for (d, s) in dst.iter_mut().zip(g.row(r)) {
                        *d += s;
                    }
                }
            }
            Op::Custom(x, derivative) => {
                let y = y.expect("value");
                let vx = self.value(*x);
                let mut dx = g.clone();
                for ((d, &xv), &yv) in dx.data_mut().iter_mut().zip(vx.data()).zip(y.data()) {
                    *d *= derivative(xv, yv);
                }
                accumulate(grads, x.0, dx);
            }
        }
    }
}

fn accumulate(slots: &mut [Option<Tensor>], idx: usize, t: Tensor) {
    match &mut slots[idx] {
        Some(existing) => existing.add_assign(&t),
        slot @ None => *slot = Some(t),
    }
}

fn broadcast_mul(g: &Tensor, other: &Tensor) -> Tensor {
    if other.shape() == g.shape() {
        g.zip_map(other, |a, b| a * b)
    } else {
        let s = other.item();
        g.map(|a| a * s)
    }
}

/// Sums `g` down to `shape` when the operand was a broadcast scalar.
fn reduce_like(g: &Tensor, shape: [usize; 2]) -> Tensor {
    if g.shape() == shape {
        g.clone()
    } else {
        Tensor::scalar(g.sum())
    }
}

/// Result of one reverse sweep: gradients for every reached node and parameter.
#[derive(Debug)]
pub struct Gradients {
    nodes: Vec<Option<Tensor>>,
    params: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn node(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes.get(id.0).and_then(Option::as_ref)
    }

    pub fn param(&self, id: ParamId) -> Option<&Tensor> {
        self.params.get(id.0).and_then(Option::as_ref)
    }

    pub fn param_grads(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.params
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_ref().map(|g| (ParamId(i), g)))
    }
}

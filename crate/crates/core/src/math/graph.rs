//! Reverse-mode gradient tape over dense matrices.
//!
//! A [`Graph`] records every primitive applied during a forward pass;
//! [`Graph::backward`] replays the record in exact reverse order and
//! accumulates parameter gradients with the chain rule. One graph serves
//! one sequence window and is confined to a single thread.

use super::matrix::{Axis, MathError, Matrix};
use super::params::{ParamId, ParamSet};

/// Probabilities are clamped to this interval before any log.
pub const PROB_CLAMP: f64 = 1e-7;

/// Handle to a node (an intermediate value) on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op {
    Leaf { param: Option<ParamId> },
    MatMul(NodeId, NodeId),
    Transpose(NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Hadamard(NodeId, NodeId),
    AddRowBroadcast(NodeId, NodeId),
    Affine { x: NodeId, mul: f64 },
    Tanh(NodeId),
    Sigmoid(NodeId),
    Relu(NodeId),
    Softmax { x: NodeId, axis: Axis },
    MaskedSoftmaxRows { x: NodeId, mask: Vec<bool> },
    LayerNorm { x: NodeId, gamma: NodeId, beta: NodeId, eps: f64 },
    GatherRows { table: NodeId, indices: Vec<usize> },
    ConcatRows(NodeId, NodeId),
    ConcatCols(NodeId, NodeId),
    SliceCols { x: NodeId, from: usize },
    Pick { x: NodeId, row: usize, col: usize },
    StackRows(Vec<NodeId>),
    Sum(NodeId),
    AbsSum(NodeId),
    SqSum(NodeId),
    AddN(Vec<NodeId>),
    BceMean { probs: NodeId, targets: Vec<f64> },
}

struct Node {
    value: Matrix,
    op: Op,
}

/// The compute tape. Nodes are appended during the forward pass; the
/// adjoint pass visits them in reverse construction order.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    /// Scalar value of a 1x1 node.
    pub fn scalar(&self, id: NodeId) -> Result<f64, MathError> {
        let m = self.value(id);
        if m.shape() != (1, 1) {
            return Err(MathError::NonScalarLoss {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        Ok(m.get(0, 0))
    }

    fn push(&mut self, value: Matrix, op: Op) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { value, op });
        id
    }

    /// Constant input (not differentiated).
    pub fn leaf(&mut self, value: Matrix) -> NodeId {
        self.push(value, Op::Leaf { param: None })
    }

    /// Copies `id`'s current value in as a differentiable leaf; adjoints
    /// flow back into `set`'s gradient slot for that parameter.
    pub fn param(&mut self, set: &ParamSet, id: ParamId) -> NodeId {
        self.push(set.value(id).clone(), Op::Leaf { param: Some(id) })
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, MathError> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    pub fn transpose(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).transpose();
        self.push(v, Op::Transpose(x))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, MathError> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, MathError> {
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, MathError> {
        let v = self.value(a).hadamard(self.value(b))?;
        Ok(self.push(v, Op::Hadamard(a, b)))
    }

    /// Adds a 1xN bias row to every row of an MxN matrix.
    pub fn add_row_broadcast(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId, MathError> {
        let (m, n) = self.value(a).shape();
        let bshape = self.value(bias).shape();
        if bshape != (1, n) {
            return Err(MathError::Dimension {
                op: "add_row_broadcast",
                lhs: (m, n),
                rhs: bshape,
            });
        }
        let mut v = self.value(a).clone();
        for r in 0..m {
            for c in 0..n {
                let val = v.get(r, c) + self.value(bias).get(0, c);
                v.set(r, c, val);
            }
        }
        Ok(self.push(v, Op::AddRowBroadcast(a, bias)))
    }

    /// Elementwise `mul * x + add`.
    pub fn affine(&mut self, x: NodeId, mul: f64, add: f64) -> NodeId {
        let v = self.value(x).map(|t| mul * t + add);
        self.push(v, Op::Affine { x, mul })
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).tanh();
        self.push(v, Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).sigmoid();
        self.push(v, Op::Sigmoid(x))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).map(|t| if t > 0.0 { t } else { 0.0 });
        self.push(v, Op::Relu(x))
    }

    pub fn softmax(&mut self, x: NodeId, axis: Axis) -> NodeId {
        let v = self.value(x).softmax(axis);
        self.push(v, Op::Softmax { x, axis })
    }

    /// Row softmax restricted to `mask`-allowed entries. Rows with no
    /// allowed entry come out all-zero (empty attention context).
    pub fn masked_softmax_rows(&mut self, x: NodeId, mask: &[bool]) -> Result<NodeId, MathError> {
        let (m, n) = self.value(x).shape();
        if mask.len() != m * n {
            return Err(MathError::Contract(format!(
                "mask length {} does not match {}x{}",
                mask.len(),
                m,
                n
            )));
        }
        let xin = self.value(x);
        let mut v = Matrix::zeros(m, n);
        for r in 0..m {
            let row_mask = &mask[r * n..(r + 1) * n];
            let mut max = f64::NEG_INFINITY;
            for c in 0..n {
                if row_mask[c] {
                    max = max.max(xin.get(r, c));
                }
            }
            if max == f64::NEG_INFINITY {
                continue; // empty row: all weights stay zero
            }
            let mut den = 0.0;
            for c in 0..n {
                if row_mask[c] {
                    let e = (xin.get(r, c) - max).exp();
                    v.set(r, c, e);
                    den += e;
                }
            }
            for c in 0..n {
                if row_mask[c] {
                    v.set(r, c, v.get(r, c) / den);
                }
            }
        }
        Ok(self.push(
            v,
            Op::MaskedSoftmaxRows {
                x,
                mask: mask.to_vec(),
            },
        ))
    }

    /// Per-row layer normalization with learned 1xN scale and shift.
    pub fn layer_norm(
        &mut self,
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        eps: f64,
    ) -> Result<NodeId, MathError> {
        let (m, n) = self.value(x).shape();
        if self.value(gamma).shape() != (1, n) || self.value(beta).shape() != (1, n) {
            return Err(MathError::Dimension {
                op: "layer_norm",
                lhs: (m, n),
                rhs: self.value(gamma).shape(),
            });
        }
        let xin = self.value(x);
        let gamma_v = self.value(gamma);
        let beta_v = self.value(beta);
        let mut v = Matrix::zeros(m, n);
        for r in 0..m {
            let row = xin.row(r);
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + eps).sqrt();
            for c in 0..n {
                let xhat = (row[c] - mean) * inv;
                v.set(r, c, gamma_v.get(0, c) * xhat + beta_v.get(0, c));
            }
        }
        Ok(self.push(v, Op::LayerNorm { x, gamma, beta, eps }))
    }

    /// Picks `indices` rows from a table; duplicates allowed. Adjoints
    /// scatter-add back into the table rows.
    pub fn gather_rows(&mut self, table: NodeId, indices: &[usize]) -> Result<NodeId, MathError> {
        let (rows, cols) = self.value(table).shape();
        for &i in indices {
            if i >= rows {
                return Err(MathError::Contract(format!(
                    "gather index {i} out of range for {rows} rows"
                )));
            }
        }
        let tv = self.value(table);
        let mut v = Matrix::zeros(indices.len(), cols);
        for (r, &i) in indices.iter().enumerate() {
            for c in 0..cols {
                v.set(r, c, tv.get(i, c));
            }
        }
        Ok(self.push(
            v,
            Op::GatherRows {
                table,
                indices: indices.to_vec(),
            },
        ))
    }

    pub fn concat_rows(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, MathError> {
        let (ar, ac) = self.value(a).shape();
        let (br, bc) = self.value(b).shape();
        if ac != bc {
            return Err(MathError::Dimension {
                op: "concat_rows",
                lhs: (ar, ac),
                rhs: (br, bc),
            });
        }
        let mut data = Vec::with_capacity((ar + br) * ac);
        data.extend_from_slice(self.value(a).data());
        data.extend_from_slice(self.value(b).data());
        let v = Matrix::from_vec(ar + br, ac, data)?;
        Ok(self.push(v, Op::ConcatRows(a, b)))
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, MathError> {
        let (ar, ac) = self.value(a).shape();
        let (br, bc) = self.value(b).shape();
        if ar != br {
            return Err(MathError::Dimension {
                op: "concat_cols",
                lhs: (ar, ac),
                rhs: (br, bc),
            });
        }
        let av = self.value(a);
        let bv = self.value(b);
        let mut v = Matrix::zeros(ar, ac + bc);
        for r in 0..ar {
            for c in 0..ac {
                v.set(r, c, av.get(r, c));
            }
            for c in 0..bc {
                v.set(r, ac + c, bv.get(r, c));
            }
        }
        Ok(self.push(v, Op::ConcatCols(a, b)))
    }

    pub fn slice_cols(&mut self, x: NodeId, from: usize, to: usize) -> Result<NodeId, MathError> {
        let (m, n) = self.value(x).shape();
        if from >= to || to > n {
            return Err(MathError::Contract(format!(
                "slice_cols [{from}, {to}) invalid for width {n}"
            )));
        }
        let xv = self.value(x);
        let v = Matrix::from_fn(m, to - from, |r, c| xv.get(r, from + c));
        Ok(self.push(v, Op::SliceCols { x, from }))
    }

    /// Extracts one entry as a 1x1 node.
    pub fn pick(&mut self, x: NodeId, row: usize, col: usize) -> Result<NodeId, MathError> {
        let (m, n) = self.value(x).shape();
        if row >= m || col >= n {
            return Err(MathError::Contract(format!(
                "pick ({row},{col}) out of range for {m}x{n}"
            )));
        }
        let v = Matrix::from_vec(1, 1, vec![self.value(x).get(row, col)])?;
        Ok(self.push(v, Op::Pick { x, row, col }))
    }

    /// Vertically stacks same-width nodes.
    pub fn stack_rows(&mut self, parts: &[NodeId]) -> Result<NodeId, MathError> {
        if parts.is_empty() {
            return Err(MathError::Contract("stack_rows on empty list".into()));
        }
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            if v.cols() != cols {
                return Err(MathError::Dimension {
                    op: "stack_rows",
                    lhs: (rows, cols),
                    rhs: v.shape(),
                });
            }
            rows += v.rows();
            data.extend_from_slice(v.data());
        }
        let v = Matrix::from_vec(rows, cols, data)?;
        Ok(self.push(v, Op::StackRows(parts.to_vec())))
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let v = Matrix::from_vec(1, 1, vec![self.value(x).sum()]).unwrap();
        self.push(v, Op::Sum(x))
    }

    pub fn abs_sum(&mut self, x: NodeId) -> NodeId {
        let s = self.value(x).data().iter().map(|v| v.abs()).sum();
        let v = Matrix::from_vec(1, 1, vec![s]).unwrap();
        self.push(v, Op::AbsSum(x))
    }

    pub fn sq_sum(&mut self, x: NodeId) -> NodeId {
        let s = self.value(x).data().iter().map(|v| v * v).sum();
        let v = Matrix::from_vec(1, 1, vec![s]).unwrap();
        self.push(v, Op::SqSum(x))
    }

    pub fn add_n(&mut self, parts: &[NodeId]) -> Result<NodeId, MathError> {
        if parts.is_empty() {
            return Err(MathError::Contract("add_n on empty list".into()));
        }
        let mut v = self.value(parts[0]).clone();
        for &p in &parts[1..] {
            v = v.add(self.value(p))?;
        }
        Ok(self.push(v, Op::AddN(parts.to_vec())))
    }

    /// Mean binary cross-entropy of an Nx1 probability column against
    /// fixed targets, with probabilities clamped to
    /// [PROB_CLAMP, 1 - PROB_CLAMP] before the logs.
    pub fn bce_mean(&mut self, probs: NodeId, targets: &[f64]) -> Result<NodeId, MathError> {
        let (m, n) = self.value(probs).shape();
        if n != 1 || m != targets.len() {
            return Err(MathError::Dimension {
                op: "bce_mean",
                lhs: (m, n),
                rhs: (targets.len(), 1),
            });
        }
        if targets.is_empty() {
            return Err(MathError::Contract(
                "bce_mean requires at least one target".into(),
            ));
        }
        let pv = self.value(probs);
        let mut total = 0.0;
        for (i, &y) in targets.iter().enumerate() {
            let p = pv.get(i, 0).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        }
        let v = Matrix::from_vec(1, 1, vec![total / targets.len() as f64])?;
        Ok(self.push(
            v,
            Op::BceMean {
                probs,
                targets: targets.to_vec(),
            },
        ))
    }

    /// Accumulates d(loss)/d(parameter) into `set` for every parameter
    /// leaf reachable from `loss`, visiting ops in exact reverse order of
    /// the forward pass.
    pub fn backward(&self, loss: NodeId, set: &mut ParamSet) -> Result<(), MathError> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(MathError::NonScalarLoss {
                rows: lv.rows(),
                cols: lv.cols(),
            });
        }
        let mut adjoints: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        adjoints[loss.0] = Some(Matrix::from_vec(1, 1, vec![1.0])?);

        for idx in (0..self.nodes.len()).rev() {
            let grad = match adjoints[idx].take() {
                Some(g) => g,
                None => continue,
            };
            match &self.nodes[idx].op {
                Op::Leaf { param } => {
                    if let Some(pid) = param {
                        set.accumulate_grad(*pid, &grad);
                    }
                }
                Op::MatMul(a, b) => {
                    let da = grad.matmul(&self.value(*b).transpose())?;
                    let db = self.value(*a).transpose().matmul(&grad)?;
                    accumulate(&mut adjoints, *a, da);
                    accumulate(&mut adjoints, *b, db);
                }
                Op::Transpose(x) => {
                    accumulate(&mut adjoints, *x, grad.transpose());
                }
                Op::Add(a, b) => {
                    accumulate(&mut adjoints, *a, grad.clone());
                    accumulate(&mut adjoints, *b, grad);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut adjoints, *a, grad.clone());
                    accumulate(&mut adjoints, *b, grad.scale(-1.0));
                }
                Op::Hadamard(a, b) => {
                    let da = grad.hadamard(self.value(*b))?;
                    let db = grad.hadamard(self.value(*a))?;
                    accumulate(&mut adjoints, *a, da);
                    accumulate(&mut adjoints, *b, db);
                }
                Op::AddRowBroadcast(a, bias) => {
                    let (m, n) = grad.shape();
                    let mut db = Matrix::zeros(1, n);
                    for r in 0..m {
                        for c in 0..n {
                            db.set(0, c, db.get(0, c) + grad.get(r, c));
                        }
                    }
                    accumulate(&mut adjoints, *a, grad);
                    accumulate(&mut adjoints, *bias, db);
                }
                Op::Affine { x, mul, .. } => {
                    accumulate(&mut adjoints, *x, grad.scale(*mul));
                }
                Op::Tanh(x) => {
                    let y = &self.nodes[idx].value;
                    let dx = Matrix::from_fn(y.rows(), y.cols(), |r, c| {
                        let t = y.get(r, c);
                        grad.get(r, c) * (1.0 - t * t)
                    });
                    accumulate(&mut adjoints, *x, dx);
                }
                Op::Sigmoid(x) => {
                    let y = &self.nodes[idx].value;
                    let dx = Matrix::from_fn(y.rows(), y.cols(), |r, c| {
                        let s = y.get(r, c);
                        grad.get(r, c) * s * (1.0 - s)
                    });
                    accumulate(&mut adjoints, *x, dx);
                }
                Op::Relu(x) => {
                    let xin = self.value(*x);
                    let dx = Matrix::from_fn(xin.rows(), xin.cols(), |r, c| {
                        if xin.get(r, c) > 0.0 {
                            grad.get(r, c)
                        } else {
                            0.0
                        }
                    });
                    accumulate(&mut adjoints, *x, dx);
                }
                Op::Softmax { x, axis } => {
                    let y = &self.nodes[idx].value;
                    let dx = match axis {
                        Axis::Rows => softmax_backward_rows(y, &grad),
                        Axis::Cols => softmax_backward_rows(&y.transpose(), &grad.transpose())
                            .transpose(),
                    };
                    accumulate(&mut adjoints, *x, dx);
                }
                Op::MaskedSoftmaxRows { x, mask } => {
                    let y = &self.nodes[idx].value;
                    let (m, n) = y.shape();
                    let mut dx = Matrix::zeros(m, n);
                    for r in 0..m {
                        let row_mask = &mask[r * n..(r + 1) * n];
                        let mut dot = 0.0;
                        for c in 0..n {
                            if row_mask[c] {
                                dot += y.get(r, c) * grad.get(r, c);
                            }
                        }
                        for c in 0..n {
                            if row_mask[c] {
                                dx.set(r, c, y.get(r, c) * (grad.get(r, c) - dot));
                            }
                        }
                    }
                    accumulate(&mut adjoints, *x, dx);
                }
                Op::LayerNorm { x, gamma, beta, eps } => {
                    let xin = self.value(*x);
                    let gv = self.value(*gamma);
                    let (m, n) = xin.shape();
                    let nf = n as f64;
                    let mut dx = Matrix::zeros(m, n);
                    let mut dgamma = Matrix::zeros(1, n);
                    let mut dbeta = Matrix::zeros(1, n);
                    for r in 0..m {
                        let row = xin.row(r);
                        let mean = row.iter().sum::<f64>() / nf;
                        let var =
                            row.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / nf;
                        let inv = 1.0 / (var + eps).sqrt();
                        let mut sum_dxhat = 0.0;
                        let mut sum_dxhat_xhat = 0.0;
                        for c in 0..n {
                            let xhat = (row[c] - mean) * inv;
                            let d = grad.get(r, c);
                            let dxhat = d * gv.get(0, c);
                            sum_dxhat += dxhat;
                            sum_dxhat_xhat += dxhat * xhat;
                            dgamma.set(0, c, dgamma.get(0, c) + d * xhat);
                            dbeta.set(0, c, dbeta.get(0, c) + d);
                        }
                        for c in 0..n {
                            let xhat = (row[c] - mean) * inv;
                            let dxhat = grad.get(r, c) * gv.get(0, c);
                            let v = inv * (dxhat - sum_dxhat / nf - xhat * sum_dxhat_xhat / nf);
                            dx.set(r, c, v);
                        }
                    }
                    accumulate(&mut adjoints, *x, dx);
                    accumulate(&mut adjoints, *gamma, dgamma);
                    accumulate(&mut adjoints, *beta, dbeta);
                }
                Op::GatherRows { table, indices } => {
                    let (rows, cols) = self.value(*table).shape();
                    let mut dt = Matrix::zeros(rows, cols);
                    for (r, &i) in indices.iter().enumerate() {
                        for c in 0..cols {
                            dt.set(i, c, dt.get(i, c) + grad.get(r, c));
                        }
                    }
                    accumulate(&mut adjoints, *table, dt);
                }
                Op::ConcatRows(a, b) => {
                    let ar = self.value(*a).rows();
                    let cols = grad.cols();
                    let da = Matrix::from_fn(ar, cols, |r, c| grad.get(r, c));
                    let db =
                        Matrix::from_fn(grad.rows() - ar, cols, |r, c| grad.get(ar + r, c));
                    accumulate(&mut adjoints, *a, da);
                    accumulate(&mut adjoints, *b, db);
                }
                Op::ConcatCols(a, b) => {
                    let ac = self.value(*a).cols();
                    let rows = grad.rows();
                    let da = Matrix::from_fn(rows, ac, |r, c| grad.get(r, c));
                    let db = Matrix::from_fn(rows, grad.cols() - ac, |r, c| grad.get(r, ac + c));
                    accumulate(&mut adjoints, *a, da);
                    accumulate(&mut adjoints, *b, db);
                }
                Op::SliceCols { x, from, .. } => {
                    let (m, n) = self.value(*x).shape();
                    let mut dx = Matrix::zeros(m, n);
                    for r in 0..m {
                        for c in 0..grad.cols() {
                            dx.set(r, from + c, grad.get(r, c));
                        }
                    }
                    accumulate(&mut adjoints, *x, dx);
                }
                Op::Pick { x, row, col } => {
                    let (m, n) = self.value(*x).shape();
                    let mut dx = Matrix::zeros(m, n);
                    dx.set(*row, *col, grad.get(0, 0));
                    accumulate(&mut adjoints, *x, dx);
                }
                Op::StackRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let (pr, pc) = self.value(p).shape();
                        let dp = Matrix::from_fn(pr, pc, |r, c| grad.get(offset + r, c));
                        accumulate(&mut adjoints, p, dp);
                        offset += pr;
                    }
                }
                Op::Sum(x) => {
                    let (m, n) = self.value(*x).shape();
                    let g = grad.get(0, 0);
                    accumulate(&mut adjoints, *x, Matrix::from_fn(m, n, |_, _| g));
                }
                Op::AbsSum(x) => {
                    let xin = self.value(*x);
                    let g = grad.get(0, 0);
                    let dx = xin.map(|t| {
                        if t > 0.0 {
                            g
                        } else if t < 0.0 {
                            -g
                        } else {
                            0.0
                        }
                    });
                    accumulate(&mut adjoints, *x, dx);
                }
                Op::SqSum(x) => {
                    let g = grad.get(0, 0);
                    let dx = self.value(*x).map(|t| 2.0 * t * g);
                    accumulate(&mut adjoints, *x, dx);
                }
                Op::AddN(parts) => {
                    for &p in parts {
                        accumulate(&mut adjoints, p, grad.clone());
                    }
                }
                Op::BceMean { probs, targets } => {
                    let pv = self.value(*probs);
                    let g = grad.get(0, 0);
                    let nf = targets.len() as f64;
                    let mut dp = Matrix::zeros(targets.len(), 1);
                    for (i, &y) in targets.iter().enumerate() {
                        let raw = pv.get(i, 0);
                        // clamped region has zero slope
                        if raw > PROB_CLAMP && raw < 1.0 - PROB_CLAMP {
                            dp.set(i, 0, g * (raw - y) / (raw * (1.0 - raw)) / nf);
                        }
                    }
                    accumulate(&mut adjoints, *probs, dp);
                }
            }
        }
        Ok(())
    }
}

fn accumulate(adjoints: &mut [Option<Matrix>], id: NodeId, delta: Matrix) {
    match &mut adjoints[id.0] {
        Some(existing) => {
            for (a, b) in existing.data_mut().iter_mut().zip(delta.data()) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(delta),
    }
}

fn softmax_backward_rows(y: &Matrix, grad: &Matrix) -> Matrix {
    let (m, n) = y.shape();
    let mut dx = Matrix::zeros(m, n);
    for r in 0..m {
        let mut dot = 0.0;
        for c in 0..n {
            dot += y.get(r, c) * grad.get(r, c);
        }
        for c in 0..n {
            dx.set(r, c, y.get(r, c) * (grad.get(r, c) - dot));
        }
    }
    dx
}

//! Define-by-run reverse-mode differentiation on dense `f64` tensors.
//!
//! A [`Graph`] is a tape: every operation appends a node holding the computed
//! values and the ids of its parents. [`Graph::backward`] walks the tape in
//! reverse and fills per-node gradients. Graphs are rebuilt per forward pass,
//! which keeps heterogeneous losses (re-simulation, mixture likelihoods, flow
//! log-determinants) simple to express.
//!
//! All tensors in a graph are rank 2, `[rows, cols]`; rank-1 inputs are lifted
//! to a single row. Elementwise binary ops broadcast a `[1, n]` row, an
//! `[m, 1]` column, or a `[1, 1]` scalar against an `[m, n]` operand.

use thiserror::Error;

/// Dense row-major tensor. Parameters, checkpoints, and graph nodes all carry
/// their data in this form. `gradient` is populated on leaves after a backward
/// pass when the tensor is extracted from the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub gradient: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            values.len(),
            "tensor values must fill the shape"
        );
        Tensor { shape, values, gradient: None }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor { shape, values: vec![0.0; n], gradient: None }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor::new(vec![1], vec![v])
    }

    /// Row-major matrix from nested rows.
    pub fn matrix(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut values = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            values.extend_from_slice(row);
        }
        Tensor::new(vec![r, c], values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// (rows, cols) with rank-1 tensors read as a single row.
    pub fn dims2(&self) -> (usize, usize) {
        match self.shape.len() {
            1 => (1, self.shape[0]),
            2 => (self.shape[0], self.shape[1]),
            _ => panic!("graph tensors are rank 1 or 2, got {:?}", self.shape),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    ShapeMismatch { op: &'static str, lhs: Vec<usize>, rhs: Vec<usize> },
    #[error("{op}: invalid argument on shape {shape:?}: {message}")]
    BadArgument { op: &'static str, shape: Vec<usize>, message: String },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("graph tensors must be rank 1 or 2, got {shape:?}")]
    BadRank { shape: Vec<usize> },
}

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Relu(NodeId),
    Tanh(NodeId),
    Exp(NodeId),
    Log(NodeId),
    Square(NodeId),
    Softplus(NodeId),
    PowConst(NodeId, f64),
    Scale(NodeId, f64),
    AddConst(NodeId),
    Sum(NodeId),
    Mean(NodeId),
    SumAxis(NodeId, usize),
    MeanAxis(NodeId, usize),
    ConcatCols(NodeId, NodeId),
    SliceCols(NodeId, usize, usize),
    GatherCols(NodeId, Vec<usize>),
}

struct Node {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    grad: Vec<f64>,
    op: Op,
    param: bool,
}

/// Reverse-mode tape.
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

    fn push(&mut self, rows: usize, cols: usize, values: Vec<f64>, op: Op, param: bool) -> NodeId {
        debug_assert_eq!(rows * cols, values.len());
        self.nodes.push(Node { rows, cols, values, grad: Vec::new(), op, param });
        NodeId(self.nodes.len() - 1)
    }

    fn check_rank(t: &Tensor) -> Result<(usize, usize), GraphError> {
        match t.shape.len() {
            1 => Ok((1, t.shape[0])),
            2 => Ok((t.shape[0], t.shape[1])),
            _ => Err(GraphError::BadRank { shape: t.shape.clone() }),
        }
    }

    /// Constant leaf: no gradient is tracked.
    pub fn input(&mut self, t: &Tensor) -> NodeId {
        let (r, c) = Self::check_rank(t).expect("graph inputs are rank 1 or 2");
        self.push(r, c, t.values.clone(), Op::Leaf, false)
    }

    /// Trainable leaf: gradient is available after backward.
    pub fn param(&mut self, t: &Tensor) -> NodeId {
        let (r, c) = Self::check_rank(t).expect("graph params are rank 1 or 2");
        self.push(r, c, t.values.clone(), Op::Leaf, true)
    }

    pub fn constant(&mut self, rows: usize, cols: usize, values: Vec<f64>) -> NodeId {
        self.push(rows, cols, values, Op::Leaf, false)
    }

    /// Whether the node is a trainable leaf.
    pub fn is_param(&self, id: NodeId) -> bool {
        self.nodes[id.0].param
    }

    pub fn shape(&self, id: NodeId) -> (usize, usize) {
        let n = &self.nodes[id.0];
        (n.rows, n.cols)
    }

    pub fn values(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].values
    }

    /// Gradient of the last backward target with respect to this node.
    pub fn grad(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].grad
    }

    /// Scalar convenience accessor.
    pub fn value(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.nodes[id.0].values.len(), 1);
        self.nodes[id.0].values[0]
    }

    // ── forward ops ──────────────────────────────────────────────────

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        if k != k2 {
            return Err(GraphError::ShapeMismatch {
                op: "matmul",
                lhs: vec![m, k],
                rhs: vec![k2, n],
            });
        }
        let out = matmul_raw(self.values(a), self.values(b), m, k, n);
        Ok(self.push(m, n, out, Op::MatMul(a, b), false))
    }

    fn binary(
        &mut self,
        op_name: &'static str,
        a: NodeId,
        b: NodeId,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<NodeId, GraphError> {
        let sa = self.shape(a);
        let sb = self.shape(b);
        let (rows, cols) = broadcast_dims(sa, sb).ok_or(GraphError::ShapeMismatch {
            op: op_name,
            lhs: vec![sa.0, sa.1],
            rhs: vec![sb.0, sb.1],
        })?;
        let mut out = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let x = self.nodes[a.0].values[bcast_index(sa, r, c)];
                let y = self.nodes[b.0].values[bcast_index(sb, r, c)];
                out[r * cols + c] = f(x, y);
            }
        }
        Ok(self.push(rows, cols, out, op, false))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn multiply(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.binary("multiply", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn unary(&mut self, a: NodeId, f: impl Fn(f64) -> f64, op: Op) -> NodeId {
        let (r, c) = self.shape(a);
        let out: Vec<f64> = self.nodes[a.0].values.iter().map(|&x| f(x)).collect();
        self.push(r, c, out, op, false)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.unary(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        self.unary(a, f64::exp, Op::Exp(a))
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        self.unary(a, f64::ln, Op::Log(a))
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        self.unary(a, |x| x * x, Op::Square(a))
    }

    pub fn softplus(&mut self, a: NodeId) -> NodeId {
        self.unary(a, softplus, Op::Softplus(a))
    }

    /// Elementwise x^p. Callers keep x in the domain where this is smooth.
    pub fn pow_const(&mut self, a: NodeId, p: f64) -> NodeId {
        self.unary(a, |x| x.powf(p), Op::PowConst(a, p))
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        self.unary(a, |x| x * s, Op::Scale(a, s))
    }

    pub fn add_const(&mut self, a: NodeId, k: f64) -> NodeId {
        self.unary(a, |x| x + k, Op::AddConst(a))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        self.scale(a, -1.0)
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s: f64 = self.nodes[a.0].values.iter().sum();
        self.push(1, 1, vec![s], Op::Sum(a), false)
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let n = self.nodes[a.0].values.len() as f64;
        let s: f64 = self.nodes[a.0].values.iter().sum();
        self.push(1, 1, vec![s / n], Op::Mean(a), false)
    }

    fn axis_reduce(&mut self, a: NodeId, axis: usize, mean: bool) -> NodeId {
        let (rows, cols) = self.shape(a);
        let vals = &self.nodes[a.0].values;
        let (out_r, out_c, out) = match axis {
            0 => {
                let mut out = vec![0.0; cols];
                for r in 0..rows {
                    for c in 0..cols {
                        out[c] += vals[r * cols + c];
                    }
                }
                if mean {
                    out.iter_mut().for_each(|v| *v /= rows as f64);
                }
                (1, cols, out)
            }
            1 => {
                let mut out = vec![0.0; rows];
                for r in 0..rows {
                    for c in 0..cols {
                        out[r] += vals[r * cols + c];
                    }
                }
                if mean {
                    out.iter_mut().for_each(|v| *v /= cols as f64);
                }
                (rows, 1, out)
            }
            _ => panic!("axis must be 0 or 1"),
        };
        let op = if mean { Op::MeanAxis(a, axis) } else { Op::SumAxis(a, axis) };
        self.push(out_r, out_c, out, op, false)
    }

    /// Column sums: `[m, n] -> [1, n]` for axis 0, row sums `[m, 1]` for axis 1.
    pub fn sum_axis(&mut self, a: NodeId, axis: usize) -> NodeId {
        self.axis_reduce(a, axis, false)
    }

    pub fn mean_axis(&mut self, a: NodeId, axis: usize) -> NodeId {
        self.axis_reduce(a, axis, true)
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        if ra != rb {
            return Err(GraphError::ShapeMismatch {
                op: "concat",
                lhs: vec![ra, ca],
                rhs: vec![rb, cb],
            });
        }
        let mut out = Vec::with_capacity(ra * (ca + cb));
        for r in 0..ra {
            out.extend_from_slice(&self.nodes[a.0].values[r * ca..(r + 1) * ca]);
            out.extend_from_slice(&self.nodes[b.0].values[r * cb..(r + 1) * cb]);
        }
        Ok(self.push(ra, ca + cb, out, Op::ConcatCols(a, b), false))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, end: usize) -> Result<NodeId, GraphError> {
        let (rows, cols) = self.shape(a);
        if start >= end || end > cols {
            return Err(GraphError::BadArgument {
                op: "slice",
                shape: vec![rows, cols],
                message: format!("column range {start}..{end}"),
            });
        }
        let w = end - start;
        let mut out = Vec::with_capacity(rows * w);
        for r in 0..rows {
            out.extend_from_slice(&self.nodes[a.0].values[r * cols + start..r * cols + end]);
        }
        Ok(self.push(rows, w, out, Op::SliceCols(a, start, end), false))
    }

    /// Column gather: output column j takes input column `index[j]`.
    /// With a permutation this reorders columns.
    pub fn gather_cols(&mut self, a: NodeId, index: &[usize]) -> Result<NodeId, GraphError> {
        let (rows, cols) = self.shape(a);
        if index.iter().any(|&i| i >= cols) {
            return Err(GraphError::BadArgument {
                op: "gather",
                shape: vec![rows, cols],
                message: format!("index out of range for {cols} columns"),
            });
        }
        let w = index.len();
        let mut out = Vec::with_capacity(rows * w);
        for r in 0..rows {
            for &i in index {
                out.push(self.nodes[a.0].values[r * cols + i]);
            }
        }
        Ok(self.push(rows, w, out, Op::GatherCols(a, index.to_vec()), false))
    }

    /// Row maxima as a detached `[m, 1]` constant (no gradient flows through
    /// it). Used to stabilize log-sum-exp; the shift cancels in the gradient.
    pub fn detach_rowmax(&mut self, a: NodeId) -> NodeId {
        let (rows, cols) = self.shape(a);
        let mut out = vec![f64::NEG_INFINITY; rows];
        for r in 0..rows {
            for c in 0..cols {
                out[r] = out[r].max(self.nodes[a.0].values[r * cols + c]);
            }
        }
        self.constant(rows, 1, out)
    }

    /// Numerically stable row-wise log Σ exp: `[m, n] -> [m, 1]`.
    pub fn logsumexp_axis1(&mut self, a: NodeId) -> Result<NodeId, GraphError> {
        let m = self.detach_rowmax(a);
        let shifted = self.sub(a, m)?;
        let e = self.exp(shifted);
        let s = self.sum_axis(e, 1);
        let l = self.log(s);
        self.add(l, m)
    }

    // ── backward ─────────────────────────────────────────────────────

    /// Fill gradients of `loss` with respect to every node. Gradients from any
    /// previous call are overwritten, not accumulated.
    pub fn backward(&mut self, loss: NodeId) -> Result<(), GraphError> {
        let n = &self.nodes[loss.0];
        if n.values.len() != 1 {
            return Err(GraphError::NonScalarLoss { shape: vec![n.rows, n.cols] });
        }
        for node in &mut self.nodes {
            node.grad = vec![0.0; node.values.len()];
        }
        self.nodes[loss.0].grad[0] = 1.0;

        for i in (0..=loss.0).rev() {
            if self.nodes[i].grad.iter().all(|&g| g == 0.0) {
                continue;
            }
            let op = self.nodes[i].op.clone();
            let grad = std::mem::take(&mut self.nodes[i].grad);
            match op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (m, k) = self.shape(a);
                    let (_, ncols) = self.shape(b);
                    // dA = G Bᵀ, dB = Aᵀ G
                    let bt = transpose(self.values(b), k, ncols);
                    let da = matmul_raw(&grad, &bt, m, ncols, k);
                    let at = transpose(self.values(a), m, k);
                    let db = matmul_raw(&at, &grad, k, m, ncols);
                    accumulate(&mut self.nodes[a.0].grad, &da);
                    accumulate(&mut self.nodes[b.0].grad, &db);
                }
                Op::Add(a, b) => {
                    let dims = (self.shape(a), self.shape(b));
                    self.spread(a, &grad, dims.0, |_x, _y| 1.0, b, None);
                    self.spread(b, &grad, dims.1, |_x, _y| 1.0, a, None);
                }
                Op::Sub(a, b) => {
                    let dims = (self.shape(a), self.shape(b));
                    self.spread(a, &grad, dims.0, |_x, _y| 1.0, b, None);
                    self.spread(b, &grad, dims.1, |_x, _y| -1.0, a, None);
                }
                Op::Mul(a, b) => {
                    let dims = (self.shape(a), self.shape(b));
                    self.spread(a, &grad, dims.0, |_x, y| y, b, Some(b));
                    self.spread(b, &grad, dims.1, |_x, y| y, a, Some(a));
                }
                Op::Relu(a) => {
                    self.unary_back(i, a, &grad, |x, _| if x > 0.0 { 1.0 } else { 0.0 })
                }
                Op::Tanh(a) => self.unary_back(i, a, &grad, |_, y| 1.0 - y * y),
                Op::Exp(a) => self.unary_back(i, a, &grad, |_, y| y),
                Op::Log(a) => self.unary_back(i, a, &grad, |x, _| 1.0 / x),
                Op::Square(a) => self.unary_back(i, a, &grad, |x, _| 2.0 * x),
                Op::Softplus(a) => self.unary_back(i, a, &grad, |x, _| sigmoid(x)),
                Op::PowConst(a, p) => self.unary_back(i, a, &grad, |x, _| p * x.powf(p - 1.0)),
                Op::Scale(a, s) => self.unary_back(i, a, &grad, |_, _| s),
                Op::AddConst(a) => self.unary_back(i, a, &grad, |_, _| 1.0),
                Op::Sum(a) => {
                    let g = grad[0];
                    for slot in self.nodes[a.0].grad.iter_mut() {
                        *slot += g;
                    }
                }
                Op::Mean(a) => {
                    let g = grad[0] / self.nodes[a.0].values.len() as f64;
                    for slot in self.nodes[a.0].grad.iter_mut() {
                        *slot += g;
                    }
                }
                Op::SumAxis(a, axis) => self.axis_back(a, &grad, axis, 1.0),
                Op::MeanAxis(a, axis) => {
                    let (rows, cols) = self.shape(a);
                    let denom = if axis == 0 { rows } else { cols } as f64;
                    self.axis_back(a, &grad, axis, 1.0 / denom);
                }
                Op::ConcatCols(a, b) => {
                    let (rows, ca) = self.shape(a);
                    let (_, cb) = self.shape(b);
                    let w = ca + cb;
                    for r in 0..rows {
                        for c in 0..ca {
                            self.nodes[a.0].grad[r * ca + c] += grad[r * w + c];
                        }
                        for c in 0..cb {
                            self.nodes[b.0].grad[r * cb + c] += grad[r * w + ca + c];
                        }
                    }
                }
                Op::SliceCols(a, start, end) => {
                    let (rows, cols) = self.shape(a);
                    let w = end - start;
                    for r in 0..rows {
                        for c in 0..w {
                            self.nodes[a.0].grad[r * cols + start + c] += grad[r * w + c];
                        }
                    }
                }
                Op::GatherCols(a, index) => {
                    let (rows, cols) = self.shape(a);
                    let w = index.len();
                    for r in 0..rows {
                        for (j, &src) in index.iter().enumerate() {
                            self.nodes[a.0].grad[r * cols + src] += grad[r * w + j];
                        }
                    }
                }
            }
            self.nodes[i].grad = grad;
        }
        Ok(())
    }

    /// Broadcast-aware chain rule for elementwise binary ops. `factor` maps
    /// (own value, other value) to the local derivative; `needs_other` names
    /// the node whose (broadcast) value feeds the second argument.
    fn spread(
        &mut self,
        target: NodeId,
        out_grad: &[f64],
        target_dims: (usize, usize),
        factor: impl Fn(f64, f64) -> f64,
        other_id: NodeId,
        needs_other: Option<NodeId>,
    ) {
        let other_dims = self.shape(other_id);
        let (rows, cols) =
            broadcast_dims(target_dims, other_dims).expect("validated in forward pass");
        for r in 0..rows {
            for c in 0..cols {
                let o = match needs_other {
                    Some(id) => self.nodes[id.0].values[bcast_index(self.shape(id), r, c)],
                    None => 0.0,
                };
                let idx = bcast_index(target_dims, r, c);
                let x = self.nodes[target.0].values[idx];
                self.nodes[target.0].grad[idx] += out_grad[r * cols + c] * factor(x, o);
            }
        }
    }

    /// Gradient of an axis reduction: broadcast the reduced gradient back over
    /// the collapsed axis, scaled (1/len for means).
    fn axis_back(&mut self, a: NodeId, out_grad: &[f64], axis: usize, scale: f64) {
        let (rows, cols) = self.shape(a);
        for r in 0..rows {
            for c in 0..cols {
                let g = match axis {
                    0 => out_grad[c],
                    _ => out_grad[r],
                };
                self.nodes[a.0].grad[r * cols + c] += g * scale;
            }
        }
    }

    /// Chain rule for elementwise unary ops; `d` maps (input, output) to the
    /// local derivative.
    fn unary_back(&mut self, out: usize, a: NodeId, out_grad: &[f64], d: impl Fn(f64, f64) -> f64) {
        for idx in 0..out_grad.len() {
            let x = self.nodes[a.0].values[idx];
            let y = self.nodes[out].values[idx];
            self.nodes[a.0].grad[idx] += out_grad[idx] * d(x, y);
        }
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let row = &b[p * n..(p + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in dst.iter_mut().zip(row) {
                *o += av * bv;
            }
        }
    }
    out
}

fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}

fn accumulate(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Output dims for broadcasting, or None when incompatible.
fn broadcast_dims(a: (usize, usize), b: (usize, usize)) -> Option<(usize, usize)> {
    let rows = bcast_axis(a.0, b.0)?;
    let cols = bcast_axis(a.1, b.1)?;
    Some((rows, cols))
}

fn bcast_axis(a: usize, b: usize) -> Option<usize> {
    if a == b {
        Some(a)
    } else if a == 1 {
        Some(b)
    } else if b == 1 {
        Some(a)
    } else {
        None
    }
}

fn bcast_index(dims: (usize, usize), r: usize, c: usize) -> usize {
    let rr = if dims.0 == 1 { 0 } else { r };
    let cc = if dims.1 == 1 { 0 } else { c };
    rr * dims.1 + cc
}

//! Minimal reverse-mode automatic differentiation over dense matrices.
//!
//! A `Tape` records the forward computation as a flat list of nodes; calling
//! [`Tape::backward`] walks the list in reverse accumulating adjoints. The
//! op set is exactly what the masked graph network and the explanation
//! losses need, nothing more. Branchy ops (rectifier, guards, minimax
//! selections) propagate the subgradient of the branch taken at forward
//! time.

use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    /// Position of this node on the tape; indexes the vector returned by
    /// [`Tape::backward`].
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    /// Leaf that receives gradient.
    Input,
    /// Leaf without gradient.
    Constant,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    /// a: r x c, row: 1 x c broadcast over rows.
    AddRow(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Relu(usize),
    Sigmoid(usize),
    /// 1 - a, elementwise.
    OneMinus(usize),
    Transpose(usize),
    /// r x c -> r x 1.
    RowSum(usize),
    /// any shape -> 1 x 1.
    TotalSum(usize),
    /// Elementwise x^(-1/2); entries below the threshold map to 1 and pass
    /// no gradient (degree guard for all-zero rows).
    RsqrtGuard(usize, f64),
    /// a: r x c scaled per row by s: r x 1.
    ScaleRows(usize, usize),
    /// a: r x c scaled per column by s: c x 1.
    ScaleCols(usize, usize),
    /// a: n x n plus diag(v), v: n x 1.
    AddDiag(usize, usize),
    /// Elementwise max(x, c); gradient passes only where x > c.
    MaxConst(usize, f64),
    /// a / s with s a 1 x 1 scalar.
    DivScalar(usize, usize),
    /// 1 x t -> 1 x 1 log-sum-exp.
    LogSumExp(usize),
    /// 1 x t -> 1 x 1, element at the given column.
    Pick(usize, usize),
    /// 1 x t -> 1 x 1, minimum over columns excluding one; the argmin
    /// (smallest index on ties) is chosen at forward time.
    MinExcluding(usize, usize),
    /// max of two scalars; ties route the gradient to the first.
    Max2(usize, usize),
    /// n x 1 mask -> 1 x 1 sum of elementwise binary entropies, with the
    /// 0 log 0 = 0 convention at the boundary.
    BinaryEntropySum(usize),
}

struct Node {
    op: Op,
    value: Matrix,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    fn push(&mut self, op: Op, value: Matrix) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        debug_assert_eq!(m.shape(), (1, 1));
        m.data[0]
    }

    pub fn input(&mut self, value: Matrix) -> Var {
        self.push(Op::Input, value)
    }

    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(Op::Constant, value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).matmul(self.value(b));
        self.push(Op::MatMul(a.0, b.0), value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (ma, mb) = (self.value(a), self.value(b));
        assert_eq!(ma.shape(), mb.shape());
        let mut value = ma.clone();
        for (x, y) in value.data.iter_mut().zip(&mb.data) {
            *x += y;
        }
        self.push(Op::Add(a.0, b.0), value)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let (ma, mb) = (self.value(a), self.value(b));
        assert_eq!(ma.shape(), mb.shape());
        let mut value = ma.clone();
        for (x, y) in value.data.iter_mut().zip(&mb.data) {
            *x -= y;
        }
        self.push(Op::Sub(a.0, b.0), value)
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (ma, mr) = (self.value(a), self.value(row));
        assert_eq!(mr.rows, 1);
        assert_eq!(ma.cols, mr.cols);
        let mut value = ma.clone();
        for i in 0..value.rows {
            for j in 0..value.cols {
                let v = value.get(i, j) + mr.get(0, j);
                value.set(i, j, v);
            }
        }
        self.push(Op::AddRow(a.0, row.0), value)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (ma, mb) = (self.value(a), self.value(b));
        assert_eq!(ma.shape(), mb.shape());
        let mut value = ma.clone();
        for (x, y) in value.data.iter_mut().zip(&mb.data) {
            *x *= y;
        }
        self.push(Op::Mul(a.0, b.0), value)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let mut value = self.value(a).clone();
        for x in value.data.iter_mut() {
            *x *= c;
        }
        self.push(Op::Scale(a.0, c), value)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let mut value = self.value(a).clone();
        for x in value.data.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        self.push(Op::Relu(a.0), value)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let mut value = self.value(a).clone();
        for x in value.data.iter_mut() {
            *x = sigmoid(*x);
        }
        self.push(Op::Sigmoid(a.0), value)
    }

    pub fn one_minus(&mut self, a: Var) -> Var {
        let mut value = self.value(a).clone();
        for x in value.data.iter_mut() {
            *x = 1.0 - *x;
        }
        self.push(Op::OneMinus(a.0), value)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        self.push(Op::Transpose(a.0), value)
    }

    pub fn row_sum(&mut self, a: Var) -> Var {
        let ma = self.value(a);
        let mut value = Matrix::zeros(ma.rows, 1);
        for i in 0..ma.rows {
            let mut s = 0.0;
            for j in 0..ma.cols {
                s += ma.get(i, j);
            }
            value.set(i, 0, s);
        }
        self.push(Op::RowSum(a.0), value)
    }

    pub fn total_sum(&mut self, a: Var) -> Var {
        let s: f64 = self.value(a).data.iter().sum();
        self.push(Op::TotalSum(a.0), Matrix::from_rows(&[vec![s]]))
    }

    pub fn rsqrt_guard(&mut self, a: Var, threshold: f64) -> Var {
        let mut value = self.value(a).clone();
        for x in value.data.iter_mut() {
            *x = if *x < threshold { 1.0 } else { 1.0 / x.sqrt() };
        }
        self.push(Op::RsqrtGuard(a.0, threshold), value)
    }

    pub fn scale_rows(&mut self, a: Var, s: Var) -> Var {
        let (ma, ms) = (self.value(a), self.value(s));
        assert_eq!(ms.shape(), (ma.rows, 1));
        let mut value = ma.clone();
        for i in 0..value.rows {
            let f = ms.get(i, 0);
            for j in 0..value.cols {
                let v = value.get(i, j) * f;
                value.set(i, j, v);
            }
        }
        self.push(Op::ScaleRows(a.0, s.0), value)
    }

    pub fn scale_cols(&mut self, a: Var, s: Var) -> Var {
        let (ma, ms) = (self.value(a), self.value(s));
        assert_eq!(ms.shape(), (ma.cols, 1));
        let mut value = ma.clone();
        for i in 0..value.rows {
            for j in 0..value.cols {
                let v = value.get(i, j) * ms.get(j, 0);
                value.set(i, j, v);
            }
        }
        self.push(Op::ScaleCols(a.0, s.0), value)
    }

    pub fn add_diag(&mut self, a: Var, v: Var) -> Var {
        let (ma, mv) = (self.value(a), self.value(v));
        assert_eq!(ma.rows, ma.cols);
        assert_eq!(mv.shape(), (ma.rows, 1));
        let mut value = ma.clone();
        for i in 0..value.rows {
            let x = value.get(i, i) + mv.get(i, 0);
            value.set(i, i, x);
        }
        self.push(Op::AddDiag(a.0, v.0), value)
    }

    pub fn max_const(&mut self, a: Var, c: f64) -> Var {
        let mut value = self.value(a).clone();
        for x in value.data.iter_mut() {
            if *x < c {
                *x = c;
            }
        }
        self.push(Op::MaxConst(a.0, c), value)
    }

    pub fn div_scalar(&mut self, a: Var, s: Var) -> Var {
        let (ma, ms) = (self.value(a), self.value(s));
        assert_eq!(ms.shape(), (1, 1));
        let d = ms.data[0];
        let mut value = ma.clone();
        for x in value.data.iter_mut() {
            *x /= d;
        }
        self.push(Op::DivScalar(a.0, s.0), value)
    }

    pub fn log_sum_exp(&mut self, a: Var) -> Var {
        let ma = self.value(a);
        assert_eq!(ma.rows, 1);
        let value = log_sum_exp(&ma.data);
        self.push(Op::LogSumExp(a.0), Matrix::from_rows(&[vec![value]]))
    }

    pub fn pick(&mut self, a: Var, index: usize) -> Var {
        let ma = self.value(a);
        assert_eq!(ma.rows, 1);
        assert!(index < ma.cols);
        let value = ma.get(0, index);
        self.push(Op::Pick(a.0, index), Matrix::from_rows(&[vec![value]]))
    }

    pub fn min_excluding(&mut self, a: Var, excluded: usize) -> Var {
        let ma = self.value(a);
        assert_eq!(ma.rows, 1);
        assert!(ma.cols >= 2, "need at least one non-excluded column");
        let mut best = f64::INFINITY;
        for j in 0..ma.cols {
            if j != excluded && ma.get(0, j) < best {
                best = ma.get(0, j);
            }
        }
        self.push(Op::MinExcluding(a.0, excluded), Matrix::from_rows(&[vec![best]]))
    }

    pub fn max2(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.scalar(a), self.scalar(b));
        let value = if x >= y { x } else { y };
        self.push(Op::Max2(a.0, b.0), Matrix::from_rows(&[vec![value]]))
    }

    pub fn binary_entropy_sum(&mut self, a: Var) -> Var {
        let ma = self.value(a);
        let mut s = 0.0;
        for &m in &ma.data {
            s += binary_entropy(m);
        }
        self.push(Op::BinaryEntropySum(a.0), Matrix::from_rows(&[vec![s]]))
    }

    /// Reverse pass from a scalar output; returns one adjoint per node
    /// (same shape as the node's value).
    pub fn backward(&self, output: Var) -> Vec<Matrix> {
        assert_eq!(self.value(output).shape(), (1, 1), "backward needs a scalar");
        let mut grads: Vec<Matrix> = self
            .nodes
            .iter()
            .map(|n| Matrix::zeros(n.value.rows, n.value.cols))
            .collect();
        grads[output.0].data[0] = 1.0;

        for idx in (0..=output.0).rev() {
            let g = grads[idx].clone();
            if g.data.iter().all(|&x| x == 0.0) {
                continue;
            }
            match self.nodes[idx].op {
                Op::Input | Op::Constant => {}
                Op::MatMul(a, b) => {
                    let da = g.matmul(&self.nodes[b].value.transpose());
                    let db = self.nodes[a].value.transpose().matmul(&g);
                    accumulate(&mut grads[a], &da);
                    accumulate(&mut grads[b], &db);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads[a], &g);
                    accumulate(&mut grads[b], &g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads[a], &g);
                    for (x, y) in grads[b].data.iter_mut().zip(&g.data) {
                        *x -= y;
                    }
                }
                Op::AddRow(a, row) => {
                    accumulate(&mut grads[a], &g);
                    let dr = &mut grads[row];
                    for i in 0..g.rows {
                        for j in 0..g.cols {
                            dr.data[j] += g.get(i, j);
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (&self.nodes[a].value, &self.nodes[b].value);
                    for k in 0..g.data.len() {
                        grads[a].data[k] += g.data[k] * vb.data[k];
                    }
                    for k in 0..g.data.len() {
                        grads[b].data[k] += g.data[k] * va.data[k];
                    }
                }
                Op::Scale(a, c) => {
                    for (x, y) in grads[a].data.iter_mut().zip(&g.data) {
                        *x += c * y;
                    }
                }
                Op::Relu(a) => {
                    let va = &self.nodes[a].value;
                    for k in 0..g.data.len() {
                        if va.data[k] > 0.0 {
                            grads[a].data[k] += g.data[k];
                        }
                    }
                }
                Op::Sigmoid(a) => {
                    let out = &self.nodes[idx].value;
                    for k in 0..g.data.len() {
                        grads[a].data[k] += g.data[k] * out.data[k] * (1.0 - out.data[k]);
                    }
                }
                Op::OneMinus(a) => {
                    for (x, y) in grads[a].data.iter_mut().zip(&g.data) {
                        *x -= y;
                    }
                }
                Op::Transpose(a) => {
                    let gt = g.transpose();
                    accumulate(&mut grads[a], &gt);
                }
                Op::RowSum(a) => {
                    let da = &mut grads[a];
                    for i in 0..da.rows {
                        for j in 0..da.cols {
                            let v = da.get(i, j) + g.get(i, 0);
                            da.set(i, j, v);
                        }
                    }
                }
                Op::TotalSum(a) => {
                    let s = g.data[0];
                    for x in grads[a].data.iter_mut() {
                        *x += s;
                    }
                }
                Op::RsqrtGuard(a, threshold) => {
                    let va = &self.nodes[a].value;
                    for k in 0..g.data.len() {
                        let x = va.data[k];
                        if x >= threshold {
                            grads[a].data[k] += g.data[k] * (-0.5 * x.powf(-1.5));
                        }
                    }
                }
                Op::ScaleRows(a, s) => {
                    let (va, vs) = (&self.nodes[a].value, &self.nodes[s].value);
                    for i in 0..va.rows {
                        for j in 0..va.cols {
                            let k = i * va.cols + j;
                            grads[a].data[k] += g.data[k] * vs.data[i];
                        }
                    }
                    for i in 0..va.rows {
                        let mut acc = 0.0;
                        for j in 0..va.cols {
                            let k = i * va.cols + j;
                            acc += g.data[k] * va.data[k];
                        }
                        grads[s].data[i] += acc;
                    }
                }
                Op::ScaleCols(a, s) => {
                    let (va, vs) = (&self.nodes[a].value, &self.nodes[s].value);
                    for i in 0..va.rows {
                        for j in 0..va.cols {
                            let k = i * va.cols + j;
                            grads[a].data[k] += g.data[k] * vs.data[j];
                        }
                    }
                    for j in 0..va.cols {
                        let mut acc = 0.0;
                        for i in 0..va.rows {
                            let k = i * va.cols + j;
                            acc += g.data[k] * va.data[k];
                        }
                        grads[s].data[j] += acc;
                    }
                }
                Op::AddDiag(a, v) => {
                    accumulate(&mut grads[a], &g);
                    for i in 0..self.nodes[v].value.rows {
                        grads[v].data[i] += g.get(i, i);
                    }
                }
                Op::MaxConst(a, c) => {
                    let va = &self.nodes[a].value;
                    for k in 0..g.data.len() {
                        if va.data[k] > c {
                            grads[a].data[k] += g.data[k];
                        }
                    }
                }
                Op::DivScalar(a, s) => {
                    let (va, vs) = (&self.nodes[a].value, &self.nodes[s].value);
                    let d = vs.data[0];
                    for k in 0..g.data.len() {
                        grads[a].data[k] += g.data[k] / d;
                    }
                    let mut acc = 0.0;
                    for k in 0..g.data.len() {
                        acc += g.data[k] * va.data[k];
                    }
                    grads[s].data[0] += -acc / (d * d);
                }
                Op::LogSumExp(a) => {
                    let va = &self.nodes[a].value;
                    let soft = softmax(&va.data);
                    let s = g.data[0];
                    for (k, p) in soft.iter().enumerate() {
                        grads[a].data[k] += s * p;
                    }
                }
                Op::Pick(a, index) => {
                    grads[a].data[index] += g.data[0];
                }
                Op::MinExcluding(a, excluded) => {
                    let va = &self.nodes[a].value;
                    let mut arg = usize::MAX;
                    let mut best = f64::INFINITY;
                    for j in 0..va.cols {
                        if j != excluded && va.data[j] < best {
                            best = va.data[j];
                            arg = j;
                        }
                    }
                    grads[a].data[arg] += g.data[0];
                }
                Op::Max2(a, b) => {
                    if self.nodes[a].value.data[0] >= self.nodes[b].value.data[0] {
                        grads[a].data[0] += g.data[0];
                    } else {
                        grads[b].data[0] += g.data[0];
                    }
                }
                Op::BinaryEntropySum(a) => {
                    let va = &self.nodes[a].value;
                    let s = g.data[0];
                    for k in 0..va.data.len() {
                        let m = va.data[k];
                        if m > 0.0 && m < 1.0 {
                            grads[a].data[k] += s * ((1.0 - m) / m).ln();
                        }
                        // at the boundary the entropy is flat through any
                        // sigmoid parametrization; pass zero
                    }
                }
            }
        }
        grads
    }
}

fn accumulate(dst: &mut Matrix, src: &Matrix) {
    debug_assert_eq!(dst.shape(), src.shape());
    for (x, y) in dst.data.iter_mut().zip(&src.data) {
        *x += y;
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = values.iter().map(|&v| (v - m).exp()).sum();
    m + s.ln()
}

pub fn softmax(values: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(values);
    values.iter().map(|&v| (v - lse).exp()).collect()
}

/// Binary entropy with the 0 log 0 = 0 limit convention, natural log.
pub fn binary_entropy(m: f64) -> f64 {
    let mut h = 0.0;
    if m > 0.0 {
        h -= m * m.ln();
    }
    if m < 1.0 {
        h -= (1.0 - m) * (1.0 - m).ln();
    }
    h
}

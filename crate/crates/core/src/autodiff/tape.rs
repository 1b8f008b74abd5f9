//! Operation tape and reverse-mode gradient propagation.
//!
//! Nodes are appended in evaluation order, so the tape is already
//! topologically sorted and [`Tape::backward`] is a single reverse sweep.
//! Each node is visited once; gradients from fan-out are summed.

use std::sync::Arc;

use super::sparse::{CsrPattern, SparseOperator};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Pointwise nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    Elu,
    /// Negative-side slope.
    LeakyRelu(f64),
    Exp,
    Log,
}

enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    SpMM {
        pattern: Arc<CsrPattern>,
        coef: Var,
        dense: Var,
    },
    AddBias(Var, Var),
    Add(Var, Var),
    Scale(Var, T),
    Unary(Var, Activation),
    Dropout(Var, Vec<T>),
    SliceCols(Var, usize),
    ConcatCols(Vec<Var>),
    EdgeScores {
        pattern: Arc<CsrPattern>,
        rows: Arc<Vec<usize>>,
        src: Var,
        dst: Var,
    },
    SegmentSoftmax(Arc<CsrPattern>, Var),
    SoftmaxRows(Var),
    SegmentMax {
        input: Var,
        argmax: Vec<usize>,
    },
    GaussianLogKernel {
        pseudo: Arc<Vec<T>>,
        mu: Var,
        log_sigma: Var,
    },
    CrossEntropy {
        logits: Var,
        targets: Vec<(usize, usize)>,
        probs: Vec<T>,
    },
    SumSquares(Var),
    Sum(Var),
}

/// Recorded computation.
pub struct Tape<T> {
    values: Vec<Tensor<T>>,
    ops: Vec<Op<T>>,
    needs_grad: Vec<bool>,
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn shape_err(msg: String) -> Error {
    Error::Shape(msg)
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            values: Vec::new(),
            ops: Vec::new(),
            needs_grad: Vec::new(),
            grads: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, needs_grad: bool) -> Var {
        self.values.push(value);
        self.ops.push(op);
        self.needs_grad.push(needs_grad);
        self.grads.push(None);
        Var(self.values.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.needs_grad[v.0]
    }

    /// Records a leaf. Gradients are tracked when `t.requires_grad` is set.
    pub fn leaf(&mut self, t: Tensor<T>) -> Var {
        let rg = t.requires_grad;
        let mut t = t;
        t.grad = None;
        self.push(t, Op::Leaf, rg)
    }

    /// Records a leaf that never receives a gradient.
    pub fn constant(&mut self, mut t: Tensor<T>) -> Var {
        t.requires_grad = false;
        self.leaf(t)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.values[v.0]
    }

    /// Gradient of the last [`backward`](Self::backward) call with respect to
    /// a leaf; `None` if the leaf was unreachable from the loss.
    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.grads[v.0].as_deref()
    }

    /// Like [`grad`](Self::grad) but zero-filled for unreachable leaves.
    pub fn grad_or_zeros(&self, v: Var) -> Vec<T> {
        self.grad(v)
            .map(<[T]>::to_vec)
            .unwrap_or_else(|| vec![T::zero(); self.values[v.0].len()])
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (n, k) = self.value(a).shape();
        let (k2, m) = self.value(b).shape();
        if k != k2 {
            return Err(shape_err(format!("matmul {n}x{k} by {k2}x{m}")));
        }
        let av = self.value(a).data();
        let bv = self.value(b).data();
        let mut out = vec![T::zero(); n * m];
        for i in 0..n {
            let orow = &mut out[i * m..(i + 1) * m];
            for (kk, &x) in av[i * k..(i + 1) * k].iter().enumerate() {
                if x == T::zero() {
                    continue;
                }
                for (o, &y) in orow.iter_mut().zip(&bv[kk * m..(kk + 1) * m]) {
                    *o += x * y;
                }
            }
        }
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::new(n, m, out)?, Op::MatMul(a, b), ng))
    }

    /// Sparse-dense product `S * dense`, where `S` has structure `pattern`
    /// and per-entry coefficients `coef` (an `nnz x 1` node, trainable or
    /// not).
    pub fn spmm(&mut self, pattern: &Arc<CsrPattern>, coef: Var, dense: Var) -> Result<Var> {
        let (dr, m) = self.value(dense).shape();
        if pattern.cols != dr {
            return Err(shape_err(format!(
                "spmm operator {}x{} by {dr}x{m}",
                pattern.rows, pattern.cols
            )));
        }
        if self.value(coef).len() != pattern.nnz() {
            return Err(shape_err(format!(
                "spmm with {} coefficients for {} entries",
                self.value(coef).len(),
                pattern.nnz()
            )));
        }
        let c = self.value(coef).data();
        let x = self.value(dense).data();
        let mut out = vec![T::zero(); pattern.rows * m];
        for i in 0..pattern.rows {
            let orow = &mut out[i * m..(i + 1) * m];
            for e in pattern.row_range(i) {
                let w = c[e];
                let j = pattern.indices[e];
                for (o, &y) in orow.iter_mut().zip(&x[j * m..(j + 1) * m]) {
                    *o += w * y;
                }
            }
        }
        let ng = self.needs(coef) || self.needs(dense);
        let op = Op::SpMM {
            pattern: pattern.clone(),
            coef,
            dense,
        };
        Ok(self.push(Tensor::new(pattern.rows, m, out)?, op, ng))
    }

    /// `op * dense` for a fixed sparse operator.
    pub fn spmm_const(&mut self, op: &SparseOperator<T>, dense: Var) -> Result<Var> {
        let coef = self.constant(Tensor::new(op.values.len(), 1, op.values.clone())?);
        self.spmm(&op.pattern, coef, dense)
    }

    /// Adds a `1 x m` row vector to every row.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (n, m) = self.value(a).shape();
        if self.value(bias).shape() != (1, m) {
            return Err(shape_err(format!("bias {:?} for {n}x{m}", self.value(bias).shape())));
        }
        let b = self.value(bias).data().to_vec();
        let mut out = self.value(a).data().to_vec();
        for row in out.chunks_exact_mut(m.max(1)) {
            for (o, &v) in row.iter_mut().zip(&b) {
                *o += v;
            }
        }
        let ng = self.needs(a) || self.needs(bias);
        Ok(self.push(Tensor::new(n, m, out)?, Op::AddBias(a, bias), ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let sa = self.value(a).shape();
        if sa != self.value(b).shape() {
            return Err(shape_err(format!("add {sa:?} and {:?}", self.value(b).shape())));
        }
        let out: Vec<T> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x + y)
            .collect();
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::new(sa.0, sa.1, out)?, Op::Add(a, b), ng))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        let (n, m) = self.value(a).shape();
        let out = self.value(a).data().iter().map(|&x| x * s).collect();
        let ng = self.needs(a);
        self.push(Tensor::new(n, m, out).unwrap(), Op::Scale(a, s), ng)
    }

    /// Pointwise activation.
    pub fn elementwise(&mut self, act: Activation, a: Var) -> Result<Var> {
        let (n, m) = self.value(a).shape();
        let x = self.value(a).data();
        let out: Vec<T> = match act {
            Activation::Relu => x.iter().map(|&v| v.max(T::zero())).collect(),
            Activation::Elu => x.iter().map(|&v| if v > T::zero() { v } else { v.exp_m1() }).collect(),
            Activation::LeakyRelu(s) => {
                let s = T::from_f64_lossy(s);
                x.iter().map(|&v| if v > T::zero() { v } else { v * s }).collect()
            }
            Activation::Exp => x.iter().map(|&v| v.exp()).collect(),
            Activation::Log => {
                if let Some(bad) = x.iter().find(|&&v| v <= T::zero()) {
                    return Err(Error::InvalidArgument(format!("log of non-positive value {bad}")));
                }
                x.iter().map(|&v| v.ln()).collect()
            }
        };
        let ng = self.needs(a);
        Ok(self.push(Tensor::new(n, m, out)?, Op::Unary(a, act), ng))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.elementwise(Activation::Relu, a).unwrap()
    }

    pub fn elu(&mut self, a: Var) -> Var {
        self.elementwise(Activation::Elu, a).unwrap()
    }

    /// Inverted dropout: zero each entry with probability `p` and scale the
    /// survivors by `1 / (1 - p)`. Identity when `training` is false or
    /// `p == 0`; in that case no random numbers are drawn.
    pub fn dropout(&mut self, a: Var, p: f64, rng: &mut RngStream, training: bool) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "dropout probability {p} outside [0, 1)"
            )));
        }
        if !training || p == 0.0 {
            return Ok(a);
        }
        let keep = T::from_f64_lossy(1.0 / (1.0 - p));
        let (n, m) = self.value(a).shape();
        let mask: Vec<T> = (0..n * m)
            .map(|_| if rng.uniform() < p { T::zero() } else { keep })
            .collect();
        let out = self.value(a).data().iter().zip(&mask).map(|(&x, &k)| x * k).collect();
        let ng = self.needs(a);
        Ok(self.push(Tensor::new(n, m, out)?, Op::Dropout(a, mask), ng))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (n, m) = self.value(a).shape();
        if start + len > m {
            return Err(shape_err(format!("columns {start}..{} of {m}", start + len)));
        }
        let x = self.value(a).data();
        let mut out = Vec::with_capacity(n * len);
        for i in 0..n {
            out.extend_from_slice(&x[i * m + start..i * m + start + len]);
        }
        let ng = self.needs(a);
        Ok(self.push(Tensor::new(n, len, out)?, Op::SliceCols(a, start), ng))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let n = parts
            .first()
            .map(|&p| self.value(p).rows())
            .ok_or_else(|| shape_err("concat of nothing".into()))?;
        if parts.iter().any(|&p| self.value(p).rows() != n) {
            return Err(shape_err("concat with differing row counts".into()));
        }
        let widths: Vec<usize> = parts.iter().map(|&p| self.value(p).cols()).collect();
        let m: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(n * m);
        for i in 0..n {
            for &p in parts {
                out.extend_from_slice(self.value(p).row(i));
            }
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(Tensor::new(n, m, out)?, Op::ConcatCols(parts.to_vec()), ng))
    }

    /// Per-entry scores `src[row(e)] + dst[col(e)]` for `N x 1` node vectors.
    pub fn edge_scores(
        &mut self,
        pattern: &Arc<CsrPattern>,
        rows: &Arc<Vec<usize>>,
        src: Var,
        dst: Var,
    ) -> Result<Var> {
        if self.value(src).shape() != (pattern.rows, 1) || self.value(dst).shape() != (pattern.cols, 1) {
            return Err(shape_err("edge_scores expects N x 1 node vectors".into()));
        }
        let s = self.value(src).data();
        let d = self.value(dst).data();
        let out: Vec<T> = rows.iter().zip(&pattern.indices).map(|(&i, &j)| s[i] + d[j]).collect();
        let ng = self.needs(src) || self.needs(dst);
        let op = Op::EdgeScores {
            pattern: pattern.clone(),
            rows: rows.clone(),
            src,
            dst,
        };
        Ok(self.push(Tensor::new(pattern.nnz(), 1, out)?, op, ng))
    }

    /// Softmax of per-entry scores within each CSR row.
    pub fn segment_softmax(&mut self, pattern: &Arc<CsrPattern>, scores: Var) -> Result<Var> {
        if self.value(scores).len() != pattern.nnz() {
            return Err(shape_err("segment_softmax score count".into()));
        }
        let x = self.value(scores).data();
        let mut out = vec![T::zero(); x.len()];
        for i in 0..pattern.rows {
            let r = pattern.row_range(i);
            if r.is_empty() {
                return Err(Error::InvalidArgument(format!("empty segment {i}")));
            }
            softmax_into(&x[r.clone()], &mut out[r]);
        }
        let ng = self.needs(scores);
        Ok(self.push(
            Tensor::new(pattern.nnz(), 1, out)?,
            Op::SegmentSoftmax(pattern.clone(), scores),
            ng,
        ))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let (n, m) = self.value(a).shape();
        if m == 0 {
            return Err(Error::InvalidArgument("softmax of empty rows".into()));
        }
        let x = self.value(a).data();
        let mut out = vec![T::zero(); n * m];
        for i in 0..n {
            softmax_into(&x[i * m..(i + 1) * m], &mut out[i * m..(i + 1) * m]);
        }
        let ng = self.needs(a);
        Ok(self.push(Tensor::new(n, m, out)?, Op::SoftmaxRows(a), ng))
    }

    /// Column-wise maximum over each row's neighbours:
    /// `out[i, f] = max_{j in row i} x[j, f]`. Empty rows yield zero. Ties go to
    /// the first entry in CSR order.
    pub fn segment_max(&mut self, pattern: &Arc<CsrPattern>, x: Var) -> Result<Var> {
        let (r, m) = self.value(x).shape();
        if r != pattern.cols {
            return Err(shape_err("segment_max input rows".into()));
        }
        let xv = self.value(x).data();
        let mut out = vec![T::zero(); pattern.rows * m];
        let mut argmax = vec![usize::MAX; pattern.rows * m];
        for i in 0..pattern.rows {
            for e in pattern.row_range(i) {
                let j = pattern.indices[e];
                for f in 0..m {
                    let v = xv[j * m + f];
                    let slot = i * m + f;
                    if argmax[slot] == usize::MAX || v > out[slot] {
                        out[slot] = v;
                        argmax[slot] = j;
                    }
                }
            }
        }
        let ng = self.needs(x);
        Ok(self.push(
            Tensor::new(pattern.rows, m, out)?,
            Op::SegmentMax { input: x, argmax },
            ng,
        ))
    }

    /// Log of an unnormalized diagonal Gaussian kernel per entry:
    /// `-1/2 * sum_d (u_d - mu_d)^2 * exp(-log_sigma_d)` for pseudo-coordinates
    /// `pseudo` (`nnz x P`, row-major) and `1 x P` parameters.
    pub fn gaussian_log_kernel(&mut self, pseudo: &Arc<Vec<T>>, mu: Var, log_sigma: Var) -> Result<Var> {
        let p = self.value(mu).cols();
        if self.value(mu).shape() != (1, p) || self.value(log_sigma).shape() != (1, p) || p == 0 {
            return Err(shape_err("kernel parameters must be 1 x P".into()));
        }
        if pseudo.len() % p != 0 {
            return Err(shape_err("pseudo-coordinate width".into()));
        }
        let mu_v = self.value(mu).data();
        let inv: Vec<T> = self.value(log_sigma).data().iter().map(|&s| (-s).exp()).collect();
        let half = T::from_f64_lossy(0.5);
        let out: Vec<T> = pseudo
            .chunks_exact(p)
            .map(|u| {
                let q: T = u
                    .iter()
                    .zip(mu_v)
                    .zip(&inv)
                    .map(|((&ud, &md), &iv)| (ud - md) * (ud - md) * iv)
                    .sum();
                -half * q
            })
            .collect();
        let ng = self.needs(mu) || self.needs(log_sigma);
        let op = Op::GaussianLogKernel {
            pseudo: pseudo.clone(),
            mu,
            log_sigma,
        };
        Ok(self.push(Tensor::new(out.len(), 1, out)?, op, ng))
    }

    /// Mean over `mask` of `-log softmax(logits[i])[labels[i]]`.
    pub fn masked_cross_entropy(&mut self, logits: Var, labels: &[u32], mask: &[usize]) -> Result<Var> {
        if mask.is_empty() {
            return Err(Error::EmptyMask);
        }
        let (n, c) = self.value(logits).shape();
        if labels.len() != n {
            return Err(shape_err(format!("{} labels for {n} rows", labels.len())));
        }
        let x = self.value(logits).data();
        let mut probs = vec![T::zero(); mask.len() * c];
        let mut targets = Vec::with_capacity(mask.len());
        let mut total = 0.0f64;
        for (k, &i) in mask.iter().enumerate() {
            let row = &x[i * c..(i + 1) * c];
            let y = labels[i] as usize;
            if y >= c {
                return Err(Error::InvalidArgument(format!("label {y} >= {c} classes")));
            }
            let mx = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
            let lse = row.iter().map(|&v| (v - mx).exp()).sum::<T>().ln() + mx;
            total += (lse - row[y]).to_f64_lossy();
            for (p, &v) in probs[k * c..(k + 1) * c].iter_mut().zip(row) {
                *p = (v - lse).exp();
            }
            targets.push((i, y));
        }
        let loss = T::from_f64_lossy(total / mask.len() as f64);
        let ng = self.needs(logits);
        let op = Op::CrossEntropy { logits, targets, probs };
        Ok(self.push(Tensor::scalar(loss), op, ng))
    }

    pub fn sum_squares(&mut self, a: Var) -> Var {
        let s: T = self.value(a).data().iter().map(|&v| v * v).sum();
        let ng = self.needs(a);
        self.push(Tensor::scalar(s), Op::SumSquares(a), ng)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s: T = self.value(a).data().iter().copied().sum();
        let ng = self.needs(a);
        self.push(Tensor::scalar(s), Op::Sum(a), ng)
    }

    /// Propagates gradients from the scalar `loss` to every reachable node.
    /// Gradients of a previous call are discarded.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::Shape(format!(
                "backward from non-scalar {:?}",
                self.value(loss).shape()
            )));
        }
        self.grads.iter_mut().for_each(|g| *g = None);
        if !self.needs(loss) {
            return Ok(());
        }
        self.grads[loss.0] = Some(vec![T::one()]);
        for idx in (0..=loss.0).rev() {
            if matches!(self.ops[idx], Op::Leaf) {
                continue;
            }
            let Some(g) = self.grads[idx].take() else {
                continue;
            };
            let op = std::mem::replace(&mut self.ops[idx], Op::Leaf);
            self.backward_op(idx, &op, &g);
            self.ops[idx] = op;
        }
        Ok(())
    }

    fn backward_op(&mut self, idx: usize, op: &Op<T>, g: &[T]) {
        let values = &self.values;
        let needs = &self.needs_grad;
        let grads = &mut self.grads;
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (n, k) = values[a.0].shape();
                let m = values[b.0].cols();
                if needs[a.0] {
                    let bv = values[b.0].data();
                    acc(grads, needs, values, *a, |ga| {
                        for i in 0..n {
                            let grow = &g[i * m..(i + 1) * m];
                            for kk in 0..k {
                                let brow = &bv[kk * m..(kk + 1) * m];
                                ga[i * k + kk] += grow.iter().zip(brow).map(|(&x, &y)| x * y).sum::<T>();
                            }
                        }
                    });
                }
                if needs[b.0] {
                    let av = values[a.0].data();
                    acc(grads, needs, values, *b, |gb| {
                        for i in 0..n {
                            let grow = &g[i * m..(i + 1) * m];
                            for kk in 0..k {
                                let x = av[i * k + kk];
                                if x == T::zero() {
                                    continue;
                                }
                                for (o, &y) in gb[kk * m..(kk + 1) * m].iter_mut().zip(grow) {
                                    *o += x * y;
                                }
                            }
                        }
                    });
                }
            }
            Op::SpMM { pattern, coef, dense } => {
                let m = values[dense.0].cols();
                if needs[dense.0] {
                    let c = values[coef.0].data();
                    acc(grads, needs, values, *dense, |gd| {
                        for i in 0..pattern.rows {
                            let grow = &g[i * m..(i + 1) * m];
                            for e in pattern.row_range(i) {
                                let j = pattern.indices[e];
                                let w = c[e];
                                for (o, &y) in gd[j * m..(j + 1) * m].iter_mut().zip(grow) {
                                    *o += w * y;
                                }
                            }
                        }
                    });
                }
                if needs[coef.0] {
                    let x = values[dense.0].data();
                    acc(grads, needs, values, *coef, |gc| {
                        for i in 0..pattern.rows {
                            let grow = &g[i * m..(i + 1) * m];
                            for e in pattern.row_range(i) {
                                let j = pattern.indices[e];
                                gc[e] += grow.iter().zip(&x[j * m..(j + 1) * m]).map(|(&a, &b)| a * b).sum::<T>();
                            }
                        }
                    });
                }
            }
            Op::AddBias(a, b) => {
                let m = values[b.0].cols();
                acc(grads, needs, values, *a, |ga| {
                    ga.iter_mut().zip(g).for_each(|(o, &v)| *o += v)
                });
                acc(grads, needs, values, *b, |gb| {
                    for row in g.chunks_exact(m.max(1)) {
                        gb.iter_mut().zip(row).for_each(|(o, &v)| *o += v);
                    }
                });
            }
            Op::Add(a, b) => {
                acc(grads, needs, values, *a, |ga| {
                    ga.iter_mut().zip(g).for_each(|(o, &v)| *o += v)
                });
                acc(grads, needs, values, *b, |gb| {
                    gb.iter_mut().zip(g).for_each(|(o, &v)| *o += v)
                });
            }
            Op::Scale(a, s) => {
                let s = *s;
                acc(grads, needs, values, *a, |ga| {
                    ga.iter_mut().zip(g).for_each(|(o, &v)| *o += v * s)
                });
            }
            Op::Unary(a, act) => {
                let x = values[a.0].data();
                let y = values[idx].data();
                let act = *act;
                acc(grads, needs, values, *a, |ga| {
                    for t in 0..ga.len() {
                        let d = match act {
                            Activation::Relu => {
                                if x[t] > T::zero() {
                                    T::one()
                                } else {
                                    T::zero()
                                }
                            }
                            Activation::Elu => {
                                if x[t] > T::zero() {
                                    T::one()
                                } else {
                                    y[t] + T::one()
                                }
                            }
                            Activation::LeakyRelu(s) => {
                                if x[t] > T::zero() {
                                    T::one()
                                } else {
                                    T::from_f64_lossy(s)
                                }
                            }
                            Activation::Exp => y[t],
                            Activation::Log => T::one() / x[t],
                        };
                        ga[t] += g[t] * d;
                    }
                });
            }
            Op::Dropout(a, mask) => {
                acc(grads, needs, values, *a, |ga| {
                    for ((o, &v), &k) in ga.iter_mut().zip(g).zip(mask) {
                        *o += v * k;
                    }
                });
            }
            Op::SliceCols(a, start) => {
                let m = values[a.0].cols();
                let len = values[idx].cols();
                let start = *start;
                acc(grads, needs, values, *a, |ga| {
                    for (i, grow) in g.chunks_exact(len.max(1)).enumerate() {
                        for (o, &v) in ga[i * m + start..i * m + start + len].iter_mut().zip(grow) {
                            *o += v;
                        }
                    }
                });
            }
            Op::ConcatCols(parts) => {
                let m = values[idx].cols();
                let mut off = 0;
                for &p in parts {
                    let w = values[p.0].cols();
                    acc(grads, needs, values, p, |gp| {
                        for (i, grow) in g.chunks_exact(m.max(1)).enumerate() {
                            for (o, &v) in gp[i * w..(i + 1) * w].iter_mut().zip(&grow[off..off + w]) {
                                *o += v;
                            }
                        }
                    });
                    off += w;
                }
            }
            Op::EdgeScores {
                pattern,
                rows,
                src,
                dst,
            } => {
                acc(grads, needs, values, *src, |gs| {
                    for (&i, &v) in rows.iter().zip(g) {
                        gs[i] += v;
                    }
                });
                acc(grads, needs, values, *dst, |gd| {
                    for (&j, &v) in pattern.indices.iter().zip(g) {
                        gd[j] += v;
                    }
                });
            }
            Op::SegmentSoftmax(pattern, a) => {
                let y = values[idx].data();
                acc(grads, needs, values, *a, |ga| {
                    for i in 0..pattern.rows {
                        let r = pattern.row_range(i);
                        softmax_backward(&y[r.clone()], &g[r.clone()], &mut ga[r]);
                    }
                });
            }
            Op::SoftmaxRows(a) => {
                let (n, m) = values[idx].shape();
                let y = values[idx].data();
                acc(grads, needs, values, *a, |ga| {
                    for i in 0..n {
                        let r = i * m..(i + 1) * m;
                        softmax_backward(&y[r.clone()], &g[r.clone()], &mut ga[r]);
                    }
                });
            }
            Op::SegmentMax { input, argmax } => {
                let m = values[input.0].cols();
                acc(grads, needs, values, *input, |gi| {
                    for (slot, &j) in argmax.iter().enumerate() {
                        if j != usize::MAX {
                            gi[j * m + slot % m] += g[slot];
                        }
                    }
                });
            }
            Op::GaussianLogKernel { pseudo, mu, log_sigma } => {
                let p = values[mu.0].cols();
                let mu_v = values[mu.0].data();
                let inv: Vec<T> = values[log_sigma.0].data().iter().map(|&s| (-s).exp()).collect();
                let half = T::from_f64_lossy(0.5);
                let mut gmu = vec![T::zero(); p];
                let mut gls = vec![T::zero(); p];
                for (u, &ge) in pseudo.chunks_exact(p).zip(g) {
                    for d in 0..p {
                        let diff = u[d] - mu_v[d];
                        gmu[d] += ge * diff * inv[d];
                        gls[d] += ge * half * diff * diff * inv[d];
                    }
                }
                acc(grads, needs, values, *mu, |o| {
                    o.iter_mut().zip(&gmu).for_each(|(a, &b)| *a += b)
                });
                acc(grads, needs, values, *log_sigma, |o| {
                    o.iter_mut().zip(&gls).for_each(|(a, &b)| *a += b)
                });
            }
            Op::CrossEntropy { logits, targets, probs } => {
                let c = values[logits.0].cols();
                let scale = g[0] / T::from_usize(targets.len()).unwrap();
                acc(grads, needs, values, *logits, |gl| {
                    for (k, &(i, y)) in targets.iter().enumerate() {
                        for j in 0..c {
                            let mut d = probs[k * c + j];
                            if j == y {
                                d -= T::one();
                            }
                            gl[i * c + j] += scale * d;
                        }
                    }
                });
            }
            Op::SumSquares(a) => {
                let x = values[a.0].data();
                let two = T::from_f64_lossy(2.0) * g[0];
                acc(grads, needs, values, *a, |ga| {
                    ga.iter_mut().zip(x.iter()).for_each(|(o, &v)| *o += two * v)
                });
            }
            Op::Sum(a) => {
                let s = g[0];
                acc(grads, needs, values, *a, |ga| ga.iter_mut().for_each(|o| *o += s));
            }
        }
    }
}

fn acc<T: Scalar>(
    grads: &mut [Option<Vec<T>>],
    needs: &[bool],
    values: &[Tensor<T>],
    v: Var,
    f: impl FnOnce(&mut [T]),
) {
    if !needs[v.0] {
        return;
    }
    let len = values[v.0].len();
    f(grads[v.0].get_or_insert_with(|| vec![T::zero(); len]));
}

fn softmax_into<T: Scalar>(x: &[T], out: &mut [T]) {
    let mx = x.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let mut s = T::zero();
    for (o, &v) in out.iter_mut().zip(x) {
        *o = (v - mx).exp();
        s += *o;
    }
    out.iter_mut().for_each(|o| *o /= s);
}

fn softmax_backward<T: Scalar>(y: &[T], g: &[T], out: &mut [T]) {
    let dot: T = y.iter().zip(g).map(|(&a, &b)| a * b).sum();
    for ((o, &yy), &gg) in out.iter_mut().zip(y).zip(g) {
        *o += yy * (gg - dot);
    }
}

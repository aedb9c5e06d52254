// SPDX-License-Identifier: MIT OR Apache-2.0

//! A linear tape of batched matrix primitives with reverse-mode adjoints.
//!
//! Activations are matrices whose rows are examples (or `(example, position)`
//! pairs for sequence models, laid out example-major).

use serde::{Deserialize, Serialize};

use crate::numerics::{gemm_into, Matrix};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Elementwise activation functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    /// No nonlinearity; used for gradient-check baselines and ablations.
    Linear,
    /// Tanh approximation of GeLU.
    Gelu,
}

/// `√(2/π)`, the inner scale of the tanh GeLU approximation.
pub const GELU_SCALE: f64 = 0.797_884_560_802_865_4;
/// Cubic coefficient of the tanh GeLU approximation.
pub const GELU_CUBIC: f64 = 0.044_715;

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::Relu => x.max(0.0),
            Self::Linear => x,
            Self::Gelu => 0.5 * x * (1.0 + (GELU_SCALE * (x + GELU_CUBIC * x * x * x)).tanh()),
        }
    }

    /// Derivative; ReLU uses 0 at the kink.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Self::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Linear => 1.0,
            Self::Gelu => {
                let u = GELU_SCALE * (x + GELU_CUBIC * x * x * x);
                let t = u.tanh();
                0.5 * (1.0 + t)
                    + 0.5 * x * (1.0 - t * t) * GELU_SCALE * (1.0 + 3.0 * GELU_CUBIC * x * x)
            }
        }
    }
}

/// Shape bookkeeping for the attention primitives.
///
/// Query rows are `(example, query position)`, key/value rows are
/// `(example, key position)`, score rows are `(example, head, query position)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttnShape {
    pub heads: usize,
    pub head_dim: usize,
    pub q_len: usize,
    pub k_len: usize,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    AddPositional { x: Var, pos: Var, seq: usize },
    Act(Var, Activation),
    Scale(Var, f64),
    Concat(Var, Var),
    Gather { table: Var, idx: Vec<usize> },
    SelectPosition { x: Var, seq: usize, pos: usize },
    AttnScores { q: Var, k: Var, shape: AttnShape, scale: f64 },
    SoftmaxRows(Var),
    MixConst { x: Var, alpha: f64, base: Matrix },
    AttnApply { probs: Var, v: Var, shape: AttnShape },
    CrossEntropy { logits: Var, targets: Vec<usize> },
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: Matrix,
}

/// Recorded forward computation.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Adjoints {
    grads: Vec<Option<Matrix>>,
}

impl Adjoints {
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads[v.0].as_ref()
    }

    /// The adjoint, or zeros shaped like `like` when nothing flowed into `v`.
    pub fn get_or_zeros(&self, v: Var, like: &Matrix) -> Matrix {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(like.rows(), like.cols()))
    }

    pub fn take(&mut self, v: Var) -> Option<Matrix> {
        self.grads[v.0].take()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Matrix) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).matmul(self.value(b));
        self.push(Op::MatMul(a, b), value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).add(self.value(b));
        self.push(Op::Add(a, b), value)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.shape(), vb.shape(), "mul: shape mismatch");
        let value = va.zip_with(vb, |x, y| x * y);
        self.push(Op::Mul(a, b), value)
    }

    /// Adds a `1 × n` row to every row of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Var {
        let value = eval_add_row(self.value(x), self.value(bias));
        self.push(Op::AddRow(x, bias), value)
    }

    /// Adds row `i` of `pos` to every row at sequence position `i`.
    pub fn add_positional(&mut self, x: Var, pos: Var, seq: usize) -> Var {
        let value = eval_add_positional(self.value(x), self.value(pos), seq);
        self.push(Op::AddPositional { x, pos, seq }, value)
    }

    pub fn activation(&mut self, x: Var, act: Activation) -> Var {
        let value = self.value(x).map(|v| act.apply(v));
        self.push(Op::Act(x, act), value)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.activation(x, Activation::Relu)
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let value = self.value(x).scale(s);
        self.push(Op::Scale(x, s), value)
    }

    /// `|x|` composed as `relu(x) + relu(−x)`.
    pub fn abs(&mut self, x: Var) -> Var {
        let pos = self.relu(x);
        let neg = self.scale(x, -1.0);
        let neg = self.relu(neg);
        self.add(pos, neg)
    }

    /// Column-wise concatenation `[a | b]`.
    pub fn concat(&mut self, a: Var, b: Var) -> Var {
        let value = eval_concat(self.value(a), self.value(b));
        self.push(Op::Concat(a, b), value)
    }

    /// Rows of `table` selected by `idx`.
    pub fn gather(&mut self, table: Var, idx: Vec<usize>) -> Var {
        let value = self.value(table).select_rows(&idx);
        self.push(Op::Gather { table, idx }, value)
    }

    /// Row `pos` of every length-`seq` group.
    pub fn select_position(&mut self, x: Var, seq: usize, pos: usize) -> Var {
        let value = eval_select_position(self.value(x), seq, pos);
        self.push(Op::SelectPosition { x, seq, pos }, value)
    }

    /// Scaled per-head dot products between queries and keys.
    pub fn attn_scores(&mut self, q: Var, k: Var, shape: AttnShape, scale: f64) -> Var {
        let value = eval_attn_scores(self.value(q), self.value(k), shape, scale);
        self.push(Op::AttnScores { q, k, shape, scale }, value)
    }

    pub fn softmax_rows(&mut self, x: Var) -> Var {
        let value = eval_softmax_rows(self.value(x));
        self.push(Op::SoftmaxRows(x), value)
    }

    /// `alpha·x + (1 − alpha)·base`, with `base` (`q_len × k_len`) repeated
    /// over every `(example, head)` block of score rows.
    pub fn mix_const(&mut self, x: Var, alpha: f64, base: Matrix) -> Var {
        let value = eval_mix_const(self.value(x), alpha, &base);
        self.push(Op::MixConst { x, alpha, base }, value)
    }

    /// Attention-weighted sums of values, per head.
    pub fn attn_apply(&mut self, probs: Var, v: Var, shape: AttnShape) -> Var {
        let value = eval_attn_apply(self.value(probs), self.value(v), shape);
        self.push(Op::AttnApply { probs, v, shape }, value)
    }

    /// Mean softmax cross-entropy over rows, as a `1 × 1` node.
    pub fn cross_entropy(&mut self, logits: Var, targets: Vec<usize>) -> Var {
        let value = eval_cross_entropy(self.value(logits), &targets);
        self.push(Op::CrossEntropy { logits, targets }, value)
    }

    /// Reverse sweep from `output` seeded with `seed` (same shape as the output).
    pub fn backward(&self, output: Var, seed: Matrix) -> Adjoints {
        assert_eq!(
            seed.shape(),
            self.value(output).shape(),
            "backward: seed shape mismatch"
        );
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(seed);
        for i in (0..=output.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Adjoints { grads }
    }

    /// Sign pattern of every ReLU input on the tape (`true` = active).
    pub fn relu_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        for node in &self.nodes {
            if let Op::Act(x, Activation::Relu) = node.op {
                out.extend(self.value(x).as_slice().iter().map(|&v| v > 0.0));
            }
        }
        out
    }

    /// Recomputes every node from the leaf values and the recorded ops.
    pub fn replay(&self) -> Vec<Matrix> {
        let mut vals: Vec<Matrix> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = |x: &Var| &vals[x.0];
            let value = match &node.op {
                Op::Leaf => node.value.clone(),
                Op::MatMul(a, b) => v(a).matmul(v(b)),
                Op::Add(a, b) => v(a).add(v(b)),
                Op::Mul(a, b) => v(a).zip_with(v(b), |x, y| x * y),
                Op::AddRow(x, b) => eval_add_row(v(x), v(b)),
                Op::AddPositional { x, pos, seq } => eval_add_positional(v(x), v(pos), *seq),
                Op::Act(x, act) => v(x).map(|t| act.apply(t)),
                Op::Scale(x, s) => v(x).scale(*s),
                Op::Concat(a, b) => eval_concat(v(a), v(b)),
                Op::Gather { table, idx } => v(table).select_rows(idx),
                Op::SelectPosition { x, seq, pos } => eval_select_position(v(x), *seq, *pos),
                Op::AttnScores { q, k, shape, scale } => {
                    eval_attn_scores(v(q), v(k), *shape, *scale)
                }
                Op::SoftmaxRows(x) => eval_softmax_rows(v(x)),
                Op::MixConst { x, alpha, base } => eval_mix_const(v(x), *alpha, base),
                Op::AttnApply { probs, v: vv, shape } => eval_attn_apply(v(probs), v(vv), *shape),
                Op::CrossEntropy { logits, targets } => eval_cross_entropy(v(logits), targets),
            };
            vals.push(value);
        }
        vals
    }

    fn propagate(&self, i: usize, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let node = &self.nodes[i];
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                accumulate_gemm(grads, *a, g, false, vb, true);
                accumulate_gemm(grads, *b, va, true, g, false);
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, g.clone());
                accumulate(grads, *b, g.clone());
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                accumulate(grads, *a, g.zip_with(vb, |x, y| x * y));
                accumulate(grads, *b, g.zip_with(va, |x, y| x * y));
            }
            Op::AddRow(x, b) => {
                accumulate(grads, *x, g.clone());
                let mut gb = Matrix::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (o, v) in gb.as_mut_slice().iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
                accumulate(grads, *b, gb);
            }
            Op::AddPositional { x, pos, seq } => {
                accumulate(grads, *x, g.clone());
                let vp = self.value(*pos);
                let mut gp = Matrix::zeros(vp.rows(), vp.cols());
                for r in 0..g.rows() {
                    for (o, v) in gp.row_mut(r % seq).iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
                accumulate(grads, *pos, gp);
            }
            Op::Act(x, act) => {
                let vx = self.value(*x);
                accumulate(grads, *x, g.zip_with(vx, |gi, xi| gi * act.derivative(xi)));
            }
            Op::Scale(x, s) => accumulate(grads, *x, g.scale(*s)),
            Op::Concat(a, b) => {
                let ca = self.value(*a).cols();
                let cb = self.value(*b).cols();
                let ga = Matrix::from_fn(g.rows(), ca, |r, c| g[(r, c)]);
                let gb = Matrix::from_fn(g.rows(), cb, |r, c| g[(r, ca + c)]);
                accumulate(grads, *a, ga);
                accumulate(grads, *b, gb);
            }
            Op::Gather { table, idx } => {
                let vt = self.value(*table);
                let mut gt = Matrix::zeros(vt.rows(), vt.cols());
                for (r, &t) in idx.iter().enumerate() {
                    for (o, v) in gt.row_mut(t).iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
                accumulate(grads, *table, gt);
            }
            Op::SelectPosition { x, seq, pos } => {
                let vx = self.value(*x);
                let mut gx = Matrix::zeros(vx.rows(), vx.cols());
                for r in 0..g.rows() {
                    gx.row_mut(r * seq + pos).copy_from_slice(g.row(r));
                }
                accumulate(grads, *x, gx);
            }
            Op::AttnScores { q, k, shape, scale } => {
                let (vq, vk) = (self.value(*q), self.value(*k));
                let mut gq = Matrix::zeros(vq.rows(), vq.cols());
                let mut gk = Matrix::zeros(vk.rows(), vk.cols());
                let batch = vq.rows() / shape.q_len;
                for b in 0..batch {
                    for h in 0..shape.heads {
                        let cols = h * shape.head_dim..(h + 1) * shape.head_dim;
                        for i in 0..shape.q_len {
                            let srow = (b * shape.heads + h) * shape.q_len + i;
                            let qr = b * shape.q_len + i;
                            for j in 0..shape.k_len {
                                let kr = b * shape.k_len + j;
                                let gs = g[(srow, j)] * scale;
                                if gs == 0.0 {
                                    continue;
                                }
                                for c in cols.clone() {
                                    gq[(qr, c)] += gs * vk[(kr, c)];
                                    gk[(kr, c)] += gs * vq[(qr, c)];
                                }
                            }
                        }
                    }
                }
                accumulate(grads, *q, gq);
                accumulate(grads, *k, gk);
            }
            Op::SoftmaxRows(x) => {
                let y = &node.value;
                let mut gx = Matrix::zeros(y.rows(), y.cols());
                for r in 0..y.rows() {
                    let inner: f64 = g.row(r).iter().zip(y.row(r)).map(|(a, b)| a * b).sum();
                    for ((o, &gi), &yi) in gx.row_mut(r).iter_mut().zip(g.row(r)).zip(y.row(r)) {
                        *o = yi * (gi - inner);
                    }
                }
                accumulate(grads, *x, gx);
            }
            Op::MixConst { x, alpha, .. } => accumulate(grads, *x, g.scale(*alpha)),
            Op::AttnApply { probs, v, shape } => {
                let (vp, vv) = (self.value(*probs), self.value(*v));
                let mut gp = Matrix::zeros(vp.rows(), vp.cols());
                let mut gv = Matrix::zeros(vv.rows(), vv.cols());
                let batch = g.rows() / shape.q_len;
                for b in 0..batch {
                    for h in 0..shape.heads {
                        let cols = h * shape.head_dim..(h + 1) * shape.head_dim;
                        for i in 0..shape.q_len {
                            let prow = (b * shape.heads + h) * shape.q_len + i;
                            let orow = b * shape.q_len + i;
                            for j in 0..shape.k_len {
                                let vrow = b * shape.k_len + j;
                                let pij = vp[(prow, j)];
                                let mut acc = 0.0;
                                for c in cols.clone() {
                                    acc += g[(orow, c)] * vv[(vrow, c)];
                                    gv[(vrow, c)] += pij * g[(orow, c)];
                                }
                                gp[(prow, j)] += acc;
                            }
                        }
                    }
                }
                accumulate(grads, *probs, gp);
                accumulate(grads, *v, gv);
            }
            Op::CrossEntropy { logits, targets } => {
                let scale = g[(0, 0)] / targets.len() as f64;
                let mut gl = eval_softmax_rows(self.value(*logits));
                for (r, &t) in targets.iter().enumerate() {
                    gl[(r, t)] -= 1.0;
                }
                gl.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
                accumulate(grads, *logits, gl);
            }
        }
    }
}

fn accumulate(grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn accumulate_gemm(
    grads: &mut [Option<Matrix>],
    v: Var,
    a: &Matrix,
    ta: bool,
    b: &Matrix,
    tb: bool,
) {
    let rows = if ta { a.cols() } else { a.rows() };
    let cols = if tb { b.rows() } else { b.cols() };
    match &mut grads[v.0] {
        Some(existing) => gemm_into(1.0, a, ta, b, tb, 1.0, existing),
        slot @ None => {
            let mut out = Matrix::zeros(rows, cols);
            gemm_into(1.0, a, ta, b, tb, 0.0, &mut out);
            *slot = Some(out);
        }
    }
}

fn eval_add_row(x: &Matrix, bias: &Matrix) -> Matrix {
    assert_eq!((1, x.cols()), bias.shape(), "add_row: bias shape mismatch");
    let mut out = x.clone();
    for r in 0..out.rows() {
        for (o, b) in out.row_mut(r).iter_mut().zip(bias.as_slice()) {
            *o += b;
        }
    }
    out
}

fn eval_add_positional(x: &Matrix, pos: &Matrix, seq: usize) -> Matrix {
    assert_eq!(pos.rows(), seq, "add_positional: expected {seq} position rows");
    assert_eq!(x.rows() % seq, 0, "add_positional: ragged batch");
    let mut out = x.clone();
    for r in 0..out.rows() {
        for (o, p) in out.row_mut(r).iter_mut().zip(pos.row(r % seq)) {
            *o += p;
        }
    }
    out
}

fn eval_concat(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.rows(), b.rows(), "concat: row mismatch");
    Matrix::from_fn(a.rows(), a.cols() + b.cols(), |r, c| {
        if c < a.cols() {
            a[(r, c)]
        } else {
            b[(r, c - a.cols())]
        }
    })
}

fn eval_select_position(x: &Matrix, seq: usize, pos: usize) -> Matrix {
    assert!(pos < seq && x.rows() % seq == 0, "select_position: bad layout");
    let idx: Vec<usize> = (0..x.rows() / seq).map(|b| b * seq + pos).collect();
    x.select_rows(&idx)
}

fn eval_attn_scores(q: &Matrix, k: &Matrix, shape: AttnShape, scale: f64) -> Matrix {
    let batch = q.rows() / shape.q_len;
    assert_eq!(k.rows(), batch * shape.k_len, "attn_scores: key rows");
    let mut out = Matrix::zeros(batch * shape.heads * shape.q_len, shape.k_len);
    for b in 0..batch {
        for h in 0..shape.heads {
            let cols = h * shape.head_dim..(h + 1) * shape.head_dim;
            for i in 0..shape.q_len {
                let qrow = &q.row(b * shape.q_len + i)[cols.clone()];
                for j in 0..shape.k_len {
                    let krow = &k.row(b * shape.k_len + j)[cols.clone()];
                    let s: f64 = qrow.iter().zip(krow).map(|(x, y)| x * y).sum();
                    out[((b * shape.heads + h) * shape.q_len + i, j)] = s * scale;
                }
            }
        }
    }
    out
}

fn eval_softmax_rows(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        row.iter_mut().for_each(|v| *v /= total);
    }
    out
}

fn eval_mix_const(x: &Matrix, alpha: f64, base: &Matrix) -> Matrix {
    assert_eq!(x.cols(), base.cols(), "mix_const: key length mismatch");
    let q_len = base.rows();
    Matrix::from_fn(x.rows(), x.cols(), |r, c| {
        alpha * x[(r, c)] + (1.0 - alpha) * base[(r % q_len, c)]
    })
}

fn eval_attn_apply(p: &Matrix, v: &Matrix, shape: AttnShape) -> Matrix {
    let batch = p.rows() / (shape.heads * shape.q_len);
    assert_eq!(v.rows(), batch * shape.k_len, "attn_apply: value rows");
    let mut out = Matrix::zeros(batch * shape.q_len, v.cols());
    for b in 0..batch {
        for h in 0..shape.heads {
            let cols = h * shape.head_dim..(h + 1) * shape.head_dim;
            for i in 0..shape.q_len {
                let prow = (b * shape.heads + h) * shape.q_len + i;
                let orow = b * shape.q_len + i;
                for j in 0..shape.k_len {
                    let w = p[(prow, j)];
                    let vrow = b * shape.k_len + j;
                    for c in cols.clone() {
                        out[(orow, c)] += w * v[(vrow, c)];
                    }
                }
            }
        }
    }
    out
}

fn eval_cross_entropy(logits: &Matrix, targets: &[usize]) -> Matrix {
    assert_eq!(logits.rows(), targets.len(), "cross_entropy: target count");
    let mut total = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[t];
    }
    Matrix::filled(1, 1, total / targets.len().max(1) as f64)
}

impl std::str::FromStr for Activation {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s {
            "relu" => Ok(Self::Relu),
            "gelu" => Ok(Self::Gelu),
            "linear" => Ok(Self::Linear),
            other => Err(crate::error::Error::Config(format!(
                "unknown activation `{other}`"
            ))),
        }
    }
}

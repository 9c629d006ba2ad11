//! Reverse-mode differentiation over a closed operation set.
//!
//! The tape records exactly the operations the message-passing models
//! need — matrix products, broadcast adds, the pointwise nonlinearities,
//! neighbor softmax, segmented pooling (mean / max / signed power-mean),
//! and BCE-with-logits — rather than a general tensor framework, so every
//! adjoint below can be checked against finite differences directly.
//!
//! A tape is confined to one forward/backward pass over one graph; node
//! ids are indices in insertion order, which is already a topological
//! order, so the backward pass is a single reverse scan that visits every
//! node exactly once.

use std::rc::Rc;

use crate::error::Error;
use crate::numerics::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Value(usize);

/// Pooling flavor used by both the graph readout and the local
/// (last-layer) aggregator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoolKind {
    Mean,
    /// Subgradient credits the first maximal row (in member order) so
    /// ties break deterministically.
    Max,
    /// Signed power mean: transform entries by `sgn(x)(|x|+eps)^p`,
    /// average within the segment, then apply the signed 1/p root with
    /// the same stabilizer.
    PowerMean { p: f64, epsilon: f64 },
}

/// Rows grouped into segments (node neighborhoods, or one segment for a
/// whole-graph readout). Member lists keep ascending row order; that is
/// the canonical order all segment reductions use.
#[derive(Debug)]
pub struct SegmentIndex {
    members: Vec<Vec<usize>>,
    membership: Vec<usize>,
}

impl SegmentIndex {
    pub fn new(membership: Vec<usize>, num_segments: usize) -> Self {
        let mut members = vec![Vec::new(); num_segments];
        for (row, &seg) in membership.iter().enumerate() {
            members[seg].push(row);
        }
        SegmentIndex { members, membership }
    }

    /// One segment covering `rows` rows: whole-matrix pooling.
    pub fn single(rows: usize) -> Self {
        SegmentIndex::new(vec![0; rows], 1)
    }

    pub fn num_segments(&self) -> usize {
        self.members.len()
    }
}

/// Cheap to clone: tensors appear only as the (small) BCE target row,
/// and index structures are reference-counted.
#[derive(Clone)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    AddRow(usize, usize),
    Scale(usize, f64),
    Relu(usize),
    LeakyRelu(usize, f64),
    Sigmoid(usize),
    GatherRows(usize, Rc<Vec<usize>>),
    MulColBroadcast(usize, usize),
    NeighborSoftmax(usize, Rc<SegmentIndex>),
    SegmentPool(usize, Rc<SegmentIndex>, PoolKind),
    BceWithLogits(usize, Tensor),
    SumAll(usize),
}

struct Node {
    op: Op,
    value: Tensor,
    grad: Option<Tensor>,
    needs_grad: bool,
}

/// Recording tape. Create one per forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    fn push(&mut self, op: Op, value: Tensor, needs_grad: bool) -> Value {
        self.nodes.push(Node { op, value, grad: None, needs_grad });
        Value(self.nodes.len() - 1)
    }

    fn needs(&self, id: usize) -> bool {
        self.nodes[id].needs_grad
    }

    pub fn value(&self, v: Value) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Accumulated gradient of `v` after [`Tape::backward`]; `None` if
    /// nothing flowed into it.
    pub fn grad(&self, v: Value) -> Option<&Tensor> {
        self.nodes[v.0].grad.as_ref()
    }

    /// Tracked leaf: gradients are accumulated (parameters).
    pub fn param(&mut self, t: Tensor) -> Value {
        self.push(Op::Leaf, t, true)
    }

    /// Untracked leaf: inputs and structural constants.
    pub fn constant(&mut self, t: Tensor) -> Value {
        self.push(Op::Leaf, t, false)
    }

    pub fn matmul(&mut self, a: Value, b: Value) -> Value {
        let v = self.nodes[a.0].value.matmul(&self.nodes[b.0].value);
        let ng = self.needs(a.0) || self.needs(b.0);
        self.push(Op::MatMul(a.0, b.0), v, ng)
    }

    pub fn add(&mut self, a: Value, b: Value) -> Value {
        let v = self.nodes[a.0].value.add(&self.nodes[b.0].value);
        let ng = self.needs(a.0) || self.needs(b.0);
        self.push(Op::Add(a.0, b.0), v, ng)
    }

    /// `a` (n×d) plus a 1×d row vector broadcast over rows.
    pub fn add_row(&mut self, a: Value, row: Value) -> Value {
        let m = &self.nodes[a.0].value;
        let r = &self.nodes[row.0].value;
        assert_eq!(r.rows(), 1);
        assert_eq!(r.cols(), m.cols());
        let mut out = m.clone();
        for i in 0..out.rows() {
            for j in 0..out.cols() {
                *out.get_mut(i, j) += r.get(0, j);
            }
        }
        let ng = self.needs(a.0) || self.needs(row.0);
        self.push(Op::AddRow(a.0, row.0), out, ng)
    }

    pub fn scale(&mut self, a: Value, s: f64) -> Value {
        let v = self.nodes[a.0].value.scale(s);
        let ng = self.needs(a.0);
        self.push(Op::Scale(a.0, s), v, ng)
    }

    pub fn relu(&mut self, a: Value) -> Value {
        let mut v = self.nodes[a.0].value.clone();
        for x in v.data_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let ng = self.needs(a.0);
        self.push(Op::Relu(a.0), v, ng)
    }

    pub fn leaky_relu(&mut self, a: Value, slope: f64) -> Value {
        let mut v = self.nodes[a.0].value.clone();
        for x in v.data_mut() {
            if *x < 0.0 {
                *x *= slope;
            }
        }
        let ng = self.needs(a.0);
        self.push(Op::LeakyRelu(a.0, slope), v, ng)
    }

    pub fn sigmoid(&mut self, a: Value) -> Value {
        let mut v = self.nodes[a.0].value.clone();
        for x in v.data_mut() {
            *x = sigmoid(*x);
        }
        let ng = self.needs(a.0);
        self.push(Op::Sigmoid(a.0), v, ng)
    }

    /// Select rows of `a` by index (with repetition allowed).
    pub fn gather_rows(&mut self, a: Value, idx: Rc<Vec<usize>>) -> Value {
        let m = &self.nodes[a.0].value;
        let mut out = Tensor::zeros(idx.len(), m.cols());
        for (i, &r) in idx.iter().enumerate() {
            out.row_mut(i).copy_from_slice(m.row(r));
        }
        let ng = self.needs(a.0);
        self.push(Op::GatherRows(a.0, idx), out, ng)
    }

    /// Scale row i of `a` by `col[i]` where `col` is n×1.
    pub fn mul_col_broadcast(&mut self, a: Value, col: Value) -> Value {
        let m = &self.nodes[a.0].value;
        let c = &self.nodes[col.0].value;
        assert_eq!(c.cols(), 1);
        assert_eq!(c.rows(), m.rows());
        let mut out = m.clone();
        for i in 0..out.rows() {
            let s = c.get(i, 0);
            for x in out.row_mut(i) {
                *x *= s;
            }
        }
        let ng = self.needs(a.0) || self.needs(col.0);
        self.push(Op::MulColBroadcast(a.0, col.0), out, ng)
    }

    /// Softmax of an n×1 score vector within each segment (a node's
    /// incoming edges, including its self-loop). Max-shifted for
    /// stability.
    pub fn neighbor_softmax(&mut self, scores: Value, seg: Rc<SegmentIndex>) -> Value {
        let s = &self.nodes[scores.0].value;
        assert_eq!(s.cols(), 1);
        assert_eq!(s.rows(), seg.membership.len());
        let mut out = Tensor::zeros(s.rows(), 1);
        for members in &seg.members {
            if members.is_empty() {
                continue;
            }
            let mx = members.iter().map(|&r| s.get(r, 0)).fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for &r in members {
                z += (s.get(r, 0) - mx).exp();
            }
            for &r in members {
                out.set(r, 0, (s.get(r, 0) - mx).exp() / z);
            }
        }
        let ng = self.needs(scores.0);
        self.push(Op::NeighborSoftmax(scores.0, seg), out, ng)
    }

    /// Column-wise pooling of `a` within each segment; output is
    /// num_segments × d. A single segment is a whole-graph readout.
    pub fn segment_pool(&mut self, a: Value, seg: Rc<SegmentIndex>, kind: PoolKind) -> Value {
        let m = &self.nodes[a.0].value;
        assert_eq!(m.rows(), seg.membership.len());
        let d = m.cols();
        let mut out = Tensor::zeros(seg.num_segments(), d);
        for (s, members) in seg.members.iter().enumerate() {
            assert!(!members.is_empty(), "empty pooling segment");
            match kind {
                PoolKind::Mean => {
                    let inv = 1.0 / members.len() as f64;
                    for &r in members {
                        for j in 0..d {
                            *out.get_mut(s, j) += m.get(r, j) * inv;
                        }
                    }
                }
                PoolKind::Max => {
                    for j in 0..d {
                        let mut best = f64::NEG_INFINITY;
                        for &r in members {
                            if m.get(r, j) > best {
                                best = m.get(r, j);
                            }
                        }
                        out.set(s, j, best);
                    }
                }
                PoolKind::PowerMean { p, epsilon } => {
                    for j in 0..d {
                        let mut acc = 0.0;
                        for &r in members {
                            let x = m.get(r, j);
                            acc += x.signum() * (x.abs() + epsilon).powf(p);
                        }
                        let sbar = acc / members.len() as f64;
                        out.set(s, j, sbar.signum() * (sbar.abs() + epsilon).powf(1.0 / p));
                    }
                }
            }
        }
        let ng = self.needs(a.0);
        self.push(Op::SegmentPool(a.0, seg, kind), out, ng)
    }

    /// Mean over entries of the stabilized binary cross entropy between
    /// `logits` and constant targets; output is 1×1.
    pub fn bce_with_logits(&mut self, logits: Value, targets: Tensor) -> Value {
        let z = &self.nodes[logits.0].value;
        assert_eq!((z.rows(), z.cols()), (targets.rows(), targets.cols()));
        let mut total = 0.0;
        for (zi, yi) in z.data().iter().zip(targets.data()) {
            total += zi.max(0.0) - zi * yi + (-zi.abs()).exp().ln_1p();
        }
        let v = Tensor::from_vec(1, 1, vec![total / z.data().len() as f64]);
        let ng = self.needs(logits.0);
        self.push(Op::BceWithLogits(logits.0, targets), v, ng)
    }

    /// Sum of all entries; output is 1×1.
    pub fn sum_all(&mut self, a: Value) -> Value {
        let s: f64 = self.nodes[a.0].value.data().iter().sum();
        let ng = self.needs(a.0);
        self.push(Op::SumAll(a.0), Tensor::from_vec(1, 1, vec![s]), ng)
    }

    /// Reverse pass from a scalar loss. Gradients accumulate on every
    /// node with `needs_grad`; read them off with [`Tape::grad`].
    pub fn backward(&mut self, loss: Value) -> Result<(), Error> {
        let lt = &self.nodes[loss.0].value;
        if lt.rows() != 1 || lt.cols() != 1 {
            return Err(Error::ShapeMismatch("backward requires a 1×1 loss".into()));
        }
        lt.check_finite("loss")?;
        self.nodes[loss.0].grad = Some(Tensor::from_vec(1, 1, vec![1.0]));

        for i in (0..self.nodes.len()).rev() {
            if self.nodes[i].grad.is_none() || !self.nodes[i].needs_grad {
                continue;
            }
            let g = self.nodes[i].grad.take().unwrap();
            self.propagate(i, &g)?;
            self.nodes[i].grad = Some(g);
        }

        for node in &self.nodes {
            if let (Op::Leaf, Some(g), true) = (&node.op, &node.grad, node.needs_grad) {
                g.check_finite("gradient")?;
            }
        }
        Ok(())
    }

    fn accumulate(&mut self, target: usize, delta: Tensor) {
        if !self.nodes[target].needs_grad {
            return;
        }
        match &mut self.nodes[target].grad {
            Some(g) => {
                for (gi, di) in g.data_mut().iter_mut().zip(delta.data()) {
                    *gi += di;
                }
            }
            slot @ None => *slot = Some(delta),
        }
    }

    fn propagate(&mut self, i: usize, g: &Tensor) -> Result<(), Error> {
        // Operand ids always precede i, so reads below never alias the
        // gradient slot being written. The op is cloned up front to end
        // the borrow of nodes[i] before accumulation starts.
        let op = self.nodes[i].op.clone();
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.needs(a) {
                    let d = g.matmul(&self.nodes[b].value.transpose());
                    self.accumulate(a, d);
                }
                if self.needs(b) {
                    let d = self.nodes[a].value.transpose().matmul(g);
                    self.accumulate(b, d);
                }
            }
            Op::Add(a, b) => {
                self.accumulate(a, g.clone());
                self.accumulate(b, g.clone());
            }
            Op::AddRow(a, row) => {
                self.accumulate(a, g.clone());
                if self.needs(row) {
                    let mut d = Tensor::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for c in 0..g.cols() {
                            *d.get_mut(0, c) += g.get(r, c);
                        }
                    }
                    self.accumulate(row, d);
                }
            }
            Op::Scale(a, s) => {
                self.accumulate(a, g.scale(s));
            }
            Op::Relu(a) => {
                let mut d = g.clone();
                for (di, xi) in d.data_mut().iter_mut().zip(self.nodes[a].value.data()) {
                    if *xi <= 0.0 {
                        *di = 0.0;
                    }
                }
                self.accumulate(a, d);
            }
            Op::LeakyRelu(a, slope) => {
                let mut d = g.clone();
                for (di, xi) in d.data_mut().iter_mut().zip(self.nodes[a].value.data()) {
                    if *xi <= 0.0 {
                        *di *= slope;
                    }
                }
                self.accumulate(a, d);
            }
            Op::Sigmoid(a) => {
                let mut d = g.clone();
                for (di, yi) in d.data_mut().iter_mut().zip(self.nodes[i].value.data()) {
                    *di *= yi * (1.0 - yi);
                }
                self.accumulate(a, d);
            }
            Op::GatherRows(a, idx) => {
                let mut d = Tensor::zeros(self.nodes[a].value.rows(), g.cols());
                for (out_row, &src_row) in idx.iter().enumerate() {
                    for c in 0..g.cols() {
                        *d.get_mut(src_row, c) += g.get(out_row, c);
                    }
                }
                self.accumulate(a, d);
            }
            Op::MulColBroadcast(a, col) => {
                if self.needs(a) {
                    let mut d = g.clone();
                    let c = &self.nodes[col].value;
                    for r in 0..d.rows() {
                        let s = c.get(r, 0);
                        for x in d.row_mut(r) {
                            *x *= s;
                        }
                    }
                    self.accumulate(a, d);
                }
                if self.needs(col) {
                    let av = &self.nodes[a].value;
                    let mut d = Tensor::zeros(av.rows(), 1);
                    for r in 0..av.rows() {
                        let mut dot = 0.0;
                        for c in 0..av.cols() {
                            dot += g.get(r, c) * av.get(r, c);
                        }
                        d.set(r, 0, dot);
                    }
                    self.accumulate(col, d);
                }
            }
            Op::NeighborSoftmax(a, seg) => {
                let y = &self.nodes[i].value;
                let mut d = Tensor::zeros(y.rows(), 1);
                for members in &seg.members {
                    let mut dot = 0.0;
                    for &r in members {
                        dot += g.get(r, 0) * y.get(r, 0);
                    }
                    for &r in members {
                        d.set(r, 0, y.get(r, 0) * (g.get(r, 0) - dot));
                    }
                }
                self.accumulate(a, d);
            }
            Op::SegmentPool(a, seg, kind) => {
                let x = &self.nodes[a].value;
                let d_cols = x.cols();
                let mut d = Tensor::zeros(x.rows(), d_cols);
                for (s, members) in seg.members.iter().enumerate() {
                    match kind {
                        PoolKind::Mean => {
                            let inv = 1.0 / members.len() as f64;
                            for &r in members {
                                for j in 0..d_cols {
                                    *d.get_mut(r, j) += g.get(s, j) * inv;
                                }
                            }
                        }
                        PoolKind::Max => {
                            for j in 0..d_cols {
                                let mut best_row = members[0];
                                let mut best = x.get(members[0], j);
                                for &r in &members[1..] {
                                    if x.get(r, j) > best {
                                        best = x.get(r, j);
                                        best_row = r;
                                    }
                                }
                                *d.get_mut(best_row, j) += g.get(s, j);
                            }
                        }
                        PoolKind::PowerMean { p, epsilon } => {
                            let n = members.len() as f64;
                            for j in 0..d_cols {
                                let mut acc = 0.0;
                                for &r in members {
                                    let xi = x.get(r, j);
                                    acc += xi.signum() * (xi.abs() + epsilon).powf(p);
                                }
                                let sbar = acc / n;
                                // d h / d x_i = (1/N) (|s̄|+ε)^(1/p−1) (|x_i|+ε)^(p−1)
                                let outer = (sbar.abs() + epsilon).powf(1.0 / p - 1.0) / n;
                                for &r in members {
                                    let xi = x.get(r, j);
                                    let inner = (xi.abs() + epsilon).powf(p - 1.0);
                                    *d.get_mut(r, j) += g.get(s, j) * outer * inner;
                                }
                            }
                        }
                    }
                }
                self.accumulate(a, d);
            }
            Op::BceWithLogits(a, targets) => {
                let z = &self.nodes[a].value;
                let scale = g.get(0, 0) / z.data().len() as f64;
                let mut d = Tensor::zeros(z.rows(), z.cols());
                for (k, (zi, yi)) in z.data().iter().zip(targets.data()).enumerate() {
                    d.data_mut()[k] = scale * (sigmoid(*zi) - yi);
                }
                self.accumulate(a, d);
            }
            Op::SumAll(a) => {
                let x = &self.nodes[a].value;
                let mut d = Tensor::zeros(x.rows(), x.cols());
                let s = g.get(0, 0);
                for v in d.data_mut() {
                    *v = s;
                }
                self.accumulate(a, d);
            }
        }
        Ok(())
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SplitMix64;

    /// Central finite differences of `f` at `x0`, perturbing one entry of
    /// the tracked leaf at a time.
    fn finite_diff(x0: &Tensor, h: f64, f: impl Fn(&Tensor) -> f64) -> Tensor {
        let mut g = Tensor::zeros(x0.rows(), x0.cols());
        for k in 0..x0.data().len() {
            let mut xp = x0.clone();
            xp.data_mut()[k] += h;
            let mut xm = x0.clone();
            xm.data_mut()[k] -= h;
            g.data_mut()[k] = (f(&xp) - f(&xm)) / (2.0 * h);
        }
        g
    }

    fn max_rel_err(a: &Tensor, b: &Tensor) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-3))
            .fold(0.0, f64::max)
    }

    #[test]
    fn sum_of_leaf_has_unit_gradient() {
        let mut t = Tape::new();
        let x = t.param(Tensor::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]));
        let loss = t.sum_all(x);
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap().data(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn bce_at_zero_logit_matches_closed_form() {
        let mut t = Tape::new();
        let z = t.param(Tensor::from_vec(1, 1, vec![0.0]));
        let loss = t.bce_with_logits(z, Tensor::from_vec(1, 1, vec![1.0]));
        assert!((t.value(loss).get(0, 0) - std::f64::consts::LN_2).abs() < 1e-15);
        t.backward(loss).unwrap();
        assert!((t.grad(z).unwrap().get(0, 0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn bce_saturated_logit_does_not_overflow() {
        let mut t = Tape::new();
        let z = t.param(Tensor::from_vec(1, 1, vec![50.0]));
        let loss = t.bce_with_logits(z, Tensor::from_vec(1, 1, vec![1.0]));
        let v = t.value(loss).get(0, 0);
        assert!(v.is_finite() && v >= 0.0 && v <= 1e-20, "loss {v}");
    }

    #[test]
    fn composite_graph_matches_finite_differences() {
        // A small expression exercising matmul, add_row, relu, sigmoid,
        // neighbor softmax, gather and pooling in one pass.
        let mut rng = SplitMix64::new(11);
        let mut x0 = Tensor::zeros(5, 3);
        for v in x0.data_mut() {
            *v = rng.next_gaussian();
        }
        let mut w0 = Tensor::zeros(3, 4);
        for v in w0.data_mut() {
            *v = rng.next_gaussian() * 0.5;
        }
        let targets = Tensor::from_vec(1, 4, vec![1.0, 0.0, 1.0, 0.0]);
        let idx = Rc::new(vec![0usize, 1, 2, 3, 4, 0, 2]);
        let seg = Rc::new(SegmentIndex::new(vec![0, 0, 1, 1, 1, 0, 1], 2));

        let eval = |w: &Tensor, want_grad: bool| -> (f64, Option<Tensor>) {
            let mut t = Tape::new();
            let x = t.constant(x0.clone());
            let wv = t.param(w.clone());
            let h = t.matmul(x, wv);
            let h = t.relu(h);
            let gathered = t.gather_rows(h, Rc::clone(&idx));
            let pooled = t.segment_pool(
                gathered,
                Rc::clone(&seg),
                PoolKind::PowerMean { p: 2.0, epsilon: 1e-6 },
            );
            let whole = Rc::new(SegmentIndex::single(2));
            let s = t.segment_pool(pooled, Rc::clone(&whole), PoolKind::Mean);
            let loss = t.bce_with_logits(s, targets.clone());
            let lv = t.value(loss).get(0, 0);
            if want_grad {
                t.backward(loss).unwrap();
                (lv, Some(t.grad(wv).unwrap().clone()))
            } else {
                (lv, None)
            }
        };

        let (_, g) = eval(&w0, true);
        let g = g.unwrap();
        let fd = finite_diff(&w0, 1e-5, |w| eval(w, false).0);
        assert!(max_rel_err(&g, &fd) < 1e-6, "rel err {}", max_rel_err(&g, &fd));
    }

    #[test]
    fn neighbor_softmax_rows_sum_to_one_per_segment() {
        let mut t = Tape::new();
        let seg = Rc::new(SegmentIndex::new(vec![0, 0, 0, 1, 1], 2));
        let s = t.param(Tensor::from_vec(5, 1, vec![0.3, -1.2, 2.0, 0.0, 0.5]));
        let y = t.neighbor_softmax(s, Rc::clone(&seg));
        let yv = t.value(y);
        let s0: f64 = (0..3).map(|r| yv.get(r, 0)).sum();
        let s1: f64 = (3..5).map(|r| yv.get(r, 0)).sum();
        assert!((s0 - 1.0).abs() < 1e-12 && (s1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_pool_ties_credit_first_row() {
        let mut t = Tape::new();
        let x = t.param(Tensor::from_vec(3, 1, vec![2.0, 2.0, 1.0]));
        let seg = Rc::new(SegmentIndex::single(3));
        let p = t.segment_pool(x, seg, PoolKind::Max);
        let loss = t.sum_all(p);
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap().data(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn backward_is_bitwise_deterministic() {
        let run = || {
            let mut rng = SplitMix64::new(5);
            let mut x0 = Tensor::zeros(4, 3);
            for v in x0.data_mut() {
                *v = rng.next_gaussian();
            }
            let mut t = Tape::new();
            let x = t.param(x0);
            let seg = Rc::new(SegmentIndex::single(4));
            let p = t.segment_pool(x, seg, PoolKind::PowerMean { p: 3.0, epsilon: 1e-6 });
            let loss = t.bce_with_logits(p, Tensor::from_vec(1, 3, vec![1.0, 0.0, 1.0]));
            t.backward(loss).unwrap();
            t.grad(x).unwrap().data().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_is_reported() {
        let mut t = Tape::new();
        let x = t.param(Tensor::from_vec(1, 1, vec![1e308]));
        let y = t.scale(x, 1e308); // overflows to inf
        let loss = t.sum_all(y);
        assert!(t.backward(loss).is_err());
    }
}

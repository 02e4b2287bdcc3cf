//! Reverse-mode differentiation over a dynamically recorded graph.
//!
//! Each forward op appends a node holding its output value and the handles
//! of its operands. [`Graph::backward`] walks the nodes in reverse order and
//! accumulates adjoints into every node that transitively depends on a
//! tracked leaf. Constants (inputs, frozen weights) never receive gradients
//! but still pass them through to tracked operands.

use crate::error::{Error, Result};
use crate::nn::activation::Activation;
use crate::nn::loss;
use crate::tensor::Tensor;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// `W[m×n] · x[n]`
    MatVec(Var, Var),
    /// `x[m] · W[m×n]`
    VecMat(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Act(Var, Activation),
    Clamp(Var, f64, f64),
    Sum(Var),
    Dot(Var, Var),
    AddN(Vec<Var>),
    Bce(Var, f64),
    CrossEntropy(Var, usize),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    tracked: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Adjoints produced by [`Graph::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::ShapeMismatch { op, left: a.shape().to_vec(), right: b.shape().to_vec() }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A constant: gradients flow through it but are not collected.
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push_raw(value, Op::Leaf, false)
    }

    /// A differentiable leaf.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push_raw(value, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn is_tracked(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    fn push_raw(&mut self, value: Tensor, op: Op, tracked: bool) -> Var {
        self.nodes.push(Node { value, op, tracked });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, name: &'static str, value: Tensor, op: Op, operands: &[Var]) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("output of {name}")));
        }
        let tracked = operands.iter().any(|v| self.nodes[v.0].tracked);
        Ok(self.push_raw(value, op, tracked))
    }

    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (wt, xt) = (self.value(w), self.value(x));
        let (m, n) = wt.dims2().ok_or_else(|| mismatch("matvec", wt, xt))?;
        if xt.shape() != [n] {
            return Err(mismatch("matvec", wt, xt));
        }
        let (wv, xv) = (wt.values(), xt.values());
        let out = (0..m).map(|i| wv[i * n..(i + 1) * n].iter().zip(xv).map(|(a, b)| a * b).sum()).collect();
        self.push("matvec", Tensor::from_parts(vec![m], out), Op::MatVec(w, x), &[w, x])
    }

    pub fn vecmat(&mut self, x: Var, w: Var) -> Result<Var> {
        let (xt, wt) = (self.value(x), self.value(w));
        let (m, n) = wt.dims2().ok_or_else(|| mismatch("vecmat", xt, wt))?;
        if xt.shape() != [m] {
            return Err(mismatch("vecmat", xt, wt));
        }
        let (xv, wv) = (xt.values(), wt.values());
        let mut out = vec![0.0; n];
        for (i, &xi) in xv.iter().enumerate() {
            for (o, &wij) in out.iter_mut().zip(&wv[i * n..(i + 1) * n]) {
                *o += xi * wij;
            }
        }
        self.push("vecmat", Tensor::from_parts(vec![n], out), Op::VecMat(x, w), &[x, w])
    }

    fn binary(&mut self, name: &'static str, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Result<Var> {
        let (at, bt) = (self.value(a), self.value(b));
        if at.shape() != bt.shape() {
            return Err(mismatch(name, at, bt));
        }
        let out = at.zip_map(bt, f);
        self.push(name, out, op, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        let out = self.value(a).map(|v| v * c);
        self.push("scale", out, Op::Scale(a, c), &[a])
    }

    pub fn activation(&mut self, a: Var, kind: Activation) -> Result<Var> {
        let out = kind.forward(self.value(a));
        self.push("activation", out, Op::Act(a, kind), &[a])
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var> {
        let out = self.value(a).map(|v| v.clamp(lo, hi));
        self.push("clamp", out, Op::Clamp(a, lo, hi), &[a])
    }

    /// `W x + b`.
    pub fn linear(&mut self, w: Var, b: Var, x: Var) -> Result<Var> {
        let wx = self.matvec(w, x)?;
        self.add(wx, b)
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).sum();
        self.push("sum", Tensor::from_parts(vec![1], vec![s]), Op::Sum(a), &[a])
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (at, bt) = (self.value(a), self.value(b));
        if at.shape() != bt.shape() {
            return Err(mismatch("dot", at, bt));
        }
        let s = at.dot(bt);
        self.push("dot", Tensor::from_parts(vec![1], vec![s]), Op::Dot(a, b), &[a, b])
    }

    /// Elementwise sum of same-shaped operands.
    pub fn add_n(&mut self, terms: &[Var]) -> Result<Var> {
        let first = *terms.first().ok_or_else(|| Error::InvalidArgument("add_n of zero terms".into()))?;
        let mut acc = self.value(first).clone();
        for &t in &terms[1..] {
            let tv = self.value(t);
            if tv.shape() != acc.shape() {
                return Err(mismatch("add_n", &acc, tv));
            }
            acc.add_assign(tv);
        }
        self.push("add_n", acc, Op::AddN(terms.to_vec()), terms)
    }

    /// Binary cross-entropy of a one-element probability against `label`.
    pub fn bce(&mut self, pred: Var, label: f64) -> Result<Var> {
        let p = self.value(pred);
        if p.len() != 1 {
            return Err(Error::InvalidArgument(format!("bce expects a scalar prediction, got shape {:?}", p.shape())));
        }
        let l = loss::bce_loss(p.item(), label)?;
        self.push("bce", Tensor::from_parts(vec![1], vec![l]), Op::Bce(pred, label), &[pred])
    }

    pub fn cross_entropy(&mut self, logits: Var, class: usize) -> Result<Var> {
        let l = loss::cross_entropy(self.value(logits), class)?;
        self.push("cross_entropy", Tensor::from_parts(vec![1], vec![l]), Op::CrossEntropy(logits, class), &[logits])
    }

    /// Reverse sweep from a one-element output.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        let out = self.value(output);
        if out.len() != 1 {
            return Err(Error::InvalidArgument(format!("backward needs a scalar output, got shape {:?}", out.shape())));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(Tensor::full(out.shape(), 1.0));

        for idx in (0..=output.0).rev() {
            let node = &self.nodes[idx];
            if !node.tracked {
                continue;
            }
            let Some(gout) = grads[idx].take() else { continue };
            match &node.op {
                Op::Leaf => {}
                &Op::MatVec(w, x) => {
                    let (wt, xt) = (self.value(w), self.value(x));
                    let (m, n) = wt.dims2().expect("checked in forward");
                    let g = gout.values();
                    if self.is_tracked(w) {
                        let xv = xt.values();
                        let mut dw = Vec::with_capacity(m * n);
                        for &gi in g {
                            dw.extend(xv.iter().map(|&xj| gi * xj));
                        }
                        accumulate(&mut grads, w, Tensor::from_parts(vec![m, n], dw));
                    }
                    if self.is_tracked(x) {
                        let wv = wt.values();
                        let mut dx = vec![0.0; n];
                        for (i, &gi) in g.iter().enumerate() {
                            for (d, &wij) in dx.iter_mut().zip(&wv[i * n..(i + 1) * n]) {
                                *d += gi * wij;
                            }
                        }
                        accumulate(&mut grads, x, Tensor::from_parts(vec![n], dx));
                    }
                }
                &Op::VecMat(x, w) => {
                    let (xt, wt) = (self.value(x), self.value(w));
                    let (m, n) = wt.dims2().expect("checked in forward");
                    let g = gout.values();
                    if self.is_tracked(w) {
                        let mut dw = Vec::with_capacity(m * n);
                        for &xi in xt.values() {
                            dw.extend(g.iter().map(|&gj| xi * gj));
                        }
                        accumulate(&mut grads, w, Tensor::from_parts(vec![m, n], dw));
                    }
                    if self.is_tracked(x) {
                        let wv = wt.values();
                        let dx =
                            (0..m).map(|i| wv[i * n..(i + 1) * n].iter().zip(g).map(|(a, b)| a * b).sum()).collect();
                        accumulate(&mut grads, x, Tensor::from_parts(vec![m], dx));
                    }
                }
                &Op::Add(a, b) => {
                    self.pass(&mut grads, a, || gout.clone());
                    self.pass(&mut grads, b, || gout.clone());
                }
                &Op::Sub(a, b) => {
                    self.pass(&mut grads, a, || gout.clone());
                    self.pass(&mut grads, b, || gout.map(|v| -v));
                }
                &Op::Mul(a, b) => {
                    self.pass(&mut grads, a, || gout.zip_map(self.value(b), |g, y| g * y));
                    self.pass(&mut grads, b, || gout.zip_map(self.value(a), |g, x| g * x));
                }
                &Op::Scale(a, c) => self.pass(&mut grads, a, || gout.map(|v| v * c)),
                &Op::Act(a, kind) => {
                    self.pass(&mut grads, a, || gout.zip_map(self.value(a), |g, x| g * kind.derivative(x)))
                }
                &Op::Clamp(a, lo, hi) => self
                    .pass(&mut grads, a, || gout.zip_map(self.value(a), |g, x| if x > lo && x < hi { g } else { 0.0 })),
                &Op::Sum(a) => {
                    let g = gout.item();
                    self.pass(&mut grads, a, || Tensor::full(self.value(a).shape(), g));
                }
                &Op::Dot(a, b) => {
                    let g = gout.item();
                    self.pass(&mut grads, a, || self.value(b).map(|y| g * y));
                    self.pass(&mut grads, b, || self.value(a).map(|x| g * x));
                }
                Op::AddN(terms) => {
                    for &t in terms {
                        self.pass(&mut grads, t, || gout.clone());
                    }
                }
                &Op::Bce(p, y) => {
                    let d = loss::bce_grad(self.value(p).item(), y)?;
                    let g = gout.item();
                    self.pass(&mut grads, p, || Tensor::from_parts(vec![1], vec![g * d]));
                }
                &Op::CrossEntropy(z, class) => {
                    let d = loss::cross_entropy_grad(self.value(z), class)?;
                    let g = gout.item();
                    self.pass(&mut grads, z, || d.map(|v| v * g));
                }
            }
            // Leaves keep their adjoint; intermediates are released.
            if matches!(node.op, Op::Leaf) {
                grads[idx] = Some(gout);
            }
        }
        Ok(Gradients { grads })
    }

    fn pass(&self, grads: &mut [Option<Tensor>], target: Var, g: impl FnOnce() -> Tensor) {
        if self.is_tracked(target) {
            accumulate(grads, target, g());
        }
    }
}

fn accumulate(grads: &mut [Option<Tensor>], target: Var, g: Tensor) {
    match &mut grads[target.0] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

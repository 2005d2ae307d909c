//! Reverse-mode tape over the operations the temporal models use.
//!
//! Nodes are appended in evaluation order, so the tape index is already a
//! topological order; backward walks it in reverse and accumulates parent
//! gradients in a fixed order. Every forward value and every gradient is
//! checked for NaN/Inf.

use super::conv::{self, ConvDims};
use super::lstm::{self, LstmCache, LstmDims};
use super::scalar::{gemm, MatRef};
use super::{Real, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<F> {
    Leaf,
    Conv1d {
        x: Var,
        w: Var,
        b: Var,
        dims: ConvDims,
        col: Option<Vec<F>>,
    },
    Dense {
        x: Var,
        w: Var,
        b: Var,
        rows: usize,
    },
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Softmax(Var),
    LogSoftmax(Var),
    Add(Var, Var),
    Scale(Var, F),
    Concat(Vec<Var>),
    MeanTime {
        x: Var,
        batch: usize,
        time: usize,
    },
    LastTime {
        x: Var,
        batch: usize,
        time: usize,
    },
    CrossEntropy {
        logp: Var,
        labels: Vec<usize>,
    },
    Lstm {
        x: Var,
        w_ih: Var,
        w_hh: Var,
        b: Var,
        dims: LstmDims,
        cache: LstmCache<F>,
    },
}

impl<F> Op<F> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Conv1d { .. } => "conv1d_dilated",
            Op::Dense { .. } => "dense",
            Op::Relu(_) => "relu",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Softmax(_) => "softmax",
            Op::LogSoftmax(_) => "log_softmax",
            Op::Add(..) => "add",
            Op::Scale(..) => "scale",
            Op::Concat(_) => "concat",
            Op::MeanTime { .. } => "mean_time",
            Op::LastTime { .. } => "last_time",
            Op::CrossEntropy { .. } => "cross_entropy",
            Op::Lstm { .. } => "lstm",
        }
    }
}

#[derive(Debug)]
struct Node<F> {
    value: Tensor<F>,
    op: Op<F>,
    requires_grad: bool,
}

/// Weights of one LSTM direction.
#[derive(Clone, Copy, Debug)]
pub struct LstmWeights {
    pub w_ih: Var,
    pub w_hh: Var,
    pub bias: Var,
}

/// A single computation. Not shared across threads; build one per worker.
#[derive(Debug, Default)]
pub struct Graph<F> {
    nodes: Vec<Node<F>>,
}

/// Gradients produced by [`Graph::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients<F> {
    grads: Vec<Option<Tensor<F>>>,
}

impl<F: Real> Gradients<F> {
    pub fn get(&self, v: Var) -> Option<&Tensor<F>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<F>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

/// Splits a `[B, T, C]` or `[T, C]` shape into `(B, T, C)`.
fn btc(shape: &[usize], what: &str) -> Result<(usize, usize, usize)> {
    match *shape {
        [t, c] => Ok((1, t, c)),
        [b, t, c] => Ok((b, t, c)),
        _ => Err(Error::config(format!(
            "{what}: expected a [T, C] or [B, T, C] tensor, got {shape:?}"
        ))),
    }
}

fn with_last(shape: &[usize], last: usize) -> Vec<usize> {
    let mut s = shape.to_vec();
    *s.last_mut().expect("non-scalar shape") = last;
    s
}

impl<F: Real> Graph<F> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor<F>) -> Var {
        self.leaf(value, true)
    }

    /// Non-trainable leaf (data).
    pub fn input(&mut self, value: Tensor<F>) -> Var {
        self.leaf(value, false)
    }

    fn leaf(&mut self, value: Tensor<F>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        &self.nodes[v.0].value
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Tensor<F>, op: Op<F>, parents: &[Var]) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("forward {}", op.name())));
        }
        let requires_grad = parents.iter().any(|&p| self.needs(p));
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Same-length dilated convolution over time.
    ///
    /// `x: [T, Cin]` or `[B, T, Cin]`, `w: [Cout, Cin, k]`, `b: [Cout]`. Causal
    /// mode left-pads `(k-1)*dilation` zeros; acausal mode pads half of that
    /// on each side and needs the total to be even.
    pub fn conv1d_dilated(&mut self, x: Var, w: Var, b: Var, dilation: usize, causal: bool) -> Result<Var> {
        let (batch, time, cin) = btc(self.value(x).shape(), "conv1d_dilated input")?;
        let (cout, k) = match *self.value(w).shape() {
            [co, ci, k] if ci == cin => (co, k),
            ref s => {
                return Err(Error::config(format!(
                    "conv1d_dilated: weight shape {s:?} incompatible with {cin} input channels"
                )))
            }
        };
        if self.value(b).shape() != [cout] {
            return Err(Error::config(format!(
                "conv1d_dilated: bias shape {:?}, expected [{cout}]",
                self.value(b).shape()
            )));
        }
        if dilation == 0 {
            return Err(Error::config("conv1d_dilated: dilation must be >= 1"));
        }
        let total_pad = (k - 1) * dilation;
        if !causal && !total_pad.is_multiple_of(2) {
            return Err(Error::config(format!(
                "conv1d_dilated: acausal padding needs an even total, got (k-1)*dilation = {total_pad}"
            )));
        }
        let dims = ConvDims {
            batch,
            time,
            cin,
            cout,
            k,
            dilation,
            pad_left: if causal { total_pad } else { total_pad / 2 },
        };
        let (out, col) = conv::forward(self.value(x).data(), self.value(w).data(), self.value(b).data(), &dims);
        let shape = with_last(self.value(x).shape(), cout);
        self.push(
            Tensor::from_parts(shape, out),
            Op::Conv1d { x, w, b, dims, col },
            &[x, w, b],
        )
    }

    /// Row-wise affine map `x · wᵀ + b` over the last axis. `w: [Dout, Din]`.
    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xs = self.value(x).shape().to_vec();
        let din = *xs.last().unwrap_or(&0);
        let dout = match *self.value(w).shape() {
            [o, i] if i == din => o,
            ref s => {
                return Err(Error::config(format!(
                    "dense: weight shape {s:?} incompatible with input {xs:?}"
                )))
            }
        };
        if self.value(b).shape() != [dout] {
            return Err(Error::config(format!(
                "dense: bias shape {:?}, expected [{dout}]",
                self.value(b).shape()
            )));
        }
        let rows = self.value(x).len() / din;
        let mut out = vec![F::zero(); rows * dout];
        gemm(
            MatRef::new(self.value(x).data(), rows, din),
            MatRef::t(self.value(w).data(), dout, din),
            &mut out,
            false,
        );
        let bias = self.value(b).data();
        for row in out.chunks_exact_mut(dout) {
            for (v, &bb) in row.iter_mut().zip(bias) {
                *v += bb;
            }
        }
        self.push(
            Tensor::from_parts(with_last(&xs, dout), out),
            Op::Dense { x, w, b, rows },
            &[x, w, b],
        )
    }

    fn map(&mut self, x: Var, f: impl Fn(F) -> F, op: Op<F>) -> Result<Var> {
        let v = self.value(x);
        let out = v.data().iter().map(|&a| f(a)).collect();
        let t = Tensor::from_parts(v.shape().to_vec(), out);
        self.push(t, op, &[x])
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.map(x, |a| if a > F::zero() { a } else { F::zero() }, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.map(x, |a| F::one() / (F::one() + (-a).exp()), Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.map(x, |a| a.tanh(), Op::Tanh(x))
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        let c = v.last_dim();
        let mut out = v.data().to_vec();
        for row in out.chunks_exact_mut(c) {
            softmax_row(row);
        }
        let t = Tensor::from_parts(v.shape().to_vec(), out);
        self.push(t, Op::Softmax(x), &[x])
    }

    /// Log-softmax over the last axis, computed with max subtraction.
    pub fn log_softmax(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        let c = v.last_dim();
        let mut out = v.data().to_vec();
        for row in out.chunks_exact_mut(c) {
            log_softmax_row(row);
        }
        let t = Tensor::from_parts(v.shape().to_vec(), out);
        self.push(t, Op::LogSoftmax(x), &[x])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(Error::config(format!(
                "add: shape mismatch {:?} vs {:?}",
                va.shape(),
                vb.shape()
            )));
        }
        let out = va.data().iter().zip(vb.data()).map(|(&p, &q)| p + q).collect();
        let t = Tensor::from_parts(va.shape().to_vec(), out);
        self.push(t, Op::Add(a, b), &[a, b])
    }

    pub fn scale(&mut self, x: Var, factor: F) -> Result<Var> {
        self.map(x, |a| a * factor, Op::Scale(x, factor))
    }

    /// Concatenates along the last axis; leading dimensions must agree.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or_else(|| Error::config("concat: no inputs"))?;
        let lead = {
            let s = self.value(*first).shape();
            s[..s.len() - 1].to_vec()
        };
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let s = self.value(p).shape();
            if s[..s.len() - 1] != lead[..] {
                return Err(Error::config(format!(
                    "concat: leading shape {:?} vs {lead:?}",
                    &s[..s.len() - 1]
                )));
            }
            widths.push(*s.last().unwrap());
        }
        let total: usize = widths.iter().sum();
        let rows: usize = lead.iter().product();
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (&p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p).data()[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead;
        shape.push(total);
        self.push(Tensor::from_parts(shape, out), Op::Concat(parts.to_vec()), parts)
    }

    /// Mean over the time axis: `[B, T, C] -> [B, C]` (`[T, C] -> [1, C]`).
    pub fn mean_time(&mut self, x: Var) -> Result<Var> {
        let (batch, time, c) = btc(self.value(x).shape(), "mean_time")?;
        let data = self.value(x).data();
        let inv = F::one() / F::from_f64(time as f64);
        let mut out = vec![F::zero(); batch * c];
        for b in 0..batch {
            let acc = &mut out[b * c..(b + 1) * c];
            for t in 0..time {
                for (a, &v) in acc.iter_mut().zip(&data[(b * time + t) * c..(b * time + t + 1) * c]) {
                    *a += v;
                }
            }
            acc.iter_mut().for_each(|a| *a *= inv);
        }
        self.push(
            Tensor::from_parts(vec![batch, c], out),
            Op::MeanTime { x, batch, time },
            &[x],
        )
    }

    /// Final frame: `[B, T, C] -> [B, C]` (`[T, C] -> [1, C]`).
    pub fn last_time(&mut self, x: Var) -> Result<Var> {
        let (batch, time, c) = btc(self.value(x).shape(), "last_time")?;
        let data = self.value(x).data();
        let mut out = Vec::with_capacity(batch * c);
        for b in 0..batch {
            let row = b * time + time - 1;
            out.extend_from_slice(&data[row * c..(row + 1) * c]);
        }
        self.push(
            Tensor::from_parts(vec![batch, c], out),
            Op::LastTime { x, batch, time },
            &[x],
        )
    }

    /// Mean negative log-likelihood of `labels` under `logp: [N, C]`.
    pub fn cross_entropy(&mut self, logp: Var, labels: &[usize]) -> Result<Var> {
        let v = self.value(logp);
        let (n, c) = match *v.shape() {
            [n, c] => (n, c),
            ref s => return Err(Error::config(format!("cross_entropy: expected [N, C], got {s:?}"))),
        };
        if labels.len() != n {
            return Err(Error::data(format!(
                "cross_entropy: {} labels for {n} rows",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::data(format!(
                "cross_entropy: label {bad} out of range for {c} classes"
            )));
        }
        let sum: F = labels.iter().enumerate().map(|(i, &l)| -v.data()[i * c + l]).sum();
        let loss = sum / F::from_f64(n as f64);
        self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logp,
                labels: labels.to_vec(),
            },
            &[logp],
        )
    }

    /// One LSTM direction over `x: [B, T, Din]` (or `[T, Din]`), producing
    /// `[.., T, H]`. `reverse` runs the recurrence from the last frame back.
    pub fn lstm_direction(&mut self, x: Var, wts: LstmWeights, reverse: bool) -> Result<Var> {
        let xshape = self.value(x).shape().to_vec();
        let (batch, time, input) = btc(&xshape, "lstm input")?;
        let hidden = match *self.value(wts.w_hh).shape() {
            [g, h] if g == 4 * h && h > 0 => h,
            ref s => return Err(Error::config(format!("lstm: w_hh shape {s:?}, expected [4H, H]"))),
        };
        if self.value(wts.w_ih).shape() != [4 * hidden, input] {
            return Err(Error::config(format!(
                "lstm: w_ih shape {:?}, expected [{}, {input}]",
                self.value(wts.w_ih).shape(),
                4 * hidden
            )));
        }
        if self.value(wts.bias).shape() != [4 * hidden] {
            return Err(Error::config(format!(
                "lstm: bias shape {:?}, expected [{}]",
                self.value(wts.bias).shape(),
                4 * hidden
            )));
        }
        let dims = LstmDims {
            batch,
            time,
            input,
            hidden,
            reverse,
        };
        let (out, cache) = lstm::forward(
            self.value(x).data(),
            self.value(wts.w_ih).data(),
            self.value(wts.w_hh).data(),
            self.value(wts.bias).data(),
            &dims,
        );
        self.push(
            Tensor::from_parts(with_last(&xshape, hidden), out),
            Op::Lstm {
                x,
                w_ih: wts.w_ih,
                w_hh: wts.w_hh,
                b: wts.bias,
                dims,
                cache,
            },
            &[x, wts.w_ih, wts.w_hh, wts.bias],
        )
    }

    /// LSTM layer; with `backward` weights the reversed-time pass is
    /// concatenated after the forward pass at every frame.
    pub fn lstm_layer(&mut self, x: Var, forward: LstmWeights, backward: Option<LstmWeights>) -> Result<Var> {
        let fwd = self.lstm_direction(x, forward, false)?;
        match backward {
            Some(bw) => {
                let bwd = self.lstm_direction(x, bw, true)?;
                self.concat(&[fwd, bwd])
            }
            None => Ok(fwd),
        }
    }

    /// Reverse pass from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients<F>> {
        if self.value(loss).len() != 1 {
            return Err(Error::config(format!(
                "backward: loss must be a scalar, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<F>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(self.value(loss).shape(), F::one()));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            for (parent, contrib) in self.node_backward(node, &g) {
                if !contrib.is_finite() {
                    return Err(Error::NonFinite(format!("backward {}", node.op.name())));
                }
                match &mut grads[parent.0] {
                    Some(acc) => acc.add_assign(&contrib),
                    slot @ None => *slot = Some(contrib),
                }
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn node_backward(&self, node: &Node<F>, g: &Tensor<F>) -> Vec<(Var, Tensor<F>)> {
        let mut out = Vec::new();
        let gd = g.data();
        let y = &node.value;
        let same = |v: Var, data: Vec<F>| (v, Tensor::from_parts(self.value(v).shape().to_vec(), data));
        match &node.op {
            Op::Leaf => {}
            Op::Conv1d { x, w, b, dims, col } => {
                let grads = conv::backward(
                    self.value(*x).data(),
                    self.value(*w).data(),
                    col.as_deref(),
                    gd,
                    dims,
                    self.needs(*x),
                );
                if let Some(dx) = grads.dx {
                    out.push(same(*x, dx));
                }
                if self.needs(*w) {
                    out.push(same(*w, grads.dw));
                }
                if self.needs(*b) {
                    out.push(same(*b, grads.db));
                }
            }
            Op::Dense { x, w, b, rows } => {
                let (dout, din) = (self.value(*w).shape()[0], self.value(*w).shape()[1]);
                if self.needs(*x) {
                    let mut dx = vec![F::zero(); rows * din];
                    gemm(
                        MatRef::new(gd, *rows, dout),
                        MatRef::new(self.value(*w).data(), dout, din),
                        &mut dx,
                        false,
                    );
                    out.push(same(*x, dx));
                }
                if self.needs(*w) {
                    let mut dw = vec![F::zero(); dout * din];
                    gemm(
                        MatRef::t(gd, *rows, dout),
                        MatRef::new(self.value(*x).data(), *rows, din),
                        &mut dw,
                        false,
                    );
                    out.push(same(*w, dw));
                }
                if self.needs(*b) {
                    let mut db = vec![F::zero(); dout];
                    for row in gd.chunks_exact(dout) {
                        for (acc, &v) in db.iter_mut().zip(row) {
                            *acc += v;
                        }
                    }
                    out.push(same(*b, db));
                }
            }
            Op::Relu(x) => {
                let dx = gd
                    .iter()
                    .zip(y.data())
                    .map(|(&gv, &yv)| if yv > F::zero() { gv } else { F::zero() })
                    .collect();
                out.push(same(*x, dx));
            }
            Op::Sigmoid(x) => {
                let dx = gd
                    .iter()
                    .zip(y.data())
                    .map(|(&gv, &yv)| gv * yv * (F::one() - yv))
                    .collect();
                out.push(same(*x, dx));
            }
            Op::Tanh(x) => {
                let dx = gd
                    .iter()
                    .zip(y.data())
                    .map(|(&gv, &yv)| gv * (F::one() - yv * yv))
                    .collect();
                out.push(same(*x, dx));
            }
            Op::Softmax(x) => {
                let c = y.last_dim();
                let mut dx = vec![F::zero(); gd.len()];
                for ((dxr, gr), yr) in dx
                    .chunks_exact_mut(c)
                    .zip(gd.chunks_exact(c))
                    .zip(y.data().chunks_exact(c))
                {
                    let dot: F = gr.iter().zip(yr).map(|(&a, &b)| a * b).sum();
                    for ((d, &gv), &yv) in dxr.iter_mut().zip(gr).zip(yr) {
                        *d = yv * (gv - dot);
                    }
                }
                out.push(same(*x, dx));
            }
            Op::LogSoftmax(x) => {
                let c = y.last_dim();
                let mut dx = vec![F::zero(); gd.len()];
                for ((dxr, gr), yr) in dx
                    .chunks_exact_mut(c)
                    .zip(gd.chunks_exact(c))
                    .zip(y.data().chunks_exact(c))
                {
                    let total: F = gr.iter().copied().sum();
                    for ((d, &gv), &yv) in dxr.iter_mut().zip(gr).zip(yr) {
                        *d = gv - yv.exp() * total;
                    }
                }
                out.push(same(*x, dx));
            }
            Op::Add(a, b) => {
                if self.needs(*a) {
                    out.push(same(*a, gd.to_vec()));
                }
                if self.needs(*b) {
                    out.push(same(*b, gd.to_vec()));
                }
            }
            Op::Scale(x, f) => {
                out.push(same(*x, gd.iter().map(|&v| v * *f).collect()));
            }
            Op::Concat(parts) => {
                let total = y.last_dim();
                let rows = y.len() / total;
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).last_dim();
                    if self.needs(p) {
                        let mut dp = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            dp.extend_from_slice(&gd[r * total + offset..r * total + offset + w]);
                        }
                        out.push(same(p, dp));
                    }
                    offset += w;
                }
            }
            Op::MeanTime { x, batch, time } => {
                let c = y.last_dim();
                let inv = F::one() / F::from_f64(*time as f64);
                let mut dx = Vec::with_capacity(batch * time * c);
                for b in 0..*batch {
                    for _ in 0..*time {
                        dx.extend(gd[b * c..(b + 1) * c].iter().map(|&v| v * inv));
                    }
                }
                out.push(same(*x, dx));
            }
            Op::LastTime { x, batch, time } => {
                let c = y.last_dim();
                let mut dx = vec![F::zero(); batch * time * c];
                for b in 0..*batch {
                    let row = b * time + time - 1;
                    dx[row * c..(row + 1) * c].copy_from_slice(&gd[b * c..(b + 1) * c]);
                }
                out.push(same(*x, dx));
            }
            Op::CrossEntropy { logp, labels } => {
                let c = self.value(*logp).last_dim();
                let n = labels.len();
                let scale = -gd[0] / F::from_f64(n as f64);
                let mut dx = vec![F::zero(); n * c];
                for (i, &l) in labels.iter().enumerate() {
                    dx[i * c + l] = scale;
                }
                out.push(same(*logp, dx));
            }
            Op::Lstm {
                x,
                w_ih,
                w_hh,
                b,
                dims,
                cache,
            } => {
                let grads = lstm::backward(
                    self.value(*x).data(),
                    self.value(*w_ih).data(),
                    self.value(*w_hh).data(),
                    cache,
                    gd,
                    dims,
                    self.needs(*x),
                );
                if let Some(dx) = grads.dx {
                    out.push(same(*x, dx));
                }
                if self.needs(*w_ih) {
                    out.push(same(*w_ih, grads.dw_ih));
                }
                if self.needs(*w_hh) {
                    out.push(same(*w_hh, grads.dw_hh));
                }
                if self.needs(*b) {
                    out.push(same(*b, grads.db));
                }
            }
        }
        out
    }
}

pub(crate) fn softmax_row<F: Real>(row: &mut [F]) {
    let max = row.iter().copied().fold(F::neg_infinity(), F::max);
    let mut total = F::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

pub(crate) fn log_softmax_row<F: Real>(row: &mut [F]) {
    let max = row.iter().copied().fold(F::neg_infinity(), F::max);
    let lse = row.iter().map(|&v| (v - max).exp()).sum::<F>().ln() + max;
    for v in row.iter_mut() {
        *v -= lse;
    }
}

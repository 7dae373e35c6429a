//! Layers with explicit forward tapes and analytic backward passes.
//!
//! Batched layouts: node-level tensors are `[B * N, F]` (graph-major),
//! sequences are `[B, L, C]` (channels last), dense inputs are `[B, F]`.

use std::cmp::Ordering;

use rand::Rng;

use super::init::xavier_with;
use super::Tensor;
use crate::topo::NormalizedAdjacency;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, t: &mut Tensor) {
        if self == Activation::Relu {
            t.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }

    /// Gradient w.r.t. the pre-activation, given the post-activation output.
    fn backward(self, output: &Tensor, grad: &Tensor) -> Tensor {
        match self {
            Activation::Identity => grad.clone(),
            Activation::Relu => {
                let mut g = grad.clone();
                for (gv, &y) in g.data_mut().iter_mut().zip(output.data()) {
                    if y <= 0.0 {
                        *gv = 0.0;
                    }
                }
                g
            }
        }
    }
}

fn add_bias(t: &mut Tensor, bias: &Tensor) {
    let c = bias.len();
    for row in t.data_mut().chunks_mut(c) {
        for (v, b) in row.iter_mut().zip(bias.data()) {
            *v += b;
        }
    }
}

fn bias_grad(g: &Tensor, width: usize) -> Tensor {
    let mut out = vec![0.0; width];
    for row in g.data().chunks(width) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    Tensor::from_vec(&[width], out)
}

/// `ReLU(S X W)` per graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphConv {
    pub weight: Tensor,
}

#[derive(Debug, Clone)]
pub struct GraphConvTape {
    input: Tensor,
    output: Tensor,
}

impl GraphConvTape {
    pub fn output(&self) -> &Tensor {
        &self.output
    }
}

impl GraphConv {
    pub fn new(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Self {
        GraphConv { weight: xavier_with(&[fan_in, fan_out], rng) }
    }

    pub fn input_width(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn output_width(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward(&self, graphs: &[&NormalizedAdjacency], x: &Tensor) -> (Tensor, GraphConvTape) {
        let n = graphs.first().map_or(0, |g| g.size());
        assert_eq!(x.rows(), graphs.len() * n, "graph conv expects B*N input rows");
        assert_eq!(x.cols(), self.input_width(), "graph conv input width");
        let projected = x.matmul(&self.weight);
        let mut out = aggregate(graphs, &projected);
        Activation::Relu.apply(&mut out);
        let tape = GraphConvTape { input: x.clone(), output: out.clone() };
        (out, tape)
    }

    /// Returns `(dW, dX)`.
    pub fn backward(&self, graphs: &[&NormalizedAdjacency], tape: &GraphConvTape, grad_out: &Tensor) -> (Tensor, Tensor) {
        let g_agg = Activation::Relu.backward(&tape.output, grad_out);
        let f = g_agg.cols();
        let n = graphs.first().map_or(0, |g| g.size());
        let mut g_proj = Tensor::zeros(&[g_agg.rows(), f]);
        for (b, s) in graphs.iter().enumerate() {
            for i in 0..n {
                let gi = g_agg.row(b * n + i).to_vec();
                for j in 0..n {
                    let sij = s.get(i, j);
                    if sij != 0.0 {
                        for (o, v) in g_proj.row_mut(b * n + j).iter_mut().zip(&gi) {
                            *o += sij * v;
                        }
                    }
                }
            }
        }
        let g_w = tape.input.t_matmul(&g_proj);
        let g_x = g_proj.matmul_t(&self.weight);
        (g_w, g_x)
    }
}

/// `S Y` per graph. Each output row sums its neighbor terms in an order fixed
/// by (edge weight, neighbor row) rather than by node id, so relabeling the
/// nodes permutes the result rows bit-for-bit.
fn aggregate(graphs: &[&NormalizedAdjacency], y: &Tensor) -> Tensor {
    let n = graphs.first().map_or(0, |g| g.size());
    let f = y.cols();
    let mut out = Tensor::zeros(&[y.rows(), f]);
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (b, s) in graphs.iter().enumerate() {
        assert_eq!(s.size(), n, "all graphs in a batch share a node count");
        let base = b * n;
        for i in 0..n {
            order.clear();
            order.extend((0..n).filter_map(|j| {
                let w = s.get(i, j);
                (w != 0.0).then_some((w, j))
            }));
            order.sort_by(|a, c| {
                a.0.total_cmp(&c.0).then_with(|| lex_cmp(y.row(base + a.1), y.row(base + c.1)))
            });
            let row = out.row_mut(base + i);
            for &(w, j) in &order {
                for (o, v) in row.iter_mut().zip(y.row(base + j)) {
                    *o += w * v;
                }
            }
        }
    }
    out
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

#[derive(Debug, Clone)]
pub struct SortPoolTape {
    /// Per graph: `perm[r]` is the node placed at output row `r`.
    pub perms: Vec<Vec<usize>>,
    widths: Vec<usize>,
}

/// Concatenates the per-node outputs of every graph-conv layer and sorts each
/// graph's rows by descending final-layer row sum; ties fall back to earlier
/// layers' sums and finally to node id. All `N` rows are kept.
pub fn sortpool_forward(layers: &[&Tensor], nodes: usize) -> (Tensor, SortPoolTape) {
    assert!(!layers.is_empty(), "sort pooling needs at least one layer");
    let rows = layers[0].rows();
    assert!(layers.iter().all(|t| t.rows() == rows), "layer outputs must share row count");
    assert_eq!(rows % nodes.max(1), 0);
    let graphs = rows.checked_div(nodes).unwrap_or(0);
    let widths: Vec<usize> = layers.iter().map(|t| t.cols()).collect();
    let total: usize = widths.iter().sum();
    let mut out = Tensor::zeros(&[rows, total]);
    let mut perms = Vec::with_capacity(graphs);
    for b in 0..graphs {
        // sums[l][i]: row sum of node i in layer l
        let sums: Vec<Vec<f64>> = layers
            .iter()
            .map(|t| (0..nodes).map(|i| t.row(b * nodes + i).iter().sum()).collect())
            .collect();
        let mut perm: Vec<usize> = (0..nodes).collect();
        perm.sort_by(|&u, &v| {
            sums.iter()
                .rev()
                .map(|s| s[v].total_cmp(&s[u]))
                .find(|o| o.is_ne())
                .unwrap_or_else(|| u.cmp(&v))
        });
        for (r, &node) in perm.iter().enumerate() {
            let dst = out.row_mut(b * nodes + r);
            let mut off = 0;
            for t in layers {
                let src = t.row(b * nodes + node);
                dst[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        perms.push(perm);
    }
    (out, SortPoolTape { perms, widths })
}

/// Routes gradients back through the stored permutation, split per layer.
pub fn sortpool_backward(tape: &SortPoolTape, grad_out: &Tensor) -> Vec<Tensor> {
    let nodes = tape.perms.first().map_or(0, |p| p.len());
    let rows = grad_out.rows();
    let mut grads: Vec<Tensor> = tape.widths.iter().map(|&w| Tensor::zeros(&[rows, w])).collect();
    for (b, perm) in tape.perms.iter().enumerate() {
        for (r, &node) in perm.iter().enumerate() {
            let src = grad_out.row(b * nodes + r);
            let mut off = 0;
            for g in grads.iter_mut() {
                let w = g.cols();
                g.row_mut(b * nodes + node).copy_from_slice(&src[off..off + w]);
                off += w;
            }
        }
    }
    grads
}

/// 1-D convolution over `[B, L, C_in]` with `width` taps and `stride`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    /// `[width, C_in, C_out]`
    pub weight: Tensor,
    pub bias: Tensor,
    pub stride: usize,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct Conv1dTape {
    in_shape: [usize; 3],
    cols: Tensor,
    output: Tensor,
}

impl Conv1d {
    pub fn new(width: usize, c_in: usize, c_out: usize, stride: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        assert!(width > 0 && stride > 0);
        Conv1d {
            weight: xavier_with(&[width, c_in, c_out], rng),
            bias: Tensor::zeros(&[c_out]),
            stride,
            activation,
        }
    }

    pub fn width(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[2]
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        assert!(input_len >= self.width(), "sequence of length {input_len} shorter than kernel {}", self.width());
        (input_len - self.width()) / self.stride + 1
    }

    pub fn forward(&self, x: &Tensor) -> (Tensor, Conv1dTape) {
        assert_eq!(x.shape().len(), 3, "conv1d expects [B, L, C]");
        let (b, l, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        assert_eq!(c, self.in_channels(), "conv1d input channels");
        let lout = self.output_len(l);
        let window = self.width() * c;
        // im2col: with channels-last layout each window is a contiguous slice
        let mut cols = Tensor::zeros(&[b * lout, window]);
        for bi in 0..b {
            for t in 0..lout {
                let start = (bi * l + t * self.stride) * c;
                cols.row_mut(bi * lout + t).copy_from_slice(&x.data()[start..start + window]);
            }
        }
        let w2 = self.weight.clone().reshape(&[window, self.out_channels()]);
        let mut out = cols.matmul(&w2);
        add_bias(&mut out, &self.bias);
        self.activation.apply(&mut out);
        let out = out.reshape(&[b, lout, self.out_channels()]);
        let tape = Conv1dTape { in_shape: [b, l, c], cols, output: out.clone() };
        (out, tape)
    }

    /// Returns `(dW, db, dX)`.
    pub fn backward(&self, tape: &Conv1dTape, grad_out: &Tensor) -> (Tensor, Tensor, Tensor) {
        let [b, l, c] = tape.in_shape;
        let cout = self.out_channels();
        let g = self.activation.backward(&tape.output, grad_out);
        let g = g.reshape(&[tape.cols.rows(), cout]);
        let window = self.width() * c;
        let g_w = tape.cols.t_matmul(&g).reshape(self.weight.shape());
        let g_b = bias_grad(&g, cout);
        let w2 = self.weight.clone().reshape(&[window, cout]);
        let g_cols = g.matmul_t(&w2);
        let lout = tape.cols.rows() / b.max(1);
        let mut g_x = Tensor::zeros(&[b, l, c]);
        for bi in 0..b {
            for t in 0..lout {
                let start = (bi * l + t * self.stride) * c;
                let src = g_cols.row(bi * lout + t);
                for (o, v) in g_x.data_mut()[start..start + window].iter_mut().zip(src) {
                    *o += v;
                }
            }
        }
        (g_w, g_b, g_x)
    }
}

/// Max pooling along the sequence axis of `[B, L, C]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxPool1d {
    pub width: usize,
    pub stride: usize,
}

#[derive(Debug, Clone)]
pub struct MaxPoolTape {
    in_shape: [usize; 3],
    argmax: Vec<usize>,
}

impl MaxPool1d {
    pub fn output_len(&self, input_len: usize) -> usize {
        assert!(input_len >= self.width, "sequence of length {input_len} shorter than pool width {}", self.width);
        (input_len - self.width) / self.stride + 1
    }

    pub fn forward(&self, x: &Tensor) -> (Tensor, MaxPoolTape) {
        assert_eq!(x.shape().len(), 3, "maxpool expects [B, L, C]");
        let (b, l, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let lout = self.output_len(l);
        let mut out = Tensor::zeros(&[b, lout, c]);
        let mut argmax = vec![0; b * lout * c];
        for bi in 0..b {
            for t in 0..lout {
                for ch in 0..c {
                    let mut best = (bi * l + t * self.stride) * c + ch;
                    for j in 1..self.width {
                        let idx = (bi * l + t * self.stride + j) * c + ch;
                        if x.data()[idx] > x.data()[best] {
                            best = idx;
                        }
                    }
                    let o = (bi * lout + t) * c + ch;
                    out.data_mut()[o] = x.data()[best];
                    argmax[o] = best;
                }
            }
        }
        (out, MaxPoolTape { in_shape: [b, l, c], argmax })
    }

    pub fn backward(&self, tape: &MaxPoolTape, grad_out: &Tensor) -> Tensor {
        let mut g = Tensor::zeros(&tape.in_shape);
        for (o, &src) in tape.argmax.iter().enumerate() {
            g.data_mut()[src] += grad_out.data()[o];
        }
        g
    }
}

/// Fully connected layer on `[B, F_in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `[F_in, F_out]`
    pub weight: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseTape {
    input: Tensor,
    output: Tensor,
}

impl Dense {
    pub fn new(fan_in: usize, fan_out: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        Dense { weight: xavier_with(&[fan_in, fan_out], rng), bias: Tensor::zeros(&[fan_out]), activation }
    }

    pub fn input_width(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn output_width(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward(&self, x: &Tensor) -> (Tensor, DenseTape) {
        assert_eq!(x.cols(), self.input_width(), "dense input width");
        let x2 = x.clone().reshape(&[x.rows(), x.cols()]);
        let mut out = x2.matmul(&self.weight);
        add_bias(&mut out, &self.bias);
        self.activation.apply(&mut out);
        let tape = DenseTape { input: x2, output: out.clone() };
        (out, tape)
    }

    /// Returns `(dW, db, dX)`.
    pub fn backward(&self, tape: &DenseTape, grad_out: &Tensor) -> (Tensor, Tensor, Tensor) {
        let g = self.activation.backward(&tape.output, grad_out);
        let g_w = tape.input.t_matmul(&g);
        let g_b = bias_grad(&g, self.output_width());
        let g_x = g.matmul_t(&self.weight);
        (g_w, g_b, g_x)
    }
}

/// Row-wise softmax of a `[B, K]` tensor.
pub fn softmax(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    let k = x.cols();
    for row in out.data_mut().chunks_mut(k.max(1)) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

/// Gradient through softmax given its output `y`.
pub fn softmax_backward(y: &Tensor, grad_out: &Tensor) -> Tensor {
    let k = y.cols();
    let mut g = Tensor::zeros(y.shape());
    for ((gr, yr), ur) in g.data_mut().chunks_mut(k).zip(y.data().chunks(k)).zip(grad_out.data().chunks(k)) {
        let dot: f64 = yr.iter().zip(ur).map(|(a, b)| a * b).sum();
        for ((o, yv), uv) in gr.iter_mut().zip(yr).zip(ur) {
            *o = yv * (uv - dot);
        }
    }
    g
}

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{NetworkState, FIXED_FEATURES};
use crate::nn::{
    sortpool_backward, sortpool_forward, Activation, Conv1d, Conv1dTape, Dense, DenseTape, GraphConv, GraphConvTape,
    MaxPool1d, MaxPoolTape, SortPoolTape, Tensor,
};
use crate::topo::NormalizedAdjacency;

/// Layer sizes of the graph-convolutional q-network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgcnnConfig {
    pub nodes: usize,
    pub gconv: Vec<usize>,
    /// Filter counts of the two 1-D convolutions.
    pub conv: [usize; 2],
    /// Nominal width of the second convolution; capped at the pooled length.
    pub conv2_width: usize,
    pub pool_width: usize,
    pub dense: Vec<usize>,
    pub k: usize,
}

impl DgcnnConfig {
    pub fn full(nodes: usize, k: usize) -> Self {
        DgcnnConfig { nodes, gconv: vec![128, 128, 128, 64], conv: [32, 64], conv2_width: 5, pool_width: 2, dense: vec![128], k }
    }

    pub fn input_width(&self) -> usize {
        FIXED_FEATURES + 2 * self.nodes
    }

    /// Channels after concatenating every graph-conv layer.
    pub fn sorted_width(&self) -> usize {
        self.gconv.iter().sum()
    }

    pub fn pooled_len(&self) -> usize {
        MaxPool1d { width: self.pool_width, stride: self.pool_width }.output_len(self.nodes)
    }

    pub fn effective_conv2_width(&self) -> usize {
        self.conv2_width.min(self.pooled_len())
    }

    pub fn conv2_len(&self) -> usize {
        self.pooled_len() - self.effective_conv2_width() + 1
    }
}

/// Graph convolutions, SortPooling, two 1-D convolutions with max pooling
/// between them, dense layers and a linear q-value head.
#[derive(Debug, Clone, PartialEq)]
pub struct Dgcnn {
    config: DgcnnConfig,
    gconv: Vec<GraphConv>,
    conv1: Conv1d,
    pool: MaxPool1d,
    conv2: Conv1d,
    dense: Vec<Dense>,
    head: Dense,
}

#[derive(Debug, Clone)]
pub struct DgcnnTape {
    graphs: Vec<Arc<NormalizedAdjacency>>,
    gconv: Vec<GraphConvTape>,
    sort: SortPoolTape,
    conv1: Conv1dTape,
    pool: MaxPoolTape,
    conv2: Conv1dTape,
    dense: Vec<DenseTape>,
    head: DenseTape,
}

impl DgcnnTape {
    /// Sorted node order per graph in the batch.
    pub fn sort_orders(&self) -> &[Vec<usize>] {
        &self.sort.perms
    }

    /// Final graph-conv row sums per graph, the primary SortPooling key.
    pub fn sort_keys(&self) -> Vec<Vec<f64>> {
        let last = self.gconv.last().expect("at least one graph convolution").output();
        let n = last.rows() / self.graphs.len().max(1);
        (0..self.graphs.len()).map(|b| (0..n).map(|i| last.row(b * n + i).iter().sum()).collect()).collect()
    }
}

impl Dgcnn {
    pub fn new(config: DgcnnConfig, rng: &mut impl Rng) -> Self {
        assert!(!config.gconv.is_empty(), "at least one graph convolution");
        assert!(config.nodes >= config.pool_width, "graph smaller than the pooling window");
        assert!(config.k > 0);
        let mut gconv = Vec::with_capacity(config.gconv.len());
        let mut width = config.input_width();
        for &h in &config.gconv {
            gconv.push(GraphConv::new(width, h, rng));
            width = h;
        }
        let c = config.sorted_width();
        // One sorted node row per step.
        let conv1 = Conv1d::new(c, 1, config.conv[0], c, Activation::Relu, rng);
        let pool = MaxPool1d { width: config.pool_width, stride: config.pool_width };
        let conv2 = Conv1d::new(config.effective_conv2_width(), config.conv[0], config.conv[1], 1, Activation::Relu, rng);
        let mut dense = Vec::with_capacity(config.dense.len());
        let mut width = config.conv2_len() * config.conv[1];
        for &h in &config.dense {
            dense.push(Dense::new(width, h, Activation::Relu, rng));
            width = h;
        }
        let head = Dense::new(width, config.k, Activation::Identity, rng);
        Dgcnn { config, gconv, conv1, pool, conv2, dense, head }
    }

    pub fn config(&self) -> &DgcnnConfig {
        &self.config
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.gconv.len()).map(|i| format!("gconv.{i}.weight")).collect();
        names.extend(["conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias"].map(String::from));
        for i in 0..self.dense.len() {
            names.push(format!("dense.{i}.weight"));
            names.push(format!("dense.{i}.bias"));
        }
        names.extend(["head.weight", "head.bias"].map(String::from));
        names
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut p: Vec<&Tensor> = self.gconv.iter().map(|g| &g.weight).collect();
        p.extend([&self.conv1.weight, &self.conv1.bias, &self.conv2.weight, &self.conv2.bias]);
        for d in &self.dense {
            p.extend([&d.weight, &d.bias]);
        }
        p.extend([&self.head.weight, &self.head.bias]);
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p: Vec<&mut Tensor> = self.gconv.iter_mut().map(|g| &mut g.weight).collect();
        p.extend([&mut self.conv1.weight, &mut self.conv1.bias, &mut self.conv2.weight, &mut self.conv2.bias]);
        for d in &mut self.dense {
            p.extend([&mut d.weight, &mut d.bias]);
        }
        p.extend([&mut self.head.weight, &mut self.head.bias]);
        p
    }

    pub fn forward(&self, states: &[&NetworkState]) -> (Tensor, DgcnnTape) {
        let n = self.config.nodes;
        let f0 = self.config.input_width();
        let b = states.len();
        let mut x = Vec::with_capacity(b * n * f0);
        let mut graphs = Vec::with_capacity(b);
        for s in states {
            assert_eq!(s.nodes(), n, "state has {} nodes, model expects {n}", s.nodes());
            x.extend_from_slice(s.features());
            graphs.push(s.adjacency_arc().clone());
        }
        let graph_refs: Vec<&NormalizedAdjacency> = graphs.iter().map(|g| g.as_ref()).collect();

        let mut h = Tensor::from_vec(&[b * n, f0], x);
        let mut gconv_tapes = Vec::with_capacity(self.gconv.len());
        let mut outputs = Vec::with_capacity(self.gconv.len());
        for layer in &self.gconv {
            let (out, tape) = layer.forward(&graph_refs, &h);
            outputs.push(out.clone());
            gconv_tapes.push(tape);
            h = out;
        }
        let layer_refs: Vec<&Tensor> = outputs.iter().collect();
        let (sorted, sort_tape) = sortpool_forward(&layer_refs, n);
        let c = self.config.sorted_width();
        let (y, conv1_tape) = self.conv1.forward(&sorted.reshape(&[b, n * c, 1]));
        let (y, pool_tape) = self.pool.forward(&y);
        let (y, conv2_tape) = self.conv2.forward(&y);
        let mut y = y.reshape(&[b, self.config.conv2_len() * self.config.conv[1]]);
        let mut dense_tapes = Vec::with_capacity(self.dense.len());
        for d in &self.dense {
            let (out, tape) = d.forward(&y);
            dense_tapes.push(tape);
            y = out;
        }
        let (q, head_tape) = self.head.forward(&y);
        let tape = DgcnnTape {
            graphs,
            gconv: gconv_tapes,
            sort: sort_tape,
            conv1: conv1_tape,
            pool: pool_tape,
            conv2: conv2_tape,
            dense: dense_tapes,
            head: head_tape,
        };
        (q, tape)
    }

    /// Parameter gradients (in [`Dgcnn::params`] order) for upstream `grad_q` of shape `[B, K]`.
    pub fn backward(&self, tape: &DgcnnTape, grad_q: &Tensor) -> Vec<Tensor> {
        let n = self.config.nodes;
        let b = grad_q.rows();
        let (hw, hb, mut g) = self.head.backward(&tape.head, grad_q);
        let mut dense_grads = Vec::with_capacity(self.dense.len());
        for (d, t) in self.dense.iter().zip(&tape.dense).rev() {
            let (w, bias, gx) = d.backward(t, &g);
            dense_grads.push((w, bias));
            g = gx;
        }
        dense_grads.reverse();
        let g = g.reshape(&[b, self.config.conv2_len(), self.config.conv[1]]);
        let (c2w, c2b, g) = self.conv2.backward(&tape.conv2, &g);
        let g = self.pool.backward(&tape.pool, &g);
        let (c1w, c1b, g) = self.conv1.backward(&tape.conv1, &g);
        let g = g.reshape(&[b * n, self.config.sorted_width()]);
        let per_layer = sortpool_backward(&tape.sort, &g);

        let graph_refs: Vec<&NormalizedAdjacency> = tape.graphs.iter().map(|g| g.as_ref()).collect();
        let mut gconv_grads = vec![None; self.gconv.len()];
        let mut carry: Option<Tensor> = None;
        for l in (0..self.gconv.len()).rev() {
            let mut g = per_layer[l].clone();
            if let Some(c) = carry.take() {
                g.axpy(1.0, &c);
            }
            let (gw, gx) = self.gconv[l].backward(&graph_refs, &tape.gconv[l], &g);
            gconv_grads[l] = Some(gw);
            carry = Some(gx);
        }

        let mut grads: Vec<Tensor> = gconv_grads.into_iter().map(Option::unwrap).collect();
        grads.extend([c1w, c1b, c2w, c2b]);
        for (w, bias) in dense_grads {
            grads.extend([w, bias]);
        }
        grads.extend([hw, hb]);
        grads
    }
}

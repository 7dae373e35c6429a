use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{NetworkState, FIXED_FEATURES};
use crate::nn::{Activation, Dense, DenseTape, Tensor};

/// Hidden sizes of the fully connected baseline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpConfig {
    pub nodes: usize,
    pub hidden: Vec<usize>,
    pub k: usize,
}

impl MlpConfig {
    pub fn full(nodes: usize, k: usize) -> Self {
        MlpConfig { nodes, hidden: vec![256, 256, 128], k }
    }

    /// Flattened node features followed by the flattened adjacency.
    pub fn input_width(&self) -> usize {
        self.nodes * (FIXED_FEATURES + 2 * self.nodes) + self.nodes * self.nodes
    }
}

/// Dense stack over the flattened state; no notion of node identity or order.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    config: MlpConfig,
    hidden: Vec<Dense>,
    head: Dense,
}

#[derive(Debug, Clone)]
pub struct MlpTape {
    hidden: Vec<DenseTape>,
    head: DenseTape,
}

impl Mlp {
    pub fn new(config: MlpConfig, rng: &mut impl Rng) -> Self {
        let mut width = config.input_width();
        let mut hidden = Vec::with_capacity(config.hidden.len());
        for &h in &config.hidden {
            hidden.push(Dense::new(width, h, Activation::Relu, rng));
            width = h;
        }
        let head = Dense::new(width, config.k, Activation::Identity, rng);
        Mlp { config, hidden, head }
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 0..self.hidden.len() {
            names.push(format!("hidden.{i}.weight"));
            names.push(format!("hidden.{i}.bias"));
        }
        names.extend(["head.weight", "head.bias"].map(String::from));
        names
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut p = Vec::new();
        for d in &self.hidden {
            p.extend([&d.weight, &d.bias]);
        }
        p.extend([&self.head.weight, &self.head.bias]);
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = Vec::new();
        for d in &mut self.hidden {
            p.extend([&mut d.weight, &mut d.bias]);
        }
        p.extend([&mut self.head.weight, &mut self.head.bias]);
        p
    }

    pub fn flatten(&self, states: &[&NetworkState]) -> Tensor {
        let width = self.config.input_width();
        let mut x = Vec::with_capacity(states.len() * width);
        for s in states {
            assert_eq!(s.nodes(), self.config.nodes, "state has {} nodes, model expects {}", s.nodes(), self.config.nodes);
            x.extend_from_slice(s.features());
            x.extend_from_slice(s.adjacency().values());
        }
        Tensor::from_vec(&[states.len(), width], x)
    }

    pub fn forward(&self, states: &[&NetworkState]) -> (Tensor, MlpTape) {
        self.forward_flat(&self.flatten(states))
    }

    pub fn forward_flat(&self, x: &Tensor) -> (Tensor, MlpTape) {
        assert_eq!(x.cols(), self.config.input_width(), "mlp input width");
        let mut y = x.clone();
        let mut tapes = Vec::with_capacity(self.hidden.len());
        for d in &self.hidden {
            let (out, tape) = d.forward(&y);
            tapes.push(tape);
            y = out;
        }
        let (q, head) = self.head.forward(&y);
        (q, MlpTape { hidden: tapes, head })
    }

    pub fn backward(&self, tape: &MlpTape, grad_q: &Tensor) -> Vec<Tensor> {
        let (hw, hb, mut g) = self.head.backward(&tape.head, grad_q);
        let mut grads = Vec::with_capacity(2 * self.hidden.len() + 2);
        for (d, t) in self.hidden.iter().zip(&tape.hidden).rev() {
            let (w, b, gx) = d.backward(t, &g);
            grads.push(b);
            grads.push(w);
            g = gx;
        }
        grads.reverse();
        grads.extend([hw, hb]);
        grads
    }
}

//! Q-networks: the DGCNN and the MLP baseline behind one interface.

mod checkpoint;
mod dgcnn;
mod mlp;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use dgcnn::{Dgcnn, DgcnnConfig, DgcnnTape};
pub use mlp::{Mlp, MlpConfig, MlpTape};

use crate::env::NetworkState;
use crate::nn::gradcheck::{check_gradients, GradCheckReport};
use crate::nn::{sgd_step, softmax, Tensor};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    Dgcnn(DgcnnConfig),
    Mlp(MlpConfig),
}

impl Architecture {
    pub fn nodes(&self) -> usize {
        match self {
            Architecture::Dgcnn(c) => c.nodes,
            Architecture::Mlp(c) => c.nodes,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Architecture::Dgcnn(c) => c.k,
            Architecture::Mlp(c) => c.k,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Architecture::Dgcnn(_) => "dgcnn",
            Architecture::Mlp(_) => "mlp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QModel {
    Dgcnn(Dgcnn),
    Mlp(Mlp),
}

/// Forward record needed for a backward pass.
#[derive(Debug, Clone)]
pub enum Tape {
    Dgcnn(DgcnnTape),
    Mlp(MlpTape),
}

impl QModel {
    /// Xavier-initialized model; biases start at zero.
    pub fn new(arch: &Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match arch {
            Architecture::Dgcnn(c) => QModel::Dgcnn(Dgcnn::new(c.clone(), &mut rng)),
            Architecture::Mlp(c) => QModel::Mlp(Mlp::new(c.clone(), &mut rng)),
        }
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            QModel::Dgcnn(m) => Architecture::Dgcnn(m.config().clone()),
            QModel::Mlp(m) => Architecture::Mlp(m.config().clone()),
        }
    }

    pub fn k(&self) -> usize {
        self.architecture().k()
    }

    pub fn param_names(&self) -> Vec<String> {
        match self {
            QModel::Dgcnn(m) => m.param_names(),
            QModel::Mlp(m) => m.param_names(),
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            QModel::Dgcnn(m) => m.params(),
            QModel::Mlp(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            QModel::Dgcnn(m) => m.params_mut(),
            QModel::Mlp(m) => m.params_mut(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    /// Raw q-values of shape `[B, K]`.
    pub fn forward(&self, states: &[&NetworkState]) -> (Tensor, Tape) {
        match self {
            QModel::Dgcnn(m) => {
                let (q, t) = m.forward(states);
                (q, Tape::Dgcnn(t))
            }
            QModel::Mlp(m) => {
                let (q, t) = m.forward(states);
                (q, Tape::Mlp(t))
            }
        }
    }

    pub fn q_batch(&self, states: &[&NetworkState]) -> Tensor {
        self.forward(states).0
    }

    pub fn q_values(&self, state: &NetworkState) -> Vec<f64> {
        self.q_batch(&[state]).into_data()
    }

    /// Parameter gradients for an upstream gradient on the q-values.
    pub fn backward(&self, tape: &Tape, grad_q: &Tensor) -> Vec<Tensor> {
        match (self, tape) {
            (QModel::Dgcnn(m), Tape::Dgcnn(t)) => m.backward(t, grad_q),
            (QModel::Mlp(m), Tape::Mlp(t)) => m.backward(t, grad_q),
            _ => panic!("tape was recorded by a different architecture"),
        }
    }

    pub fn apply_sgd(&mut self, grads: &[Tensor], lr: f64) {
        let params = self.params_mut();
        assert_eq!(params.len(), grads.len(), "one gradient per parameter");
        for (p, g) in params.into_iter().zip(grads) {
            sgd_step(p, g, lr);
        }
    }

    /// Copies every parameter of `self` into `dst`.
    pub fn clone_into(&self, dst: &mut QModel) {
        assert_eq!(self.architecture(), dst.architecture(), "clone_into needs identical architectures");
        for (d, s) in dst.params_mut().into_iter().zip(self.params()) {
            d.data_mut().copy_from_slice(s.data());
        }
    }

    /// Largest absolute parameter difference to `other`.
    pub fn max_param_diff(&self, other: &QModel) -> f64 {
        self.params().iter().zip(other.params()).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }
}

/// Compares backpropagated gradients of `L = sum(coeffs * q)` over `states`
/// with central finite differences of step `step`, for every parameter.
pub fn check_model_gradients(model: &QModel, states: &[&NetworkState], coeffs: &Tensor, step: f64) -> GradCheckReport {
    let (q, tape) = model.forward(states);
    assert_eq!(q.shape(), coeffs.shape(), "one coefficient per q-value");
    let analytic = model.backward(&tape, coeffs);
    let mut params: Vec<Tensor> = model.params().into_iter().cloned().collect();
    let mut probe = model.clone();
    let loss = |p: &[Tensor]| {
        for (dst, src) in probe.params_mut().into_iter().zip(p) {
            dst.data_mut().copy_from_slice(src.data());
        }
        probe.q_batch(states).data().iter().zip(coeffs.data()).map(|(a, b)| a * b).sum::<f64>()
    };
    check_gradients(loss, &mut params, &analytic, step)
}

/// Freshly initialized model whose biases are drawn from `U[-0.1, 0.1]`.
/// Zero biases can leave ReLU pre-activations exactly on the kink, where a
/// central difference measures half a slope.
pub fn gradcheck_model(arch: &Architecture, seed: u64) -> QModel {
    let mut model = QModel::new(arch, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let names = model.param_names();
    for (name, p) in names.iter().zip(model.params_mut()) {
        if name.ends_with("bias") {
            p.data_mut().iter_mut().for_each(|v| *v = rng.gen_range(-0.1..0.1));
        }
    }
    model
}

/// Softmax over q-values: the per-path selection probabilities reported to users.
pub fn action_probabilities(q: &[f64]) -> Vec<f64> {
    softmax(&Tensor::from_vec(&[1, q.len()], q.to_vec())).into_data()
}

/// Index of the largest of the first `valid` entries; ties go to the lowest index.
pub fn masked_argmax(q: &[f64], valid: usize) -> usize {
    assert!(valid >= 1 && valid <= q.len(), "need 1..={} valid actions, got {valid}", q.len());
    let mut best = 0;
    for i in 1..valid {
        if q[i] > q[best] {
            best = i;
        }
    }
    best
}

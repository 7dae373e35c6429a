//! Minimal dense numerics: tensors, layers with hand-written backward passes,
//! Xavier initialization, SGD and a finite-difference checker.

pub mod gradcheck;
mod init;
mod layers;
mod optim;
mod tensor;

pub use init::{fans, xavier_init, xavier_with};
pub use layers::{
    softmax, softmax_backward, sortpool_backward, sortpool_forward, Activation, Conv1d, Conv1dTape, Dense, DenseTape,
    GraphConv, GraphConvTape, MaxPool1d, MaxPoolTape, SortPoolTape,
};
pub use optim::{clip_grad_norm, global_norm, sgd_step};
pub use tensor::Tensor;

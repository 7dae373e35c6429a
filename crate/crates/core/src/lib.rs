//! Adaptive flow routing with deep graph-convolutional Q-learning.
//!
//! The crate is organised bottom-up:
//!
//! - [`topo`]: topologies, normalized adjacency, candidate paths, node importance.
//! - [`env`](mod@env): flow-level network environment (admission, delay, reward, state).
//! - [`nn`]: dense tensors and hand-written layers with analytic backward passes.
//! - [`model`]: the DGCNN q-network and the MLP baseline, plus checkpoints.
//! - [`agent`]: deep Q-learning with prioritized replay and adaptive re-exploration.
//! - [`bench`](mod@bench): OSPF baseline, scenario runner, frozen stress test, metric aggregation.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod agent;
pub mod bench;
pub mod env;
pub mod error;
pub mod model;
pub mod nn;
pub mod rng;
pub mod topo;

pub use error::{Error, Result};

//! Relabeling nodes leaves DGCNN q-values unchanged but not MLP q-values.
//!
//! cargo run --example permutation_equivariance -- [seed]

use qroute::bench::{AgentKind, ModelSizes};
use qroute::env::{random_states, NetworkContext, TrafficProfile};
use qroute::model::QModel;
use qroute::topo::{generate_random_topology, DEFAULT_K};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> qroute::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(0, |a| a.parse().expect("seed"));
    let ctx = NetworkContext::new(generate_random_topology(7, 11, seed)?, DEFAULT_K);
    let states = random_states(&ctx, &TrafficProfile::default(), 5, 30, 7, seed)?;
    let sizes = ModelSizes::default();
    let dgcnn = QModel::new(&sizes.architecture(AgentKind::Dgcnn, 7, DEFAULT_K).unwrap(), seed);
    let mlp = QModel::new(&sizes.architecture(AgentKind::Mlp, 7, DEFAULT_K).unwrap(), seed);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, state) in states.iter().enumerate() {
        let mut perm: Vec<usize> = (0..7).collect();
        perm.shuffle(&mut rng);
        let relabeled = state.permute_nodes(&perm);
        let gap = |m: &QModel| m.q_values(state).iter().zip(m.q_values(&relabeled)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("state {i}, permutation {perm:?}: DGCNN max |Δq| = {:e}, MLP max |Δq| = {:.3e}", gap(&dgcnn), gap(&mlp));
    }
    Ok(())
}

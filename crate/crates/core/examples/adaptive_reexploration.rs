//! Reset of exploration when the reward leaves its recent band.
//!
//! A fast-decaying ε reaches its floor early. Cutting demand to a few Mbps
//! stretches per-packet delay, so the per-episode reward falls out of the
//! monitored band and ε returns to 1.
//!
//! cargo run --release --example adaptive_reexploration -- [episodes] [seed]

use qroute::agent::{run_training, DqnAgent, Hyperparams};
use qroute::bench::{reference_topology, AgentKind, ModelSizes};
use qroute::env::{NetworkContext, ProfileShift, RoutingEnv, TrafficProfile};
use qroute::topo::DEFAULT_K;

fn main() -> qroute::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let episodes = *args.first().unwrap_or(&400) as usize;
    let seed = *args.get(1).unwrap_or(&5);

    let topo = reference_topology();
    let sizes = ModelSizes { gconv: Some(vec![16, 16]), conv: Some([8, 16]), dense: Some(vec![16]), hidden: None };
    let arch = sizes.architecture(AgentKind::Dgcnn, topo.node_count(), DEFAULT_K).unwrap();
    let hyper = Hyperparams { epsilon_decay: 0.999, updates_per_session: 1, batch_size: 32, ..Hyperparams::default() };
    let base = TrafficProfile::default();
    let shift = ProfileShift { episode: episodes / 2, profile: base.with_rates(5.0, 10.0) };

    let mut env = RoutingEnv::new(NetworkContext::new(topo, DEFAULT_K), base, seed)?;
    let mut agent = DqnAgent::new(&arch, hyper, seed)?;
    let log = run_training(&mut env, &mut agent, episodes, std::slice::from_ref(&shift))?;

    println!("demand drops to [5, 10] Mbps at episode {}", shift.episode);
    println!("ε resets at episodes {:?}", log.reexplorations);
    for e in log.episodes.iter().step_by(25) {
        println!("  episode {:>4}: ε {:.3}, reward {:.3}", e.episode, e.epsilon.unwrap_or(f64::NAN), e.mean_reward);
    }
    Ok(())
}

//! Learning sanity check on a two-route network.
//!
//! Node 0 sends to node 3 over either 0-1-3 or 0-2-3. A pinned 90 Mbps
//! elephant flow occupies 0-1-3, which OSPF always picks. A small DGCNN agent
//! learns to take the free route instead.
//!
//! cargo run --release --example dumbbell -- [episodes] [seed]

use std::time::Instant;

use qroute::agent::{evaluate_greedy, rollout, run_training, DqnAgent, Hyperparams};
use qroute::bench::{build_env, ospf_action, AgentKind, PinnedFlow, ScenarioSpec, TopologySource};
use qroute::env::TrafficProfile;

fn main() -> qroute::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let episodes: usize = args.first().map_or(300, |a| a.parse().expect("episodes"));
    let seed: u64 = args.get(1).map_or(1, |a| a.parse().expect("seed"));

    let mut spec = ScenarioSpec::new("dumbbell", AgentKind::Dgcnn, TopologySource::Dumbbell, episodes, seed);
    spec.traffic = TrafficProfile { pairs: Some(vec![(0, 3)]), concurrency_min: 1, concurrency_max: 1, ..TrafficProfile::default() };
    spec.pinned = vec![PinnedFlow { src: 0, dest: 3, rate_mbps: 90.0, path: 0 }];
    spec.model.gconv = Some(vec![16, 16]);
    spec.hyper = Hyperparams { updates_per_session: 1, batch_size: 32, ..Hyperparams::default() };

    let topo = spec.topology.build(seed)?;
    let arch = spec.model.architecture(spec.agent, topo.node_count(), spec.k).unwrap();
    let started = Instant::now();
    let mut env = build_env(&spec, topo.clone())?;
    let mut agent = DqnAgent::new(&arch, spec.hyper.clone(), seed)?;
    let log = run_training(&mut env, &mut agent, episodes, &[])?;
    let last = log.episodes.last().unwrap();
    println!("trained {episodes} episodes in {:.1?}; final epsilon {:.3}, mean reward {:.3}", started.elapsed(), agent.epsilon(), last.mean_reward);

    let eval_seed = seed + 1000;
    let mut env = build_env(&ScenarioSpec { seed: eval_seed, ..spec.clone() }, topo.clone())?;
    let greedy = evaluate_greedy(agent.model(), &mut env, 10, 100, &[])?;
    let mut env = build_env(&ScenarioSpec { seed: eval_seed, ..spec.clone() }, topo)?;
    let ctx = env.context().clone();
    let ospf = rollout(&mut env, 10, 100, &[], |s| ospf_action(&ctx, s))?;

    let free = greedy.iter().filter(|f| f.path_index == 1).count() as f64 / greedy.len() as f64;
    let mean = |fs: &[qroute::agent::FlowRecord]| fs.iter().map(|f| f.rate_alloc_mbps).sum::<f64>() / fs.len() as f64;
    let (t_agent, t_ospf) = (mean(&greedy), mean(&ospf));
    println!("agent picks the free route in {:.1}% of greedy decisions", 100.0 * free);
    println!("mean throughput: agent {t_agent:.2} Mbps, OSPF {t_ospf:.2} Mbps ({:+.1}%)", 100.0 * (t_agent - t_ospf) / t_ospf);
    Ok(())
}

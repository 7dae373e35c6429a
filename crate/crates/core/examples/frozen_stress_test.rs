//! Train DGCNN and MLP agents on the 9-node reference topology, freeze them,
//! and replay one request sequence under rising offered load against OSPF.
//!
//! cargo run --release --example frozen_stress_test -- [episodes] [seed] [updates] [batch]

use std::time::Instant;

use qroute::agent::{run_training, DqnAgent, Hyperparams};
use qroute::bench::{reference_topology, run_frozen_stress_test, AgentKind, ModelSizes, Policy, StressSchedule};
use qroute::env::{NetworkContext, RoutingEnv, TrafficProfile};
use qroute::model::QModel;
use qroute::topo::DEFAULT_K;

fn train(kind: AgentKind, episodes: usize, seed: u64, hyper: &Hyperparams) -> qroute::Result<QModel> {
    let topo = reference_topology();
    let arch = ModelSizes::default().architecture(kind, topo.node_count(), DEFAULT_K).unwrap();
    let mut env = RoutingEnv::new(NetworkContext::new(topo, DEFAULT_K), TrafficProfile::default(), seed)?;
    let mut agent = DqnAgent::new(&arch, hyper.clone(), seed)?;
    let started = Instant::now();
    let log = run_training(&mut env, &mut agent, episodes, &[])?;
    let tail = &log.episodes[episodes.saturating_sub(50)..];
    let r = tail.iter().map(|e| e.mean_reward).sum::<f64>() / tail.len() as f64;
    println!("{}: {episodes} episodes in {:.1?}, reward over the last 50 episodes {r:.3}", kind.name(), started.elapsed());
    Ok(agent.into_model())
}

fn main() -> qroute::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: usize| args.get(i).map_or(default, |a| a.parse().expect("numeric argument"));
    let episodes = arg(0, 500);
    let seed = arg(1, 7) as u64;
    let hyper = Hyperparams { updates_per_session: arg(2, 1), batch_size: arg(3, 32), ..Hyperparams::default() };

    let dgcnn = train(AgentKind::Dgcnn, episodes, seed, &hyper)?;
    let mlp = train(AgentKind::Mlp, episodes, seed, &hyper)?;
    let policies = vec![("dgcnn".to_string(), Policy::Greedy(dgcnn)), ("mlp".to_string(), Policy::Greedy(mlp)), ("ospf".to_string(), Policy::Ospf)];
    let table = run_frozen_stress_test(&policies, &reference_topology(), DEFAULT_K, &TrafficProfile::default(), &StressSchedule::default(), seed + 1)?;

    println!("\n{:>8} {:>22} {:>22} {:>22}", "rate", "dgcnn Mbps / ms", "mlp Mbps / ms", "ospf Mbps / ms");
    for row in &table.rows {
        let cells: Vec<String> = row.results.iter().map(|m| format!("{:8.2} / {:8.4}", m.throughput_mbps, m.delay_ms)).collect();
        println!("{:>8.1} {:>22} {:>22} {:>22}", row.central_rate, cells[0], cells[1], cells[2]);
    }
    for (i, name) in ["dgcnn", "mlp"].iter().enumerate() {
        let (dt, dd) = table.relative(i, 2, 3);
        println!("{name} vs OSPF over the three highest-load blocks: throughput {dt:+.2}%, delay {dd:+.2}%");
    }
    Ok(())
}

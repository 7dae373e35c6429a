//! Drive the flow-level environment by hand with two fixed policies.
//!
//! cargo run --example flow_simulation -- [arrivals] [seed]

use qroute::bench::{ospf_action, reference_topology};
use qroute::env::{NetworkContext, RoutingEnv, TrafficProfile};
use qroute::topo::DEFAULT_K;
use rand::Rng;

fn main() -> qroute::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let arrivals = *args.first().unwrap_or(&2000) as usize;
    let seed = *args.get(1).unwrap_or(&0);
    let ctx = NetworkContext::new(reference_topology(), DEFAULT_K);

    let mut ospf_env = RoutingEnv::new(ctx.clone(), TrafficProfile::default(), seed)?;
    let mut random_env = RoutingEnv::new(ctx.clone(), TrafficProfile::default(), seed)?;
    let mut rng = qroute::agent::exploration_rng(seed);
    let (mut ospf, mut random) = ([0.0; 4], [0.0; 4]);
    for t in 0..arrivals {
        let a = ospf_action(&ctx, &ospf_env.state());
        let o = ospf_env.step(a);
        let r = random_env.step(rng.gen_range(0..random_env.valid_actions()));
        assert_eq!(o.request, r.request, "both environments see the same arrivals");
        for (acc, s) in [(&mut ospf, &o), (&mut random, &r)] {
            acc[0] += s.reward;
            acc[1] += s.rate_alloc_mbps;
            acc[2] += s.delay_ms;
            acc[3] += s.congestion as u8 as f64;
        }
        if t < 3 {
            let req = o.request;
            println!("arrival {t}: {}->{} asks {:.1} Mbps; OSPF path {} gets {:.1} Mbps at {:.3} ms, reward {:.3}", req.src, req.dest, req.rate_mbps, o.path_index, o.rate_alloc_mbps, o.delay_ms, o.reward);
        }
    }
    let state = ospf_env.state();
    println!("\nnode features seen by the next arrival (degree, importance, tx, rx, bw):");
    for i in 0..state.nodes() {
        println!("  {i}: {:.3} {:.3} {:.3} {:.3} {:.3}", state.degree(i), state.importance(i), state.tx(i), state.rx(i), state.bw(i));
    }
    let n = arrivals as f64;
    for (name, acc) in [("OSPF", ospf), ("random", random)] {
        println!("{name:>7}: reward {:.3}, throughput {:.2} Mbps, delay {:.3} ms, congested {:.1}%", acc[0] / n, acc[1] / n, acc[2] / n, 100.0 * acc[3] / n);
    }
    Ok(())
}

mod common;

use proptest::prelude::*;
use qroute::env::{FlowNetwork, NetworkContext, RoutingEnv, StepOutcome, TrafficProfile};
use qroute::topo::generate_random_topology;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn oracle_delay_ms(distances: &[f64], alloc: f64) -> f64 {
    let mut total = 0.0;
    for d in distances {
        total += d / 2.0e8 * 1000.0;
        total += 1500.0 * 8.0 / (alloc.max(1.0) * 1.0e6) * 1000.0;
    }
    total
}

fn profile() -> impl Strategy<Value = TrafficProfile> {
    (1.0f64..90.0, 0.0f64..40.0, 1u32..15, 0u32..15).prop_map(|(lo, span, cmin, cspan)| TrafficProfile {
        rate_min: lo,
        rate_max: lo + span,
        concurrency_min: cmin,
        concurrency_max: cmin + cspan,
        pairs: None,
    })
}

fn drive(env: &mut RoutingEnv, steps: usize, action_seed: u64) -> Vec<StepOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(action_seed);
    (0..steps).map(|_| env.step(rng.gen_range(0..env.valid_actions()))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_step_respects_capacity_and_reward(n in 4usize..=10, topo_seed: u64, profile in profile(), seed: u64, action_seed: u64) {
        let m = (n + 3).min(n * (n - 1) / 2);
        let ctx = NetworkContext::new(generate_random_topology(n, m, topo_seed).unwrap(), 3);
        let mut env = RoutingEnv::new(ctx.clone(), profile.clone(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(action_seed);
        for _ in 0..150 {
            let req = *env.pending();
            let action = rng.gen_range(0..env.valid_actions());
            let path = ctx.paths.paths(req.src, req.dest)[action].clone();
            let links: Vec<usize> = path.windows(2).map(|w| ctx.topology.link_between(w[0], w[1]).unwrap()).collect();
            let residual = links.iter().map(|&l| 100.0 - env.network().link_load(l)).fold(f64::INFINITY, f64::min);
            let out = env.step(action);

            prop_assert_eq!(out.rate_alloc_mbps, req.rate_mbps.min(residual).max(0.0));
            prop_assert_eq!(out.congestion, out.rate_alloc_mbps < out.request.rate_mbps);
            let distances: Vec<f64> = links.iter().map(|&l| ctx.topology.links()[l].distance_m).collect();
            prop_assert!((out.delay_ms - oracle_delay_ms(&distances, out.rate_alloc_mbps)).abs() <= 1e-12);
            let r = out.rate_alloc_mbps / out.request.rate_mbps + 1.0 / out.delay_ms;
            prop_assert!((out.reward - r).abs() <= 1e-12);
            prop_assert!(out.active_flows >= 1 && out.active_flows <= profile.concurrency_max as usize);

            let mut loads = vec![0.0; ctx.topology.link_count()];
            for f in env.network().flows() {
                for w in f.path.windows(2) {
                    loads[ctx.topology.link_between(w[0], w[1]).unwrap()] += f.rate_alloc_mbps;
                }
            }
            for (l, load) in loads.iter().enumerate() {
                prop_assert!(*load <= 100.0 + 1e-9, "link {} carries {}", l, load);
                prop_assert!((env.network().link_load(l) - load).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn evolution_is_a_function_of_seed_and_actions(n in 4usize..=9, topo_seed: u64, profile in profile(), seed: u64, action_seed: u64) {
        let ctx = NetworkContext::new(generate_random_topology(n, n + 2, topo_seed).unwrap(), 3);
        let a = drive(&mut RoutingEnv::new(ctx.clone(), profile.clone(), seed).unwrap(), 80, action_seed);
        let b = drive(&mut RoutingEnv::new(ctx.clone(), profile, seed).unwrap(), 80, action_seed);
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.request, y.request);
            prop_assert_eq!(x.reward.to_bits(), y.reward.to_bits());
            prop_assert_eq!(&x.next_state, &y.next_state);
        }
    }

    #[test]
    fn arrivals_do_not_depend_on_actions(n in 4usize..=9, topo_seed: u64, seed: u64, s1: u64, s2: u64) {
        let ctx = NetworkContext::new(generate_random_topology(n, n + 2, topo_seed).unwrap(), 3);
        let a = drive(&mut RoutingEnv::new(ctx.clone(), TrafficProfile::default(), seed).unwrap(), 60, s1);
        let b = drive(&mut RoutingEnv::new(ctx, TrafficProfile::default(), seed).unwrap(), 60, s2);
        prop_assert!(a.iter().zip(&b).all(|(x, y)| x.request == y.request));
    }

    #[test]
    fn clearing_restores_the_idle_state(n in 4usize..=9, topo_seed: u64, seed: u64, action_seed: u64, steps in 0usize..60) {
        let ctx = NetworkContext::new(generate_random_topology(n, n + 2, topo_seed).unwrap(), 3);
        let mut env = RoutingEnv::new(ctx.clone(), TrafficProfile::default(), seed).unwrap();
        drive(&mut env, steps, action_seed);
        let pending = *env.pending();
        env.network_mut().clear();
        let idle = FlowNetwork::new(ctx).build_state(&pending);
        prop_assert_eq!(env.network().build_state(&pending), idle);
    }
}

#[test]
fn rate_floor_keeps_delay_finite_but_not_reward() {
    let d = qroute::env::compute_delay(&[600.0], 0.0);
    assert_eq!(d, oracle_delay_ms(&[600.0], 1.0));
    assert_eq!(qroute::env::reward(0.0, 50.0, d), 1.0 / d);
}

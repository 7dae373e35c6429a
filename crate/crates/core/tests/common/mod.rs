//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use qroute::env::{random_states, NetworkContext, NetworkState, TrafficProfile};
use qroute::model::{check_model_gradients, gradcheck_model, Architecture, DgcnnConfig};
use qroute::nn::gradcheck::{check_gradients, GradCheckReport};
use qroute::nn::{softmax, softmax_backward, sortpool_backward, sortpool_forward, Activation, Conv1d, Dense, GraphConv, MaxPool1d, Tensor};
use qroute::topo::{build_normalized_adjacency, generate_random_topology, NormalizedAdjacency, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GRAD_STEP: f64 = 1e-6;
pub const GRAD_TOLERANCE: f64 = 1e-4;

/// `D^-1/2 (W + I) D^-1/2` as two dense matrix products.
pub fn dense_normalized_adjacency(topo: &Topology) -> Vec<f64> {
    let n = topo.node_count();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = 1.0;
    }
    for l in topo.links() {
        a[l.a * n + l.b] = 1.0;
        a[l.b * n + l.a] = 1.0;
    }
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let deg: f64 = (0..n).map(|j| a[i * n + j]).sum();
        d[i * n + i] = 1.0 / deg.sqrt();
    }
    let matmul = |x: &[f64], y: &[f64]| {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                z[i * n + j] = (0..n).map(|k| x[i * n + k] * y[k * n + j]).sum();
            }
        }
        z
    };
    matmul(&matmul(&d, &a), &d)
}

/// Every simple path from `src` to `dest`, ordered by hop count then node sequence.
pub fn all_simple_paths(topo: &Topology, src: usize, dest: usize) -> Vec<Vec<usize>> {
    fn walk(topo: &Topology, path: &mut Vec<usize>, dest: usize, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        if last == dest {
            out.push(path.clone());
            return;
        }
        for &v in topo.neighbors(last) {
            if !path.contains(&v) {
                path.push(v);
                walk(topo, path, dest, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(topo, &mut vec![src], dest, &mut out);
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Random connected graph: a random spanning tree plus extra edges, unit capacities.
pub fn random_connected(n: usize, extra: usize, seed: u64) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let key = (a.min(b), a.max(b));
        if a != b && !edges.iter().any(|&(x, y)| (x.min(y), x.max(y)) == key) {
            edges.push((a, b));
        }
    }
    Topology::uniform(n, &edges, 100.0, 600.0).unwrap()
}

pub fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let len = shape.iter().product();
    Tensor::from_vec(shape, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Per-layer-kind finite-difference reports, each on the loss `<upstream, layer(x)>`.
pub fn layer_gradchecks(seed: u64) -> Vec<(&'static str, GradCheckReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();

    let graphs: Vec<NormalizedAdjacency> = (0..2).map(|i| build_normalized_adjacency(&random_connected(5, 3, seed + i))).collect();
    let refs: Vec<&NormalizedAdjacency> = graphs.iter().collect();
    let gc = GraphConv::new(4, 3, &mut rng);
    let x = random_tensor(&[10, 4], &mut rng);
    let up = random_tensor(&[10, 3], &mut rng);
    let (_, tape) = gc.forward(&refs, &x);
    let (gw, gx) = gc.backward(&refs, &tape, &up);
    let mut p = vec![gc.weight.clone(), x];
    let r = check_gradients(|p| dot(&up, &GraphConv { weight: p[0].clone() }.forward(&refs, &p[1]).0), &mut p, &[gw, gx], GRAD_STEP);
    reports.push(("graph conv", r));

    let a = random_tensor(&[10, 3], &mut rng);
    let b = random_tensor(&[10, 2], &mut rng);
    let up = random_tensor(&[10, 5], &mut rng);
    let (_, tape) = sortpool_forward(&[&a, &b], 5);
    let grads = sortpool_backward(&tape, &up);
    let mut p = vec![a, b];
    let r = check_gradients(|p| dot(&up, &sortpool_forward(&[&p[0], &p[1]], 5).0), &mut p, &grads, GRAD_STEP);
    reports.push(("sort pooling", r));

    for (name, act, stride) in [("conv1d relu", Activation::Relu, 1), ("conv1d strided", Activation::Identity, 2)] {
        let conv = Conv1d::new(3, 2, 4, stride, act, &mut rng);
        let mut conv = conv;
        conv.bias = random_tensor(&[4], &mut rng);
        let x = random_tensor(&[2, 9, 2], &mut rng);
        let (y, tape) = conv.forward(&x);
        let up = random_tensor(y.shape(), &mut rng);
        let (gw, gb, gx) = conv.backward(&tape, &up);
        let mut p = vec![conv.weight.clone(), conv.bias.clone(), x];
        let r = check_gradients(
            |p| dot(&up, &Conv1d { weight: p[0].clone(), bias: p[1].clone(), ..conv.clone() }.forward(&p[2]).0),
            &mut p,
            &[gw, gb, gx],
            GRAD_STEP,
        );
        reports.push((name, r));
    }

    let pool = MaxPool1d { width: 2, stride: 2 };
    let x = random_tensor(&[2, 7, 3], &mut rng);
    let (y, tape) = pool.forward(&x);
    let up = random_tensor(y.shape(), &mut rng);
    let gx = pool.backward(&tape, &up);
    let mut p = vec![x];
    let r = check_gradients(|p| dot(&up, &pool.forward(&p[0]).0), &mut p, &[gx], GRAD_STEP);
    reports.push(("max pooling", r));

    for (name, act) in [("dense relu", Activation::Relu), ("dense linear", Activation::Identity)] {
        let mut dense = Dense::new(6, 4, act, &mut rng);
        dense.bias = random_tensor(&[4], &mut rng);
        let x = random_tensor(&[3, 6], &mut rng);
        let up = random_tensor(&[3, 4], &mut rng);
        let (_, tape) = dense.forward(&x);
        let (gw, gb, gx) = dense.backward(&tape, &up);
        let mut p = vec![dense.weight.clone(), dense.bias.clone(), x];
        let r = check_gradients(
            |p| dot(&up, &Dense { weight: p[0].clone(), bias: p[1].clone(), ..dense.clone() }.forward(&p[2]).0),
            &mut p,
            &[gw, gb, gx],
            GRAD_STEP,
        );
        reports.push((name, r));
    }

    let x = random_tensor(&[3, 4], &mut rng);
    let up = random_tensor(&[3, 4], &mut rng);
    let gx = softmax_backward(&softmax(&x), &up);
    let mut p = vec![x];
    let r = check_gradients(|p| dot(&up, &softmax(&p[0])), &mut p, &[gx], GRAD_STEP);
    reports.push(("softmax", r));
    reports
}

pub fn small_dgcnn_config(nodes: usize) -> DgcnnConfig {
    DgcnnConfig { nodes, gconv: vec![8, 8], conv: [4, 4], conv2_width: 5, pool_width: 2, dense: vec![8], k: 3 }
}

/// Whole-model check of a DGCNN with graph convs [8, 8], convs [4, 4] and dense [8] on 5-node states.
pub fn small_dgcnn_gradcheck(seed: u64) -> qroute::Result<GradCheckReport> {
    let ctx = NetworkContext::new(generate_random_topology(5, 7, seed)?, 3);
    let states = random_states(&ctx, &TrafficProfile::default(), 3, 20, 4, seed)?;
    let refs: Vec<&NetworkState> = states.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = random_tensor(&[3, 3], &mut rng);
    let model = gradcheck_model(&Architecture::Dgcnn(small_dgcnn_config(5)), seed);
    Ok(check_model_gradients(&model, &refs, &coeffs, GRAD_STEP))
}

/// Random permutation of `0..n` from `rng`.
pub fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Outcome of relabeling random states and comparing DGCNN q-vectors.
#[derive(Debug, Default)]
pub struct RelabelTrials {
    pub compared: usize,
    pub skipped_ties: usize,
    pub exact_matches: usize,
    pub max_abs_diff: f64,
}

/// `count` random states on 5–9-node graphs whose final-layer sort keys are
/// all distinct, each compared against a random relabeling of itself.
pub fn dgcnn_relabel_trials(count: usize, seed: u64) -> qroute::Result<RelabelTrials> {
    use qroute::model::{QModel, Tape};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models: Vec<QModel> = (5..=9).map(|n| QModel::new(&Architecture::Dgcnn(DgcnnConfig::full(n, 3)), seed + n as u64)).collect();
    let mut out = RelabelTrials::default();
    while out.compared < count {
        let n = rng.gen_range(5..=9);
        let m = rng.gen_range(n..=(n * (n - 1) / 2).min(2 * n));
        let ctx = NetworkContext::new(generate_random_topology(n, m, rng.gen())?, 3);
        let profile = TrafficProfile { concurrency_min: 1, concurrency_max: rng.gen_range(1..=12), ..TrafficProfile::default() };
        let state = random_states(&ctx, &profile, 1, rng.gen_range(0..40), 1, rng.gen())?.remove(0);
        let model = &models[n - 5];
        let (q, tape) = model.forward(&[&state]);
        let Tape::Dgcnn(tape) = tape else { unreachable!() };
        let mut keys = tape.sort_keys().remove(0);
        keys.sort_by(f64::total_cmp);
        if keys.windows(2).any(|w| w[0] == w[1]) {
            out.skipped_ties += 1;
            continue;
        }
        let perm = random_permutation(n, &mut rng);
        let q2 = model.q_values(&state.permute_nodes(&perm));
        out.compared += 1;
        let diff = q.data().iter().zip(&q2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        out.max_abs_diff = out.max_abs_diff.max(diff);
        if q.data().iter().zip(&q2).all(|(a, b)| a.to_bits() == b.to_bits()) {
            out.exact_matches += 1;
        }
    }
    Ok(out)
}

/// Transition between two fixed random states on a 6-node graph.
pub fn sample_transitions(count: usize, seed: u64) -> Vec<qroute::agent::Transition> {
    use std::sync::Arc;
    let ctx = NetworkContext::new(generate_random_topology(6, 9, seed).expect("6 nodes admit 9 links"), 3);
    let states: Vec<Arc<NetworkState>> =
        random_states(&ctx, &TrafficProfile::default(), 8, 10, 3, seed).expect("reachable pairs").into_iter().map(Arc::new).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let i = rng.gen_range(0..states.len() - 1);
            let state = states[i].clone();
            qroute::agent::Transition {
                action: rng.gen_range(0..state.valid_actions),
                request: state.pending,
                state,
                reward: rng.gen_range(0.0..4.0),
                next_state: states[i + 1].clone(),
                congestion: rng.gen_bool(0.5),
            }
        })
        .collect()
}

/// Chi-square p-value of `draws` proportional samples against `priorities / sum`.
pub fn replay_chi_square(priorities: &[f64], draws: usize, seed: u64) -> f64 {
    use qroute::agent::ReplayBuffer;
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let transitions = sample_transitions(1, seed);
    let mut buf = ReplayBuffer::new(priorities.len());
    for &p in priorities {
        buf.push(transitions[0].clone(), p);
    }
    let mut counts = vec![0usize; priorities.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..draws {
        counts[buf.sample_slot(&mut rng)] += 1;
    }
    let total: f64 = priorities.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(priorities)
        .map(|(&c, &p)| {
            let e = draws as f64 * p / total;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    1.0 - ChiSquared::new((priorities.len() - 1) as f64).unwrap().cdf(stat)
}

/// Fills a default-capacity buffer past capacity and checks oldest-first eviction.
pub fn fifo_eviction_holds() -> bool {
    use qroute::agent::{ReplayBuffer, REPLAY_CAPACITY};
    let base = sample_transitions(1, 3).remove(0);
    let mut buf = ReplayBuffer::new(REPLAY_CAPACITY);
    let tagged = |i: usize| qroute::agent::Transition { reward: i as f64, ..base.clone() };
    for i in 0..REPLAY_CAPACITY {
        buf.push(tagged(i), 1.0);
    }
    let full = buf.len() == REPLAY_CAPACITY;
    buf.push(tagged(REPLAY_CAPACITY), 1.0);
    let rewards: Vec<f64> = buf.slots_oldest_first().map(|s| buf.get(s).reward).collect();
    let expected: Vec<f64> = (1..=REPLAY_CAPACITY).map(|i| i as f64).collect();
    full && buf.len() == REPLAY_CAPACITY && rewards == expected
}

/// Monitor run: decay to the floor, prime the window around `tau`, then
/// shift the stream by more than the half-width. Returns the reset count and
/// the largest deviation of the post-reset ε sequence from `0.99995^k`.
pub fn monitor_shift_trial(tau: f64, shift: f64, seed: u64) -> (u32, f64) {
    use qroute::agent::{EpsilonSchedule, ExplorationMonitor};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eps = EpsilonSchedule::new(1.0, 0.99995, 0.01);
    let mut monitor = ExplorationMonitor::new(100, 1.0);
    while !eps.at_floor() {
        eps.decay();
    }
    for _ in 0..100 {
        monitor.observe(tau + rng.gen_range(-0.5..0.5), &mut eps);
    }
    let mut resets = 0;
    let mut since_reset: Option<i32> = None;
    let mut worst: f64 = 0.0;
    for _ in 0..20_000 {
        if monitor.observe(tau + shift + rng.gen_range(-0.5..0.5), &mut eps) {
            resets += 1;
            since_reset = Some(0);
        }
        if let Some(k) = since_reset.as_mut() {
            let expected = (0.99995f64.ln() * *k as f64).exp().max(0.01);
            worst = worst.max((eps.value() - expected).abs());
            *k += 1;
        }
        eps.decay();
    }
    assert_eq!(resets, eps.resets());
    (resets, worst)
}

/// Targets of a mixed batch versus a straight recomputation: congested rows
/// must equal their reward bit-for-bit.
pub fn batch_targets_match(seed: u64) -> bool {
    use qroute::agent::batch_targets;
    use qroute::model::QModel;
    let transitions = sample_transitions(64, seed);
    let refs: Vec<_> = transitions.iter().collect();
    let target = QModel::new(&Architecture::Dgcnn(small_dgcnn_config(6)), seed);
    let gamma = 0.99;
    let y = batch_targets(&target, &refs, gamma);
    transitions.iter().zip(&y).all(|(t, &y)| {
        if t.congestion {
            y.to_bits() == t.reward.to_bits()
        } else {
            let q = target.q_values(&t.next_state);
            let best = q[..t.next_state.valid_actions].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (y - (t.reward + gamma * best)).abs() <= 1e-12
        }
    })
}

/// Short scenario with a demand shift, a small model and a flow log.
pub fn tiny_scenario(agent: qroute::bench::AgentKind, seed: u64) -> qroute::bench::ScenarioSpec {
    use qroute::bench::{ScenarioSpec, TopologySource};
    let mut spec = ScenarioSpec::decreasing_demand(agent, TopologySource::Random { nodes: 6, links: 9, seed: None }, 6, seed);
    spec.name = "tiny".into();
    spec.flow_log = true;
    spec.model.gconv = Some(vec![8, 8]);
    spec.model.conv = Some([4, 4]);
    spec.model.dense = Some(vec![8]);
    spec.model.hidden = Some(vec![16, 8]);
    spec.hyper.updates_per_session = 1;
    spec.hyper.batch_size = 16;
    spec.hyper.flows_per_episode = 50;
    spec.hyper.epsilon_decay = 0.99;
    spec
}

/// Runs `spec` into `dir` and returns every artifact's name and bytes.
pub fn scenario_artifacts(spec: &qroute::bench::ScenarioSpec, dir: &std::path::Path) -> qroute::Result<Vec<(String, Vec<u8>)>> {
    let result = qroute::bench::run_scenario(spec)?;
    qroute::bench::write_artifacts(spec, &result, dir)?;
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)?
        .map(|e| {
            let e = e?;
            Ok((e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path())?))
        })
        .collect::<std::io::Result<_>>()?;
    files.sort();
    Ok(files)
}

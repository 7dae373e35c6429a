//! Deep Q-learning controller.
//!
//! Per flow: pick a path ε-greedily, admit it, store the transition with a
//! TD-error priority, run a few prioritized mini-batch updates, and every
//! `target_sync_flows` flows copy the main network into the target network.
//! ε decays once per flow; once it reaches its floor an [`ExplorationMonitor`]
//! restarts exploration when episode rewards drift out of band.

mod exploration;
mod log;
mod replay;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use exploration::{EpsilonSchedule, ExplorationMonitor};
pub use log::{episode_stats, EpisodeStats, FlowRecord};
pub use replay::{sample_batch, Batch, ReplayBuffer, Transition, PRIORITY_BETA, REPLAY_CAPACITY};

use crate::env::{NetworkState, ProfileShift, RoutingEnv};
use crate::model::{masked_argmax, Architecture, QModel};
use crate::nn::{clip_grad_norm, Tensor};
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// Training hyper-parameters. Every field has a default, so a partial TOML
/// table is enough to override a few of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    /// Gradient updates per flow once the buffer is primed.
    pub updates_per_session: usize,
    pub target_sync_flows: u64,
    pub replay_capacity: usize,
    pub priority_beta: f64,
    /// Global gradient-norm cap; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub flows_per_episode: usize,
    pub monitor_window: usize,
    pub monitor_half_width: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 0.00025,
            gamma: 0.99,
            batch_size: 256,
            epsilon_start: 1.0,
            epsilon_decay: 0.99995,
            epsilon_min: 0.01,
            updates_per_session: 10,
            target_sync_flows: 100,
            replay_capacity: REPLAY_CAPACITY,
            priority_beta: PRIORITY_BETA,
            grad_clip: Some(1.0),
            flows_per_episode: 100,
            monitor_window: 100,
            monitor_half_width: 1.0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(m.into()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a finite non-negative number");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if self.batch_size == 0 || self.replay_capacity == 0 || self.flows_per_episode == 0 || self.monitor_window == 0 {
            return bad("batch_size, replay_capacity, flows_per_episode and monitor_window must be positive");
        }
        if self.target_sync_flows == 0 {
            return bad("target_sync_flows must be positive");
        }
        if !(self.epsilon_min >= 0.0 && self.epsilon_min <= self.epsilon_start && self.epsilon_start <= 1.0) {
            return bad("need 0 <= epsilon_min <= epsilon_start <= 1");
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return bad("epsilon_decay must lie in (0, 1]");
        }
        if !(self.priority_beta > 0.0) {
            return bad("priority_beta must be positive");
        }
        if matches!(self.grad_clip, Some(c) if !(c > 0.0)) {
            return bad("grad_clip must be positive when set");
        }
        Ok(())
    }
}

/// ε-greedy choice among the first `valid` actions. `ζ` is drawn first from
/// `(0, 1]`; the agent exploits when `ε < ζ`, otherwise it picks uniformly.
/// `q` is only evaluated when exploiting.
pub fn epsilon_greedy(valid: usize, epsilon: f64, rng: &mut impl Rng, q: impl FnOnce() -> Vec<f64>) -> Result<usize> {
    if valid == 0 {
        return Err(Error::InvalidScenario("request has no candidate path".into()));
    }
    let zeta = 1.0 - rng.gen::<f64>();
    if epsilon < zeta {
        Ok(masked_argmax(&q(), valid))
    } else {
        Ok(rng.gen_range(0..valid))
    }
}

pub fn select_action(model: &QModel, state: &NetworkState, epsilon: f64, rng: &mut impl Rng) -> Result<usize> {
    if state.valid_actions == 0 {
        return Err(Error::Unreachable { src: state.pending.src, dest: state.pending.dest });
    }
    epsilon_greedy(state.valid_actions, epsilon, rng, || model.q_values(state))
}

/// Masked argmax with no exploration.
pub fn greedy_action(model: &QModel, state: &NetworkState) -> usize {
    masked_argmax(&model.q_values(state), state.valid_actions)
}

/// Bellman target `R + (1 - c) * gamma * max_next_q`. A congested transition
/// returns its reward unchanged.
pub fn td_target(reward: f64, congestion: bool, max_next_q: f64, gamma: f64) -> f64 {
    if congestion {
        reward
    } else {
        reward + gamma * max_next_q
    }
}

/// Largest of the first `valid` target q-values.
pub fn max_valid(q: &[f64], valid: usize) -> f64 {
    q[masked_argmax(q, valid)]
}

/// `(delta, priority)` with `delta = y - q_pred` and `priority = |delta| + beta`.
pub fn td_error_and_priority(q_pred: f64, y: f64, beta: f64) -> (f64, f64) {
    let delta = y - q_pred;
    (delta, delta.abs() + beta)
}

/// Target and current prediction for one transition.
pub fn evaluate_transition(main: &QModel, target: &QModel, t: &Transition, gamma: f64) -> (f64, f64) {
    let q_pred = main.q_values(&t.state)[t.action];
    let y = if t.congestion {
        t.reward
    } else {
        td_target(t.reward, false, max_valid(&target.q_values(&t.next_state), t.next_state.valid_actions), gamma)
    };
    (q_pred, y)
}

/// Targets for a batch of transitions, evaluated with `target` in one pass.
pub fn batch_targets(target: &QModel, transitions: &[&Transition], gamma: f64) -> Vec<f64> {
    let next: Vec<&NetworkState> = transitions.iter().map(|t| t.next_state.as_ref()).collect();
    let q_next = target.q_batch(&next);
    transitions
        .iter()
        .enumerate()
        .map(|(i, t)| td_target(t.reward, t.congestion, max_valid(q_next.row(i), t.next_state.valid_actions), gamma))
        .collect()
}

/// Mean squared TD error over the taken actions and its gradient on the q-values.
pub fn q_loss(q: &Tensor, actions: &[usize], targets: &[f64]) -> (f64, Tensor) {
    let b = q.rows();
    assert_eq!(actions.len(), b);
    assert_eq!(targets.len(), b);
    let mut grad = Tensor::zeros(q.shape());
    let mut loss = 0.0;
    for i in 0..b {
        let d = q.row(i)[actions[i]] - targets[i];
        loss += d * d;
        grad.row_mut(i)[actions[i]] = 2.0 * d / b as f64;
    }
    (loss / b as f64, grad)
}

/// One prioritized mini-batch update of `main`. Returns `Ok(None)` while the
/// buffer is not yet larger than a batch.
pub fn train_step(
    main: &mut QModel,
    target: &QModel,
    buffer: &mut ReplayBuffer,
    hyper: &Hyperparams,
    rng: &mut impl Rng,
) -> Result<Option<f64>> {
    let Some(batch) = sample_batch(buffer, hyper.batch_size, rng) else {
        return Ok(None);
    };
    let transitions: Vec<&Transition> = batch.slots.iter().map(|&s| buffer.get(s)).collect();
    let targets = batch_targets(target, &transitions, hyper.gamma);
    let states: Vec<&NetworkState> = transitions.iter().map(|t| t.state.as_ref()).collect();
    let actions: Vec<usize> = transitions.iter().map(|t| t.action).collect();
    let (q, tape) = main.forward(&states);
    let (loss, grad_q) = q_loss(&q, &actions, &targets);
    if !loss.is_finite() {
        return Err(Error::Divergence(format!("mini-batch loss is {loss}")));
    }
    let mut grads = main.backward(&tape, &grad_q);
    if let Some(clip) = hyper.grad_clip {
        clip_grad_norm(&mut grads, clip);
    }
    main.apply_sgd(&grads, hyper.learning_rate);
    let priorities: Vec<f64> = (0..batch.slots.len())
        .map(|i| td_error_and_priority(q.row(i)[actions[i]], targets[i], hyper.priority_beta).1)
        .collect();
    for (&slot, p) in batch.slots.iter().zip(priorities) {
        buffer.set_priority(slot, p);
    }
    Ok(Some(loss))
}

/// Main and target networks, replay memory and exploration state.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    hyper: Hyperparams,
    main: QModel,
    target: QModel,
    buffer: ReplayBuffer,
    epsilon: EpsilonSchedule,
    monitor: ExplorationMonitor,
    explore_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    flows: u64,
    target_syncs: u64,
    updates: u64,
    last_loss: Option<f64>,
}

impl DqnAgent {
    /// Fresh agent with weights drawn from the seed's init stream.
    pub fn new(arch: &Architecture, hyper: Hyperparams, seed: u64) -> Result<Self> {
        let init_seed = stream_rng(seed, Stream::Init).gen::<u64>();
        Self::with_model(QModel::new(arch, init_seed), hyper, seed)
    }

    /// Agent starting from existing weights; the target network is a copy.
    pub fn with_model(model: QModel, hyper: Hyperparams, seed: u64) -> Result<Self> {
        hyper.validate()?;
        Ok(DqnAgent {
            target: model.clone(),
            main: model,
            buffer: ReplayBuffer::new(hyper.replay_capacity),
            epsilon: EpsilonSchedule::new(hyper.epsilon_start, hyper.epsilon_decay, hyper.epsilon_min),
            monitor: ExplorationMonitor::new(hyper.monitor_window, hyper.monitor_half_width),
            explore_rng: stream_rng(seed, Stream::Exploration),
            replay_rng: stream_rng(seed, Stream::Replay),
            flows: 0,
            target_syncs: 0,
            updates: 0,
            last_loss: None,
            hyper,
        })
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn model(&self) -> &QModel {
        &self.main
    }

    pub fn target_model(&self) -> &QModel {
        &self.target
    }

    pub fn into_model(self) -> QModel {
        self.main
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.value()
    }

    pub fn epsilon_schedule(&self) -> &EpsilonSchedule {
        &self.epsilon
    }

    pub fn monitor(&self) -> &ExplorationMonitor {
        &self.monitor
    }

    pub fn flows_seen(&self) -> u64 {
        self.flows
    }

    pub fn target_syncs(&self) -> u64 {
        self.target_syncs
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.last_loss
    }

    pub fn act(&mut self, state: &NetworkState) -> Result<usize> {
        let eps = self.epsilon.value();
        select_action(&self.main, state, eps, &mut self.explore_rng)
    }

    pub fn greedy(&self, state: &NetworkState) -> usize {
        greedy_action(&self.main, state)
    }

    /// Stores one transition, trains, syncs the target network on schedule
    /// and decays ε.
    pub fn observe(&mut self, transition: Transition) -> Result<()> {
        let (q_pred, y) = evaluate_transition(&self.main, &self.target, &transition, self.hyper.gamma);
        let (_, priority) = td_error_and_priority(q_pred, y, self.hyper.priority_beta);
        if !priority.is_finite() {
            return Err(Error::Divergence(format!("TD error of a new transition is {}", y - q_pred)));
        }
        self.buffer.push(transition, priority);
        if self.buffer.len() > self.hyper.batch_size {
            for _ in 0..self.hyper.updates_per_session {
                if let Some(loss) = train_step(&mut self.main, &self.target, &mut self.buffer, &self.hyper, &mut self.replay_rng)? {
                    self.last_loss = Some(loss);
                    self.updates += 1;
                }
            }
        }
        self.flows += 1;
        if self.flows.is_multiple_of(self.hyper.target_sync_flows) {
            self.main.clone_into(&mut self.target);
            self.target_syncs += 1;
        }
        self.epsilon.decay();
        Ok(())
    }

    /// Feeds an episode's mean reward to the re-exploration monitor.
    pub fn end_episode(&mut self, mean_reward: f64) -> bool {
        self.monitor.observe(mean_reward, &mut self.epsilon)
    }
}

/// Output of [`run_training`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    pub flows: Vec<FlowRecord>,
    pub episodes: Vec<EpisodeStats>,
    /// Episodes at whose end exploration was restarted.
    pub reexplorations: Vec<usize>,
}

/// Applies the shifts scheduled for `episode`; `true` if any was applied.
fn apply_shifts(env: &mut RoutingEnv, shifts: &[ProfileShift], episode: usize) -> Result<bool> {
    let mut applied = false;
    for s in shifts.iter().filter(|s| s.episode == episode) {
        env.set_profile(s.profile.clone())?;
        applied = true;
    }
    Ok(applied)
}

/// Trains `agent` online for `episodes` episodes of `flows_per_episode` flows.
pub fn run_training(
    env: &mut RoutingEnv,
    agent: &mut DqnAgent,
    episodes: usize,
    shifts: &[ProfileShift],
) -> Result<TrainingLog> {
    let per_episode = agent.hyper.flows_per_episode;
    let mut log = TrainingLog { flows: Vec::with_capacity(episodes * per_episode), episodes: Vec::new(), reexplorations: Vec::new() };
    let mut state = Arc::new(env.state());
    for episode in 0..episodes {
        let wrap = |e: Error| Error::Episode { episode, source: Box::new(e) };
        if apply_shifts(env, shifts, episode).map_err(wrap)? {
            state = Arc::new(env.state());
        }
        let first = log.flows.len();
        for flow in 0..per_episode {
            let epsilon = agent.epsilon();
            let action = agent.act(&state).map_err(wrap)?;
            let out = env.step(action);
            let next = Arc::new(out.next_state);
            log.flows.push(FlowRecord {
                episode,
                flow,
                src: out.request.src,
                dest: out.request.dest,
                rate_req_mbps: out.request.rate_mbps,
                path_index: action,
                rate_alloc_mbps: out.rate_alloc_mbps,
                delay_ms: out.delay_ms,
                reward: out.reward,
                congestion: out.congestion,
                epsilon: Some(epsilon),
            });
            agent
                .observe(Transition {
                    state,
                    action,
                    request: out.request,
                    reward: out.reward,
                    next_state: next.clone(),
                    congestion: out.congestion,
                })
                .map_err(wrap)?;
            state = next;
        }
        let stats = EpisodeStats::from_flows(episode, &log.flows[first..]);
        if agent.end_episode(stats.mean_reward) {
            log.reexplorations.push(episode);
        }
        log.episodes.push(stats);
    }
    Ok(log)
}

/// Runs a fixed policy without learning. Records carry no ε.
pub fn rollout(
    env: &mut RoutingEnv,
    episodes: usize,
    flows_per_episode: usize,
    shifts: &[ProfileShift],
    mut policy: impl FnMut(&NetworkState) -> usize,
) -> Result<Vec<FlowRecord>> {
    let mut flows = Vec::with_capacity(episodes * flows_per_episode);
    let mut state = env.state();
    for episode in 0..episodes {
        if apply_shifts(env, shifts, episode).map_err(|e| Error::Episode { episode, source: Box::new(e) })? {
            state = env.state();
        }
        for flow in 0..flows_per_episode {
            let action = policy(&state);
            let out = env.step(action);
            flows.push(FlowRecord {
                episode,
                flow,
                src: out.request.src,
                dest: out.request.dest,
                rate_req_mbps: out.request.rate_mbps,
                path_index: action,
                rate_alloc_mbps: out.rate_alloc_mbps,
                delay_ms: out.delay_ms,
                reward: out.reward,
                congestion: out.congestion,
                epsilon: None,
            });
            state = out.next_state;
        }
    }
    Ok(flows)
}

/// Greedy rollout of a frozen model.
pub fn evaluate_greedy(
    model: &QModel,
    env: &mut RoutingEnv,
    episodes: usize,
    flows_per_episode: usize,
    shifts: &[ProfileShift],
) -> Result<Vec<FlowRecord>> {
    rollout(env, episodes, flows_per_episode, shifts, |s| greedy_action(model, s))
}

/// Seeded RNG for ad-hoc ε-greedy draws outside an agent.
pub fn exploration_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{FlowNetwork, FlowRequest, NetworkContext, TrafficProfile};
    use crate::model::DgcnnConfig;
    use crate::topo::{generate_random_topology, Topology};

    fn tiny_arch(nodes: usize) -> Architecture {
        Architecture::Dgcnn(DgcnnConfig { nodes, gconv: vec![4, 4], conv: [2, 2], conv2_width: 5, pool_width: 2, dense: vec![4], k: 3 })
    }

    fn tiny_hyper() -> Hyperparams {
        Hyperparams { batch_size: 8, updates_per_session: 1, flows_per_episode: 20, ..Hyperparams::default() }
    }

    fn transition(reward: f64, congestion: bool) -> Transition {
        let ctx = NetworkContext::new(Topology::uniform(3, &[(0, 1), (1, 2), (0, 2)], 100.0, 600.0).unwrap(), 3);
        let s = Arc::new(FlowNetwork::new(ctx).build_state(&FlowRequest::new(0, 2, 50.0)));
        Transition { state: s.clone(), action: 1, request: s.pending, reward, next_state: s, congestion }
    }

    #[test]
    fn td_examples() {
        assert_eq!(td_target(1.5, true, 1e9, 0.99), 1.5);
        assert!((td_target(1.5, false, 2.0, 0.99) - 3.48).abs() < 1e-12);
        assert_eq!(td_target(1.5, false, 7.0, 0.0), 1.5);
        assert_eq!(td_error_and_priority(0.4, 0.4, 0.01), (0.0, 0.01));
        let (d, p) = td_error_and_priority(1.2, 0.0, 0.01);
        assert_eq!(d, -1.2);
        assert!((p - 1.21).abs() < 1e-15);
        assert_eq!(td_error_and_priority(0.0, 1.2, 0.01).1, p);
    }

    #[test]
    fn greedy_limit_and_masking() {
        let mut rng = exploration_rng(0);
        for _ in 0..1000 {
            assert_eq!(epsilon_greedy(2, 0.0, &mut rng, || vec![0.3, 0.9, 0.1]).unwrap(), 1);
        }
        assert!(epsilon_greedy(0, 0.0, &mut rng, Vec::new).is_err());
        for _ in 0..1000 {
            assert!(epsilon_greedy(2, 1.0, &mut rng, || unreachable!()).unwrap() < 2);
        }
    }

    #[test]
    fn q_loss_matches_hand_computation() {
        let q = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, -1.0, 0.5, 4.0]);
        let (loss, grad) = q_loss(&q, &[1, 2], &[3.0, 1.0]);
        // ((2-3)^2 + (4-1)^2) / 2
        assert_eq!(loss, 5.0);
        assert_eq!(grad.data(), &[0.0, -1.0, 0.0, 0.0, 0.0, 3.0]);
    }

    #[test]
    fn exact_targets_leave_parameters_unchanged() {
        let model = QModel::new(&tiny_arch(3), 1);
        let t = transition(0.0, true);
        let q = model.q_values(&t.state)[t.action];
        let t = Transition { reward: q, ..t };
        let mut buffer = ReplayBuffer::new(4);
        for _ in 0..3 {
            buffer.push(t.clone(), 1.0);
        }
        let mut main = model.clone();
        let hyper = Hyperparams { batch_size: 2, ..Hyperparams::default() };
        let loss = train_step(&mut main, &model, &mut buffer, &hyper, &mut exploration_rng(3)).unwrap();
        assert_eq!(loss, Some(0.0));
        assert_eq!(main.max_param_diff(&model), 0.0);
        // sampled slots drop to beta, the rest keep their priority
        assert!((0..3).all(|s| buffer.priority(s) == 0.01 || buffer.priority(s) == 1.0));
        assert!((0..3).any(|s| buffer.priority(s) == 0.01));
    }

    #[test]
    fn single_transition_error_shrinks() {
        let t = transition(5.0, true);
        let mut main = QModel::new(&tiny_arch(3), 2);
        let target = main.clone();
        let mut buffer = ReplayBuffer::new(4);
        buffer.push(t.clone(), 1.0);
        buffer.push(t.clone(), 1.0);
        let hyper = Hyperparams { batch_size: 1, learning_rate: 1e-3, grad_clip: None, ..Hyperparams::default() };
        let mut rng = exploration_rng(1);
        let mut last = f64::INFINITY;
        for _ in 0..50 {
            let delta = (5.0 - main.q_values(&t.state)[1]).abs();
            assert!(delta <= last, "{delta} > {last}");
            last = delta;
            train_step(&mut main, &target, &mut buffer, &hyper, &mut rng).unwrap();
        }
    }

    #[test]
    fn syncs_every_hundred_flows_and_is_deterministic() {
        let run = || {
            let topo = generate_random_topology(5, 7, 3).unwrap();
            let ctx = NetworkContext::new(topo, 3);
            let mut env = RoutingEnv::new(ctx, TrafficProfile::default(), 9).unwrap();
            let mut agent = DqnAgent::new(&tiny_arch(5), tiny_hyper(), 4).unwrap();
            let log = run_training(&mut env, &mut agent, 15, &[]).unwrap();
            (log, agent.target_syncs(), agent.updates())
        };
        let (a, syncs, updates) = run();
        assert_eq!(syncs, 3);
        assert_eq!(updates, 300 - 8);
        assert_eq!(a.episodes.len(), 15);
        assert_eq!(run().0, a);
    }

    #[test]
    fn pinned_epsilon_equals_random_rollout() {
        let topo = generate_random_topology(5, 7, 3).unwrap();
        let ctx = NetworkContext::new(topo, 3);
        let hyper = Hyperparams { epsilon_decay: 1.0, ..tiny_hyper() };
        let mut env = RoutingEnv::new(ctx.clone(), TrafficProfile::default(), 9).unwrap();
        let mut agent = DqnAgent::new(&tiny_arch(5), hyper, 4).unwrap();
        let trained = run_training(&mut env, &mut agent, 5, &[]).unwrap();

        let mut env = RoutingEnv::new(ctx, TrafficProfile::default(), 9).unwrap();
        let mut rng = stream_rng(4, Stream::Exploration);
        let random = rollout(&mut env, 5, 20, &[], |s| {
            epsilon_greedy(s.valid_actions, 1.0, &mut rng, || unreachable!()).unwrap()
        })
        .unwrap();
        for (a, b) in trained.flows.iter().zip(&random) {
            assert_eq!(FlowRecord { epsilon: None, ..*a }, *b);
        }
    }
}

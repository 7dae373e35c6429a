//! Flow-level network environment.
//!
//! Flows are routed atomically on one candidate path and receive
//! `min(requested, bottleneck residual)` at admission. Allocations are frozen
//! until the flow departs; there is no packet or queueing model.

mod state;
mod traffic;

use std::collections::VecDeque;
use std::sync::Arc;

pub use state::{NetworkState, FIXED_FEATURES};
pub use traffic::{generate_traffic, Arrival, FlowRequest, ProfileShift, TrafficGenerator, TrafficProfile};

use crate::topo::{build_normalized_adjacency, CandidatePathTable, NodeImportance, NormalizedAdjacency, Path, Topology};
use crate::Result;

/// Signal propagation speed in fiber, m/s.
pub const PROPAGATION_SPEED_M_PER_S: f64 = 2.0e8;
/// One 1500-byte packet.
pub const PACKET_BITS: f64 = 12_000.0;
/// Rate used for the transmission term when a flow got (almost) nothing.
pub const DELAY_RATE_FLOOR_MBPS: f64 = 1.0;
/// Normalizer for the requested-rate feature.
pub const RATE_NORMALIZER_MBPS: f64 = 100.0;

/// End-to-end delay in milliseconds: propagation over every link plus one
/// packet's transmission time per hop at the allocated rate.
pub fn compute_delay(link_distances_m: &[f64], rate_alloc_mbps: f64) -> f64 {
    let rate = rate_alloc_mbps.max(DELAY_RATE_FLOOR_MBPS);
    let per_hop_tx_ms = PACKET_BITS / (rate * 1e6) * 1e3;
    link_distances_m
        .iter()
        .map(|d| d / PROPAGATION_SPEED_M_PER_S * 1e3 + per_hop_tx_ms)
        .sum()
}

/// `rate_alloc / rate_req + 1 / delay`.
pub fn reward(rate_alloc_mbps: f64, rate_req_mbps: f64, delay_ms: f64) -> f64 {
    debug_assert!(rate_req_mbps > 0.0 && delay_ms > 0.0);
    rate_alloc_mbps / rate_req_mbps + 1.0 / delay_ms
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveFlow {
    pub request: FlowRequest,
    pub path: Path,
    pub path_index: usize,
    pub rate_alloc_mbps: f64,
    /// Arrivals left before departure; `None` pins the flow indefinitely.
    pub remaining_life: Option<u32>,
}

/// Result of admitting one flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Admission {
    pub rate_alloc_mbps: f64,
    pub delay_ms: f64,
    pub reward: f64,
    pub congestion: bool,
}

/// Static topology data shared by every environment on the same graph.
#[derive(Debug)]
pub struct NetworkContext {
    pub topology: Topology,
    pub paths: CandidatePathTable,
    pub adjacency: Arc<NormalizedAdjacency>,
    pub importance: NodeImportance,
}

impl NetworkContext {
    pub fn new(topology: Topology, k: usize) -> Arc<Self> {
        let paths = CandidatePathTable::build(&topology, k);
        let importance = crate::topo::importance_from_table(topology.node_count(), &paths);
        let adjacency = Arc::new(build_normalized_adjacency(&topology));
        Arc::new(NetworkContext { topology, paths, adjacency, importance })
    }

    pub fn nodes(&self) -> usize {
        self.topology.node_count()
    }

    pub fn k(&self) -> usize {
        self.paths.k()
    }
}

/// Link loads and active flows on a fixed topology.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    ctx: Arc<NetworkContext>,
    link_load: Vec<f64>,
    flows: VecDeque<ActiveFlow>,
}

impl FlowNetwork {
    pub fn new(ctx: Arc<NetworkContext>) -> Self {
        let links = ctx.topology.link_count();
        FlowNetwork { ctx, link_load: vec![0.0; links], flows: VecDeque::new() }
    }

    pub fn context(&self) -> &Arc<NetworkContext> {
        &self.ctx
    }

    pub fn flows(&self) -> impl Iterator<Item = &ActiveFlow> {
        self.flows.iter()
    }

    /// Active generated flows (pinned flows excluded).
    pub fn concurrency(&self) -> usize {
        self.flows.iter().filter(|f| f.remaining_life.is_some()).count()
    }

    pub fn link_load(&self, link: usize) -> f64 {
        self.link_load[link]
    }

    fn path_links(&self, path: &[usize]) -> Vec<usize> {
        path.windows(2)
            .map(|w| self.ctx.topology.link_between(w[0], w[1]).expect("candidate paths follow links"))
            .collect()
    }

    /// Smallest `capacity - load` along `path`.
    pub fn bottleneck_residual(&self, path: &[usize]) -> f64 {
        self.path_links(path)
            .into_iter()
            .map(|l| self.ctx.topology.links()[l].capacity_mbps - self.link_load[l])
            .fold(f64::INFINITY, f64::min)
    }

    /// Routes `request` on candidate `path_index`. `lifetime = None` pins the flow.
    ///
    /// Panics if `path_index` is not a valid candidate for the pair.
    pub fn admit(&mut self, request: FlowRequest, path_index: usize, lifetime: Option<u32>) -> Admission {
        let candidates = self.ctx.paths.paths(request.src, request.dest);
        assert!(
            path_index < candidates.len(),
            "path index {path_index} out of range for pair ({}, {}) with {} candidates",
            request.src,
            request.dest,
            candidates.len()
        );
        let path = candidates[path_index].clone();
        let residual = self.bottleneck_residual(&path);
        let rate_alloc = request.rate_mbps.min(residual).max(0.0);
        let congestion = residual < request.rate_mbps;
        let distances: Vec<f64> = self
            .path_links(&path)
            .into_iter()
            .map(|l| self.ctx.topology.links()[l].distance_m)
            .collect();
        let delay_ms = compute_delay(&distances, rate_alloc);
        let r = reward(rate_alloc, request.rate_mbps, delay_ms);
        self.flows.push_back(ActiveFlow {
            request,
            path,
            path_index,
            rate_alloc_mbps: rate_alloc,
            remaining_life: lifetime,
        });
        self.recompute_loads();
        Admission { rate_alloc_mbps: rate_alloc, delay_ms, reward: r, congestion }
    }

    /// One arrival has passed: decrement lifetimes and retire expired flows.
    pub fn age(&mut self) {
        for f in self.flows.iter_mut() {
            if let Some(life) = f.remaining_life.as_mut() {
                *life = life.saturating_sub(1);
            }
        }
        let before = self.flows.len();
        self.flows.retain(|f| f.remaining_life != Some(0));
        if self.flows.len() != before {
            self.recompute_loads();
        }
    }

    /// Retires the oldest generated flows until at most `max` remain.
    pub fn enforce_max_concurrency(&mut self, max: usize) {
        let mut excess = self.concurrency().saturating_sub(max);
        if excess == 0 {
            return;
        }
        self.flows.retain(|f| {
            if excess > 0 && f.remaining_life.is_some() {
                excess -= 1;
                false
            } else {
                true
            }
        });
        self.recompute_loads();
    }

    pub fn clear(&mut self) {
        self.flows.clear();
        self.recompute_loads();
    }

    // Loads are rebuilt from scratch so that departures never leave rounding residue.
    fn recompute_loads(&mut self) {
        self.link_load.iter_mut().for_each(|l| *l = 0.0);
        for i in 0..self.flows.len() {
            let links = self.path_links(&self.flows[i].path);
            let rate = self.flows[i].rate_alloc_mbps;
            for l in links {
                self.link_load[l] += rate;
            }
        }
    }

    /// Network state as observed by the agent when `pending` arrives.
    pub fn build_state(&self, pending: &FlowRequest) -> NetworkState {
        state::build_state(self, pending)
    }
}

/// One decision step's outcome.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub request: FlowRequest,
    pub path_index: usize,
    pub rate_alloc_mbps: f64,
    pub delay_ms: f64,
    pub reward: f64,
    pub congestion: bool,
    /// Generated flows in the network right after this admission.
    pub active_flows: usize,
    /// State seen by the next arrival.
    pub next_state: NetworkState,
}

/// Gym-style environment: a [`FlowNetwork`] fed by a [`TrafficGenerator`].
///
/// Each [`RoutingEnv::step`] admits the pending arrival on the chosen path,
/// draws the next arrival, ages the active flows by one arrival and returns
/// the state the next arrival observes.
#[derive(Debug, Clone)]
pub struct RoutingEnv {
    network: FlowNetwork,
    traffic: TrafficGenerator,
    pending: Arrival,
}

impl RoutingEnv {
    pub fn new(ctx: Arc<NetworkContext>, profile: TrafficProfile, seed: u64) -> Result<Self> {
        let mut traffic = TrafficGenerator::new(ctx.nodes(), profile, seed)?;
        let pending = traffic.next_arrival();
        if let Some(src) = unreachable_pair(&ctx, traffic.profile()) {
            return Err(crate::Error::Unreachable { src: src.0, dest: src.1 });
        }
        Ok(RoutingEnv { network: FlowNetwork::new(ctx), traffic, pending })
    }

    pub fn context(&self) -> &Arc<NetworkContext> {
        self.network.context()
    }

    pub fn network(&self) -> &FlowNetwork {
        &self.network
    }

    pub fn network_mut(&mut self) -> &mut FlowNetwork {
        &mut self.network
    }

    pub fn pending(&self) -> &FlowRequest {
        &self.pending.request
    }

    pub fn profile(&self) -> &TrafficProfile {
        self.traffic.profile()
    }

    /// Switches the traffic profile. The pending arrival is redrawn so the
    /// next decision already sees the new profile.
    pub fn set_profile(&mut self, profile: TrafficProfile) -> Result<()> {
        profile.validate(self.context().nodes())?;
        if let Some((src, dest)) = unreachable_pair(self.context(), &profile) {
            return Err(crate::Error::Unreachable { src, dest });
        }
        self.traffic.set_profile(profile)?;
        self.pending = self.traffic.next_arrival();
        Ok(())
    }

    pub fn state(&self) -> NetworkState {
        self.network.build_state(&self.pending.request)
    }

    pub fn valid_actions(&self) -> usize {
        self.context().paths.valid_count(self.pending.request.src, self.pending.request.dest)
    }

    pub fn step(&mut self, path_index: usize) -> StepOutcome {
        let arrival = self.pending;
        self.network.enforce_max_concurrency(self.traffic.profile().concurrency_max as usize - 1);
        let adm = self.network.admit(arrival.request, path_index, Some(arrival.lifetime));
        let active_flows = self.network.concurrency();
        self.pending = self.traffic.next_arrival();
        self.network.age();
        StepOutcome {
            request: arrival.request,
            path_index,
            rate_alloc_mbps: adm.rate_alloc_mbps,
            delay_ms: adm.delay_ms,
            reward: adm.reward,
            congestion: adm.congestion,
            active_flows,
            next_state: self.state(),
        }
    }
}

/// `count` states visited by a uniformly random routing policy after
/// `warmup` arrivals, one state every `spacing` arrivals.
pub fn random_states(
    ctx: &Arc<NetworkContext>,
    profile: &TrafficProfile,
    count: usize,
    warmup: usize,
    spacing: usize,
    seed: u64,
) -> Result<Vec<NetworkState>> {
    use rand::Rng;
    let mut env = RoutingEnv::new(ctx.clone(), profile.clone(), seed)?;
    let mut rng = crate::rng::stream_rng(seed, crate::rng::Stream::Exploration);
    let mut out = Vec::with_capacity(count);
    let mut step = 0;
    while out.len() < count {
        let action = rng.gen_range(0..env.valid_actions());
        let outcome = env.step(action);
        step += 1;
        if step > warmup && (step - warmup).is_multiple_of(spacing.max(1)) {
            out.push(outcome.next_state);
        }
    }
    Ok(out)
}

fn unreachable_pair(ctx: &NetworkContext, profile: &TrafficProfile) -> Option<(usize, usize)> {
    let n = ctx.nodes();
    let mut pairs: Vec<(usize, usize)> = match &profile.pairs {
        Some(p) => p.clone(),
        None => (0..n).flat_map(|s| (0..n).filter(move |&d| d != s).map(move |d| (s, d))).collect(),
    };
    pairs.retain(|&(s, d)| ctx.paths.valid_count(s, d) == 0);
    pairs.first().copied()
}

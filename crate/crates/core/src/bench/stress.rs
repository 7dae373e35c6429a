use std::fmt::Write as _;

use crate::agent::{greedy_action, rollout, FlowRecord};
use crate::env::{NetworkContext, ProfileShift, RoutingEnv, TrafficProfile};
use crate::model::QModel;
use crate::topo::Topology;
use crate::{Error, Result};

use super::ospf_action;

/// Offered-load escalation: both ends of the rate range grow by `step_mbps`
/// every `block_episodes` episodes until the upper end reaches `stop_max_mbps`.
#[derive(Debug, Clone, PartialEq)]
pub struct StressSchedule {
    pub start: (f64, f64),
    pub step_mbps: f64,
    pub block_episodes: usize,
    pub stop_max_mbps: f64,
    pub flows_per_episode: usize,
}

impl Default for StressSchedule {
    fn default() -> Self {
        StressSchedule { start: (40.0, 60.0), step_mbps: 5.0, block_episodes: 10, stop_max_mbps: 100.0, flows_per_episode: 100 }
    }
}

impl StressSchedule {
    /// Rate ranges, lowest load first.
    pub fn blocks(&self) -> Vec<(f64, f64)> {
        assert!(self.step_mbps > 0.0 && self.block_episodes > 0);
        let mut out = Vec::new();
        let mut i = 0.0;
        loop {
            let hi = self.start.1 + i * self.step_mbps;
            if hi > self.stop_max_mbps + 1e-9 {
                break;
            }
            out.push((self.start.0 + i * self.step_mbps, hi));
            i += 1.0;
        }
        out
    }

    pub fn episodes(&self) -> usize {
        self.blocks().len() * self.block_episodes
    }

    pub fn shifts(&self, base: &TrafficProfile) -> Vec<ProfileShift> {
        self.blocks()
            .into_iter()
            .enumerate()
            .map(|(b, (lo, hi))| ProfileShift { episode: b * self.block_episodes, profile: base.with_rates(lo, hi) })
            .collect()
    }
}

/// A frozen routing policy.
#[derive(Debug, Clone)]
pub enum Policy {
    Ospf,
    /// Greedy (ε = 0) on a fixed q-network.
    Greedy(QModel),
}

/// Means over one load block for one policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockMetrics {
    pub throughput_mbps: f64,
    pub delay_ms: f64,
    pub reward: f64,
    pub congestion_rate: f64,
}

impl BlockMetrics {
    pub fn from_flows(flows: &[FlowRecord]) -> Self {
        let n = flows.len() as f64;
        let mean = |f: fn(&FlowRecord) -> f64| flows.iter().map(f).sum::<f64>() / n;
        BlockMetrics {
            throughput_mbps: mean(|r| r.rate_alloc_mbps),
            delay_ms: mean(|r| r.delay_ms),
            reward: mean(|r| r.reward),
            congestion_rate: mean(|r| f64::from(u8::from(r.congestion))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressRow {
    pub rate_min: f64,
    pub rate_max: f64,
    pub central_rate: f64,
    /// One entry per policy, in [`StressTable::policies`] order.
    pub results: Vec<BlockMetrics>,
}

/// Throughput and delay per offered-load block for each policy.
#[derive(Debug, Clone, PartialEq)]
pub struct StressTable {
    pub policies: Vec<String>,
    pub rows: Vec<StressRow>,
    /// Every routed flow, per policy.
    pub flows: Vec<Vec<FlowRecord>>,
}

impl StressTable {
    pub fn policy_index(&self, name: &str) -> Option<usize> {
        self.policies.iter().position(|p| p == name)
    }

    /// Policy means over the last `blocks` rows, weighting flows equally.
    pub fn tail(&self, policy: usize, blocks: usize) -> BlockMetrics {
        let per_block = self.flows[policy].len() / self.rows.len();
        let start = (self.rows.len() - blocks.min(self.rows.len())) * per_block;
        BlockMetrics::from_flows(&self.flows[policy][start..])
    }

    /// `(throughput gain %, delay change %)` of `policy` relative to `baseline` over the tail.
    pub fn relative(&self, policy: usize, baseline: usize, blocks: usize) -> (f64, f64) {
        let p = self.tail(policy, blocks);
        let b = self.tail(baseline, blocks);
        (
            100.0 * (p.throughput_mbps - b.throughput_mbps) / b.throughput_mbps,
            100.0 * (p.delay_ms - b.delay_ms) / b.delay_ms,
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rate_min,rate_max,central_rate_mbps,policy,throughput_mbps,delay_ms,reward,congestion_rate\n");
        for r in &self.rows {
            for (name, m) in self.policies.iter().zip(&r.results) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.rate_min, r.rate_max, r.central_rate, name, m.throughput_mbps, m.delay_ms, m.reward, m.congestion_rate
                );
            }
        }
        out
    }
}

/// Checks that a model fits the topology and candidate-path count.
pub fn check_model_fits(model: &QModel, topology: &Topology, k: usize) -> Result<()> {
    let arch = model.architecture();
    if arch.nodes() != topology.node_count() || arch.k() != k {
        return Err(Error::Checkpoint(format!(
            "model expects {} nodes and {} paths, topology has {} nodes and k = {k}",
            arch.nodes(),
            arch.k(),
            topology.node_count()
        )));
    }
    Ok(())
}

/// Replays one seeded request sequence under escalating load against each
/// frozen policy. No learning takes place.
pub fn run_frozen_stress_test(
    policies: &[(String, Policy)],
    topology: &Topology,
    k: usize,
    base: &TrafficProfile,
    schedule: &StressSchedule,
    seed: u64,
) -> Result<StressTable> {
    for (_, p) in policies {
        if let Policy::Greedy(m) = p {
            check_model_fits(m, topology, k)?;
        }
    }
    let ctx = NetworkContext::new(topology.clone(), k);
    let shifts = schedule.shifts(base);
    let blocks = schedule.blocks();
    let mut all_flows = Vec::with_capacity(policies.len());
    for (_, policy) in policies {
        let mut env = RoutingEnv::new(ctx.clone(), shifts[0].profile.clone(), seed)?;
        let flows = match policy {
            Policy::Ospf => rollout(&mut env, schedule.episodes(), schedule.flows_per_episode, &shifts, |s| ospf_action(&ctx, s))?,
            Policy::Greedy(m) => rollout(&mut env, schedule.episodes(), schedule.flows_per_episode, &shifts, |s| greedy_action(m, s))?,
        };
        all_flows.push(flows);
    }
    let per_block = schedule.block_episodes * schedule.flows_per_episode;
    let rows = blocks
        .iter()
        .enumerate()
        .map(|(b, &(lo, hi))| StressRow {
            rate_min: lo,
            rate_max: hi,
            central_rate: (lo + hi) / 2.0,
            results: all_flows.iter().map(|f| BlockMetrics::from_flows(&f[b * per_block..(b + 1) * per_block])).collect(),
        })
        .collect();
    Ok(StressTable { policies: policies.iter().map(|(n, _)| n.clone()).collect(), rows, flows: all_flows })
}

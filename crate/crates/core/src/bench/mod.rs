//! Experiment harness: the OSPF baseline, TOML-described scenarios,
//! metric aggregation and the frozen-model stress test.

mod metrics;
mod scenario;
mod stress;

pub use metrics::{aggregate_metrics, flows_csv, to_csv, MetricSeries, FLOWS_HEADER, METRICS_HEADER, SMOOTHING_WINDOW};
pub use scenario::{
    build_env, run_scenario, write_artifacts, AgentKind, ModelSizes, PinnedFlow, ScenarioResult, ScenarioSpec,
    TopologySource,
};
pub use stress::{check_model_fits, run_frozen_stress_test, BlockMetrics, Policy, StressRow, StressSchedule, StressTable};

use crate::env::{FlowRequest, NetworkContext, NetworkState};
use crate::topo::{shortest_path, Path, Topology};
use crate::{Error, Result};

/// Seed of the 9-node, 16-link reference topology.
pub const REFERENCE_TOPOLOGY_SEED: u64 = 9;

/// The seeded 9-node, 16-link topology used by the stress experiments.
pub fn reference_topology() -> Topology {
    crate::topo::generate_random_topology(9, 16, REFERENCE_TOPOLOGY_SEED).expect("9 nodes admit 16 links")
}

/// Load-oblivious minimum-hop route with lexicographic tie-break.
pub fn ospf_route(topo: &Topology, request: &FlowRequest) -> Result<Path> {
    shortest_path(topo, request.src, request.dest).ok_or(Error::Unreachable { src: request.src, dest: request.dest })
}

/// Candidate index of the OSPF route for the state's pending request.
pub fn ospf_action(ctx: &NetworkContext, state: &NetworkState) -> usize {
    let req = &state.pending;
    let route = ospf_route(&ctx.topology, req).expect("environment only generates reachable pairs");
    ctx.paths
        .paths(req.src, req.dest)
        .iter()
        .position(|p| *p == route)
        .expect("the OSPF route is a minimum-hop candidate")
}

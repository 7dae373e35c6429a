use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::metrics::{aggregate_metrics, flows_csv, MetricSeries};
use super::ospf_action;
use crate::agent::{rollout, run_training, DqnAgent, FlowRecord, Hyperparams};
use crate::env::{FlowRequest, NetworkContext, ProfileShift, RoutingEnv, TrafficProfile};
use crate::model::{save_checkpoint, Architecture, DgcnnConfig, MlpConfig, QModel};
use crate::topo::{dumbbell, generate_random_topology, nsfnet, Topology, DEFAULT_K};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Dgcnn,
    Mlp,
    Ospf,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Dgcnn => "dgcnn",
            AgentKind::Mlp => "mlp",
            AgentKind::Ospf => "ospf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TopologySource {
    /// Connected random graph; `seed` defaults to the scenario seed.
    Random {
        nodes: usize,
        links: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Nsfnet,
    Dumbbell,
    File { path: PathBuf },
}

impl TopologySource {
    pub fn build(&self, scenario_seed: u64) -> Result<Topology> {
        match self {
            TopologySource::Random { nodes, links, seed } => {
                generate_random_topology(*nodes, *links, seed.unwrap_or(scenario_seed))
            }
            TopologySource::Nsfnet => Ok(nsfnet()),
            TopologySource::Dumbbell => Ok(dumbbell()),
            TopologySource::File { path } => Topology::load(path),
        }
    }
}

/// Optional layer-size overrides; unset fields keep the full architecture.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSizes {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gconv: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conv: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dense: Option<Vec<usize>>,
    /// Hidden layers of the MLP baseline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
}

impl ModelSizes {
    pub fn architecture(&self, kind: AgentKind, nodes: usize, k: usize) -> Option<Architecture> {
        match kind {
            AgentKind::Dgcnn => {
                let mut c = DgcnnConfig::full(nodes, k);
                if let Some(g) = &self.gconv {
                    c.gconv = g.clone();
                }
                if let Some(conv) = self.conv {
                    c.conv = conv;
                }
                if let Some(d) = &self.dense {
                    c.dense = d.clone();
                }
                Some(Architecture::Dgcnn(c))
            }
            AgentKind::Mlp => {
                let mut c = MlpConfig::full(nodes, k);
                if let Some(h) = &self.hidden {
                    c.hidden = h.clone();
                }
                Some(Architecture::Mlp(c))
            }
            AgentKind::Ospf => None,
        }
    }
}

/// A flow installed before the first arrival and never retired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinnedFlow {
    pub src: usize,
    pub dest: usize,
    pub rate_mbps: f64,
    /// Candidate-path index the flow occupies.
    #[serde(default)]
    pub path: usize,
}

/// One experiment, loadable from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub seed: u64,
    pub episodes: usize,
    pub agent: AgentKind,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Also write every routed flow to `flows.csv`.
    #[serde(default)]
    pub flow_log: bool,
    pub topology: TopologySource,
    #[serde(default)]
    pub traffic: TrafficProfile,
    #[serde(default)]
    pub hyper: Hyperparams,
    #[serde(default)]
    pub model: ModelSizes,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shifts: Vec<ProfileShift>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pinned: Vec<PinnedFlow>,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_k() -> usize {
    DEFAULT_K
}

impl ScenarioSpec {
    pub fn new(name: &str, agent: AgentKind, topology: TopologySource, episodes: usize, seed: u64) -> Self {
        ScenarioSpec {
            name: name.into(),
            seed,
            episodes,
            agent,
            k: DEFAULT_K,
            output_dir: None,
            flow_log: false,
            topology,
            traffic: TrafficProfile::default(),
            hyper: Hyperparams::default(),
            model: ModelSizes::default(),
            shifts: Vec::new(),
            pinned: Vec::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Checks everything that does not need the topology.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if let Some(s) = self.shifts.iter().find(|s| s.episode >= self.episodes) {
            return bad(format!("shift at episode {} is outside the {} episodes", s.episode, self.episodes));
        }
        if let Some(p) = self.pinned.iter().find(|p| !(p.rate_mbps > 0.0) || p.src == p.dest || p.path >= self.k) {
            return bad(format!("pinned flow {p:?} is invalid"));
        }
        self.hyper.validate()
    }

    /// Decreasing traffic demand: `[40,60]` Mbps, then `[20,40]` from `shift_at` on.
    pub fn decreasing_demand(agent: AgentKind, topology: TopologySource, shift_at: usize, seed: u64) -> Self {
        let mut s = Self::new("decreasing-demand", agent, topology, 2 * shift_at, seed);
        s.shifts.push(ProfileShift { episode: shift_at, profile: s.traffic.with_rates(20.0, 40.0) });
        s
    }

    /// Increasing congestion: 10-20 concurrent flows, then 20-30 from `shift_at` on.
    pub fn increasing_congestion(agent: AgentKind, topology: TopologySource, shift_at: usize, seed: u64) -> Self {
        let mut s = Self::new("increasing-congestion", agent, topology, 2 * shift_at, seed);
        let profile = TrafficProfile { concurrency_min: 20, concurrency_max: 30, ..s.traffic.clone() };
        s.shifts.push(ProfileShift { episode: shift_at, profile });
        s
    }
}

/// Everything a finished scenario produced.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub topology: Topology,
    pub series: MetricSeries,
    pub flows: Vec<FlowRecord>,
    /// Trained main network; `None` for OSPF.
    pub model: Option<QModel>,
    pub reexplorations: Vec<usize>,
}

/// Environment for `spec` with pinned flows installed.
pub fn build_env(spec: &ScenarioSpec, topology: Topology) -> Result<RoutingEnv> {
    let ctx = NetworkContext::new(topology, spec.k);
    build_env_in(&ctx, &spec.traffic, &spec.pinned, spec.seed)
}

pub(crate) fn build_env_in(
    ctx: &Arc<NetworkContext>,
    traffic: &TrafficProfile,
    pinned: &[PinnedFlow],
    seed: u64,
) -> Result<RoutingEnv> {
    let mut env = RoutingEnv::new(ctx.clone(), traffic.clone(), seed)?;
    let n = ctx.nodes();
    for p in pinned {
        if p.src >= n || p.dest >= n {
            return Err(Error::InvalidScenario(format!("pinned flow {p:?} references a missing node")));
        }
        if p.path >= ctx.paths.valid_count(p.src, p.dest) {
            return Err(Error::InvalidScenario(format!("pinned flow {p:?} has no candidate path {}", p.path)));
        }
        env.network_mut().admit(FlowRequest::new(p.src, p.dest, p.rate_mbps), p.path, None);
    }
    Ok(env)
}

/// Runs `spec` and, when `output_dir` is set, writes `metrics.csv`,
/// `smoothed.csv`, `scenario.toml`, `checkpoint.txt` (learning agents) and
/// optionally `flows.csv`.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioResult> {
    spec.validate()?;
    let topology = spec.topology.build(spec.seed)?;
    let mut env = build_env(spec, topology.clone())?;
    let per_episode = spec.hyper.flows_per_episode;
    let (flows, model, reexplorations) = match spec.model.architecture(spec.agent, topology.node_count(), spec.k) {
        None => {
            let ctx = env.context().clone();
            let flows = rollout(&mut env, spec.episodes, per_episode, &spec.shifts, |s| ospf_action(&ctx, s))?;
            (flows, None, Vec::new())
        }
        Some(arch) => {
            let mut agent = DqnAgent::new(&arch, spec.hyper.clone(), spec.seed)?;
            let log = run_training(&mut env, &mut agent, spec.episodes, &spec.shifts)?;
            (log.flows, Some(agent.into_model()), log.reexplorations)
        }
    };
    let series = aggregate_metrics(&flows, per_episode);
    let result = ScenarioResult { topology, series, flows, model, reexplorations };
    if let Some(dir) = &spec.output_dir {
        write_artifacts(spec, &result, dir)?;
    }
    Ok(result)
}

pub fn write_artifacts(spec: &ScenarioSpec, result: &ScenarioResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.csv"), result.series.raw_csv())?;
    fs::write(dir.join("smoothed.csv"), result.series.smoothed_csv())?;
    fs::write(dir.join("scenario.toml"), format!("# metrics schema v1\n{}", spec.to_toml()))?;
    if let Some(m) = &result.model {
        save_checkpoint(m, &dir.join("checkpoint.txt"))?;
    }
    if spec.flow_log {
        fs::write(dir.join("flows.csv"), flows_csv(&result.flows))?;
    }
    Ok(())
}

use serde::{Deserialize, Serialize};

/// One routed flow as seen by the metric pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub episode: usize,
    pub flow: usize,
    pub src: usize,
    pub dest: usize,
    pub rate_req_mbps: f64,
    pub path_index: usize,
    pub rate_alloc_mbps: f64,
    pub delay_ms: f64,
    pub reward: f64,
    pub congestion: bool,
    /// Exploration rate used for the decision; absent for static policies.
    pub epsilon: Option<f64>,
}

/// Per-episode means over the flows of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    pub mean_reward: f64,
    pub mean_throughput_mbps: f64,
    pub mean_delay_ms: f64,
    /// Exploration rate at the episode's last decision.
    pub epsilon: Option<f64>,
    pub congestion_rate: f64,
}

impl EpisodeStats {
    /// Arithmetic means over `flows`, which must be non-empty.
    pub fn from_flows(episode: usize, flows: &[FlowRecord]) -> Self {
        assert!(!flows.is_empty(), "episode {episode} has no flows");
        let n = flows.len() as f64;
        let mean = |f: fn(&FlowRecord) -> f64| flows.iter().map(f).sum::<f64>() / n;
        EpisodeStats {
            episode,
            mean_reward: mean(|r| r.reward),
            mean_throughput_mbps: mean(|r| r.rate_alloc_mbps),
            mean_delay_ms: mean(|r| r.delay_ms),
            epsilon: flows.last().and_then(|r| r.epsilon),
            congestion_rate: mean(|r| if r.congestion { 1.0 } else { 0.0 }),
        }
    }
}

/// Splits `flows` into consecutive episodes of `flows_per_episode` records.
/// A partial trailing group is left out; its size is returned alongside.
pub fn episode_stats(flows: &[FlowRecord], flows_per_episode: usize) -> (Vec<EpisodeStats>, usize) {
    assert!(flows_per_episode > 0);
    let chunks = flows.chunks_exact(flows_per_episode);
    let dropped = chunks.remainder().len();
    let stats = chunks.map(|c| EpisodeStats::from_flows(c[0].episode, c)).collect();
    (stats, dropped)
}

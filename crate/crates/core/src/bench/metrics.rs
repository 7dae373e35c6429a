use std::fmt::Write as _;

use crate::agent::{episode_stats, EpisodeStats, FlowRecord};

/// Episodes averaged into one smoothed point.
pub const SMOOTHING_WINDOW: usize = 10;

pub const METRICS_HEADER: &str = "episode,mean_reward,mean_throughput_mbps,mean_delay_ms,epsilon,congestion_rate";

/// Per-episode means and their non-overlapping means of [`SMOOTHING_WINDOW`].
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub episodes: Vec<EpisodeStats>,
    pub smoothed: Vec<EpisodeStats>,
    /// Flows of a partial trailing episode that were left out.
    pub dropped_flows: usize,
}

impl MetricSeries {
    pub fn from_episodes(episodes: Vec<EpisodeStats>) -> Self {
        let smoothed = episodes.chunks_exact(SMOOTHING_WINDOW).map(smooth).collect();
        MetricSeries { episodes, smoothed, dropped_flows: 0 }
    }

    pub fn has_epsilon(&self) -> bool {
        self.episodes.iter().any(|e| e.epsilon.is_some())
    }

    pub fn raw_csv(&self) -> String {
        to_csv(&self.episodes, self.has_epsilon())
    }

    pub fn smoothed_csv(&self) -> String {
        to_csv(&self.smoothed, self.has_epsilon())
    }

    /// Mean of one metric over every episode.
    pub fn overall(&self, metric: fn(&EpisodeStats) -> f64) -> f64 {
        self.episodes.iter().map(metric).sum::<f64>() / self.episodes.len() as f64
    }
}

/// Mean of a block; the point keeps the block's first episode index.
fn smooth(block: &[EpisodeStats]) -> EpisodeStats {
    let n = block.len() as f64;
    let mean = |f: fn(&EpisodeStats) -> f64| block.iter().map(f).sum::<f64>() / n;
    EpisodeStats {
        episode: block[0].episode,
        mean_reward: mean(|e| e.mean_reward),
        mean_throughput_mbps: mean(|e| e.mean_throughput_mbps),
        mean_delay_ms: mean(|e| e.mean_delay_ms),
        epsilon: block[0].epsilon.map(|_| mean(|e| e.epsilon.unwrap_or(0.0))),
        congestion_rate: mean(|e| e.congestion_rate),
    }
}

/// Per-episode means of consecutive `flows_per_episode` records, then
/// smoothing. A partial trailing episode is excluded with a warning.
pub fn aggregate_metrics(flows: &[FlowRecord], flows_per_episode: usize) -> MetricSeries {
    let (episodes, dropped) = episode_stats(flows, flows_per_episode);
    if dropped > 0 {
        log::warn!("ignoring {dropped} flows of an incomplete trailing episode");
    }
    MetricSeries { dropped_flows: dropped, ..MetricSeries::from_episodes(episodes) }
}

/// Metric CSV; the ε column is present only for learning agents.
pub fn to_csv(rows: &[EpisodeStats], with_epsilon: bool) -> String {
    let mut out = String::new();
    if with_epsilon {
        out.push_str(METRICS_HEADER);
    } else {
        out.push_str(&METRICS_HEADER.replace(",epsilon", ""));
    }
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{},{},{}", r.episode, r.mean_reward, r.mean_throughput_mbps, r.mean_delay_ms);
        if with_epsilon {
            let _ = write!(out, ",{}", r.epsilon.unwrap_or(f64::NAN));
        }
        let _ = writeln!(out, ",{}", r.congestion_rate);
    }
    out
}

pub const FLOWS_HEADER: &str = "episode,flow,src,dest,rate_req_mbps,path_index,rate_alloc_mbps,delay_ms,reward,congestion";

/// Full-precision per-flow log.
pub fn flows_csv(flows: &[FlowRecord]) -> String {
    let mut out = String::with_capacity(64 * flows.len() + 80);
    out.push_str(FLOWS_HEADER);
    out.push('\n');
    for f in flows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            f.episode,
            f.flow,
            f.src,
            f.dest,
            f.rate_req_mbps,
            f.path_index,
            f.rate_alloc_mbps,
            f.delay_ms,
            f.reward,
            u8::from(f.congestion)
        );
    }
    out
}

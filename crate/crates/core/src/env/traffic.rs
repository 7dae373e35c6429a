use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// A routing demand: `rate_mbps` from `src` to `dest`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRequest {
    pub src: usize,
    pub dest: usize,
    pub rate_mbps: f64,
}

impl FlowRequest {
    pub fn new(src: usize, dest: usize, rate_mbps: f64) -> Self {
        assert!(src != dest, "flow endpoints must differ");
        assert!(rate_mbps > 0.0, "requested rate must be positive");
        FlowRequest { src, dest, rate_mbps }
    }
}

/// A generated request together with how many subsequent arrivals it stays for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub request: FlowRequest,
    pub lifetime: u32,
}

/// Shape of the offered load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficProfile {
    pub rate_min: f64,
    pub rate_max: f64,
    pub concurrency_min: u32,
    pub concurrency_max: u32,
    /// Restricts demands to these ordered pairs; all pairs when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<(usize, usize)>>,
}

impl Default for TrafficProfile {
    fn default() -> Self {
        TrafficProfile { rate_min: 40.0, rate_max: 60.0, concurrency_min: 10, concurrency_max: 20, pairs: None }
    }
}

impl TrafficProfile {
    pub fn with_rates(&self, rate_min: f64, rate_max: f64) -> Self {
        TrafficProfile { rate_min, rate_max, ..self.clone() }
    }

    pub fn central_rate(&self) -> f64 {
        (self.rate_min + self.rate_max) / 2.0
    }

    pub fn validate(&self, nodes: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if !(self.rate_min > 0.0 && self.rate_min <= self.rate_max && self.rate_max.is_finite()) {
            return bad(format!("rate range [{}, {}] is invalid", self.rate_min, self.rate_max));
        }
        if self.concurrency_min == 0 || self.concurrency_min > self.concurrency_max {
            return bad(format!("concurrency range [{}, {}] is invalid", self.concurrency_min, self.concurrency_max));
        }
        if nodes < 2 {
            return bad("traffic needs at least two nodes".into());
        }
        if let Some(pairs) = &self.pairs {
            if pairs.is_empty() {
                return bad("pair list is empty".into());
            }
            if let Some(&(s, d)) = pairs.iter().find(|&&(s, d)| s == d || s >= nodes || d >= nodes) {
                return bad(format!("pair ({s}, {d}) is not a valid node pair"));
            }
        }
        Ok(())
    }
}

/// Switches the traffic profile at the start of `episode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileShift {
    pub episode: usize,
    pub profile: TrafficProfile,
}

/// Seeded, action-independent stream of flow arrivals.
#[derive(Debug, Clone)]
pub struct TrafficGenerator {
    nodes: usize,
    profile: TrafficProfile,
    rng: ChaCha8Rng,
}

impl TrafficGenerator {
    pub fn new(nodes: usize, profile: TrafficProfile, seed: u64) -> Result<Self> {
        profile.validate(nodes)?;
        Ok(TrafficGenerator { nodes, profile, rng: stream_rng(seed, Stream::Traffic) })
    }

    pub fn profile(&self) -> &TrafficProfile {
        &self.profile
    }

    /// Switches the profile for all subsequent arrivals.
    pub fn set_profile(&mut self, profile: TrafficProfile) -> Result<()> {
        profile.validate(self.nodes)?;
        self.profile = profile;
        Ok(())
    }

    pub fn next_arrival(&mut self) -> Arrival {
        let p = &self.profile;
        let (src, dest) = match &p.pairs {
            Some(pairs) => pairs[self.rng.gen_range(0..pairs.len())],
            None => {
                let src = self.rng.gen_range(0..self.nodes);
                let mut dest = self.rng.gen_range(0..self.nodes - 1);
                if dest >= src {
                    dest += 1;
                }
                (src, dest)
            }
        };
        let rate = if p.rate_min == p.rate_max { p.rate_min } else { self.rng.gen_range(p.rate_min..=p.rate_max) };
        let lifetime = self.rng.gen_range(p.concurrency_min..=p.concurrency_max);
        Arrival { request: FlowRequest::new(src, dest, rate), lifetime }
    }
}

impl Iterator for TrafficGenerator {
    type Item = Arrival;

    fn next(&mut self) -> Option<Arrival> {
        Some(self.next_arrival())
    }
}

/// Infinite arrival stream for `profile` on an `nodes`-node network.
pub fn generate_traffic(nodes: usize, profile: TrafficProfile, seed: u64) -> Result<TrafficGenerator> {
    TrafficGenerator::new(nodes, profile, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_rates_in_range() {
        for a in generate_traffic(9, TrafficProfile::default(), 1).unwrap().take(5000) {
            assert!((40.0..=60.0).contains(&a.request.rate_mbps));
            assert!(a.request.src != a.request.dest && a.request.dest < 9);
            assert!((10..=20).contains(&a.lifetime));
        }
    }

    #[test]
    fn pairs_are_roughly_uniform() {
        let mut counts = [[0u32; 4]; 4];
        for a in generate_traffic(4, TrafficProfile::default(), 2).unwrap().take(12_000) {
            counts[a.request.src][a.request.dest] += 1;
        }
        for s in 0..4 {
            for d in 0..4 {
                if s != d {
                    assert!((800..1200).contains(&counts[s][d]), "{s}->{d}: {}", counts[s][d]);
                }
            }
        }
    }

    #[test]
    fn pair_restriction_and_validation() {
        let p = TrafficProfile { pairs: Some(vec![(0, 3)]), ..Default::default() };
        assert!(generate_traffic(4, p.clone(), 0).unwrap().take(50).all(|a| (a.request.src, a.request.dest) == (0, 3)));
        assert!(generate_traffic(3, p, 0).is_err());
        assert!(generate_traffic(4, TrafficProfile::default().with_rates(60.0, 40.0), 0).is_err());
        let zero = TrafficProfile { concurrency_min: 0, ..Default::default() };
        assert!(generate_traffic(4, zero, 0).is_err());
    }

    #[test]
    fn shifted_profile_applies_to_later_arrivals() {
        let mut g = generate_traffic(9, TrafficProfile::default(), 5).unwrap();
        g.next_arrival();
        g.set_profile(TrafficProfile::default().with_rates(20.0, 40.0)).unwrap();
        assert!(g.take(1000).all(|a| (20.0..=40.0).contains(&a.request.rate_mbps)));
    }
}

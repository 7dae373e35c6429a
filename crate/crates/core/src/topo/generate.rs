use std::path::Path as FsPath;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Link, Topology};
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

pub const LINK_CAPACITY_MBPS: f64 = 100.0;
const DISTANCE_RANGE_M: (f64, f64) = (500.0, 700.0);

const NSFNET: &str = include_str!("../../data/nsfnet.topo");

/// Connected random graph with `n` nodes and `m` links: a random spanning tree
/// plus `m - (n - 1)` extra edges drawn without replacement.
pub fn generate_random_topology(n: usize, m: usize, seed: u64) -> Result<Topology> {
    if n == 0 || m + 1 < n || m > n * (n - 1) / 2 {
        return Err(Error::InvalidTopology(format!("cannot build a connected simple graph with {n} nodes and {m} links")));
    }
    let mut rng = stream_rng(seed, Stream::Topology);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = Vec::with_capacity(m);
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        let child = order[i];
        edges.push((parent.min(child), parent.max(child)));
    }
    let mut rest: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|e| !edges.contains(e))
        .collect();
    rest.shuffle(&mut rng);
    edges.extend(rest.into_iter().take(m - (n - 1)));
    edges.sort_unstable();

    let mut dist_rng = stream_rng(seed, Stream::Distances);
    let links = edges
        .into_iter()
        .map(|(a, b)| Link {
            a,
            b,
            capacity_mbps: LINK_CAPACITY_MBPS,
            distance_m: dist_rng.gen_range(DISTANCE_RANGE_M.0..=DISTANCE_RANGE_M.1),
        })
        .collect();
    Topology::new(n, links)
}

/// The 14-node, 21-link NSFNET T1 backbone from `data/nsfnet.topo`.
pub fn nsfnet() -> Topology {
    Topology::parse(NSFNET, FsPath::new("data/nsfnet.topo")).expect("bundled NSFNET topology is valid")
}

/// Four nodes, two equal-length routes between node 0 and node 3:
/// `0-1-3` (first candidate) and `0-2-3`.
pub fn dumbbell() -> Topology {
    Topology::uniform(4, &[(0, 1), (1, 3), (0, 2), (2, 3)], LINK_CAPACITY_MBPS, 600.0).unwrap()
}

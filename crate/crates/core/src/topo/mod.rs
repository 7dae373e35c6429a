//! Network topologies and the static quantities derived from them.

mod adjacency;
mod generate;
mod paths;

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path as FsPath;

pub use adjacency::{build_normalized_adjacency, NormalizedAdjacency};
pub use generate::{dumbbell, generate_random_topology, nsfnet, LINK_CAPACITY_MBPS};
pub(crate) use paths::node_importance_from_table as importance_from_table;
pub use paths::{k_shortest_paths, node_importance, shortest_path, CandidatePathTable, NodeImportance, Path};

use crate::{Error, Result};

/// Default number of candidate paths per node pair.
pub const DEFAULT_K: usize = 3;

/// An undirected link. Endpoints are stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub capacity_mbps: f64,
    pub distance_m: f64,
}

/// Connected, simple, undirected graph with per-link capacity and length.
#[derive(Debug, Clone)]
pub struct Topology {
    nodes: usize,
    links: Vec<Link>,
    neighbors: Vec<Vec<usize>>,
    link_index: HashMap<(usize, usize), usize>,
}

impl Topology {
    /// Validates and builds a topology. Link endpoints may be given in either order.
    pub fn new(nodes: usize, links: Vec<Link>) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::InvalidTopology("topology has no nodes".into()));
        }
        let mut neighbors = vec![Vec::new(); nodes];
        let mut link_index = HashMap::with_capacity(links.len());
        let mut normalized = Vec::with_capacity(links.len());
        for link in links {
            let (a, b) = (link.a.min(link.b), link.a.max(link.b));
            if b >= nodes {
                return Err(Error::InvalidTopology(format!("link {a}-{b} references a node outside 0..{nodes}")));
            }
            if a == b {
                return Err(Error::InvalidTopology(format!("self-loop on node {a}")));
            }
            if !(link.capacity_mbps > 0.0 && link.capacity_mbps.is_finite()) {
                return Err(Error::InvalidTopology(format!("link {a}-{b} has non-positive capacity")));
            }
            if !(link.distance_m > 0.0 && link.distance_m.is_finite()) {
                return Err(Error::InvalidTopology(format!("link {a}-{b} has non-positive distance")));
            }
            if link_index.insert((a, b), normalized.len()).is_some() {
                return Err(Error::InvalidTopology(format!("duplicate link {a}-{b}")));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
            normalized.push(Link { a, b, ..link });
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        let topo = Topology { nodes, links: normalized, neighbors, link_index };
        if !topo.is_connected() {
            return Err(Error::InvalidTopology("graph is disconnected".into()));
        }
        Ok(topo)
    }

    /// Builds a topology where every link shares one capacity and one distance.
    pub fn uniform(nodes: usize, edges: &[(usize, usize)], capacity_mbps: f64, distance_m: f64) -> Result<Self> {
        let links = edges
            .iter()
            .map(|&(a, b)| Link { a, b, capacity_mbps, distance_m })
            .collect();
        Self::new(nodes, links)
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Sorted neighbor ids of `node`.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    /// Index into [`Topology::links`] of the link joining `u` and `v`.
    pub fn link_between(&self, u: usize, v: usize) -> Option<usize> {
        self.link_index.get(&(u.min(v), u.max(v))).copied()
    }

    /// Sum of the capacities of the links incident to `node`.
    pub fn incident_capacity(&self, node: usize) -> f64 {
        self.neighbors[node]
            .iter()
            .map(|&v| self.links[self.link_between(node, v).unwrap()].capacity_mbps)
            .sum()
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.nodes];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.nodes
    }

    /// Parses the plain-text edge list format:
    ///
    /// ```text
    /// # comment
    /// nodes 4            # optional, otherwise max id + 1
    /// 0 1 100 550.0      # node_a node_b capacity_mbps distance_m
    /// ```
    pub fn parse(text: &str, origin: &FsPath) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse { path: origin.to_path_buf(), line, msg };
        let mut declared = None;
        let mut links = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0] == "nodes" {
                let n = fields
                    .get(1)
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|_| fields.len() == 2)
                    .ok_or_else(|| err(i + 1, "expected `nodes <count>`".into()))?;
                declared = Some(n);
                continue;
            }
            if fields.len() != 4 {
                return Err(err(i + 1, format!("expected 4 fields, found {}", fields.len())));
            }
            let a = fields[0].parse::<usize>().map_err(|e| err(i + 1, format!("node_a: {e}")))?;
            let b = fields[1].parse::<usize>().map_err(|e| err(i + 1, format!("node_b: {e}")))?;
            let capacity_mbps = fields[2].parse::<f64>().map_err(|e| err(i + 1, format!("capacity: {e}")))?;
            let distance_m = fields[3].parse::<f64>().map_err(|e| err(i + 1, format!("distance: {e}")))?;
            links.push(Link { a, b, capacity_mbps, distance_m });
        }
        let inferred = links.iter().map(|l| l.a.max(l.b) + 1).max().unwrap_or(0);
        let nodes = declared.unwrap_or(inferred);
        Self::new(nodes, links)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Serializes into the edge-list format accepted by [`Topology::parse`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# node_a node_b capacity_mbps distance_m").unwrap();
        writeln!(out, "nodes {}", self.nodes).unwrap();
        for l in &self.links {
            writeln!(out, "{} {} {} {}", l.a, l.b, l.capacity_mbps, l.distance_m).unwrap();
        }
        out
    }
}

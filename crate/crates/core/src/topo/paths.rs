//! Minimum-hop candidate paths (Yen's algorithm) and node importance.

use std::collections::{BTreeSet, HashSet, VecDeque};

use super::Topology;

/// A loop-free node sequence from source to destination.
pub type Path = Vec<usize>;

/// Lexicographically smallest minimum-hop path from `from` to `to`, avoiding
/// `blocked_nodes` and `blocked_edges` (edges stored as `(min, max)`).
fn lexmin_shortest_path(
    topo: &Topology,
    from: usize,
    to: usize,
    blocked_nodes: &[bool],
    blocked_edges: &HashSet<(usize, usize)>,
) -> Option<Path> {
    let n = topo.node_count();
    let usable = |u: usize, v: usize| !blocked_nodes[v] && !blocked_edges.contains(&(u.min(v), u.max(v)));
    // Hop distance to `to`, then walk greedily from `from` taking the lowest
    // neighbor id that stays on a shortest path.
    let mut dist = vec![usize::MAX; n];
    dist[to] = 0;
    let mut queue = VecDeque::from([to]);
    while let Some(u) = queue.pop_front() {
        for &v in topo.neighbors(u) {
            if dist[v] == usize::MAX && usable(u, v) && !blocked_nodes[u] {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    if dist[from] == usize::MAX {
        return None;
    }
    let mut path = vec![from];
    let mut cur = from;
    while cur != to {
        cur = *topo
            .neighbors(cur)
            .iter()
            .find(|&&v| dist[v] != usize::MAX && dist[v] + 1 == dist[cur] && usable(cur, v))
            .expect("distance labels are consistent");
        path.push(cur);
    }
    Some(path)
}

/// Minimum-hop path with lexicographic tie-break, ignoring load.
pub fn shortest_path(topo: &Topology, src: usize, dest: usize) -> Option<Path> {
    let n = topo.node_count();
    assert!(src < n && dest < n);
    lexmin_shortest_path(topo, src, dest, &vec![false; n], &HashSet::new())
}

/// Up to `k` loop-free paths from `src` to `dest`, ordered by hop count and
/// then lexicographically by node sequence. Returns an empty list when `dest`
/// is unreachable.
pub fn k_shortest_paths(topo: &Topology, src: usize, dest: usize, k: usize) -> Vec<Path> {
    assert!(src != dest, "k_shortest_paths needs distinct endpoints");
    assert!(src < topo.node_count() && dest < topo.node_count());
    let n = topo.node_count();
    let none_blocked = vec![false; n];
    let Some(first) = lexmin_shortest_path(topo, src, dest, &none_blocked, &HashSet::new()) else {
        return Vec::new();
    };
    if k == 0 {
        return Vec::new();
    }
    let mut accepted: Vec<Path> = vec![first];
    let mut candidates: BTreeSet<(usize, Path)> = BTreeSet::new();
    while accepted.len() < k {
        let prev = accepted.last().unwrap().clone();
        for i in 0..prev.len() - 1 {
            let spur = prev[i];
            let root = &prev[..=i];
            let mut blocked_edges = HashSet::new();
            for p in &accepted {
                if p.len() > i + 1 && &p[..=i] == root {
                    blocked_edges.insert((p[i].min(p[i + 1]), p[i].max(p[i + 1])));
                }
            }
            let mut blocked_nodes = vec![false; n];
            for &r in &root[..i] {
                blocked_nodes[r] = true;
            }
            if let Some(tail) = lexmin_shortest_path(topo, spur, dest, &blocked_nodes, &blocked_edges) {
                let mut full = root[..i].to_vec();
                full.extend(tail);
                if !accepted.contains(&full) {
                    candidates.insert((full.len(), full));
                }
            }
        }
        match candidates.pop_first() {
            Some((_, p)) => accepted.push(p),
            None => break,
        }
    }
    accepted
}

/// Candidate paths for every ordered node pair.
#[derive(Debug, Clone)]
pub struct CandidatePathTable {
    nodes: usize,
    k: usize,
    paths: Vec<Vec<Path>>,
}

impl CandidatePathTable {
    pub fn build(topo: &Topology, k: usize) -> Self {
        let n = topo.node_count();
        let mut paths = vec![Vec::new(); n * n];
        for s in 0..n {
            for d in 0..n {
                if s != d {
                    paths[s * n + d] = k_shortest_paths(topo, s, d, k);
                }
            }
        }
        CandidatePathTable { nodes: n, k, paths }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn paths(&self, src: usize, dest: usize) -> &[Path] {
        &self.paths[src * self.nodes + dest]
    }

    /// Number of valid actions for a pair (≤ K).
    pub fn valid_count(&self, src: usize, dest: usize) -> usize {
        self.paths(src, dest).len()
    }
}

/// Per-node centrality normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeImportance(pub Vec<f64>);

/// Counts how often each node is an intermediate hop over all ordered pairs'
/// `k` candidate paths, normalized by the largest count.
pub fn node_importance(topo: &Topology, k: usize) -> NodeImportance {
    let table = CandidatePathTable::build(topo, k);
    node_importance_from_table(topo.node_count(), &table)
}

pub(crate) fn node_importance_from_table(n: usize, table: &CandidatePathTable) -> NodeImportance {
    let mut counts = vec![0usize; n];
    for s in 0..n {
        for d in 0..n {
            if s == d {
                continue;
            }
            for path in table.paths(s, d) {
                for &v in &path[1..path.len() - 1] {
                    counts[v] += 1;
                }
            }
        }
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return NodeImportance(vec![0.0; n]);
    }
    NodeImportance(counts.iter().map(|&c| c as f64 / max as f64).collect())
}

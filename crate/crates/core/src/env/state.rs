use std::sync::Arc;

use super::{FlowNetwork, FlowRequest, RATE_NORMALIZER_MBPS};
use crate::topo::NormalizedAdjacency;

/// Scalar columns ahead of the two per-node bit vectors:
/// degree, importance, egress, ingress, requested rate.
pub const FIXED_FEATURES: usize = 5;

const COL_DEGREE: usize = 0;
const COL_IMPORTANCE: usize = 1;
const COL_TX: usize = 2;
const COL_RX: usize = 3;
const COL_BW: usize = 4;

/// Agent observation: normalized adjacency plus an `N x (5 + 2N)` node
/// feature matrix. Row `i` is `[deg, importance, tx, rx, bw, src_i.., dest_i..]`
/// where `src_i[j] = 1` when a flow `j -> i` is active and `dest_i[j] = 1`
/// when a flow `i -> j` is active.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    adjacency: Arc<NormalizedAdjacency>,
    nodes: usize,
    features: Vec<f64>,
    /// The request the state was built for.
    pub pending: FlowRequest,
    /// Number of candidate paths for the pending pair.
    pub valid_actions: usize,
}

impl NetworkState {
    pub fn from_parts(
        adjacency: Arc<NormalizedAdjacency>,
        features: Vec<f64>,
        pending: FlowRequest,
        valid_actions: usize,
    ) -> Self {
        let nodes = adjacency.size();
        assert_eq!(features.len(), nodes * (FIXED_FEATURES + 2 * nodes), "feature matrix shape");
        NetworkState { adjacency, nodes, features, pending, valid_actions }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn feature_width(&self) -> usize {
        FIXED_FEATURES + 2 * self.nodes
    }

    pub fn adjacency(&self) -> &NormalizedAdjacency {
        &self.adjacency
    }

    pub fn adjacency_arc(&self) -> &Arc<NormalizedAdjacency> {
        &self.adjacency
    }

    /// Row-major `N x feature_width` matrix.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature(&self, node: usize, col: usize) -> f64 {
        self.features[node * self.feature_width() + col]
    }

    pub fn row(&self, node: usize) -> &[f64] {
        let w = self.feature_width();
        &self.features[node * w..(node + 1) * w]
    }

    pub fn degree(&self, node: usize) -> f64 {
        self.feature(node, COL_DEGREE)
    }

    pub fn importance(&self, node: usize) -> f64 {
        self.feature(node, COL_IMPORTANCE)
    }

    pub fn tx(&self, node: usize) -> f64 {
        self.feature(node, COL_TX)
    }

    pub fn rx(&self, node: usize) -> f64 {
        self.feature(node, COL_RX)
    }

    pub fn bw(&self, node: usize) -> f64 {
        self.feature(node, COL_BW)
    }

    /// `src_node[j]`: whether a flow `j -> node` is active.
    pub fn src_bit(&self, node: usize, j: usize) -> f64 {
        self.feature(node, FIXED_FEATURES + j)
    }

    /// `dest_node[j]`: whether a flow `node -> j` is active.
    pub fn dest_bit(&self, node: usize, j: usize) -> f64 {
        self.feature(node, FIXED_FEATURES + self.nodes + j)
    }

    /// Reorders nodes so that old node `i` becomes row `perm[i]`, permuting the
    /// adjacency rows and columns to match. Feature rows are carried unchanged.
    pub fn permute_nodes(&self, perm: &[usize]) -> NetworkState {
        let n = self.nodes;
        assert_eq!(perm.len(), n);
        let w = self.feature_width();
        let mut adj = vec![0.0; n * n];
        let mut features = vec![0.0; n * w];
        for i in 0..n {
            for j in 0..n {
                adj[perm[i] * n + perm[j]] = self.adjacency.get(i, j);
            }
            features[perm[i] * w..(perm[i] + 1) * w].copy_from_slice(self.row(i));
        }
        NetworkState {
            adjacency: Arc::new(NormalizedAdjacency::from_raw(n, adj)),
            nodes: n,
            features,
            pending: FlowRequest { src: perm[self.pending.src], dest: perm[self.pending.dest], ..self.pending },
            valid_actions: self.valid_actions,
        }
    }
}

pub(super) fn build_state(net: &FlowNetwork, pending: &FlowRequest) -> NetworkState {
    let ctx = net.context();
    let topo = &ctx.topology;
    let n = topo.node_count();
    let w = FIXED_FEATURES + 2 * n;
    let mut features = vec![0.0; n * w];
    let mut tx = vec![0.0; n];
    let mut rx = vec![0.0; n];
    for flow in net.flows() {
        for hop in flow.path.windows(2) {
            tx[hop[0]] += flow.rate_alloc_mbps;
            rx[hop[1]] += flow.rate_alloc_mbps;
        }
        let (s, d) = (flow.request.src, flow.request.dest);
        features[d * w + FIXED_FEATURES + s] = 1.0;
        features[s * w + FIXED_FEATURES + n + d] = 1.0;
    }
    let degree_norm = if n > 1 { (n - 1) as f64 } else { 1.0 };
    for i in 0..n {
        let row = &mut features[i * w..(i + 1) * w];
        let cap = topo.incident_capacity(i);
        row[COL_DEGREE] = topo.degree(i) as f64 / degree_norm;
        row[COL_IMPORTANCE] = ctx.importance.0[i];
        if cap > 0.0 {
            row[COL_TX] = (tx[i] / cap).min(1.0);
            row[COL_RX] = (rx[i] / cap).min(1.0);
        }
    }
    features[pending.src * w + COL_BW] = (pending.rate_mbps / RATE_NORMALIZER_MBPS).min(1.0);
    NetworkState {
        adjacency: ctx.adjacency.clone(),
        nodes: n,
        features,
        pending: *pending,
        valid_actions: ctx.paths.valid_count(pending.src, pending.dest),
    }
}

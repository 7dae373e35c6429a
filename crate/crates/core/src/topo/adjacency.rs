use super::Topology;

/// Symmetrically normalized adjacency with self-loops, `D^-1/2 (W + I) D^-1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    n: usize,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    /// Wraps a raw row-major matrix. Used when relabeling states.
    pub fn from_raw(n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n * n, "adjacency must be {n}x{n}");
        NormalizedAdjacency { n, values }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn build_normalized_adjacency(topo: &Topology) -> NormalizedAdjacency {
    let n = topo.node_count();
    // Augmented degree: neighbors plus the self-loop.
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / ((topo.degree(i) + 1) as f64).sqrt()).collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = inv_sqrt[i] * 1.0 * inv_sqrt[i];
        for &j in topo.neighbors(i) {
            values[i * n + j] = inv_sqrt[i] * 1.0 * inv_sqrt[j];
        }
    }
    NormalizedAdjacency { n, values }
}

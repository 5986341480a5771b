//! Undirected graphs, their Laplacians, and the noisy Laplacian with
//! per-edge telegraph couplings.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Simple undirected graph on `n` nodes.
///
/// Node labels are 1-based everywhere a human supplies or reads them (edge
/// lists passed to [`Graph::from_edges`], config files, CLI flags); indices
/// are 0-based everywhere else in the crate. Edges are stored 0-based as
/// `(min, max)` pairs in lexicographic order, and an edge's position in that
/// canonical list is the index of the telegraph fluctuator attached to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Star on `n` nodes: node 1 is the hub, joined to every other node.
    pub fn star(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension {
                what: "star graph",
                min: 2,
                got: n,
            });
        }
        let edges = (1..n).map(|k| (0, k)).collect();
        Ok(Graph { n, edges })
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension {
                what: "complete graph",
                min: 2,
                got: n,
            });
        }
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for j in 0..n {
            for k in j + 1..n {
                edges.push((j, k));
            }
        }
        Ok(Graph { n, edges })
    }

    /// Graph from a 1-based edge list. Self-loops and duplicates are rejected;
    /// the list is canonicalized, so the input order does not matter.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension {
                what: "graph",
                min: 2,
                got: n,
            });
        }
        let mut canon = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a < 1 || a > n {
                return Err(Error::IndexOutOfRange {
                    what: "edge node label",
                    index: a,
                    bound: n + 1,
                });
            }
            if b < 1 || b > n {
                return Err(Error::IndexOutOfRange {
                    what: "edge node label",
                    index: b,
                    bound: n + 1,
                });
            }
            if a == b {
                return Err(Error::InvalidParameter {
                    name: "edges",
                    reason: format!("self-loop at node {a}"),
                });
            }
            let (a, b) = (a - 1, b - 1);
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        if canon.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter {
                name: "edges",
                reason: "duplicate edge".into(),
            });
        }
        Ok(Graph { n, edges: canon })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical 0-based edge list; position = fluctuator index.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edge list with 1-based labels, for display and config round-trips.
    pub fn edge_labels(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|&(a, b)| (a + 1, b + 1)).collect()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == node || b == node)
            .count()
    }

    /// Combinatorial Laplacian L = D - A.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(a, b) in &self.edges {
            l[(a, b)] = -1.0;
            l[(b, a)] = -1.0;
            l[(a, a)] += 1.0;
            l[(b, b)] += 1.0;
        }
        l
    }

    /// Laplacian with edge weights modulated by telegraph couplings: edge e
    /// carries weight 1 + nu * g_e with g_e = +-1, so every row still sums to
    /// zero exactly. `signs[e]` belongs to the e-th canonical edge.
    pub fn noisy_laplacian(&self, nu: f64, signs: &[i8]) -> Result<DMatrix<f64>> {
        if !(0.0..=1.0).contains(&nu) {
            return Err(Error::InvalidParameter {
                name: "nu",
                reason: format!("must lie in [0, 1], got {nu}"),
            });
        }
        if signs.len() != self.edges.len() {
            return Err(Error::LengthMismatch {
                what: "edge signs",
                expected: self.edges.len(),
                got: signs.len(),
            });
        }
        let mut l = DMatrix::zeros(self.n, self.n);
        for (&(a, b), &g) in self.edges.iter().zip(signs) {
            if g != 1 && g != -1 {
                return Err(Error::InvalidParameter {
                    name: "signs",
                    reason: format!("entries must be +1 or -1, got {g}"),
                });
            }
            let w = 1.0 + nu * f64::from(g);
            l[(a, b)] = -w;
            l[(b, a)] = -w;
            l[(a, a)] += w;
            l[(b, b)] += w;
        }
        Ok(l)
    }
}

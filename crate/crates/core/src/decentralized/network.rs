use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg;

const ROW_SUM_TOL: f64 = 1e-12;

/// Communication graph with its mixing matrix `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    neighbors: Vec<Vec<usize>>,
    mixing: DMatrix<f64>,
    lambda_min: f64,
}

impl Network {
    /// Metropolis–Hastings weights `w_ij = 1/(1 + max(d_i, d_j))` on edges and
    /// `w_ii = 1 − Σ_{j≠i} w_ij`. Nodes are `0..nodes`; duplicate edges are
    /// merged. Rejects self-loops and disconnected graphs.
    pub fn metropolis(nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::param("nodes", "must be positive"));
        }
        let mut adj = vec![BTreeSet::new(); nodes];
        for &(i, j) in edges {
            if i >= nodes || j >= nodes {
                return Err(Error::param(
                    "edges",
                    format!("edge ({i}, {j}) outside 0..{nodes}"),
                ));
            }
            if i == j {
                return Err(Error::param("edges", format!("self-loop at node {i}")));
            }
            adj[i].insert(j);
            adj[j].insert(i);
        }
        let neighbors: Vec<Vec<usize>> = adj.into_iter().map(|s| s.into_iter().collect()).collect();
        if !connected(&neighbors) {
            return Err(Error::DisconnectedGraph);
        }
        let deg: Vec<usize> = neighbors.iter().map(Vec::len).collect();
        let mut w = DMatrix::zeros(nodes, nodes);
        for i in 0..nodes {
            for &j in &neighbors[i] {
                w[(i, j)] = 1.0 / (1 + deg[i].max(deg[j])) as f64;
            }
        }
        for i in 0..nodes {
            let off: f64 = neighbors[i].iter().map(|&j| w[(i, j)]).sum();
            w[(i, i)] = 1.0 - off;
        }
        let lambda_min = smallest_eigenvalue(&w);
        Ok(Self {
            neighbors,
            mixing: w,
            lambda_min,
        })
    }

    /// Uses a given mixing matrix. The graph is read off its nonzero
    /// off-diagonal entries and need not be connected (`W = I` gives
    /// independent nodes).
    pub fn from_mixing(w: DMatrix<f64>) -> Result<Self> {
        let m = w.nrows();
        if m == 0 || w.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: w.ncols(),
            });
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "mixing matrix",
            });
        }
        let asym = linalg::asymmetry(&w);
        if asym > linalg::SYMMETRY_TOL {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        if w.iter().any(|&v| v < 0.0) {
            return Err(Error::param("mixing", "negative weight"));
        }
        for (i, row) in w.row_iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::param("mixing", format!("row {i} sums to {s}")));
            }
        }
        let lambda_min = smallest_eigenvalue(&w);
        if !(lambda_min > -1.0) {
            return Err(Error::param("mixing", format!("λ_min(W) = {lambda_min} ≤ −1")));
        }
        let neighbors = (0..m)
            .map(|i| (0..m).filter(|&j| j != i && w[(i, j)] != 0.0).collect())
            .collect();
        Ok(Self {
            neighbors,
            mixing: w,
            lambda_min,
        })
    }

    /// `0 – 1 – … – (nodes−1)`
    pub fn path(nodes: usize) -> Result<Self> {
        let edges: Vec<_> = (1..nodes).map(|i| (i - 1, i)).collect();
        Self::metropolis(nodes, &edges)
    }

    pub fn ring(nodes: usize) -> Result<Self> {
        let mut edges: Vec<_> = (1..nodes).map(|i| (i - 1, i)).collect();
        if nodes > 2 {
            edges.push((nodes - 1, 0));
        }
        Self::metropolis(nodes, &edges)
    }

    pub fn complete(nodes: usize) -> Result<Self> {
        let edges: Vec<_> = (0..nodes)
            .flat_map(|i| (i + 1..nodes).map(move |j| (i, j)))
            .collect();
        Self::metropolis(nodes, &edges)
    }

    /// Edge list: node count on the first line, then one `i j` pair per line
    /// (0-based). Blank lines and `#` comments are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line_no, first) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing node count"))?;
        let nodes: usize = first
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad node count `{first}`")))?;
        let mut edges = Vec::new();
        for (line_no, l) in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(Error::parse(line_no, format!("expected `i j`, found `{l}`")));
            }
            let idx = |s: &str| -> Result<usize> {
                s.parse()
                    .map_err(|_| Error::parse(line_no, format!("bad node index `{s}`")))
            };
            edges.push((idx(parts[0])?, idx(parts[1])?));
        }
        Self::metropolis(nodes, &edges)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_edge_list(&text)
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    /// `N(i) ∪ {i}` in increasing order.
    pub fn closed_neighborhood(&self, node: usize) -> Vec<usize> {
        let mut out = self.neighbors[node].clone();
        out.push(node);
        out.sort_unstable();
        out
    }

    pub fn mixing(&self) -> &DMatrix<f64> {
        &self.mixing
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.mixing[(i, j)]
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn is_connected(&self) -> bool {
        connected(&self.neighbors)
    }

    /// `‖X − 𝟙·mean(X)‖_F` for node states stacked row-major (node `i`
    /// occupies `i·n..(i+1)·n`).
    pub fn consensus_error(&self, stacked: &DVector<f64>) -> Result<f64> {
        let m = self.node_count();
        if !stacked.len().is_multiple_of(m) {
            return Err(Error::DimensionMismatch {
                expected: m * (stacked.len() / m + 1),
                found: stacked.len(),
            });
        }
        let n = stacked.len() / m;
        let mut mean = DVector::zeros(n);
        for i in 0..m {
            mean += stacked.rows(i * n, n);
        }
        mean /= m as f64;
        Ok((0..m)
            .map(|i| (stacked.rows(i * n, n) - &mean).norm_squared())
            .sum::<f64>()
            .sqrt())
    }
}

fn connected(neighbors: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; neighbors.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for &j in &neighbors[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn smallest_eigenvalue(w: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(w.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_node_path() {
        let net = Network::path(3).unwrap();
        let t = 1.0 / 3.0;
        let expected = DMatrix::from_row_slice(3, 3, &[2.0 * t, t, 0.0, t, t, t, 0.0, t, 2.0 * t]);
        assert!((net.mixing() - expected).abs().max() < 1e-15);
        assert!(net.lambda_min().abs() < 1e-14);
    }

    #[test]
    fn single_node() {
        let net = Network::metropolis(1, &[]).unwrap();
        assert_eq!(net.mixing(), &DMatrix::from_element(1, 1, 1.0));
        assert_eq!(net.lambda_min(), 1.0);
    }

    #[test]
    fn complete_graph_is_uniform() {
        let net = Network::complete(6).unwrap();
        for i in 0..6 {
            assert!((net.mixing().row(i).sum() - 1.0).abs() < 1e-14);
            assert!((net.mixing().column(i).sum() - 1.0).abs() < 1e-14);
            for j in 0..6 {
                assert!((net.weight(i, j) - 1.0 / 6.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_disconnected_and_self_loops() {
        assert!(matches!(
            Network::metropolis(3, &[(0, 1)]),
            Err(Error::DisconnectedGraph)
        ));
        assert!(Network::metropolis(2, &[(0, 0), (0, 1)]).is_err());
        assert!(Network::metropolis(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn edge_list_parsing() {
        let net = Network::parse_edge_list("# path\n3\n0 1\n1 2\n").unwrap();
        assert_eq!(net, Network::path(3).unwrap());
        assert!(Network::parse_edge_list("3\n0 1 2\n").is_err());
        assert!(Network::parse_edge_list("").is_err());
    }

    #[test]
    fn identity_mixing() {
        let net = Network::from_mixing(DMatrix::identity(4, 4)).unwrap();
        assert_eq!(net.lambda_min(), 1.0);
        assert!(net.neighbors(2).is_empty());
        assert!(!net.is_connected());
        assert!(Network::from_mixing(DMatrix::from_row_slice(2, 2, &[0.5, 0.6, 0.5, 0.4])).is_err());
    }

    #[test]
    fn consensus_error_zero_on_consensus() {
        let net = Network::ring(4).unwrap();
        let x = DVector::from_fn(12, |i, _| (i % 3) as f64);
        assert_eq!(net.consensus_error(&x).unwrap(), 0.0);
        let mut y = x.clone();
        y[0] += 1.0;
        assert!(net.consensus_error(&y).unwrap() > 0.0);
    }
}

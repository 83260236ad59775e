//! The damped stochastic transition operator and its stationary vectors.
//!
//! For a weighted directed graph, column `j` of the transition matrix
//! distributes node `j`'s probability over its out-neighbors proportionally
//! to edge weights; nodes without out-edges spread uniformly. Damping mixes
//! every column with the uniform vector:
//!
//! ```text
//! G = alpha * S + (1 - alpha) * (1/N) * ones
//! ```
//!
//! The matrix is never materialized. `apply` computes `G . v` from the sparse
//! normalized adjacency plus two scalar corrections (dangling mass and
//! uniform mass), so one multiply costs one pass over the edges. PageRank is
//! the stationary vector of `G`; CheiRank is the stationary vector of the
//! same construction on the edge-reversed graph.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::SliceGraph;
use crate::reduction;

/// Row count below which matrix-vector products stay sequential.
const PAR_ROWS_MIN: usize = 4096;

/// Sparse damped transition operator of one graph.
///
/// Holds the column-normalized adjacency twice: grouped by destination (for
/// `apply`) and by source (for `apply_transpose`). Both orderings are fixed
/// by the graph layout, so every product is bitwise reproducible.
#[derive(Debug, Clone)]
pub struct StochasticOperator {
    alpha: f64,
    n: usize,
    /// For destination `u`: sources `j` and normalized weights `S[u][j]`.
    in_row_ptr: Vec<usize>,
    in_col: Vec<u32>,
    in_val: Vec<f64>,
    /// For source `j`: destinations `u` and the same normalized weights.
    out_row_ptr: Vec<usize>,
    out_col: Vec<u32>,
    out_val: Vec<f64>,
    /// Nodes without out-edges, ascending.
    dangling: Vec<u32>,
}

impl StochasticOperator {
    /// Builds the operator for a graph with the given damping factor.
    pub fn from_graph(graph: &SliceGraph, alpha: f64) -> Result<Self> {
        Self::from_csr(graph.node_count(), &graph.row_ptr, &graph.col, &graph.weight, alpha)
    }

    /// Builds the operator from raw out-edge CSR arrays.
    ///
    /// Rows must be aggregated with positive weights, as produced by graph
    /// construction; a row summing to zero must be empty.
    pub(crate) fn from_csr(
        n: usize,
        row_ptr: &[usize],
        col: &[u32],
        weight: &[f64],
        alpha: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if n == 0 {
            return Err(Error::EmptyGraph);
        }

        // Normalize each source row to sum 1 and collect dangling nodes.
        let mut out_val = vec![0f64; col.len()];
        let mut dangling = Vec::new();
        for j in 0..n {
            let (lo, hi) = (row_ptr[j], row_ptr[j + 1]);
            let total: f64 = weight[lo..hi].iter().sum();
            if total == 0.0 {
                dangling.push(j as u32);
            } else {
                for e in lo..hi {
                    out_val[e] = weight[e] / total;
                }
            }
        }

        // Transpose to destination-major order with a counting sort; walking
        // sources in ascending order keeps each destination row sorted.
        let mut in_row_ptr = vec![0usize; n + 1];
        for &dst in col {
            in_row_ptr[dst as usize + 1] += 1;
        }
        for i in 0..n {
            in_row_ptr[i + 1] += in_row_ptr[i];
        }
        let mut in_col = vec![0u32; col.len()];
        let mut in_val = vec![0f64; col.len()];
        let mut cursor = in_row_ptr.clone();
        for j in 0..n {
            for e in row_ptr[j]..row_ptr[j + 1] {
                let slot = cursor[col[e] as usize];
                in_col[slot] = j as u32;
                in_val[slot] = out_val[e];
                cursor[col[e] as usize] += 1;
            }
        }

        Ok(Self {
            alpha,
            n,
            in_row_ptr,
            in_col,
            in_val,
            out_row_ptr: row_ptr.to_vec(),
            out_col: col.to_vec(),
            out_val,
            dangling,
        })
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Damping factor.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Nodes without out-edges, ascending.
    pub fn dangling(&self) -> &[u32] {
        &self.dangling
    }

    /// Computes `G . v` into `out`.
    ///
    /// Works for any `v`, not just probability vectors: the dangling and
    /// uniform corrections scale with the mass of `v`, so the product
    /// preserves total mass exactly in exact arithmetic.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.n, "vector length must match node count");
        assert_eq!(out.len(), self.n);
        let mass = reduction::sum(v);
        let dangling_mass = reduction::sum_indexed(&self.dangling, v);
        let base = (self.alpha * dangling_mass + (1.0 - self.alpha) * mass) / self.n as f64;
        let row = |u: usize| -> f64 {
            let mut acc = 0.0;
            for e in self.in_row_ptr[u]..self.in_row_ptr[u + 1] {
                acc += self.in_val[e] * v[self.in_col[e] as usize];
            }
            base + self.alpha * acc
        };
        if self.n < PAR_ROWS_MIN {
            for (u, slot) in out.iter_mut().enumerate() {
                *slot = row(u);
            }
        } else {
            // Each output element is produced by exactly one task with a
            // fixed-order inner sum, so scheduling cannot change the result.
            out.par_iter_mut().enumerate().for_each(|(u, slot)| *slot = row(u));
        }
    }

    /// Computes `G . v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0f64; self.n];
        self.apply_into(v, &mut out);
        out
    }

    /// Computes `transpose(G) . v` into `out`.
    pub fn apply_transpose_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.n, "vector length must match node count");
        assert_eq!(out.len(), self.n);
        let mass = reduction::sum(v);
        let uniform = (1.0 - self.alpha) * mass / self.n as f64;
        let dangling_term = self.alpha * mass / self.n as f64 + uniform;
        let row = |j: usize| -> f64 {
            let (lo, hi) = (self.out_row_ptr[j], self.out_row_ptr[j + 1]);
            if lo == hi {
                // Dangling column: uniform in every entry.
                return dangling_term;
            }
            let mut acc = 0.0;
            for e in lo..hi {
                acc += self.out_val[e] * v[self.out_col[e] as usize];
            }
            uniform + self.alpha * acc
        };
        if self.n < PAR_ROWS_MIN {
            for (j, slot) in out.iter_mut().enumerate() {
                *slot = row(j);
            }
        } else {
            out.par_iter_mut().enumerate().for_each(|(j, slot)| *slot = row(j));
        }
    }

    /// Computes `transpose(G) . v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0f64; self.n];
        self.apply_transpose_into(v, &mut out);
        out
    }

    /// Stationary probability vector by power iteration from the uniform
    /// start, with successive-difference convergence in L1.
    pub fn stationary(&self, opts: &PowerOptions) -> RankResult {
        let mut x = vec![1.0 / self.n as f64; self.n];
        let mut y = vec![0f64; self.n];
        let mut iterations = 0;
        let mut residual = f64::INFINITY;
        let mut converged = false;
        while iterations < opts.max_iter {
            self.apply_into(&x, &mut y);
            iterations += 1;
            residual = reduction::l1_diff(&y, &x);
            std::mem::swap(&mut x, &mut y);
            if residual <= opts.tol {
                converged = true;
                break;
            }
        }
        // Mass is preserved up to rounding; renormalize so downstream
        // consumers can rely on an exact probability vector.
        let total = reduction::sum(&x);
        for v in &mut x {
            *v /= total;
        }
        let order = rank_indices(&x);
        RankResult { probs: x, order, iterations, residual, converged }
    }
}

/// Power-iteration controls.
#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    /// Stop once the L1 distance between successive iterates drops to this.
    pub tol: f64,
    /// Iteration budget.
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 1000 }
    }
}

/// A stationary vector with its rank order and convergence diagnostics.
#[derive(Debug, Clone)]
pub struct RankResult {
    /// Stationary probability per node, summing to 1.
    pub probs: Vec<f64>,
    /// Node indices sorted by decreasing probability, ties by ascending
    /// node index; `order[0]` is the top-ranked node.
    pub order: Vec<u32>,
    /// Power iterations performed.
    pub iterations: usize,
    /// L1 distance between the last two iterates.
    pub residual: f64,
    /// Whether the tolerance was met within the iteration budget.
    pub converged: bool,
}

impl RankResult {
    /// 1-based rank of each node (the inverse of `order`).
    pub fn positions(&self) -> Vec<u32> {
        let mut positions = vec![0u32; self.order.len()];
        for (rank, &node) in self.order.iter().enumerate() {
            positions[node as usize] = rank as u32 + 1;
        }
        positions
    }
}

/// Node indices sorted by decreasing probability, ties by ascending index.
pub fn rank_indices(probs: &[f64]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..probs.len() as u32).collect();
    order.sort_by(|&a, &b| {
        probs[b as usize].total_cmp(&probs[a as usize]).then(a.cmp(&b))
    });
    order
}

/// PageRank of a graph: stationary vector of its transition operator.
pub fn pagerank(graph: &SliceGraph, alpha: f64, opts: &PowerOptions) -> Result<RankResult> {
    Ok(StochasticOperator::from_graph(graph, alpha)?.stationary(opts))
}

/// CheiRank of a graph: PageRank of the edge-reversed graph.
pub fn cheirank(graph: &SliceGraph, alpha: f64, opts: &PowerOptions) -> Result<RankResult> {
    pagerank(&graph.invert(), alpha, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, BuildOptions};
    use crate::ingest::TransactionRecord;

    /// Builds a graph with exact node indices: self-loop records intern the
    /// ids `"0".."n-1"` in ascending order and are then dropped.
    fn graph(n: u32, edges: &[(u32, u32, f64)]) -> SliceGraph {
        let rec = |s: u32, d: u32, w: f64| TransactionRecord {
            src: s.to_string(),
            dst: d.to_string(),
            amount: w,
            timestamp: 0,
        };
        let mut records: Vec<_> = (0..n).map(|i| rec(i, i, 1.0)).collect();
        records.extend(edges.iter().map(|&(s, d, w)| rec(s, d, w)));
        build_graph(&records, &BuildOptions::default()).unwrap()
    }

    fn two_cycle() -> SliceGraph {
        graph(2, &[(0, 1, 1.0), (1, 0, 1.0)])
    }

    #[test]
    fn apply_matches_hand_computation_on_two_cycle() {
        let op = StochasticOperator::from_graph(&two_cycle(), 0.85).unwrap();
        let y = op.apply(&[1.0, 0.0]);
        // All of node 0's mass flows to node 1, damped by 0.85; both nodes
        // get half of the teleport mass 0.15.
        let base = (1.0 - 0.85) / 2.0;
        assert_eq!(y, vec![base, base + 0.85]);
    }

    #[test]
    fn apply_routes_dangling_mass_uniformly() {
        let g = graph(2, &[(0, 1, 1.0)]);
        let op = StochasticOperator::from_graph(&g, 0.85).unwrap();
        assert_eq!(op.dangling(), &[1]);
        let y = op.apply(&[0.5, 0.5]);
        let base = (0.85 * 0.5 + 0.15) / 2.0;
        assert_eq!(y[0], base);
        assert_eq!(y[1], base + 0.85 * 0.5);
        assert!((y[0] + y[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn apply_preserves_total_mass() {
        let g = graph(4, &[(0, 1, 2.0), (1, 2, 1.0), (2, 0, 3.0), (0, 3, 1.0)]);
        let op = StochasticOperator::from_graph(&g, 0.85).unwrap();
        let v = [0.7, 0.1, 1.3, 0.4];
        let before: f64 = crate::reduction::sum(&v);
        let after: f64 = crate::reduction::sum(&op.apply(&v));
        assert!((before - after).abs() <= 1e-12 * before);
    }

    #[test]
    fn stationary_entries_respect_teleport_floor() {
        let g = graph(5, &[(0, 1, 1.0), (1, 2, 4.0), (2, 0, 2.0), (3, 0, 9.0)]);
        let r = pagerank(&g, 0.85, &PowerOptions::default()).unwrap();
        let floor = 0.15 / 5.0 * (1.0 - 1e-12);
        assert!(r.probs.iter().all(|&p| p >= floor));
    }

    #[test]
    fn symmetric_cycle_ranks_tie_in_index_order() {
        let r = pagerank(&two_cycle(), 0.85, &PowerOptions::default()).unwrap();
        assert!((r.probs[0] - 0.5).abs() < 1e-12);
        assert_eq!(r.order, vec![0, 1]);
    }

    #[test]
    fn rank_indices_sorts_by_probability_then_index() {
        assert_eq!(rank_indices(&[0.1, 0.4, 0.1, 0.4]), vec![1, 3, 0, 2]);
    }

    #[test]
    fn positions_invert_order() {
        let r = RankResult {
            probs: vec![0.2, 0.5, 0.3],
            order: vec![1, 2, 0],
            iterations: 1,
            residual: 0.0,
            converged: true,
        };
        assert_eq!(r.positions(), vec![3, 1, 2]);
    }

    #[test]
    fn tiny_iteration_budget_reports_no_convergence() {
        // Unequal out-weights from node 0 keep the uniform start away from
        // the stationary vector, so two iterations cannot reach 1e-15.
        let g = graph(3, &[(0, 1, 1.0), (0, 2, 3.0), (1, 0, 1.0), (2, 0, 2.0)]);
        let r = pagerank(&g, 0.85, &PowerOptions { tol: 1e-15, max_iter: 2 }).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
        assert!(r.residual > 1e-15);
    }

    #[test]
    fn alpha_must_be_strictly_between_zero_and_one() {
        let g = two_cycle();
        for alpha in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(
                StochasticOperator::from_graph(&g, alpha),
                Err(Error::InvalidAlpha(_))
            ));
        }
    }

    #[test]
    fn apply_is_identical_across_thread_counts() {
        // Large ring so the parallel row path actually engages.
        let n = 10_000u32;
        let edges: Vec<(u32, u32, f64)> =
            (0..n).map(|i| (i, (i + 1) % n, 1.0 + (i % 7) as f64)).collect();
        let g = graph(n, &edges);
        let op = StochasticOperator::from_graph(&g, 0.85).unwrap();
        let v: Vec<f64> =
            (0..n as u64).map(|i| ((i * 2_654_435_761) % 1000) as f64 / 1000.0).collect();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| op.apply(&v))
        };
        let one = run(1);
        let many = run(5);
        assert_eq!(one, many);
    }
}

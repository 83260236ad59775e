//! Balance-driven bankruptcy cascades.
//!
//! A node's balance compares its standing in the two stationary vectors:
//!
//! ```text
//! B_u = (Pc_u - P_u) / (Pc_u + P_u)
//! ```
//!
//! where `P` is PageRank (weighted by money received) and `Pc` is CheiRank
//! (weighted by money spent). `B_u` is near -1 for nodes that mostly take
//! money in and near +1 for nodes that mostly pay out. A node goes bankrupt
//! when its balance drops to `-kappa` or below.
//!
//! The cascade iterates rounds: compute both stationary vectors on the
//! current network, mark every solvent node with `B_u <= -kappa` bankrupt,
//! then delete all edges *into* bankrupt nodes (they stop receiving; their
//! outgoing edges survive) and repeat. Bankruptcy is absorbing. The process
//! stops at the first round that adds nobody, or after `tau_max` rounds.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::google::{PowerOptions, StochasticOperator};
use crate::graph::SliceGraph;

/// Per-node balance of received vs spent flow, in `(-1, 1)`.
pub fn balance(pagerank: &[f64], cheirank: &[f64]) -> Vec<f64> {
    assert_eq!(pagerank.len(), cheirank.len());
    pagerank
        .iter()
        .zip(cheirank)
        .map(|(&p, &pc)| (pc - p) / (pc + p))
        .collect()
}

/// Cascade controls.
#[derive(Debug, Clone, Copy)]
pub struct ContagionOptions {
    /// Damping factor for both stationary vectors.
    pub alpha: f64,
    /// Power-iteration controls used every round.
    pub power: PowerOptions,
    /// Maximum number of rounds.
    pub tau_max: usize,
}

impl Default for ContagionOptions {
    fn default() -> Self {
        Self { alpha: 0.85, power: PowerOptions::default(), tau_max: 10 }
    }
}

/// Outcome of one cascade at a fixed threshold.
#[derive(Debug, Clone)]
pub struct CascadeResult {
    /// The threshold the cascade ran at.
    pub kappa: f64,
    /// Round at which each node went bankrupt; 0 means still solvent.
    pub bankrupt_at: Vec<u32>,
    /// Newly bankrupt nodes per executed round, ascending within a round.
    /// The final entry is empty when the cascade reached its fixed point.
    pub rounds: Vec<Vec<u32>>,
    /// First round that added no bankruptcies, if reached within `tau_max`.
    pub fixed_point: Option<usize>,
    /// Whether every power iteration along the way met its tolerance.
    pub converged: bool,
}

impl CascadeResult {
    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.bankrupt_at.len()
    }

    /// Total bankrupt nodes at the end of the cascade.
    pub fn bankrupt_count(&self) -> usize {
        self.bankrupt_at.iter().filter(|&&t| t != 0).count()
    }

    /// Cumulative bankrupt set after round `tau`, ascending. Rounds past the
    /// last executed one return the final set; `tau = 0` is empty.
    pub fn set_at(&self, tau: usize) -> Vec<u32> {
        let tau = tau.min(self.rounds.len());
        (0..self.n() as u32)
            .filter(|&u| {
                let t = self.bankrupt_at[u as usize];
                t != 0 && t as usize <= tau
            })
            .collect()
    }

    /// Number of bankrupt nodes after round `tau`, with the same clamping
    /// as `set_at`.
    pub fn count_at(&self, tau: usize) -> usize {
        let tau = tau.min(self.rounds.len());
        self.bankrupt_at.iter().filter(|&&t| t != 0 && t as usize <= tau).count()
    }

    /// Bankrupt fraction after round `tau`.
    pub fn fraction_at(&self, tau: usize) -> f64 {
        self.count_at(tau) as f64 / self.n() as f64
    }
}

/// Working copy of the graph's out-edge arrays, pruned as nodes fail.
struct Workspace {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    weight: Vec<f64>,
}

impl Workspace {
    fn new(graph: &SliceGraph) -> Self {
        Self {
            n: graph.node_count(),
            row_ptr: graph.row_ptr.clone(),
            col: graph.col.clone(),
            weight: graph.weight.clone(),
        }
    }

    /// Drops every edge whose destination is marked dead, in place.
    fn prune(&mut self, dead: &[bool]) {
        let mut write = 0;
        let mut new_row_ptr = vec![0usize; self.n + 1];
        for u in 0..self.n {
            for e in self.row_ptr[u]..self.row_ptr[u + 1] {
                if !dead[self.col[e] as usize] {
                    self.col[write] = self.col[e];
                    self.weight[write] = self.weight[e];
                    write += 1;
                }
            }
            new_row_ptr[u + 1] = write;
        }
        self.col.truncate(write);
        self.weight.truncate(write);
        self.row_ptr = new_row_ptr;
    }

    /// The reversed edge arrays, for the spending-side stationary vector.
    fn reversed(&self) -> (Vec<usize>, Vec<u32>, Vec<f64>) {
        let mut row_ptr = vec![0usize; self.n + 1];
        for &dst in &self.col {
            row_ptr[dst as usize + 1] += 1;
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut col = vec![0u32; self.col.len()];
        let mut weight = vec![0f64; self.col.len()];
        let mut cursor = row_ptr.clone();
        for u in 0..self.n {
            for e in self.row_ptr[u]..self.row_ptr[u + 1] {
                let slot = cursor[self.col[e] as usize];
                col[slot] = u as u32;
                weight[slot] = self.weight[e];
                cursor[self.col[e] as usize] += 1;
            }
        }
        (row_ptr, col, weight)
    }
}

/// Runs one bankruptcy cascade at threshold `kappa`.
pub fn run_cascade(
    graph: &SliceGraph,
    kappa: f64,
    opts: &ContagionOptions,
) -> Result<CascadeResult> {
    if !(kappa >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bankruptcy threshold must be >= 0, got {kappa}"
        )));
    }
    let n = graph.node_count();
    let mut ws = Workspace::new(graph);
    let mut dead = vec![false; n];
    let mut bankrupt_at = vec![0u32; n];
    let mut rounds: Vec<Vec<u32>> = Vec::new();
    let mut fixed_point = None;
    let mut converged = true;

    for tau in 1..=opts.tau_max {
        let fwd = StochasticOperator::from_csr(n, &ws.row_ptr, &ws.col, &ws.weight, opts.alpha)?;
        let (rev_ptr, rev_col, rev_weight) = ws.reversed();
        let rev = StochasticOperator::from_csr(n, &rev_ptr, &rev_col, &rev_weight, opts.alpha)?;
        let p = fwd.stationary(&opts.power);
        let pc = rev.stationary(&opts.power);
        converged &= p.converged && pc.converged;

        let b = balance(&p.probs, &pc.probs);
        let new: Vec<u32> = (0..n as u32)
            .filter(|&u| !dead[u as usize] && b[u as usize] <= -kappa)
            .collect();
        for &u in &new {
            dead[u as usize] = true;
            bankrupt_at[u as usize] = tau as u32;
        }
        let grew = !new.is_empty();
        rounds.push(new);
        if !grew {
            fixed_point = Some(tau);
            break;
        }
        ws.prune(&dead);
    }

    Ok(CascadeResult { kappa, bankrupt_at, rounds, fixed_point, converged })
}

/// Runs independent cascades for every threshold, in parallel, preserving
/// input order.
pub fn kappa_sweep(
    graph: &SliceGraph,
    kappas: &[f64],
    opts: &ContagionOptions,
) -> Result<Vec<CascadeResult>> {
    kappas
        .par_iter()
        .map(|&k| run_cascade(graph, k, opts))
        .collect()
}

/// Evenly spaced threshold grid over `[min, max]`, each value snapped to a
/// multiple of 1e-9 so grids built from decimal steps print cleanly.
pub fn kappa_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min >= 0.0) || !(max >= min) || !(step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold grid needs 0 <= min <= max and step > 0, got [{min}, {max}] step {step}"
        )));
    }
    let mut grid = Vec::new();
    let mut i = 0u64;
    loop {
        let k = ((min + i as f64 * step) * 1e9).round() / 1e9;
        if k > max + 0.5e-9 {
            break;
        }
        grid.push(k);
        i += 1;
    }
    Ok(grid)
}

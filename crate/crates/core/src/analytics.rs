//! Plot-ready reductions of ranking and cascade results.
//!
//! Everything here consumes rank positions (1-based, from the two stationary
//! vectors) and bankruptcy flags, and produces the flat arrays a plotting
//! script wants: log-binned density grids over the rank plane, bankruptcy
//! density maps, integrated bankruptcy fractions along a rank order, power
//! law fits, and cross-slice top-rank occurrence tables.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::reduction;

/// Cell index of a rank on a log-equidistant axis over `[1, n]`.
///
/// Cell boundaries are even in `ln K / ln n`; rank 1 maps to cell 0 and rank
/// `n` to the last cell (the upper edge is inclusive).
pub fn log_bin(rank: u32, n: usize, cells: usize) -> usize {
    assert!(rank >= 1 && rank as usize <= n, "rank {rank} outside 1..={n}");
    assert!(cells > 0);
    if n == 1 {
        return 0;
    }
    let frac = (rank as f64).ln() / (n as f64).ln();
    ((cells as f64 * frac) as usize).min(cells - 1)
}

/// A square grid over the rank plane.
///
/// `x` bins the receiving-side rank, `y` the spending-side rank; `data` is
/// row-major by `y`. Cell values are counts, or signed densities in
/// `[-1, 1]` with NaN marking empty cells, depending on the constructor.
#[derive(Debug, Clone)]
pub struct DensityGrid {
    /// Cells per axis.
    pub cells: usize,
    /// Number of nodes the ranks came from.
    pub n: usize,
    /// Cell values, `data[y * cells + x]`.
    pub data: Vec<f64>,
}

impl DensityGrid {
    /// Value at column `x`, row `y`.
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.cells + x]
    }

    /// Sum of all cells (NaN cells excluded).
    pub fn sum(&self) -> f64 {
        reduction::sum_map(&self.data, |v| if v.is_nan() { 0.0 } else { v })
    }
}

fn cell_of(k: u32, kstar: u32, n: usize, cells: usize) -> usize {
    let x = log_bin(k, n, cells);
    let y = log_bin(kstar, n, cells);
    y * cells + x
}

/// Counts nodes per cell of the rank plane.
///
/// `k_pos` and `kstar_pos` hold each node's 1-based rank in the two orders;
/// the resulting cell values sum to the node count.
pub fn count_grid(k_pos: &[u32], kstar_pos: &[u32], cells: usize) -> DensityGrid {
    assert_eq!(k_pos.len(), kstar_pos.len());
    let n = k_pos.len();
    let mut data = vec![0.0; cells * cells];
    for (&k, &ks) in k_pos.iter().zip(kstar_pos) {
        data[cell_of(k, ks, n, cells)] += 1.0;
    }
    DensityGrid { cells, n, data }
}

/// Signed bankruptcy density per cell of the rank plane.
///
/// Each populated cell gets `(bankrupt - solvent) / total` over its nodes:
/// +1 when every node in the cell went bankrupt, -1 when none did. Cells
/// without nodes hold NaN so plots can leave them blank.
pub fn crisis_grid(
    k_pos: &[u32],
    kstar_pos: &[u32],
    bankrupt: &[bool],
    cells: usize,
) -> DensityGrid {
    assert_eq!(k_pos.len(), kstar_pos.len());
    assert_eq!(k_pos.len(), bankrupt.len());
    let n = k_pos.len();
    let mut total = vec![0.0; cells * cells];
    let mut failed = vec![0.0; cells * cells];
    for (u, (&k, &ks)) in k_pos.iter().zip(kstar_pos).enumerate() {
        let c = cell_of(k, ks, n, cells);
        total[c] += 1.0;
        if bankrupt[u] {
            failed[c] += 1.0;
        }
    }
    let data = total
        .iter()
        .zip(&failed)
        .map(|(&t, &f)| if t == 0.0 { f64::NAN } else { (2.0 * f - t) / t })
        .collect();
    DensityGrid { cells, n, data }
}

/// Integrated bankruptcy fraction along a rank order.
///
/// Entry `K-1` is the fraction of all nodes that are both bankrupt and
/// ranked in the top `K` of `order`. The curve is nondecreasing and ends at
/// the overall bankrupt fraction.
pub fn integrated_fraction(order: &[u32], bankrupt: &[bool]) -> Vec<f64> {
    assert_eq!(order.len(), bankrupt.len());
    let n = order.len();
    let mut acc = 0usize;
    order
        .iter()
        .map(|&u| {
            if bankrupt[u as usize] {
                acc += 1;
            }
            acc as f64 / n as f64
        })
        .collect()
}

/// A fitted power law `W(K) = K^beta / mu`.
#[derive(Debug, Clone, Copy)]
pub struct PowerlawFit {
    /// Exponent (slope in log-log coordinates).
    pub beta: f64,
    /// Scale: `exp(-intercept)` of the log-log regression.
    pub mu: f64,
    /// Standard error of the exponent.
    pub beta_stderr: f64,
    /// Standard error of the scale, by the delta method.
    pub mu_stderr: f64,
    /// Points that entered the regression.
    pub points_used: usize,
}

/// Least-squares power law fit of `(K, W)` points over `kmin <= K <= kmax`
/// (inclusive). Points with `W <= 0` are skipped; at least three points must
/// remain.
pub fn powerlaw_fit(points: &[(f64, f64)], kmin: f64, kmax: f64) -> Result<PowerlawFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(k, w)| k >= kmin && k <= kmax && w > 0.0)
        .map(|&(k, w)| (k.ln(), w.ln()))
        .collect();
    let m = logs.len();
    if m < 3 {
        return Err(Error::TooFewFitPoints(m));
    }
    let xs: Vec<f64> = logs.iter().map(|&(x, _)| x).collect();
    let ys: Vec<f64> = logs.iter().map(|&(_, y)| y).collect();
    let xbar = reduction::sum(&xs) / m as f64;
    let ybar = reduction::sum(&ys) / m as f64;
    let sxx = reduction::sum_map(&xs, |x| (x - xbar) * (x - xbar));
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "fit range holds a single distinct rank".into(),
        ));
    }
    let sxy = reduction::sum_zip(&xs, &ys, |x, y| (x - xbar) * (y - ybar));
    let beta = sxy / sxx;
    let intercept = ybar - beta * xbar;
    let ss_resid = reduction::sum_zip(&xs, &ys, |x, y| {
        let r = y - (beta * x + intercept);
        r * r
    });
    let s2 = ss_resid / (m - 2) as f64;
    let beta_stderr = (s2 / sxx).sqrt();
    let intercept_stderr = (s2 * (1.0 / m as f64 + xbar * xbar / sxx)).sqrt();
    let mu = (-intercept).exp();
    Ok(PowerlawFit {
        beta,
        mu,
        beta_stderr,
        mu_stderr: mu * intercept_stderr,
        points_used: m,
    })
}

/// One node's appearances across several top-`k` rank lists.
#[derive(Debug, Clone, PartialEq)]
pub struct OccurrenceRow {
    /// External node identifier.
    pub id: String,
    /// Lists whose top `k` include the node.
    pub appearances: usize,
    /// Best (smallest) rank the node ever achieved, 1-based.
    pub best_rank: u32,
    /// Rank per list, `None` where the node missed the top `k`.
    pub ranks: Vec<Option<u32>>,
}

/// Cross-tabulates which nodes recur in the top `k` of several rank lists.
///
/// Each list holds external ids in rank order (best first); only the first
/// `k` entries of each are considered. Rows are ordered by appearance count
/// (descending), then best rank (ascending), then id.
pub fn topk_occurrence(lists: &[Vec<String>], k: usize) -> Vec<OccurrenceRow> {
    let mut rows: HashMap<&str, OccurrenceRow> = HashMap::new();
    for (li, list) in lists.iter().enumerate() {
        for (pos, id) in list.iter().take(k).enumerate() {
            let rank = pos as u32 + 1;
            let row = rows.entry(id).or_insert_with(|| OccurrenceRow {
                id: id.clone(),
                appearances: 0,
                best_rank: u32::MAX,
                ranks: vec![None; lists.len()],
            });
            row.appearances += 1;
            row.best_rank = row.best_rank.min(rank);
            row.ranks[li] = Some(rank);
        }
    }
    let mut out: Vec<OccurrenceRow> = rows.into_values().collect();
    out.sort_by(|a, b| {
        b.appearances
            .cmp(&a.appearances)
            .then(a.best_rank.cmp(&b.best_rank))
            .then(a.id.cmp(&b.id))
    });
    out
}

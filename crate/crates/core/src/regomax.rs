//! Reduced transition matrix of a node subset.
//!
//! For a selection `r` of `nr` nodes and its complement `s`, the full
//! transition matrix splits into blocks
//!
//! ```text
//! G = | G_rr  G_rs |
//!     | G_sr  G_ss |
//! ```
//!
//! and the reduced matrix summing direct links plus all excursions through
//! the complement is
//!
//! ```text
//! G_R = G_rr + G_rs (1 - G_ss)^-1 G_sr.
//! ```
//!
//! Inverting `1 - G_ss` head-on is hopeless at scale, and the plain series
//! `sum(G_ss^l)` converges at the rate of the complement's leading eigenvalue
//! `lambda_c`, which approaches 1 for large graphs. So the inverse is split
//! around the leading eigenpair `(lambda_c, psi_R, psi_L)` of `G_ss`: with
//! the projector `Qbar = 1 - psi_R psi_L`,
//!
//! ```text
//! (1 - G_ss)^-1 = psi_R psi_L / (1 - lambda_c)
//!               + sum_l (Qbar G_ss Qbar)^l Qbar
//! ```
//!
//! The first part yields the rank-one component `G_pr`; the series, deflated
//! of the slow mode, converges at the complement's *second* eigenvalue and
//! yields `G_qr`. Everything is computed matrix-free against the full
//! operator: a vector supported on a node set, pushed through `apply` and
//! masked, realizes the corresponding block product.

use crate::error::{Error, Result};
use crate::google::StochasticOperator;
use crate::graph::SliceGraph;
use crate::reduction;

/// A validated set of selected node indices.
#[derive(Debug, Clone)]
pub struct NodeSelection {
    indices: Vec<u32>,
}

impl NodeSelection {
    /// Validates a selection against a graph of `n` nodes: at least two
    /// distinct indices, all within range. Indices are kept in ascending
    /// order; the input order does not matter.
    pub fn new(mut indices: Vec<u32>, n: usize) -> Result<Self> {
        if indices.len() < 2 {
            return Err(Error::InvalidSelection(format!(
                "need at least 2 nodes, got {}",
                indices.len()
            )));
        }
        indices.sort_unstable();
        for pair in indices.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::InvalidSelection(format!("duplicate node {}", pair[0])));
            }
        }
        let last = *indices.last().unwrap();
        if last as usize >= n {
            return Err(Error::InvalidSelection(format!(
                "node {last} out of range for {n} nodes"
            )));
        }
        Ok(Self { indices })
    }

    /// Selected node indices, ascending.
    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    /// Number of selected nodes.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// Always false: a selection holds at least two nodes.
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Controls for the reduced-matrix computation.
#[derive(Debug, Clone, Copy)]
pub struct ReducedOptions {
    /// Damping factor of the underlying operator (when built from a graph).
    pub alpha: f64,
    /// L1 tolerance for the complement eigenpair iteration.
    pub eig_tol: f64,
    /// Iteration budget for the eigenpair.
    pub eig_max_iter: usize,
    /// Relative L1 tolerance for each column's deflated series.
    pub series_tol: f64,
    /// Term budget for each column's series.
    pub series_max_len: usize,
}

impl Default for ReducedOptions {
    fn default() -> Self {
        Self {
            alpha: 0.85,
            eig_tol: 1e-12,
            eig_max_iter: 1_000_000,
            series_tol: 1e-8,
            series_max_len: 10_000,
        }
    }
}

/// The reduced matrix of a selection, with its three-way decomposition.
///
/// All matrices are `nr x nr`, row-major; entry `(i, j)` is the flow from
/// selected node `j` into selected node `i`.
#[derive(Debug, Clone)]
pub struct ReducedMatrices {
    /// Selected node indices, ascending; row/column `k` corresponds to
    /// `selection[k]`.
    pub selection: Vec<u32>,
    /// Matrix dimension (`selection.len()`).
    pub nr: usize,
    /// Full reduced matrix: `g_rr + g_pr + g_qr`.
    pub g_r: Vec<f64>,
    /// Direct transitions inside the selection.
    pub g_rr: Vec<f64>,
    /// Rank-one flow through the complement's leading eigenmode.
    pub g_pr: Vec<f64>,
    /// Flow through the complement orthogonal to the leading mode. Entries
    /// can be negative: this component redistributes relative to the mean
    /// field carried by `g_pr`.
    pub g_qr: Vec<f64>,
    /// Leading eigenvalue of the complement block (0 when the selection
    /// covers the whole graph).
    pub lambda_c: f64,
    /// Power iterations spent on the eigenpair (right plus left).
    pub eig_iterations: usize,
    /// Longest deflated series among the columns.
    pub series_terms_max: usize,
    /// False when any column's series hit its term budget before reaching
    /// the tolerance.
    pub converged: bool,
}

/// Summed-entry weights of the reduced matrix components, each divided by
/// the selection size so the full matrix weighs 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentWeights {
    pub rr: f64,
    pub pr: f64,
    pub qr: f64,
    /// Diagonal part of the `qr` weight.
    pub qrd: f64,
    /// Off-diagonal part of the `qr` weight.
    pub qrnd: f64,
    /// Weight of the full reduced matrix; 1 up to rounding.
    pub total: f64,
}

impl ReducedMatrices {
    /// Entry accessor: row `i`, column `j` of an `nr x nr` component.
    pub fn entry(m: &[f64], nr: usize, i: usize, j: usize) -> f64 {
        m[i * nr + j]
    }

    /// The `g_qr` component with only its diagonal kept.
    pub fn g_qr_diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nr * self.nr];
        for i in 0..self.nr {
            d[i * self.nr + i] = self.g_qr[i * self.nr + i];
        }
        d
    }

    /// The `g_qr` component with its diagonal zeroed.
    pub fn g_qr_nondiag(&self) -> Vec<f64> {
        let mut m = self.g_qr.clone();
        for i in 0..self.nr {
            m[i * self.nr + i] = 0.0;
        }
        m
    }

    /// Component weights, computed from the stored matrices.
    pub fn weights(&self) -> ComponentWeights {
        let nr = self.nr as f64;
        let qrd: f64 =
            (0..self.nr).map(|i| self.g_qr[i * self.nr + i]).sum::<f64>() / nr;
        let qr = reduction::sum(&self.g_qr) / nr;
        ComponentWeights {
            rr: reduction::sum(&self.g_rr) / nr,
            pr: reduction::sum(&self.g_pr) / nr,
            qr,
            qrd,
            qrnd: qr - qrd,
            total: reduction::sum(&self.g_r) / nr,
        }
    }
}

/// Computes the reduced matrix of a selection, building the operator from
/// the graph with `opts.alpha`.
pub fn reduced_google(
    graph: &SliceGraph,
    selection: &NodeSelection,
    opts: &ReducedOptions,
) -> Result<ReducedMatrices> {
    let op = StochasticOperator::from_graph(graph, opts.alpha)?;
    reduced_google_of(&op, selection, opts)
}

/// Computes the reduced matrix of a selection against an existing operator.
pub fn reduced_google_of(
    op: &StochasticOperator,
    selection: &NodeSelection,
    opts: &ReducedOptions,
) -> Result<ReducedMatrices> {
    let n = op.n();
    let sel = selection.indices();
    let nr = sel.len();
    if sel.last().is_some_and(|&last| last as usize >= n) {
        return Err(Error::InvalidSelection(format!(
            "selection does not fit a graph of {n} nodes"
        )));
    }

    let mut in_sel = vec![false; n];
    for &u in sel {
        in_sel[u as usize] = true;
    }
    let ns = n - nr;

    // Whole graph selected: the reduced matrix is G itself, restricted.
    if ns == 0 {
        let mut g_rr = vec![0.0; nr * nr];
        let mut e = vec![0.0; n];
        for (j, &node) in sel.iter().enumerate() {
            e[node as usize] = 1.0;
            let full = op.apply(&e);
            e[node as usize] = 0.0;
            for (i, &ni) in sel.iter().enumerate() {
                g_rr[i * nr + j] = full[ni as usize];
            }
        }
        return Ok(ReducedMatrices {
            selection: sel.to_vec(),
            nr,
            g_r: g_rr.clone(),
            g_rr,
            g_pr: vec![0.0; nr * nr],
            g_qr: vec![0.0; nr * nr],
            lambda_c: 0.0,
            eig_iterations: 0,
            series_terms_max: 0,
            converged: true,
        });
    }

    // Leading eigenpair of the complement block. The right iteration fixes
    // lambda_c; the left vector is rescaled to make the pair biorthonormal.
    let (lambda_c, psi_r, it_r) = complement_eigenpair(op, &in_sel, ns, opts, false)?;
    let (_, mut psi_l, it_l) = complement_eigenpair(op, &in_sel, ns, opts, true)?;
    if 1.0 - lambda_c <= 1e-12 {
        return Err(Error::ComplementAbsorbing(lambda_c));
    }
    let scale = reduction::dot(&psi_l, &psi_r);
    for v in &mut psi_l {
        *v /= scale;
    }

    // G_rs . psi_R, the column factor of the rank-one component.
    let w_pr: Vec<f64> = {
        let full = op.apply(&psi_r);
        sel.iter().map(|&ni| full[ni as usize]).collect()
    };

    let mut g_rr = vec![0.0; nr * nr];
    let mut g_pr = vec![0.0; nr * nr];
    let mut g_qr = vec![0.0; nr * nr];
    let mut series_terms_max = 0;
    let mut converged = true;

    // Per-column work buffers, full length, reused across columns.
    let mut e = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut total = vec![0.0; n];

    for (j, &node) in sel.iter().enumerate() {
        // Column j of G: selected rows feed g_rr, complement rows start the
        // series.
        e[node as usize] = 1.0;
        op.apply_into(&e, &mut u);
        e[node as usize] = 0.0;
        for (i, &ni) in sel.iter().enumerate() {
            g_rr[i * nr + j] = u[ni as usize];
        }
        for &ni in sel {
            u[ni as usize] = 0.0;
        }

        // Rank-one component: w_pr . (psi_L . column) / (1 - lambda_c).
        let q_j = reduction::dot(&psi_l, &u);
        for i in 0..nr {
            g_pr[i * nr + j] = w_pr[i] * q_j / (1.0 - lambda_c);
        }

        // Deflated series: u_0 = Qbar b, u_{l+1} = Qbar G_ss u_l.
        project_out(&mut u, &psi_r, &psi_l);
        total.fill(0.0);
        let mut terms = 0;
        loop {
            let u_norm = reduction::sum_map(&u, f64::abs);
            let total_norm = reduction::sum_map(&total, f64::abs);
            if u_norm <= opts.series_tol * total_norm {
                break;
            }
            if terms >= opts.series_max_len {
                converged = false;
                break;
            }
            for (t, &x) in total.iter_mut().zip(&u) {
                *t += x;
            }
            op.apply_into(&u, &mut tmp);
            for &ni in sel {
                tmp[ni as usize] = 0.0;
            }
            project_out(&mut tmp, &psi_r, &psi_l);
            std::mem::swap(&mut u, &mut tmp);
            terms += 1;
        }
        series_terms_max = series_terms_max.max(terms);

        // g_qr column j = G_rs . (series sum).
        op.apply_into(&total, &mut tmp);
        for (i, &ni) in sel.iter().enumerate() {
            g_qr[i * nr + j] = tmp[ni as usize];
        }
    }

    let g_r: Vec<f64> = g_rr
        .iter()
        .zip(&g_pr)
        .zip(&g_qr)
        .map(|((&a, &b), &c)| a + b + c)
        .collect();

    Ok(ReducedMatrices {
        selection: sel.to_vec(),
        nr,
        g_r,
        g_rr,
        g_pr,
        g_qr,
        lambda_c,
        eig_iterations: it_r + it_l,
        series_terms_max,
        converged,
    })
}

/// Removes the leading-eigenmode component: `v -= psi_R (psi_L . v)`.
fn project_out(v: &mut [f64], psi_r: &[f64], psi_l: &[f64]) {
    let c = reduction::dot(psi_l, v);
    for (x, &p) in v.iter_mut().zip(psi_r) {
        *x -= c * p;
    }
}

/// Power iteration for the dominant eigenpair of the complement block
/// (`transpose` picks the left vector). Returns the eigenvalue, the vector
/// normalized to unit entry sum, and the iteration count.
fn complement_eigenpair(
    op: &StochasticOperator,
    in_sel: &[bool],
    ns: usize,
    opts: &ReducedOptions,
    transpose: bool,
) -> Result<(f64, Vec<f64>, usize)> {
    let n = op.n();
    let mut v: Vec<f64> = (0..n)
        .map(|u| if in_sel[u] { 0.0 } else { 1.0 / ns as f64 })
        .collect();
    let mut w = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.eig_max_iter {
        if transpose {
            op.apply_transpose_into(&v, &mut w);
        } else {
            op.apply_into(&v, &mut w);
        }
        for u in 0..n {
            if in_sel[u] {
                w[u] = 0.0;
            }
        }
        // The block keeps entries nonnegative, so the L1 norm is the sum.
        let lambda = reduction::sum(&w);
        for x in &mut w {
            *x /= lambda;
        }
        residual = reduction::l1_diff(&w, &v);
        std::mem::swap(&mut v, &mut w);
        if residual <= opts.eig_tol {
            return Ok((lambda, v, it));
        }
    }
    Err(Error::EigenpairNotConverged { iterations: opts.eig_max_iter, residual })
}

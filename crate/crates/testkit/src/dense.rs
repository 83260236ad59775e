//! Dense reference implementations.
//!
//! Everything here favors directness over speed: matrices are materialized,
//! stationary vectors come from a linear solve instead of power iteration,
//! and the reduced matrix uses an explicit inverse. Tests compare the fast
//! sparse implementations against these on small graphs.

use nalgebra::{DMatrix, DVector};
use txrank_core::SliceGraph;

/// Materializes the full stochastic transition matrix `G` of a graph.
///
/// Column `j` distributes node `j`'s probability: proportionally to out-edge
/// weights, or uniformly when `j` has no out-edges, then damped by `alpha`
/// toward the uniform vector.
pub fn dense_google(graph: &SliceGraph, alpha: f64) -> DMatrix<f64> {
    let n = graph.node_count();
    let mut g = DMatrix::from_element(n, n, 0.0);
    for j in 0..n {
        let total = graph.out_weight(j as u32);
        if total == 0.0 {
            for i in 0..n {
                g[(i, j)] = 1.0 / n as f64;
            }
        } else {
            let (dsts, ws) = graph.out_edges(j as u32);
            for (&dst, &w) in dsts.iter().zip(ws) {
                g[(dst as usize, j)] = w / total;
            }
        }
    }
    let uniform = (1.0 - alpha) / n as f64;
    for v in g.iter_mut() {
        *v = alpha * *v + uniform;
    }
    g
}

/// Stationary distribution of a column-stochastic matrix by direct solve.
///
/// Solves `(G - I) p = 0` with the last equation replaced by `sum(p) = 1`,
/// which pins the eigenvector exactly instead of iterating toward it.
pub fn dense_stationary(g: &DMatrix<f64>) -> DVector<f64> {
    let n = g.nrows();
    let mut m = g - DMatrix::identity(n, n);
    for j in 0..n {
        m[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::from_element(n, 0.0);
    rhs[n - 1] = 1.0;
    m.lu().solve(&rhs).expect("stationary system is nonsingular for alpha < 1")
}

/// Rank order of a probability vector: node indices sorted by decreasing
/// probability, ties broken by ascending node index.
pub fn rank_order(probs: &[f64]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..probs.len() as u32).collect();
    order.sort_by(|&a, &b| {
        probs[b as usize]
            .partial_cmp(&probs[a as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    order
}

/// Dominant eigenpair of a dense matrix with positive entries, by iteration
/// to near machine precision. Returns `(lambda, right, left)` with the right
/// vector summing to 1 and `left . right = 1`.
pub fn dense_leading_eigenpair(m: &DMatrix<f64>) -> (f64, DVector<f64>, DVector<f64>) {
    let n = m.nrows();
    let mut right = DVector::from_element(n, 1.0 / n as f64);
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let next = m * &right;
        let norm: f64 = next.iter().map(|v| v.abs()).sum();
        let next = next / norm;
        let diff: f64 = (&next - &right).iter().map(|v| v.abs()).sum();
        right = next;
        lambda = norm;
        if diff < 1e-15 {
            break;
        }
    }
    let mt = m.transpose();
    let mut left = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..100_000 {
        let next = &mt * &left;
        let norm: f64 = next.iter().map(|v| v.abs()).sum();
        let next = next / norm;
        let diff: f64 = (&next - &left).iter().map(|v| v.abs()).sum();
        left = next;
        if diff < 1e-15 {
            break;
        }
    }
    let rsum: f64 = right.iter().sum();
    let right = right / rsum;
    let scale = left.dot(&right);
    let left = left / scale;
    (lambda, right, left)
}

/// Dense reduced transition matrix of a node subset, with its decomposition.
pub struct DenseReduced {
    /// Full reduced matrix, via the explicit inverse of `I - G_ss`.
    pub g_r: DMatrix<f64>,
    /// Direct links inside the subset.
    pub g_rr: DMatrix<f64>,
    /// Rank-one part mediated by the complement's leading eigenmode.
    pub g_pr: DMatrix<f64>,
    /// Remainder: indirect paths orthogonal to the leading eigenmode.
    pub g_qr: DMatrix<f64>,
    /// Leading eigenvalue of the complement block.
    pub lambda_c: f64,
}

/// Computes the reduced matrix of `sel` (ascending node indices) inside `g`
/// using explicit dense algebra throughout.
pub fn dense_reduced(g: &DMatrix<f64>, sel: &[usize]) -> DenseReduced {
    let n = g.nrows();
    let in_sel: Vec<bool> = {
        let mut mask = vec![false; n];
        for &i in sel {
            mask[i] = true;
        }
        mask
    };
    let comp: Vec<usize> = (0..n).filter(|&i| !in_sel[i]).collect();
    let nr = sel.len();
    let ns = comp.len();

    let pick = |rows: &[usize], cols: &[usize]| -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| g[(rows[i], cols[j])])
    };
    let g_rr = pick(sel, sel);
    if ns == 0 {
        return DenseReduced {
            g_r: g_rr.clone(),
            g_rr,
            g_pr: DMatrix::zeros(nr, nr),
            g_qr: DMatrix::zeros(nr, nr),
            lambda_c: 0.0,
        };
    }
    let g_rs = pick(sel, &comp);
    let g_sr = pick(&comp, sel);
    let g_ss = pick(&comp, &comp);

    let inv = (DMatrix::identity(ns, ns) - &g_ss)
        .try_inverse()
        .expect("I - G_ss is invertible when the complement leaks probability");
    let g_r = &g_rr + &g_rs * &inv * &g_sr;

    let (lambda_c, psi_r, psi_l) = dense_leading_eigenpair(&g_ss);
    let g_pr = (&g_rs * &psi_r) * (psi_l.transpose() * &g_sr) / (1.0 - lambda_c);
    let g_qr = &g_r - &g_rr - &g_pr;

    DenseReduced { g_r, g_rr, g_pr, g_qr, lambda_c }
}

/// Relative balance of traded flow per node: `(pc - p) / (pc + p)` where `p`
/// is the stationary probability on the graph and `pc` on the inverted graph.
pub fn dense_balance(graph: &SliceGraph, alpha: f64) -> Vec<f64> {
    let p = dense_stationary(&dense_google(graph, alpha));
    let pc = dense_stationary(&dense_google(&graph.invert(), alpha));
    p.iter().zip(pc.iter()).map(|(&p, &pc)| (pc - p) / (pc + p)).collect()
}

/// Dense trace of a bankruptcy cascade.
///
/// Nodes whose balance drops to `-kappa` or below go bankrupt; each round
/// removes all edges into bankrupt nodes, rebuilds both stochastic matrices
/// from scratch (dangling columns included), and re-evaluates balances.
/// Returns the cumulative bankrupt set after each round, one entry per round
/// up to `tau_max`, stopping early once a round adds nobody.
pub fn dense_cascade(
    graph: &SliceGraph,
    alpha: f64,
    kappa: f64,
    tau_max: usize,
) -> Vec<Vec<u32>> {
    let n = graph.node_count();
    // w[(i, j)] = flow j -> i.
    let mut w = DMatrix::from_element(n, n, 0.0);
    for j in 0..n {
        let (dsts, ws) = graph.out_edges(j as u32);
        for (&dst, &wt) in dsts.iter().zip(ws) {
            w[(dst as usize, j)] += wt;
        }
    }

    let stationary_pair = |w: &DMatrix<f64>| -> (DVector<f64>, DVector<f64>) {
        let build = |w: &DMatrix<f64>| -> DMatrix<f64> {
            let mut g = DMatrix::from_element(n, n, 0.0);
            for j in 0..n {
                let total: f64 = (0..n).map(|i| w[(i, j)]).sum();
                for i in 0..n {
                    g[(i, j)] = if total == 0.0 { 1.0 / n as f64 } else { w[(i, j)] / total };
                }
            }
            let uniform = (1.0 - alpha) / n as f64;
            for v in g.iter_mut() {
                *v = alpha * *v + uniform;
            }
            g
        };
        (dense_stationary(&build(w)), dense_stationary(&build(&w.transpose())))
    };

    let mut bankrupt = vec![false; n];
    let mut history = Vec::new();
    for _ in 0..tau_max {
        let (p, pc) = stationary_pair(&w);
        let mut grew = false;
        for u in 0..n {
            let b = (pc[u] - p[u]) / (pc[u] + p[u]);
            if !bankrupt[u] && b <= -kappa {
                bankrupt[u] = true;
                grew = true;
            }
        }
        for u in 0..n {
            if bankrupt[u] {
                for j in 0..n {
                    w[(u, j)] = 0.0;
                }
            }
        }
        history.push(
            (0..n as u32).filter(|&u| bankrupt[u as usize]).collect::<Vec<_>>(),
        );
        if !grew {
            break;
        }
    }
    history
}

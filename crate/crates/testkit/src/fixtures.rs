//! Shared graph fixtures and seeded random graph generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use txrank_core::SliceGraph;

/// Builds a graph directly from `(src, dst, weight)` triples over nodes
/// `0..n`, bypassing record ingestion so tests control node indices exactly.
/// Duplicate edges are summed.
pub fn graph_from_edges(n: usize, edges: &[(u32, u32, f64)]) -> SliceGraph {
    let mut sorted: Vec<(u32, u32, f64)> = edges.to_vec();
    sorted.sort_by_key(|&(s, d, _)| (s, d));
    let mut row_ptr = vec![0usize; n + 1];
    let mut col: Vec<u32> = Vec::new();
    let mut weight: Vec<f64> = Vec::new();
    let mut last: Option<(u32, u32)> = None;
    for &(s, d, w) in &sorted {
        assert!((s as usize) < n && (d as usize) < n, "edge outside 0..{n}");
        if last == Some((s, d)) {
            *weight.last_mut().unwrap() += w;
        } else {
            col.push(d);
            weight.push(w);
            row_ptr[s as usize + 1] = col.len();
            last = Some((s, d));
        }
    }
    for i in 0..n {
        if row_ptr[i + 1] < row_ptr[i] {
            row_ptr[i + 1] = row_ptr[i];
        }
    }
    SliceGraph { ids: (0..n).map(|i| i.to_string()).collect(), row_ptr, col, weight }
}

/// Seeded random directed graph with `2..=max_n` nodes, positive random
/// weights, and at least one edge. Self-loops are skipped so every generated
/// edge survives graph construction. Some nodes may be dangling.
pub fn random_graph(seed: u64, max_n: usize) -> SliceGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    loop {
        let mut edges = Vec::new();
        for s in 0..n as u32 {
            for d in 0..n as u32 {
                if s != d && rng.random_bool(0.4) {
                    edges.push((s, d, rng.random_range(0.1..10.0)));
                }
            }
        }
        if !edges.is_empty() {
            return graph_from_edges(n, &edges);
        }
    }
}

/// Five-node flow network tuned so a bankruptcy cascade unfolds over two
/// rounds: node 0 sinks almost all flow and pays out little, so it fails
/// first; nodes 1 and 3 lose their only income with it and fail next, while
/// node 2 keeps a second income edge and survives.
pub fn cascade_graph() -> SliceGraph {
    graph_from_edges(
        5,
        &[
            (1, 0, 10.0),
            (2, 0, 10.0),
            (3, 0, 10.0),
            (0, 4, 1.0),
            (4, 1, 5.0),
            (4, 2, 5.0),
            (4, 3, 5.0),
            (2, 4, 5.0),
        ],
    )
}

/// Four-node graph whose complement block (nodes 2 and 3) is symmetric, so
/// its left and right leading eigenvectors coincide and the eigenpair can be
/// checked analytically.
pub fn symmetric_complement_graph() -> SliceGraph {
    graph_from_edges(4, &[(2, 3, 1.0), (3, 2, 1.0), (2, 0, 1.0), (3, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0)])
}

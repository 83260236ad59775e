//! Reproducible synthetic transaction networks.
//!
//! The generator grows a directed scale-free network: each node draws an
//! out-degree from a Pareto tail (scaled to a target mean, floored at 1 so
//! every node pays someone), destinations follow a Zipf attractiveness law
//! over node indices (node 0 is the most popular sink), amounts are
//! log-normal, and timestamps are uniform over one calendar quarter.
//!
//! All draws come from a single seeded ChaCha stream in a fixed order
//! (degrees first, then destination/amount/timestamp per edge), so a given
//! parameter set always produces the same network, whether it is streamed to
//! a file or materialized directly as a graph.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Pareto, Zipf};

use crate::error::{Error, Result};
use crate::graph::{from_weighted_edges, BuildOptions, SliceGraph};
use crate::ingest::quarter_bounds;

/// Parameters of the synthetic network.
#[derive(Debug, Clone)]
pub struct SynthParams {
    /// Node count.
    pub nodes: usize,
    /// Target mean out-degree; total records come out near `nodes` times
    /// this (the floor at degree 1 pushes the mean slightly up).
    pub edges_per_node: f64,
    /// Tail exponent of the out-degree distribution; must exceed 2 so the
    /// mean exists.
    pub degree_exponent: f64,
    /// Zipf exponent of destination attractiveness; larger concentrates
    /// incoming flow on low-index nodes.
    pub attract_exponent: f64,
    /// Mean of log amount.
    pub amount_log_mean: f64,
    /// Standard deviation of log amount.
    pub amount_log_sigma: f64,
    /// Calendar quarter the timestamps fall in.
    pub year: i32,
    /// Quarter within the year, 1 to 4.
    pub quarter: u8,
    /// RNG seed; equal seeds give byte-identical output.
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            nodes: 10_000,
            edges_per_node: 5.0,
            degree_exponent: 2.5,
            attract_exponent: 1.0,
            amount_log_mean: 0.0,
            amount_log_sigma: 2.0,
            year: 2013,
            quarter: 1,
            seed: 42,
        }
    }
}

fn validate(params: &SynthParams) -> Result<()> {
    if params.nodes == 0 {
        return Err(Error::InvalidParameter("node count must be positive".into()));
    }
    if !(params.edges_per_node > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean out-degree must be positive, got {}",
            params.edges_per_node
        )));
    }
    if !(params.degree_exponent > 2.0) {
        return Err(Error::InvalidParameter(format!(
            "degree exponent must exceed 2 for a finite mean, got {}",
            params.degree_exponent
        )));
    }
    if !(params.attract_exponent > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "attractiveness exponent must be positive, got {}",
            params.attract_exponent
        )));
    }
    if !(params.amount_log_sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "amount log sigma must be nonnegative, got {}",
            params.amount_log_sigma
        )));
    }
    Ok(())
}

/// Runs `f` over every generated record, in the fixed generation order.
fn for_each_record(
    params: &SynthParams,
    mut f: impl FnMut(u32, u32, f64, i64),
) -> Result<u64> {
    validate(params)?;
    let n = params.nodes;
    let (t0, t1) = quarter_bounds(params.year, params.quarter)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // Pareto tail with density ~ x^-gamma needs shape gamma - 1; rescale so
    // the pre-floor mean equals the requested out-degree.
    let shape = params.degree_exponent - 1.0;
    let pareto = Pareto::new(1.0, shape)
        .map_err(|e| Error::InvalidParameter(format!("degree distribution: {e}")))?;
    let scale = params.edges_per_node * (shape - 1.0) / shape;
    let degrees: Vec<u32> = (0..n)
        .map(|_| {
            let d = (scale * pareto.sample(&mut rng)).round();
            (d as u64).clamp(1, n as u64) as u32
        })
        .collect();

    let zipf = Zipf::new(n as f64, params.attract_exponent)
        .map_err(|e| Error::InvalidParameter(format!("attractiveness distribution: {e}")))?;
    let amounts = LogNormal::new(params.amount_log_mean, params.amount_log_sigma)
        .map_err(|e| Error::InvalidParameter(format!("amount distribution: {e}")))?;

    let mut count = 0u64;
    for src in 0..n as u32 {
        for _ in 0..degrees[src as usize] {
            let dst = zipf.sample(&mut rng) as u32 - 1;
            let amount = amounts.sample(&mut rng);
            let ts = rng.random_range(t0..t1);
            f(src, dst, amount, ts);
            count += 1;
        }
    }
    Ok(count)
}

/// Streams the synthetic network as a CSV edge list the parser reads back.
///
/// The first line is a comment recording the parameters. Returns the number
/// of records written.
pub fn write_edge_list<W: Write>(params: &SynthParams, mut out: W) -> Result<u64> {
    writeln!(
        out,
        "# synthetic network: nodes={} edges_per_node={} degree_exponent={} \
         attract_exponent={} amount_log_mean={} amount_log_sigma={} year={} quarter={} seed={}",
        params.nodes,
        params.edges_per_node,
        params.degree_exponent,
        params.attract_exponent,
        params.amount_log_mean,
        params.amount_log_sigma,
        params.year,
        params.quarter,
        params.seed
    )?;
    let mut io_err = None;
    let count = for_each_record(params, |src, dst, amount, ts| {
        if io_err.is_none() {
            if let Err(e) = writeln!(out, "{src},{dst},{amount},{ts}") {
                io_err = Some(e);
            }
        }
    })?;
    match io_err {
        Some(e) => Err(e.into()),
        None => Ok(count),
    }
}

/// Materializes the synthetic network directly as a graph, without the
/// detour through strings and parsing. Node ids are the decimal indices.
pub fn generate_graph(params: &SynthParams, options: &BuildOptions) -> Result<SliceGraph> {
    let mut edges: Vec<(u32, u32, f64)> =
        Vec::with_capacity((params.nodes as f64 * params.edges_per_node) as usize);
    for_each_record(params, |src, dst, amount, _| {
        let w = if options.count_mode { 1.0 } else { amount };
        edges.push((src, dst, w));
    })?;
    let ids: Vec<String> = (0..params.nodes).map(|i| i.to_string()).collect();
    from_weighted_edges(ids, edges, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::ingest::{read_transactions, slice_by_quarter};

    fn small() -> SynthParams {
        SynthParams { nodes: 300, seed: 7, ..Default::default() }
    }

    #[test]
    fn same_seed_gives_identical_bytes() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_edge_list(&small(), &mut a).unwrap();
        write_edge_list(&small(), &mut b).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_edge_list(&small(), &mut a).unwrap();
        write_edge_list(&SynthParams { seed: 8, ..small() }, &mut b).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn record_count_tracks_the_target_mean_degree() {
        let params = SynthParams { nodes: 2000, edges_per_node: 5.0, ..Default::default() };
        let mut sink = std::io::sink();
        let count = write_edge_list(&params, &mut sink).unwrap();
        let mean = count as f64 / params.nodes as f64;
        assert!((3.0..12.0).contains(&mean), "mean out-degree {mean}");
    }

    #[test]
    fn low_index_nodes_attract_more_flow() {
        let g = generate_graph(
            &SynthParams { nodes: 2000, ..Default::default() },
            &BuildOptions::default(),
        )
        .unwrap();
        let inv = g.invert();
        let popular = inv.out_degree(0);
        let obscure = inv.out_degree(1999);
        assert!(
            popular > obscure + 10,
            "in-degrees: node 0 has {popular}, node 1999 has {obscure}"
        );
    }

    #[test]
    fn file_and_direct_graphs_carry_the_same_edges() {
        let params = SynthParams { nodes: 60, seed: 11, ..Default::default() };
        let mut buf = Vec::new();
        write_edge_list(&params, &mut buf).unwrap();
        let parsed = build_graph(
            &read_transactions(buf.as_slice()).unwrap(),
            &BuildOptions::default(),
        )
        .unwrap();
        let direct = generate_graph(&params, &BuildOptions::default()).unwrap();

        // Node indexing differs (first-appearance vs numeric), so compare
        // the edge multisets keyed by external ids.
        let edge_set = |g: &SliceGraph| {
            let mut v: Vec<(String, String, f64)> = (0..g.node_count() as u32)
                .flat_map(|u| {
                    let (dsts, ws) = g.out_edges(u);
                    dsts.iter()
                        .zip(ws)
                        .map(|(&d, &w)| {
                            (g.ids[u as usize].clone(), g.ids[d as usize].clone(), w)
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            v.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
            v
        };
        assert_eq!(direct.node_count(), parsed.node_count());
        assert_eq!(edge_set(&direct), edge_set(&parsed));
    }

    /// Fits the log-log slope of the out-degree survival function.
    fn degree_tail_slope(gamma: f64) -> f64 {
        let params = SynthParams {
            nodes: 30_000,
            degree_exponent: gamma,
            seed: 21,
            ..Default::default()
        };
        let mut degree = vec![0u32; params.nodes];
        for_each_record(&params, |src, _, _, _| degree[src as usize] += 1).unwrap();
        degree.sort_unstable();

        let n = degree.len() as f64;
        let mut points = Vec::new();
        let mut i = 0;
        while i < degree.len() {
            let d = degree[i];
            let mut j = i;
            while j < degree.len() && degree[j] == d {
                j += 1;
            }
            let above = (degree.len() - j) as f64 / n;
            if above > 0.0 {
                points.push((d as f64, above));
            }
            i = j;
        }
        crate::analytics::powerlaw_fit(&points, 5.0, 100.0).unwrap().beta
    }

    #[test]
    fn degree_tail_follows_the_requested_exponent() {
        // A survival function P(D > d) ~ d^(1 - gamma) puts the fitted slope
        // at 1 - gamma; finite-sample noise stays well inside the margin.
        let slope = degree_tail_slope(2.5);
        assert!((slope + 1.5).abs() < 0.3, "gamma=2.5 fitted slope {slope}");
        let slope = degree_tail_slope(3.5);
        assert!((slope + 2.5).abs() < 0.4, "gamma=3.5 fitted slope {slope}");
    }

    #[test]
    fn timestamps_stay_inside_the_requested_quarter() {
        let params = SynthParams { nodes: 100, year: 2012, quarter: 3, ..Default::default() };
        let mut buf = Vec::new();
        let count = write_edge_list(&params, &mut buf).unwrap();
        let records = read_transactions(buf.as_slice()).unwrap();
        assert_eq!(records.len() as u64, count);
        let kept = slice_by_quarter(records, 2012, 3).unwrap();
        assert_eq!(kept.len() as u64, count);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let cases = [
            SynthParams { nodes: 0, ..Default::default() },
            SynthParams { edges_per_node: 0.0, ..Default::default() },
            SynthParams { degree_exponent: 2.0, ..Default::default() },
            SynthParams { attract_exponent: 0.0, ..Default::default() },
            SynthParams { amount_log_sigma: -1.0, ..Default::default() },
            SynthParams { quarter: 0, ..Default::default() },
        ];
        for params in cases {
            assert!(
                write_edge_list(&params, std::io::sink()).is_err(),
                "{params:?} should be rejected"
            );
        }
    }
}

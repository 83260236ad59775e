//! Directed weighted graph in compressed sparse row form.
//!
//! Nodes are interned in first-appearance order (source before destination
//! within a record), so graph construction is deterministic for a given record
//! sequence. Parallel edges are summed; self-loops and zero-amount transfers
//! are dropped unless configured otherwise.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ingest::TransactionRecord;

/// Options controlling how transaction records become a graph.
#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Discard edges whose source and destination coincide (default true).
    pub drop_self_loops: bool,
    /// Weight every record as 1 instead of by its amount (default false).
    pub count_mode: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { drop_self_loops: true, count_mode: false }
    }
}

/// A directed weighted graph over one time slice, stored as out-edge CSR.
///
/// `row_ptr[u]..row_ptr[u+1]` indexes the out-edges of node `u` in `col`
/// (destinations, ascending) and `weight` (summed amounts, `> 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct SliceGraph {
    /// External identifiers, indexed by node id.
    pub ids: Vec<String>,
    /// CSR row offsets, length `n + 1`.
    pub row_ptr: Vec<usize>,
    /// Edge destinations.
    pub col: Vec<u32>,
    /// Edge weights, positive.
    pub weight: Vec<f64>,
}

impl SliceGraph {
    /// Number of nodes.
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Number of directed edges after aggregation.
    pub fn edge_count(&self) -> usize {
        self.col.len()
    }

    /// Out-edges of `u` as parallel `(dst, weight)` slices.
    pub fn out_edges(&self, u: u32) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[u as usize];
        let hi = self.row_ptr[u as usize + 1];
        (&self.col[lo..hi], &self.weight[lo..hi])
    }

    /// Total out-weight of `u`.
    pub fn out_weight(&self, u: u32) -> f64 {
        let (_, w) = self.out_edges(u);
        w.iter().sum()
    }

    /// Out-degree of `u` after aggregation.
    pub fn out_degree(&self, u: u32) -> usize {
        self.row_ptr[u as usize + 1] - self.row_ptr[u as usize]
    }

    /// Node id for an external identifier, if present.
    pub fn lookup(&self, id: &str) -> Option<u32> {
        // Linear scan is fine for the small graphs this is used on; bulk
        // callers should build their own map over `ids`.
        self.ids.iter().position(|i| i == id).map(|p| p as u32)
    }

    /// The same graph with every edge reversed. Node ids are preserved.
    pub fn invert(&self) -> SliceGraph {
        let n = self.node_count();
        let mut row_ptr = vec![0usize; n + 1];
        for &dst in &self.col {
            row_ptr[dst as usize + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut col = vec![0u32; self.col.len()];
        let mut weight = vec![0f64; self.col.len()];
        let mut cursor = row_ptr.clone();
        // Walking sources in ascending order makes each inverted row sorted.
        for u in 0..n {
            let (dsts, ws) = self.out_edges(u as u32);
            for (&dst, &w) in dsts.iter().zip(ws) {
                let slot = cursor[dst as usize];
                col[slot] = u as u32;
                weight[slot] = w;
                cursor[dst as usize] += 1;
            }
        }
        SliceGraph { ids: self.ids.clone(), row_ptr, col, weight }
    }
}

/// Builds a CSR graph from transaction records.
///
/// Node ids follow first appearance. Zero-amount records are dropped (they
/// carry no probability); under `count_mode` every surviving record weighs 1.
pub fn build_graph(records: &[TransactionRecord], options: &BuildOptions) -> Result<SliceGraph> {
    let mut lookup: HashMap<String, u32> = HashMap::new();
    let mut ids: Vec<String> = Vec::new();
    let mut intern = |id: &str, ids: &mut Vec<String>| -> u32 {
        if let Some(&v) = lookup.get(id) {
            return v;
        }
        let v = ids.len() as u32;
        ids.push(id.to_owned());
        lookup.insert(id.to_owned(), v);
        v
    };

    let mut edges: Vec<(u32, u32, f64)> = Vec::with_capacity(records.len());
    for r in records {
        let src = intern(&r.src, &mut ids);
        let dst = intern(&r.dst, &mut ids);
        let w = if options.count_mode { 1.0 } else { r.amount };
        edges.push((src, dst, w));
    }

    from_weighted_edges(ids, edges, options)
}

/// Builds a CSR graph from pre-indexed weighted edges over nodes
/// `0..ids.len()`, skipping record interning. Self-loop and zero-weight
/// filtering follow `options`; `count_mode` has no effect here since weights
/// are already resolved.
pub fn from_weighted_edges(
    ids: Vec<String>,
    mut edges: Vec<(u32, u32, f64)>,
    options: &BuildOptions,
) -> Result<SliceGraph> {
    if ids.is_empty() {
        return Err(Error::EmptyGraph);
    }
    edges.retain(|&(src, dst, w)| w != 0.0 && !(options.drop_self_loops && src == dst));

    // Stable sort keeps parallel edges in input order, so their weights are
    // summed in input order and the result is bit-reproducible.
    edges.sort_by_key(|&(src, dst, _)| (src, dst));

    let n = ids.len();
    let mut row_ptr = vec![0usize; n + 1];
    let mut col: Vec<u32> = Vec::new();
    let mut weight: Vec<f64> = Vec::new();
    let mut last: Option<(u32, u32)> = None;
    for &(src, dst, w) in &edges {
        assert!(
            (src as usize) < n && (dst as usize) < n,
            "edge ({src}, {dst}) outside 0..{n}"
        );
        if last == Some((src, dst)) {
            *weight.last_mut().unwrap() += w;
        } else {
            col.push(dst);
            weight.push(w);
            row_ptr[src as usize + 1] = col.len();
            last = Some((src, dst));
        }
    }
    // Rows without out-edges inherit the previous boundary; aggregated rows
    // must end at the last slot they touched.
    for i in 0..n {
        if row_ptr[i + 1] < row_ptr[i] {
            row_ptr[i + 1] = row_ptr[i];
        }
    }

    Ok(SliceGraph { ids, row_ptr, col, weight })
}

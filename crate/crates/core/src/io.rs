//! On-disk text formats for graphs, rank tables, and plot data.
//!
//! Everything is plain text. Floats are printed with the shortest
//! representation that parses back to the same value, so a write followed
//! by a read reproduces numbers exactly. File writers should go through
//! [`write_atomic`], which stages the content in a temporary file next to
//! the destination and renames it into place, so a crash or a concurrent
//! reader never sees a half-written file.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::google::RankResult;
use crate::graph::{from_weighted_edges, BuildOptions, SliceGraph};

/// First line of a graph dump.
pub const GRAPH_MAGIC: &str = "txrank-graph-v1";

const RANK_HEADER: &str = "node\tK\tP\tKstar\tPstar";

/// Writes a file atomically: the content is staged in a temporary file in
/// the destination directory and renamed over `path` once the closure
/// finishes. On error the destination keeps its previous content.
pub fn write_atomic<T>(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<T>) -> Result<T> {
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    let mut out = BufWriter::new(tmp);
    let value = write(&mut out)?;
    let tmp = out.into_inner().map_err(|e| e.into_error())?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(value)
}

/// Reads one line into `buf` without the trailing line break. Returns
/// false at end of input.
fn next_line<R: BufRead>(input: &mut R, buf: &mut String) -> Result<bool> {
    buf.clear();
    if input.read_line(buf)? == 0 {
        return Ok(false);
    }
    while buf.ends_with('\n') || buf.ends_with('\r') {
        buf.pop();
    }
    Ok(true)
}

/// Checks whether the file at `path` starts with the graph dump header.
pub fn is_graph_dump(path: &Path) -> Result<bool> {
    let file = std::fs::File::open(path)?;
    let mut input = std::io::BufReader::new(file);
    let mut buf = String::new();
    Ok(next_line(&mut input, &mut buf)? && buf == GRAPH_MAGIC)
}

/// Writes `graph` as a versioned text dump that [`read_graph`] restores
/// exactly: a header line, optional comments, node and edge counts, one
/// node id per line, then one `src dst weight` line per edge.
pub fn write_graph<W: Write>(mut out: W, comments: &[String], graph: &SliceGraph) -> Result<()> {
    writeln!(out, "{GRAPH_MAGIC}")?;
    write_comments(&mut out, comments)?;
    writeln!(out, "{}\t{}", graph.node_count(), graph.edge_count())?;
    for id in &graph.ids {
        if id.contains('\n') || id.contains('\r') {
            return Err(Error::BadFormat(format!("node id {id:?} contains a line break")));
        }
        writeln!(out, "{id}")?;
    }
    for u in 0..graph.node_count() as u32 {
        let (dsts, weights) = graph.out_edges(u);
        for (&dst, &w) in dsts.iter().zip(weights) {
            writeln!(out, "{u}\t{dst}\t{w}")?;
        }
    }
    Ok(())
}

/// Restores a graph written by [`write_graph`].
pub fn read_graph<R: BufRead>(mut input: R) -> Result<SliceGraph> {
    let mut buf = String::new();
    if !next_line(&mut input, &mut buf)? || buf != GRAPH_MAGIC {
        return Err(Error::BadFormat(format!("expected a `{GRAPH_MAGIC}` header line")));
    }
    // Comments sit between the header and the counts; node ids further down
    // may legitimately start with `#`, so they are not filtered there.
    loop {
        if !next_line(&mut input, &mut buf)? {
            return Err(Error::BadFormat("missing node and edge counts".into()));
        }
        if !buf.starts_with('#') {
            break;
        }
    }
    let mut parts = buf.split_whitespace();
    let counts = (parts.next(), parts.next(), parts.next());
    let (Some(n), Some(m), None) = counts else {
        return Err(Error::BadFormat("count line must hold exactly two numbers".into()));
    };
    let n: usize = n
        .parse()
        .map_err(|_| Error::BadFormat(format!("bad node count {n:?}")))?;
    let m: usize = m
        .parse()
        .map_err(|_| Error::BadFormat(format!("bad edge count {m:?}")))?;

    let mut ids = Vec::with_capacity(n);
    for i in 0..n {
        if !next_line(&mut input, &mut buf)? {
            return Err(Error::BadFormat(format!("file ends after {i} of {n} node ids")));
        }
        if buf.is_empty() {
            return Err(Error::MalformedLine { line: 3 + i, reason: "empty node id".into() });
        }
        ids.push(buf.clone());
    }

    let mut edges = Vec::with_capacity(m);
    for i in 0..m {
        if !next_line(&mut input, &mut buf)? {
            return Err(Error::BadFormat(format!("file ends after {i} of {m} edges")));
        }
        let line = 3 + n + i;
        let mut fields = buf.split_whitespace();
        let (Some(src), Some(dst), Some(w), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::MalformedLine {
                line,
                reason: "expected `src dst weight`".into(),
            });
        };
        let src: u32 = src.parse().map_err(|_| Error::MalformedLine {
            line,
            reason: format!("bad source index {src:?}"),
        })?;
        let dst: u32 = dst.parse().map_err(|_| Error::MalformedLine {
            line,
            reason: format!("bad destination index {dst:?}"),
        })?;
        if src as usize >= n || dst as usize >= n {
            return Err(Error::MalformedLine {
                line,
                reason: format!("edge {src} -> {dst} is out of range for {n} nodes"),
            });
        }
        let w: f64 = w.parse().map_err(|_| Error::MalformedLine {
            line,
            reason: format!("bad edge weight {w:?}"),
        })?;
        if !w.is_finite() || w <= 0.0 {
            return Err(Error::MalformedLine {
                line,
                reason: format!("edge weight must be a positive finite number, got {w}"),
            });
        }
        edges.push((src, dst, w));
    }
    while next_line(&mut input, &mut buf)? {
        if !buf.trim().is_empty() {
            return Err(Error::BadFormat("unexpected content after the edge block".into()));
        }
    }
    // The dump stores the graph verbatim, so nothing is dropped on reload.
    from_weighted_edges(ids, edges, &BuildOptions { drop_self_loops: false, count_mode: false })
}

/// One row of a rank table: a node with its position and score on the
/// incoming side (`k`, `p`) and on the outgoing side (`kstar`, `pstar`).
#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub id: String,
    pub k: u32,
    pub p: f64,
    pub kstar: u32,
    pub pstar: f64,
}

/// Pairs the two rank computations of one graph into table rows ordered by
/// `k`. Both results must cover the same node set as `ids`.
pub fn rank_rows(ids: &[String], pagerank: &RankResult, cheirank: &RankResult) -> Vec<RankRow> {
    assert_eq!(ids.len(), pagerank.probs.len());
    assert_eq!(ids.len(), cheirank.probs.len());
    let cheirank_pos = cheirank.positions();
    pagerank
        .order
        .iter()
        .enumerate()
        .map(|(i, &node)| RankRow {
            id: ids[node as usize].clone(),
            k: i as u32 + 1,
            p: pagerank.probs[node as usize],
            kstar: cheirank_pos[node as usize],
            pstar: cheirank.probs[node as usize],
        })
        .collect()
}

/// Writes `# `-prefixed comment lines; every table writer starts with this
/// so outputs carry the configuration that produced them.
pub fn write_comments<W: Write + ?Sized>(out: &mut W, comments: &[String]) -> Result<()> {
    for comment in comments {
        writeln!(out, "# {comment}")?;
    }
    Ok(())
}

/// Writes a rank table: comment lines, a header, then one tab-separated
/// row per node.
pub fn write_rank_table<W: Write>(mut out: W, comments: &[String], rows: &[RankRow]) -> Result<()> {
    write_comments(&mut out, comments)?;
    writeln!(out, "{RANK_HEADER}")?;
    for row in rows {
        if row.id.is_empty() || row.id.contains(['\t', '\n', '\r']) {
            return Err(Error::BadFormat(format!(
                "node id {:?} cannot be a tab-separated field",
                row.id
            )));
        }
        writeln!(out, "{}\t{}\t{}\t{}\t{}", row.id, row.k, row.p, row.kstar, row.pstar)?;
    }
    Ok(())
}

/// Reads a rank table, skipping comments and the header line. Rows with a
/// zero rank position or a non-positive score are rejected, since every
/// consumer assumes positive ranks.
pub fn read_rank_table<R: BufRead>(input: R) -> Result<Vec<RankRow>> {
    let mut rows: Vec<RankRow> = Vec::new();
    let mut seen_data = false;
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::MalformedLine {
                line: lineno,
                reason: format!("expected 5 tab-separated columns, got {}", fields.len()),
            });
        }
        let first = !seen_data;
        seen_data = true;
        let k = fields[1].parse::<u32>();
        if k.is_err() && first {
            // Header line.
            continue;
        }
        let bad = |what: &str, field: &str| Error::MalformedLine {
            line: lineno,
            reason: format!("bad {what} {field:?}"),
        };
        let k = k.map_err(|_| bad("rank position", fields[1]))?;
        let p: f64 = fields[2].parse().map_err(|_| bad("probability", fields[2]))?;
        let kstar: u32 = fields[3].parse().map_err(|_| bad("rank position", fields[3]))?;
        let pstar: f64 = fields[4].parse().map_err(|_| bad("probability", fields[4]))?;
        if k == 0 || kstar == 0 || !(p > 0.0) || !(pstar > 0.0) {
            return Err(Error::NonPositiveRank { node: rows.len() });
        }
        rows.push(RankRow { id: fields[0].to_string(), k, p, kstar, pstar });
    }
    Ok(rows)
}

/// Writes a two-column table with the given column labels.
pub fn write_curve<W: Write>(
    mut out: W,
    comments: &[String],
    labels: (&str, &str),
    points: &[(f64, f64)],
) -> Result<()> {
    write_comments(&mut out, comments)?;
    writeln!(out, "{}\t{}", labels.0, labels.1)?;
    for &(x, y) in points {
        writeln!(out, "{x}\t{y}")?;
    }
    Ok(())
}

/// Reads the first two numeric columns of a table, skipping comments and
/// an optional header line.
pub fn read_curve<R: BufRead>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut points = Vec::new();
    let mut seen_data = false;
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let mut fields = trimmed.split_whitespace();
        let (Some(x), Some(y)) = (fields.next(), fields.next()) else {
            return Err(Error::MalformedLine {
                line: lineno,
                reason: "expected at least two columns".into(),
            });
        };
        let parsed = (x.parse::<f64>(), y.parse::<f64>());
        match parsed {
            (Ok(x), Ok(y)) => {
                seen_data = true;
                points.push((x, y));
            }
            _ if !seen_data => {
                // Header line.
                seen_data = true;
            }
            _ => {
                return Err(Error::MalformedLine {
                    line: lineno,
                    reason: format!("bad numbers {x:?} {y:?}"),
                });
            }
        }
    }
    Ok(points)
}

/// Writes `values` as a dense table with `width` tab-separated columns per
/// line; grids and reduced matrices go through this. NaN cells print as
/// `NaN`, which plotting tools read as missing data.
pub fn write_rows<W: Write>(
    mut out: W,
    comments: &[String],
    width: usize,
    values: &[f64],
) -> Result<()> {
    assert!(width > 0);
    assert_eq!(values.len() % width, 0, "values must fill whole rows");
    write_comments(&mut out, comments)?;
    for row in values.chunks(width) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                write!(out, "\t")?;
            }
            write!(out, "{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes one id per line under the comment header.
pub fn write_id_list<W, I, S>(mut out: W, comments: &[String], ids: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    write_comments(&mut out, comments)?;
    for id in ids {
        let id = id.as_ref();
        if id.is_empty() || id.contains('\n') || id.contains('\r') {
            return Err(Error::BadFormat(format!("node id {id:?} cannot be a line of its own")));
        }
        writeln!(out, "{id}")?;
    }
    Ok(())
}

/// Reads an id list written by [`write_id_list`].
pub fn read_id_list<R: BufRead>(input: R) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for line in input.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        ids.push(trimmed.to_string());
    }
    Ok(ids)
}

//! Google-matrix analytics for time-sliced transaction networks.
//!
//! The pipeline: parse a timestamped edge list ([`ingest`]), slice it into
//! calendar quarters, build a weighted directed graph ([`graph`]), turn it
//! into a stochastic operator and compute PageRank and CheiRank by power
//! iteration ([`google`]), simulate balance-driven bankruptcy cascades
//! ([`contagion`]), compute the reduced Google matrix of a node subset
//! ([`regomax`]), and condense the results into plot-ready statistics
//! ([`analytics`]). [`synth`] generates reproducible scale-free test data and
//! [`io`] reads and writes every on-disk format.
//!
//! All numeric routines are deterministic: parallel reductions use a fixed
//! chunking scheme ([`reduction`]) so results are bitwise identical across
//! thread counts and reruns.

// Parameter guards are written as negated comparisons (`!(x > 0.0)`) on
// purpose: they reject NaN, which the suggested `partial_cmp` forms let
// through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod contagion;
pub mod error;
pub mod google;
pub mod graph;
pub mod ingest;
pub mod io;
pub mod reduction;
pub mod regomax;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{build_graph, BuildOptions, SliceGraph};
pub use ingest::{parse_transactions, read_transactions, slice_by_quarter, TransactionRecord};

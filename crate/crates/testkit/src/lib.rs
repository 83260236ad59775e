//! Dense reference implementations and shared fixtures for tests.
//!
//! Nothing here is used by the library or binary at runtime; it exists so
//! tests can compare the sparse, matrix-free implementations against slow,
//! explicit dense algebra on small graphs.

pub mod dense;
pub mod fixtures;

pub use dense::{
    dense_balance, dense_cascade, dense_google, dense_leading_eigenpair, dense_reduced,
    dense_stationary, rank_order, DenseReduced,
};
pub use fixtures::{cascade_graph, graph_from_edges, random_graph, symmetric_complement_graph};

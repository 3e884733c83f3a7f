//! Linear-Gaussian models on acyclic mixed graphs.
//!
//! The crate decides whether a chain graph is *strictly Gaussian causal*,
//! i.e. whether its model equals the observed marginal of some hidden-variable
//! DAG model. Positive answers come with a clique-digraph witness and an
//! explicit parameter realization; negative answers come with a chordless
//! bidirected cycle, a sign-flip matrix and numerically checked determinant
//! identities. The supporting machinery covers treks, trek systems,
//! d-connection on walks and covariance algebra.

pub mod causality;
pub mod error;
pub mod gaussian;
pub mod graph;
pub mod linalg;
pub mod random;
pub mod separation;
pub mod treks;

pub use error::{Error, Result};
pub use gaussian::{CovMatrix, ParamPoint};
pub use graph::{MixedGraph, RawGraph, Vertex, VertexSet};

use thiserror::Error;

/// Errors raised by graph, covariance, trek and causality operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("directed part of the graph contains a cycle")]
    NotAcyclic,
    #[error("graph has a semi-directed cycle and is not a chain graph")]
    NotChainGraph,
    #[error("operation requires a digraph but the graph has bidirected edges")]
    NotDigraph,
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("bad query: {0}")]
    BadQuery(String),
    #[error("parameter support violation: {0}")]
    SupportViolation(String),
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("conditioning block is numerically singular (condition number {condition:.3e})")]
    SingularBlock { condition: f64 },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("enumeration exceeded the cap of {limit} items")]
    CapExceeded { limit: usize },
    #[error("bidirected part is not decomposable")]
    NotDecomposable,
    #[error("realization did not converge (best residual {best_residual:.3e})")]
    ConvergenceFailure { best_residual: f64 },
    #[error("search failed: {0}")]
    SearchFailure(String),
    #[error("search budget of {budget} candidates exhausted")]
    BudgetExceeded { budget: u64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants mirror the failure classes of the operations: bad parameters,
/// construction defects, out-of-domain requests, insufficient coverage,
/// resource budgets, and numerical breakdowns.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameters (wrong ranges, malformed keys).
    #[error("configuration error: {0}")]
    Config(String),
    /// A constructed object violates its invariants (negative mass,
    /// non-monotone tail scale, ...).
    #[error("construction error: {0}")]
    Construction(String),
    /// The requested operation is undefined for these inputs.
    #[error("domain error: {0}")]
    Domain(String),
    /// A table or sequence does not cover the requested range.
    #[error("range error: {0}")]
    Range(String),
    /// The computation would exceed the configured memory budget.
    #[error("resource error: {0}")]
    Resource(String),
    /// A numerical method failed to reach its accuracy target.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

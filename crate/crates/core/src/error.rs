use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error(
        "matrix must be square and non-empty: got {rows} rows, expected {expected} entries per row"
    )]
    NotSquare { rows: usize, expected: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("{routine} did not converge for {label}")]
    NoConvergence {
        routine: &'static str,
        label: String,
    },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("value overflows f64: M^{exponent} with M = {base}")]
    Overflow { base: f64, exponent: u32 },

    #[error("config: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("enumeration length {max_len} exceeds limit {limit} (would visit about {estimate:.3e} signals)")]
    EnumerationTooLarge {
        max_len: usize,
        limit: usize,
        estimate: f64,
    },

    #[error("no certificate to check: verdict is {0}")]
    NotCertified(String),
}

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("covers contain a directed cycle through element {0}")]
    Cycle(usize),
    #[error("index {index} out of range for {len} elements")]
    Index { index: usize, len: usize },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("enumeration exceeded cap of {0} up-sets")]
    CapExceeded(usize),
    #[error("product of sizes {0} x {1} exceeds limit {2}")]
    Size(usize, usize, usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("mass mismatch: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("invalid weight {value} at index {index}")]
    BadWeight { index: usize, value: f64 },
    #[error("not a probability: mass {0}")]
    NotProbability(f64),
    #[error("row {row} is not a probability vector (sum {sum})")]
    BadRow { row: usize, sum: f64 },
    #[error("bad flow network: {0}")]
    BadNetwork(String),
    #[error("measure is not stochastically dominated by the target")]
    NotDominated,
    #[error("kernel is not monotone: row {0} is not dominated by row {1}")]
    NotMonotone(usize, usize),
    #[error("no m <= {0} with sigma(P^m) above threshold")]
    NoCertificate(usize),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("depth {0} exceeds cap {1}")]
    DepthExceeded(u32, u32),
    #[error("bad parameters: {0}")]
    BadParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the frame, uncertainty, conversion and quantization routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("matrix is rank deficient: pivot {pivot:e} below threshold {threshold:e} at row {row}")]
    RankDeficient { row: usize, pivot: f64, threshold: f64 },

    #[error("bernoulli row selection drew zero rows; retry with another seed")]
    EmptySelection,

    #[error("enumeration of {supports} supports exceeds the budget of {budget}")]
    BudgetExceeded { supports: u128, budget: u128 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid conversion config: {0}")]
    InvalidConfig(String),

    #[error("residual ratio {ratio:.6} at iteration {iteration} exceeds limit {limit:.6}; (eta, delta) do not hold for this frame")]
    NonConvergence { iteration: usize, ratio: f64, limit: f64 },

    #[error("truncation map violates its contract: {0}")]
    ContractViolation(String),

    #[error("quantizer code {code} out of range for {levels} levels")]
    CodeOutOfRange { code: u32, levels: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;

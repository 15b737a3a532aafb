use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("table mismatch: `{left}` vs `{right}`")]
    TableMismatch { left: String, right: String },

    #[error("invalid structure table: {0}")]
    InvalidTable(String),

    #[error("table codec, line {line}: {msg}")]
    Codec { line: usize, msg: String },

    #[error("expected {expected} coefficients, got {got}")]
    Length { expected: usize, got: usize },

    #[error("zero element")]
    ZeroElement,

    #[error("branch singularity")]
    BranchSingularity,

    #[error("non-unit argument (norm {0})")]
    NonUnit(f64),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("not an equivalent algebra: {0}")]
    NotEquivalentAlgebra(String),

    #[error("requires an octonion table (dim 8), got dim {0}")]
    NotOctonion(usize),

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("pole at x = {0}")]
    Pole(f64),

    #[error("pole on grid at x = {0}")]
    PoleOnGrid(f64),

    #[error("logarithm zero: |x - a| = 1")]
    LogarithmZero,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("config: {0}")]
    Config(String),
}

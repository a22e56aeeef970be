use thiserror::Error;

/// Errors raised by the library. The CLI maps these onto process exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("state {value} outside the open domain (0, {upper})")]
    Domain { value: f64, upper: f64 },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("grid of {requested} steps exceeds the budget of {budget} steps; use streaming increments")]
    Capacity { requested: u64, budget: u64 },

    #[error("coarse exponent {coarse} is finer than grid exponent {fine}")]
    Exponent { coarse: u32, fine: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

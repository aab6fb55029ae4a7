use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no convergence after {iterations} sweeps (last increment {last_increment:e})")]
    NoConvergence {
        iterations: usize,
        last_increment: f64,
    },

    #[error("fixed-point residual {residual:e} exceeds the accepted bound {bound:e}")]
    ResidualTooLarge { residual: f64, bound: f64 },

    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical kernels, solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular Green function: points coincide (distance {distance:e})")]
    Singular { distance: f64 },

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The Foldy-Lax system `I - w^2 G V` is numerically singular.
    #[error("resonance: reciprocal condition {rcond:e} below threshold")]
    Resonance { rcond: f64 },

    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(String),

    #[error("rank-deficient least-squares system")]
    RankDeficient,

    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("infeasible: minimum residual {residual:e} exceeds tolerance {tol:e}")]
    Infeasible { residual: f64, tol: f64 },

    #[error("no support of size <= {s_max} reaches the residual tolerance")]
    NoFeasibleSupport { s_max: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by bad input or configuration rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::Parse { .. }
                | Error::Config(_)
                | Error::Io(_)
                | Error::Csv(_)
                | Error::IndexOutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

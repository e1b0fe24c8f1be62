use thiserror::Error;

/// Coarse classification used by the command-line driver to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Numerical,
    Input,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector is not a unit vector (|v| = {norm})")]
    NonUnitVector { norm: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("coincident positions: {0}")]
    Coincident(String),

    #[error(
        "eigensolver did not converge after {iterations} iterations (best residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("quadrature did not converge (estimated error {estimate:e}, tolerance {tolerance:e})")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("resolvent is singular: {0}")]
    SingularResolvent(String),

    #[error("no sign change in bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("rank-deficient design matrix: {0}")]
    RankDeficient(String),

    #[error("basis is not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NotConverged { .. }
            | Error::Quadrature { .. }
            | Error::SingularResolvent(_)
            | Error::NoSignChange { .. }
            | Error::RankDeficient(_) => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
            Error::NonUnitVector { .. }
            | Error::InvalidInput(_)
            | Error::InvalidGeometry(_)
            | Error::Coincident(_)
            | Error::NotOrthonormal { .. }
            | Error::Parse { .. }
            | Error::Csv(_)
            | Error::Json(_) => ErrorKind::Input,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("order must be ≥ 1")]
    EmptyOrder,
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not biunitary (modulus deviation {modulus:e}, unitarity residual {unitarity:e})")]
    NotBiunitary { modulus: f64, unitarity: f64 },
    #[error("{0} is not prime")]
    NotPrime(usize),
    #[error("parameter is not unimodular (|z| = {0})")]
    NotUnimodular(f64),
    #[error("no unimodular solution found (best residual {residual:e})")]
    NoSolution { residual: f64 },
    #[error("order {n} exceeds the limit {limit} for this operation")]
    TooLarge { n: usize, limit: usize },
    #[error("witness is not certified (residual {residual:e} > tolerance {tol:e})")]
    Uncertified { residual: f64, tol: f64 },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid projection mask: {0}")]
    InvalidMask(String),
    #[error("search did not converge (objective {objective:e})")]
    NotConverged { objective: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("integrator failure at x = {x}: {message}")]
    Integrator { x: f64, message: String },
    #[error("z = {z} is a pole of m on edge {edge} (|c| = {c_abs:e})")]
    Pole {
        z: Complex64,
        edge: usize,
        c_abs: f64,
    },
    #[error("z = {0} is a spectral point")]
    SpectralPoint(Complex64),
    #[error("tau = 0 is the decoupled operator; m_tau is undefined")]
    TauZero,
    #[error("degenerate pair: z equals conj(zeta)")]
    DegeneratePair,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Validation(_) | Error::Dimension(_) | Error::TauZero
        )
    }
}

use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix must be square with dimension >= 1, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:.3e} exceeds tolerance {tolerance:.3e}")]
    NotHermitian { max_asymmetry: f64, tolerance: f64 },

    #[error("real-field matrix carries imaginary parts up to {max_imag:.3e}")]
    ImaginaryInRealField { max_imag: f64 },

    #[error("Hermitian eigensolver did not converge within {max_iterations} iterations")]
    EigenNonConvergence { max_iterations: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("eigenvalue {value:.6e} at index {index} is below the PSD floor {floor:.6e}")]
    NotPositiveSemidefinite { index: usize, value: f64, floor: f64 },

    #[error("diagonal entry {index} must be positive, got {value:.6e}")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("invalid spectrum model: {0}")]
    InvalidSpectrum(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("Student-t entries need df >= 17 for a finite 16th absolute moment, got df = {df}")]
    HeavyTail { df: f64 },

    #[error("sample eigenvalues must be ascending (violated at index {index})")]
    NotAscending { index: usize },

    #[error("aspect ratio p/n = {p}/{n} lies inside the excluded band (0.95, 1.05)")]
    RatioNearOne { p: usize, n: usize },

    #[error("zero sample eigenvalue at index {index} falls inside the kernel summation range")]
    ZeroBandwidth { index: usize },

    #[error("shrinkage denominator vanished at index {index}")]
    ZeroDenominator { index: usize },

    #[error("zero sample eigenvalue at index {index} needs p > n (p = {p}, n = {n})")]
    ZeroEigenvalueBranch { index: usize, p: usize, n: usize },

    #[error("non-finite shrinkage value at index {index}")]
    NonFinite { index: usize },

    #[error("quadratic form mu' R^-1 mu = {value:.6e} is not positive")]
    DegenerateQuadForm { value: f64 },
}

impl Error {
    /// True when the failure is numerical rather than a problem with the
    /// caller's data or parameters.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenNonConvergence { .. }
                | Error::ZeroBandwidth { .. }
                | Error::ZeroDenominator { .. }
                | Error::NonFinite { .. }
                | Error::DegenerateQuadForm { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;

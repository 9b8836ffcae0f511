use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("complex dimension must satisfy n >= 2, got {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid basis element: {0}")]
    InvalidBasis(String),

    #[error("matrix is not in su(n,1): residual {residual:.3e} exceeds {tolerance:.1e}")]
    NotInAlgebra { residual: f64, tolerance: f64 },

    #[error("matrix is not in SU(n,1): residual {residual:.3e} exceeds {tolerance:.1e}")]
    NotInGroup { residual: f64, tolerance: f64 },

    #[error("point is not on the sphere bundle: residual {residual:.3e}")]
    NotOnBundle { residual: f64 },

    #[error("parameter constraint violated: {0}")]
    Parameter(String),

    #[error("chart radius exceeded: |c| = {norm:.4} > {radius:.4}")]
    ChartRadius { norm: f64, radius: f64 },

    #[error("numerically degenerate system (condition number {condition:.3e})")]
    Degenerate { condition: f64 },

    #[error("iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("quadrature under-resolved: spacing {spacing:.3e} exceeds h/8 = {limit:.3e}")]
    UnderResolved { spacing: f64, limit: f64 },

    #[error("problem size {size} exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("map is not strictly monotone near x = {at}")]
    NotMonotone { at: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
}

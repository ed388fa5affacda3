use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be 2 or 3, got {0}")]
    InvalidDim(usize),
    #[error("cells per axis must be at least 4, got {0}")]
    InvalidResolution(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("operation requires a unit-cube grid")]
    NotCubeGrid,
    #[error("boundary data disagree at node {node}: {first} vs {second}")]
    InconsistentBoundaryData { node: usize, first: String, second: String },
    #[error("conductivity must be real and bounded below by a positive constant (min {min}, max |imag| {max_imag})")]
    NotPositive { min: f64, max_imag: f64 },
    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:e}, target {tolerance:e})")]
    NoConvergence { iterations: usize, residual: f64, tolerance: f64 },
    #[error("fixed-point iteration does not contract ({reason}) after {iterations} iterations, last update {last_update:e}")]
    NonContraction { iterations: usize, last_update: f64, reason: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("frequency vector is not null: |rho.rho| = {0:e}")]
    NotNull(f64),
    #[error("samples are inconsistent: {0}")]
    InconsistentSamples(String),
    #[error("axis indices must satisfy s <= t < 3, got ({0}, {1})")]
    BadIndices(usize, usize),
    #[error("frame weights must satisfy alpha^2 + beta^2 = 1 with alpha, beta > 0 (got {0}, {1})")]
    NotNormalized(f64, f64),
    #[error("quadrature missed its accuracy target: estimated relative error {estimate:e} > {target:e}")]
    QuadratureBudget { estimate: f64, target: f64 },
    #[error("extrapolation has no stable fit: {0}")]
    NonMonotone(String),
    #[error("recovery system is ill conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("missing probe measurement for frame ({s}, {t}) and component {j}")]
    MissingProbe { s: usize, t: usize, j: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

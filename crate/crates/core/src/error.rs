use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: String,
        found: String,
    },

    #[error("{context}: matrix must be square, got {rows}x{cols}")]
    NotSquare {
        context: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("{context}: spectral radius {radius} is not below 1")]
    Unstable { context: &'static str, radius: f64 },

    #[error("cost is undefined: closed-loop spectral radius {radius} is not below 1 - 1e-9")]
    UndefinedCost { radius: f64 },

    #[error("Sylvester equation is not uniquely solvable: min |lambda*mu - 1| = {margin:e}")]
    NotUniquelySolvable { margin: f64 },

    #[error("{equation} did not converge within {iterations} iterations (last relative change {change:e})")]
    NoConvergence {
        equation: &'static str,
        iterations: usize,
        change: f64,
    },

    #[error("{what} is singular or not positive definite")]
    Singular { what: &'static str },

    #[error("{what} is ill-conditioned (condition number {condition:e})")]
    IllConditioned { what: &'static str, condition: f64 },

    #[error("{equation}: relative residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual {
        equation: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("eigenvalue computation did not converge for {context}")]
    Eigen { context: &'static str },

    #[error("iterate left the stabilizing set even at minimum damping {damping:e} (iteration {iteration})")]
    DampingExhausted { iteration: usize, damping: f64 },

    #[error("finite-difference perturbation of {gain}[{row},{col}] leaves the stabilizing set")]
    PerturbationUnstable {
        gain: &'static str,
        row: usize,
        col: usize,
    },

    #[error("no admissible samples found within the local radii ({attempts} attempts)")]
    NoAdmissibleSamples { attempts: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dims(rows: usize, cols: usize) -> String {
    format!("{rows}x{cols}")
}

use alloc::string::String;

/// Errors raised by the numerical routines.
///
/// Newton failures along a branch are not errors; see [`crate::solver::NewtonOutcome`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field does not live on this grid: {0}")]
    GridMismatch(String),
    #[error("non-finite value in field at node {0}")]
    NonFinite(usize),
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unknown identifier `{name}` at column {column}")]
    UnknownIdentifier { name: String, column: usize },
    #[error("variable `{0}` is not bound at this point")]
    MissingVariable(char),
    #[error("variable `{var}` is not available on {kind} grids")]
    IllegalVariable { var: char, kind: &'static str },
    #[error("domain error in `{node}`: {message}")]
    Domain { node: String, message: &'static str },
    #[error("mesh Péclet number {peclet:.4} exceeds 1 on axis {axis}; refine m or reduce |c|")]
    Peclet { peclet: f64, axis: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular matrix: zero pivot in column {0}")]
    Singular(usize),
    #[error("eigensolver did not converge in {iterations} iterations (residual {residual:.3e})")]
    EigenNoConvergence { iterations: usize, residual: f64 },
    #[error("eigenvector is not strictly positive (min {min:.3e} at node {node}); discretization too coarse")]
    NotPositive { min: f64, node: usize },
    #[error("branch not monotone between λ = {lambda_prev} and λ = {lambda_next} at node {node}")]
    Monotonicity {
        lambda_prev: f64,
        lambda_next: f64,
        node: usize,
    },
    #[error("pull-in bracket not reached within {0} Newton solves")]
    BracketCap(usize),
    #[error("branch too short: {0} points, need at least 5")]
    BranchTooShort(usize),
}

pub type Result<T> = core::result::Result<T, Error>;

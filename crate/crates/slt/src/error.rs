//! Crate-wide error types.

use thiserror::Error;

/// Errors from parsing or evaluating potential/forcing expressions.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("domain error at x = {x}: {message}")]
    Domain { x: f64, message: String },
}

/// Errors from problem setup and the numerical pipeline.
#[derive(Error, Debug)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("step size underflow at x = {x}")]
    StepSizeUnderflow { x: f64 },
    #[error("non-finite state at x = {x}")]
    NonFiniteState { x: f64 },
    #[error("quadrature did not converge on [{a}, {b}]")]
    QuadratureNonConvergence { a: f64, b: f64 },
    #[error(
        "characteristic function consistency failure at lambda = {lambda}: \
         gamma1*gamma2*w1 = {w_left} vs delta1*delta2*w2 = {w_right}"
    )]
    CharFnInconsistent {
        lambda: String,
        w_left: String,
        w_right: String,
    },
    #[error("lambda = {lambda} is numerically an eigenvalue (resolvent pole, |w| = {w_abs:.3e})")]
    ResolventPole { lambda: String, w_abs: f64 },
    #[error("bracket [{lo}, {hi}] does not change sign")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("zero of w at lambda = {lambda} appears non-simple (|w'| = {w_prime_abs:.3e})")]
    NonSimpleZero { lambda: f64, w_prime_abs: f64 },
    #[error("coupling residual {residual:.3e} exceeds tolerance at lambda = {lambda}")]
    CouplingResidual { lambda: f64, residual: f64 },
    #[error("squared norm {norm_sq:.6e} is not positive at lambda = {lambda}; the sign class must be positive for a positive-definite inner product")]
    NormNotPositive { lambda: f64, norm_sq: f64 },
    #[error("eigenvalue search requires a positive sign class (gamma1*gamma2*delta1*delta2 > 0); pass the override to scan anyway")]
    NotSelfAdjoint,
    #[error("finite-difference oracle requires a positive sign class; use the characteristic-function trace instead")]
    OracleSignClass,
    #[error("factorization failure: {0}")]
    Factorization(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

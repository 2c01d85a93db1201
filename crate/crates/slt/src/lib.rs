//! Numerical spectral analysis of Sturm-Liouville problems with one
//! interior transmission point and an eigenparameter-dependent boundary
//! condition.
//!
//! The equation `-u'' + q(x) u = lambda u` is posed on `[a, c) ∪ (c, b]`
//! with a fixed condition at `a`, an affine-in-lambda condition at `b`,
//! and jump (transmission) conditions linking the one-sided limits at `c`.
//! The crate builds the two fundamental solutions by shooting from each
//! endpoint, locates eigenvalues as zeros of the characteristic function,
//! and carries out the downstream analysis in the weighted two-component
//! inner product that makes the problem self-adjoint: Green's function,
//! resolvent application, eigenfunction expansions, and an independent
//! finite-difference oracle for cross-validation.
//!
//! ```
//! use slt::problem::ProblemSpec;
//! use slt::spectrum::{find_eigenvalues, EigenSearch};
//!
//! let spec = ProblemSpec::new(
//!     0.0, 0.5, 1.0, "0", "0",
//!     (1.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0), (1.0, 1.0),
//! ).unwrap();
//! let eigs = find_eigenvalues(&spec, &EigenSearch::new(-1.0, 50.0, 3)).unwrap();
//! assert_eq!(eigs.len(), 3);
//! assert!((eigs[0].lambda - 0.7401738843) < 1e-6);
//! ```
//!
//! See the `examples/` directory for one runnable program per capability
//! (characteristic-function traces, eigenvalue tables, Green's function
//! sampling, resolvent bounds, expansions, and the discrete oracle).

pub mod error;
pub mod expansion;
pub mod expr;
pub mod ode;
pub mod oracle;
pub mod problem;
pub mod quadrature;
pub mod resolvent;
pub mod shooting;
pub mod spectrum;

pub mod cli;

pub use error::{Error, ExprError, Result};
pub use problem::{ProblemSpec, Side, ValidationReport};

/// Formats a float at 17 significant digits, locale-independent; the fixed
/// width keeps emitted CSV byte-stable across runs.
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

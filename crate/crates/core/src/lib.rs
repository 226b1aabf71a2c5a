//! Numerical engine for weak para-f-structures on pseudo-Riemannian charts.
//!
//! Fields are pure functions on a single global coordinate chart. Identities
//! are checked pointwise at seeded sample points and reported as residuals.
//!
//! The exterior derivative carries the `1/(k+1)` normalization, so for a
//! 1-form `dη(X,Y) = ½{X η(Y) − Y η(X) − η([X,Y])}`.

pub mod bundle_file;
pub mod calculus;
pub mod catalog;
pub mod chart;
pub mod check;
pub mod classify;
pub mod cli;
pub mod error;
pub mod expr;
pub mod identities;
pub mod jet;
pub mod report;
pub mod scalar;
pub mod structure;

pub use chart::{Chart, DerivativeStrategy, DiffCtx, Field, MetricField, Point, Signature, TensorField, Valence};
pub use error::{Error, Result};
pub use expr::Expr;
pub use scalar::{Dual, Scalar};

//! Reparametrization of analytic curves by generalized arc-length.
//!
//! The pieces, bottom up:
//!
//! - [`series`]: truncated complex power series (arithmetic, composition,
//!   reversion, square roots, primitives, radius estimates);
//! - [`curve`]: analytic curves as closed forms and series charts, jets;
//! - [`functionals`]: the speeds `F` (Euclidean, spherical, hyperbolic, custom);
//! - [`reparam`]: the length map `S`, its inverse and `δ = γ ∘ S⁻¹`;
//! - [`sphere`]: limit-set classification and continuation through `∞`;
//! - [`cli`]: the command-line front end.

// negated comparisons are deliberate: NaN must fail them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod curve;
pub mod error;
pub mod functionals;
pub mod quad;
pub mod reparam;
pub mod series;
pub mod sphere;

pub use curve::{AnalyticCurve, Catalog, ClosedForm, Interval, Jet, VectorCurve};
pub use error::{Error, Result};
pub use functionals::JetFunctional;
pub use series::TruncatedSeries;

//! Conformal invariants of Riemannian metrics given in closed form.
//!
//! The pipeline lifts a metric document to Taylor jets at sample points,
//! builds the curvature stack, the Weyl operator on 2-forms and the kernel
//! bundle `E`, and from there the vector field `𝕋` together with the Cotton,
//! conformal Ricci and Bach type tensors built from it. [`conformal_lab`]
//! checks how all of these transform under `g ↦ e^{-2φ} g`.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, which the tolerances of the pipeline assume.

pub mod catalog;
pub mod conformal_lab;
pub mod curvature;
pub mod dsl;
pub mod error;
pub mod invariants;
pub mod jets;
pub mod linalg;
pub mod sampling;
pub mod scalar;
pub mod weyl_algebra;

pub use dsl::{
    eval_metric_at, parse_expression, parse_metric_document, ConformalFactorSpec, Expr,
    MetricSpec,
};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Jet = jets::Jet<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type JetMatrix = linalg::JetMatrix<f64>;

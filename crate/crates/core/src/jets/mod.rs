//! Truncated multivariate Taylor arithmetic (total degree at most four).
//!
//! A [`Jet`] carries every partial derivative of a scalar quantity up to its
//! order at one base point. Arithmetic propagates them exactly, so the
//! curvature stack can differentiate closed-form metrics without symbolic
//! algebra or finite differences: each derivative consumes one order.

mod elementary;
mod jet;
mod layout;

pub use jet::Jet;
pub use layout::{Layout, MAX_DIM, MAX_ORDER};

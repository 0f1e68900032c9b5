//! p-Laplacian principal eigenvalues, Cheeger constants and inradii of
//! planar convex domains and balls, the scale-free ratio
//! `F_{p,q} = lambda_p^{1/p} / lambda_q^{1/q}`, and the inequalities around it.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cheeger;
pub mod eigensolver;
pub mod error;
pub mod experiments;
pub mod functional;
pub mod geometry;
pub mod plot;
pub mod shapeopt;
pub mod spectral_exact;

pub use error::{Error, Result};

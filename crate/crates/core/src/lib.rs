//! Numerical laboratory for the two-pole ℂP¹ integrable sigma-model:
//! contour-integral geometry, lattice dynamics, Lax connections, holonomy
//! charges and the one-loop β-function check.

// index loops mirror the tensor notation; negated comparisons reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod lie;
pub mod curve;
pub mod geometry;
pub mod dynamics;
pub mod lax;
pub mod betaflow;

pub use error::{Error, Result};
pub use linalg::C64;

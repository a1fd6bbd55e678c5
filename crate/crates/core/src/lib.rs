//! Anisotropic simplex geometry and local Raviart-Thomas interpolation.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod experiments;
pub mod fields;
pub mod geometry;
pub mod mesh_io;
pub mod poly;
pub mod quadrature;
pub mod rt_space;
mod serde_util;
pub mod transforms;

pub use error::{Error, Result};

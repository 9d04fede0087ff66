//! Numerical verification of Fourier-side bounds for variable anisotropic
//! Hardy spaces.
//!
//! The building blocks are an expansive [`Dilation`] with its ellipsoid
//! family, [`ExponentFunction`]s with their Luxemburg norms, sampled
//! functions on uniform grids, and anisotropic atoms. The [`analysis`]
//! module evaluates the Fourier-side inequalities on scan grids and
//! [`harness`] drives whole verification runs from a JSON config.

// `!(a < b)` guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod dilation;
pub mod sampling;
pub mod varexp;
pub mod atoms;
pub mod analysis;
pub mod harness;

pub use dilation::Dilation;
pub use error::{Error, Result};
pub use varexp::ExponentFunction;

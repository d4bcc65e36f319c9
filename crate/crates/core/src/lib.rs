//! Numerical laboratory for the Dikin process and the modified primal-dual
//! affine scaling method it is derived from.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod afs;
pub mod dikin;
pub mod error;
pub mod io;
pub mod linalg;
pub mod orbits;
pub mod stability;
pub mod svg;
pub mod tol;

pub use error::{Error, Result};

//! Forward model of the magnetic wake a vessel leaves in finite-depth sea,
//! and a residual network that estimates vessel parameters from an airborne
//! magnetometer track.

// `!(a < b)` is the NaN-rejecting form used for every domain check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Small fixed-size linear algebra reads better with explicit indices.
#![allow(clippy::needless_range_loop)]

mod codec;
pub mod dataset;
pub mod emfield;
pub mod error;
pub mod hydro;
pub mod neural;
pub mod quadrature;
pub mod seed;
pub mod train;
pub mod wake;

pub use error::{Error, Result};

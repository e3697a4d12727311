//! State-resolved optical trapping potentials for cesium atoms in the
//! evanescent field of a subwavelength-diameter optical fiber.

// negated comparisons are used on purpose so that NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angular;
pub mod atom;
pub mod config;
pub mod error;
pub mod light_shift;
pub mod output;
pub mod polarizability;
pub mod special;
pub mod surface;
pub mod trap;
pub mod units;
pub mod waveguide;

pub use error::{Error, Result};

//! Numerical toolkit for Gaussian harmonic analysis.
//!
//! The crate is organised bottom-up:
//!
//! * [`measure`]: the Gaussian measure, the admissibility function `m`, and
//!   γ-measures of balls and boxes with explicit error control.
//! * [`geometry`]: the Gaussian dyadic cube system, layers, admissibility
//!   transfer constants and admissible cones.
//! * [`covering`]: Whitney decompositions and the constructive admissible
//!   covering of level-set neighbourhoods.
//! * [`semigroup`]: closed-form test functions and the Ornstein–Uhlenbeck
//!   semigroup evaluated through the Mehler representation.
//! * [`operators`]: the maximal functions `M*` and `T*`, the conical square
//!   function `S`, distribution functions and `L¹(γ)` norms.
//! * [`verify`]: the inequality harness producing [`verify::VerificationReport`]s.
//!
//! Everything is deterministic given a seed; dimension is capped at 3.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covering;
pub mod error;
pub mod geometry;
pub mod io;
pub mod measure;
pub mod operators;
pub mod quadrature;
pub mod semigroup;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use measure::{admissibility_m, gaussian_density, Ball, MeasureEstimate, MeasureMethod, Point};
pub use semigroup::TestFunction;

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

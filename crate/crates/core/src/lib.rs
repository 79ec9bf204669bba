//! Boundary element solver for time-harmonic electromagnetic scattering by a perfect
//! conductor, with second-order shape-derivative corrections for the mean scattered
//! field under random normal boundary perturbations.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod geometry;

pub use error::{Error, Result};
pub use num_complex::Complex64 as c64;
pub mod bem;
pub mod experiment;
pub mod linalg;
pub mod mie;
pub mod quadrature;
pub mod space;
pub mod uq;

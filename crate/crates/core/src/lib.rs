//! Spectral solvers and diagnostics for the two-dimensional attractive
//! fractional Gross-Pitaevskii equation
//!
//! ```text
//! (-Delta)^s u + V u - u^3 = mu u,   integral(u^2) = N
//! ```
//!
//! on a periodic box.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod constrained;
pub mod dilation;
pub mod error;
pub mod field_io;
pub mod functionals;
pub mod gamma;
pub mod grid;
pub mod groundstate;
pub mod linalg;
pub mod potential;
pub mod rearrange;
pub mod sampling;
pub mod spectral;
pub mod thresholds;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Grid2D, ScalarField};
pub use spectral::{frac_laplacian, frac_seminorm_sq, FractionalSymbol};

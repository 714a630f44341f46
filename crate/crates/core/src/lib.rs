//! Numerical realization of the unified transform solution of the
//! higher-order nonlinear Schrödinger equation on the half-line,
//!
//! ```text
//! i u_t + i β u_xxx + α u_xx + i δ u_x = κ |u|^p u,   x > 0, 0 < t < T,
//! u(x, 0) = u0(x),   u(0, t) = g(t),
//! ```
//!
//! together with the whole-line propagators, a finite-difference reference
//! solver, and the norm machinery used to check the linear estimates.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cauchy;
pub mod cli;
pub mod config;
pub mod contours;
pub mod error;
pub mod grid;
pub mod ibvp;
pub mod nonlinear;
pub mod norms;
pub mod quad;
pub mod reference;
pub mod spectral;
pub mod transforms;

pub use error::{Error, Result};
pub use grid::{GridFunction, GridKind, SpaceTimeField};
pub use spectral::{PdeParams, SpectralClassification};

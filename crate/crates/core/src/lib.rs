//! Limiting joint moments of characteristic polynomials of the circular
//! Jacobi and Laguerre beta-ensembles.
//!
//! The crate has three layers that cross-check each other:
//!
//! * [`limits`] evaluates the explicit partition-sum and special-function
//!   formulas for the limiting (and some finite-N) moments.
//! * [`oracle`] computes deterministic quadrature ground truth for small N.
//! * [`ensembles`] and [`mc`] sample the underlying ensembles and the
//!   interlacing-array corner process and estimate the same quantities by
//!   Monte Carlo.

pub mod ensembles;
pub mod limits;
pub mod mc;
pub mod oracle;
pub mod partitions;
pub mod quad;
pub mod specfun;

mod error;

pub use error::{Error, Result};

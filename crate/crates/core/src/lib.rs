//! Multivariate Gaussian random fields: cross-covariance models, empirical
//! estimators, simulation, likelihood, co-kriging and maximum-likelihood
//! fitting.
//!
//! Joint vectors use site-major, variable-minor ordering throughout: entry
//! `k * p + i` is variable `i` at site `k`.

pub mod cokrige;
pub mod crosscov;
pub mod design;
pub mod empirical;
pub mod error;
pub mod estimate;
pub mod gaussian;
pub mod kernels;
pub mod linalg;
pub mod spacetime;

pub use crosscov::{CrossCovModel, Family};
pub use design::{FieldSample, SpatialDesign};
pub use error::{Error, Result};

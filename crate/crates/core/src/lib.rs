//! Generalized axes for non-linear dimensionality reduction.
//!
//! Projections (PCA, Isomap, LLE, t-SNE) are written once over
//! [`autodiff::Scalar`] and run both over plain reals and over dual numbers.
//! The dual runs yield how each projected point moves under an
//! infinitesimal perturbation of its input; a scalar field fitted to those
//! motions gives isolines that read like the grid lines of a scatterplot.

pub mod autodiff;
pub mod config;
pub mod discovery;
pub mod error;
pub mod extraction;
pub mod field;
pub mod io;
pub mod linalg;
pub mod parallel;
pub mod pipeline;
pub mod projections;
pub mod synthetic;

pub use autodiff::{Dual, Scalar};
pub use error::{Error, Result};

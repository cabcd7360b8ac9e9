//! Texture analysis via anisotropic cartoon/texture decomposition.
//!
//! An image `f` is split into a smooth cartoon `u` (Perona-Malik diffusion,
//! or a linear operator baseline) and the residual texture `v = f - u`.
//! Gabor filter-bank energies taken from `v` feed a KNN benchmark that
//! measures how much the decomposition helps classification.
//!
//! Modules mirror the processing stages: [`img`] for representation and
//! I/O, [`diffusion`] and [`operators`] for the decomposers, [`gabor`] for
//! filtering and features, [`datasets`] for ingestion and synthesis,
//! [`pipeline`] for the whole-dataset flow, and [`classify`] for KNN
//! cross-validation.

pub mod classify;
pub mod datasets;
pub mod diffusion;
mod fft2d;
pub mod gabor;
pub mod img;
pub mod operators;
pub mod pipeline;

mod error;

pub use error::{Error, Result};

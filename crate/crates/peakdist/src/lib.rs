//! Exact peak height distributions for smooth unit-variance Gaussian random
//! fields: nonstationary 1D processes, quadrant-symmetric planar fields,
//! cosine fields and anisotropic fields, together with a simulate-and-count
//! validation harness and a CLI front end.

pub mod cli;
pub mod cosine;
pub mod error;
pub mod numerics;
pub mod planar;
pub mod process1d;
pub mod rmt;
pub mod validate;

pub use error::{Error, Result};

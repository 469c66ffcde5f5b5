//! Independent simulate-and-count-peaks oracle: draw exact Gaussian fields on
//! grids, extract discrete local maxima, and compare empirical peak-height
//! exceedance against the formula modules by Kolmogorov-Smirnov distance.

mod cov;
mod ks;
mod peaks;
mod sim1d;
mod sim2d;
mod sim_cosine;

pub use cov::{spectral_moments_1d, CovarianceHandle1D};
pub use ks::{ks_distance, EmpiricalCdf};
pub use peaks::{find_peaks_1d, find_peaks_2d, write_peaks_csv, PeakSample};
pub use sim1d::{simulate_1d, GaussianSampler1D, Grid1D};
pub use sim2d::{simulate_stationary_2d, Field2D, Grid2D, StationaryCov2D, StationarySampler2D};
pub use sim_cosine::{simulate_cosine_1d, simulate_cosine_2d};

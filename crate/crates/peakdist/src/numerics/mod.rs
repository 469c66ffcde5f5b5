//! Shared numerics: standard/bivariate normal functions, deterministic
//! adaptive quadrature and reproducible normal random streams.

mod normal;
mod quad;
mod stream;

pub use normal::{
    bivariate_normal_pdf, std_normal_cdf, std_normal_pdf, std_normal_tail, BivariateCorrelation,
};
pub use quad::{expect_bivariate, integrate_1d, QuadConfig, QuadResult};
pub use stream::{EstimateWithError, RandomStream};

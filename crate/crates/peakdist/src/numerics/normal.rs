use crate::error::{Error, Result};
use libm::erfc;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invariant(format!("{name} must be finite, got {x}")))
    }
}

/// Standard normal density phi(x).
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / TWO_PI.sqrt()
}

/// Standard normal cdf Phi(x), via the complementary error function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Upper tail Psi(x) = 1 - Phi(x).
///
/// Computed through erfc directly rather than 1 - Phi(x), so the deep tail
/// (x > 5) keeps full relative accuracy.
pub fn std_normal_tail(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Correlation of a standard bivariate normal pair, restricted to the open
/// interval (-1, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateCorrelation(f64);

impl BivariateCorrelation {
    pub fn new(rho: f64) -> Result<Self> {
        check_finite("rho", rho)?;
        if rho.abs() >= 1.0 {
            return Err(Error::invariant(format!(
                "|rho| < 1 required (degenerate bivariate law), got rho = {rho}"
            )));
        }
        Ok(BivariateCorrelation(rho))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// 1 - rho^2 as (1 - rho)(1 + rho), stable near |rho| = 1.
    pub fn one_minus_sq(self) -> f64 {
        (1.0 - self.0) * (1.0 + self.0)
    }
}

/// Joint density of a standard bivariate normal pair with correlation rho.
pub fn bivariate_normal_pdf(x: f64, y: f64, rho: BivariateCorrelation) -> f64 {
    let r = rho.get();
    let s = rho.one_minus_sq();
    (-(x * x - 2.0 * r * x * y + y * y) / (2.0 * s)).exp() / (TWO_PI * s.sqrt())
}

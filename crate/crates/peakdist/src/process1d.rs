//! Peak height distribution of smooth unit-variance 1D Gaussian processes.
//!
//! The nonstationary tail and density depend on the process only through the
//! conditional correlation rho(t) of (X(t), X''(t)) given X'(t) = 0. The
//! stationary case is the one-parameter kappa family; the two agree under
//! kappa = -sqrt(3) rho.

use crate::error::{Error, Result};
use crate::numerics::{std_normal_cdf, std_normal_pdf, std_normal_tail};

const SQRT_2PI: f64 = 2.5066282746310002;
const SQRT_3: f64 = 1.7320508075688772;

/// Second-order spectral quantities of a 1D process at a location:
/// lambda1 = Var(X'), lambda2 = Var(X''), r = E[X' X''].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralTriple1D {
    pub lambda1: f64,
    pub lambda2: f64,
    pub r: f64,
}

impl SpectralTriple1D {
    pub fn new(lambda1: f64, lambda2: f64, r: f64) -> Result<Self> {
        if !(lambda1 > 0.0) {
            return Err(Error::invariant(format!("lambda1 > 0 required, got {lambda1}")));
        }
        if !(lambda2 > 0.0) {
            return Err(Error::invariant(format!("lambda2 > 0 required, got {lambda2}")));
        }
        // Strict positive-definiteness of Cov(X, X', X''); equivalent to |rho| < 1.
        if !(lambda2 - r * r / lambda1 > lambda1 * lambda1) {
            return Err(Error::invariant(format!(
                "lambda2 - r^2/lambda1 > lambda1^2 required (joint covariance not positive definite): \
                 {lambda2} - {r}^2/{lambda1} <= {lambda1}^2"
            )));
        }
        Ok(SpectralTriple1D { lambda1, lambda2, r })
    }
}

/// Conditional correlation rho(t) = Corr[X(t), X''(t) | X'(t) = 0],
/// always in (-1, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rho1D(f64);

impl Rho1D {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > -1.0 && rho < 0.0) {
            return Err(Error::invariant(format!("rho in (-1, 0) required, got {rho}")));
        }
        // 1 - rho^2 degenerates as the conditional law concentrates.
        if 1.0 + rho < 1e-12 {
            return Err(Error::invariant(format!(
                "|1 + rho| < 1e-12: formula degenerate at rho = {rho}"
            )));
        }
        Ok(Rho1D(rho))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    fn one_minus_sq(self) -> f64 {
        (1.0 - self.0) * (1.0 + self.0)
    }
}

/// rho(t) = -lambda1 / sqrt(lambda2 - r^2/lambda1).
pub fn conditional_rho(s: SpectralTriple1D) -> Rho1D {
    let delta = (s.lambda2 - s.r * s.r / s.lambda1).sqrt();
    // The triple's invariant guarantees the result lies in (-1, 0).
    Rho1D(-s.lambda1 / delta)
}

/// Peak height tail F_t(u) of a nonstationary process with conditional
/// correlation rho.
pub fn peak_tail_1d(rho: Rho1D, u: f64) -> f64 {
    let r = rho.get();
    let s = rho.one_minus_sq().sqrt();
    std_normal_tail(u / s) - SQRT_2PI * r * std_normal_pdf(u) * std_normal_cdf(-r * u / s)
}

/// Peak height density h_t(x).
pub fn peak_density_1d(rho: Rho1D, x: f64) -> f64 {
    let r = rho.get();
    let s = rho.one_minus_sq().sqrt();
    s * std_normal_pdf(x / s) - SQRT_2PI * r * x * std_normal_pdf(x) * std_normal_cdf(-r * x / s)
}

/// The rho -> 0 limit of the tail, Psi(u). The formula is continuous in rho
/// but rho = 0 itself is outside the type (lambda1 > 0 forces rho < 0).
pub fn peak_tail_1d_rho_zero(u: f64) -> f64 {
    std_normal_tail(u)
}

/// Shape parameter kappa = -phi'(0)/sqrt(phi''(0)) of a stationary process,
/// in (0, sqrt(3)].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryKappa(f64);

impl StationaryKappa {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::invariant(format!("kappa > 0 required, got {kappa}")));
        }
        // 1D spectral bound kappa^2 <= (N+2)/N with N = 1.
        if kappa * kappa > 3.0 * (1.0 + 1e-12) {
            return Err(Error::invariant(format!(
                "kappa^2 <= 3 required (1D spectral bound), got kappa = {kappa}"
            )));
        }
        Ok(StationaryKappa(kappa.min(SQRT_3)))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    fn check_nondegenerate(self) -> Result<f64> {
        let k = self.0;
        if 3.0 - k * k < 1e-9 {
            return Err(Error::invariant(
                "kappa = sqrt(3) is degenerate for the stationary evaluators (cosine N = 1 case)"
                    .to_string(),
            ));
        }
        Ok(k)
    }
}

/// kappa from the covariance curvature phi'(0) < 0, phi''(0) > 0.
pub fn stationary_kappa(phi1: f64, phi2: f64) -> Result<StationaryKappa> {
    if !(phi1 < 0.0) {
        return Err(Error::invariant(format!("phi'(0) < 0 required, got {phi1}")));
    }
    if !(phi2 > 0.0) {
        return Err(Error::invariant(format!("phi''(0) > 0 required, got {phi2}")));
    }
    StationaryKappa::new(-phi1 / phi2.sqrt())
}

/// Stationary peak height tail F(u).
pub fn peak_tail_stationary_1d(kappa: StationaryKappa, u: f64) -> Result<f64> {
    let k = kappa.check_nondegenerate()?;
    let s = (1.0 - k * k / 3.0).sqrt();
    Ok(std_normal_tail(u / s)
        + SQRT_2PI * k / SQRT_3 * std_normal_pdf(u) * std_normal_cdf(k * u / (3.0 - k * k).sqrt()))
}

/// Stationary peak height density h(x).
pub fn peak_density_stationary_1d(kappa: StationaryKappa, x: f64) -> Result<f64> {
    let k = kappa.check_nondegenerate()?;
    let s = (1.0 - k * k / 3.0).sqrt();
    Ok(s * std_normal_pdf(x / s)
        + SQRT_2PI * k / SQRT_3
            * x
            * std_normal_pdf(x)
            * std_normal_cdf(k * x / (3.0 - k * k).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_1d, QuadConfig};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn conditional_rho_examples() {
        let s = SpectralTriple1D::new(1.0, 3.0, 0.0).unwrap();
        assert_abs_diff_eq!(conditional_rho(s).get(), -1.0 / SQRT_3, epsilon = 1e-15);

        let s = SpectralTriple1D::new(0.5, 2.0, 0.5).unwrap();
        assert_abs_diff_eq!(conditional_rho(s).get(), -0.5 / 1.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(conditional_rho(s).get(), -0.4082482904638631, epsilon = 1e-12);
    }

    #[test]
    fn warp_family_has_constant_rho() {
        // X(t) = Z(f(t)) with Var(Z') = 1, Var(Z'') = 3 gives, at f' = 1,
        // lambda1 = 1, lambda2 = f''^2 + 3, r = f''.
        for fpp in [-2.0, -0.3, 0.0, 0.7, 1.9] {
            let s = SpectralTriple1D::new(1.0, fpp * fpp + 3.0, fpp).unwrap();
            assert_abs_diff_eq!(conditional_rho(s).get(), -1.0 / SQRT_3, epsilon = 1e-14);
        }
    }

    #[test]
    fn invariant_violations_named() {
        assert!(SpectralTriple1D::new(0.0, 3.0, 0.0).is_err());
        assert!(SpectralTriple1D::new(1.0, -1.0, 0.0).is_err());
        // lambda2 - r^2/lambda1 = 1 = lambda1^2 exactly: rejected (|rho| = 1).
        assert!(SpectralTriple1D::new(1.0, 1.0, 0.0).is_err());
        assert!(Rho1D::new(0.0).is_err());
        assert!(Rho1D::new(-1.0).is_err());
    }

    #[test]
    fn tail_at_zero_and_rho_limit() {
        let rho = Rho1D::new(-0.5).unwrap();
        assert_abs_diff_eq!(peak_tail_1d(rho, 0.0), 0.75, epsilon = 1e-14);
        for r in [-0.3, -0.8] {
            let rho = Rho1D::new(r).unwrap();
            assert_abs_diff_eq!(peak_tail_1d(rho, 0.0), (1.0 - r) / 2.0, epsilon = 1e-14);
        }
        // rho -> 0 limit at u = 1
        let tiny = Rho1D::new(-1e-9).unwrap();
        assert_abs_diff_eq!(peak_tail_1d(tiny, 1.0), 0.15865525393145707, epsilon = 1e-8);
        assert_abs_diff_eq!(peak_tail_1d_rho_zero(1.0), 0.15865525393145707, epsilon = 1e-12);
    }

    #[test]
    fn density_at_zero() {
        let rho = Rho1D::new(-0.5).unwrap();
        assert_abs_diff_eq!(
            peak_density_1d(rho, 0.0),
            0.75f64.sqrt() * std_normal_pdf(0.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn density_normalizes() {
        let cfg = QuadConfig::default();
        for r in [-0.1, -0.5, -0.9] {
            let rho = Rho1D::new(r).unwrap();
            let q = integrate_1d(
                |x| peak_density_1d(rho, x),
                f64::NEG_INFINITY,
                f64::INFINITY,
                &cfg,
            )
            .unwrap();
            assert_abs_diff_eq!(q.value, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn density_matches_tail_derivative() {
        let rho = Rho1D::new(-0.7).unwrap();
        let eps = 1e-5;
        for x in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let fd = -(peak_tail_1d(rho, x + eps) - peak_tail_1d(rho, x - eps)) / (2.0 * eps);
            assert_abs_diff_eq!(peak_density_1d(rho, x), fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn stationary_kappa_examples() {
        assert_abs_diff_eq!(stationary_kappa(-0.5, 0.25).unwrap().get(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(stationary_kappa(-1.0, 1.0).unwrap().get(), 1.0, epsilon = 1e-15);
        // Boundary kappa^2 = 3 accepted; beyond rejected.
        assert!(stationary_kappa(-1.0, 1.0 / 3.0).is_ok());
        assert!(stationary_kappa(-1.0, 0.3).is_err());
        assert!(stationary_kappa(0.1, 1.0).is_err());
        assert!(stationary_kappa(-1.0, -1.0).is_err());
    }

    #[test]
    fn stationary_tail_values() {
        let k = StationaryKappa::new(1.0).unwrap();
        assert_abs_diff_eq!(
            peak_tail_stationary_1d(k, 0.0).unwrap(),
            0.5 + 0.5 / SQRT_3,
            epsilon = 1e-14
        );
        // kappa -> 0 limit
        let k = StationaryKappa::new(1e-9).unwrap();
        for u in [-1.0, 0.5, 2.0] {
            assert_abs_diff_eq!(
                peak_tail_stationary_1d(k, u).unwrap(),
                std_normal_tail(u),
                epsilon = 1e-8
            );
        }
        // degenerate boundary rejected by the evaluator
        let k = StationaryKappa::new(SQRT_3).unwrap();
        assert!(peak_tail_stationary_1d(k, 0.0).is_err());
        assert!(peak_density_stationary_1d(k, 0.0).is_err());
    }

    #[test]
    fn stationary_equals_nonstationary_under_kappa_identity() {
        for kappa in [0.3, 1.0, 1.6] {
            let k = StationaryKappa::new(kappa).unwrap();
            let rho = Rho1D::new(-kappa / SQRT_3).unwrap();
            let mut u = -4.0;
            while u <= 4.0 {
                assert_abs_diff_eq!(
                    peak_tail_stationary_1d(k, u).unwrap(),
                    peak_tail_1d(rho, u),
                    epsilon = 1e-12
                );
                u += 0.25;
            }
        }
    }

    #[test]
    fn tail_limits() {
        for r in [-0.1, -0.5, -0.9] {
            let rho = Rho1D::new(r).unwrap();
            assert_abs_diff_eq!(peak_tail_1d(rho, -8.0), 1.0, epsilon = 1e-10);
            assert!(peak_tail_1d(rho, 8.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mean_peak_height_ordering_report() {
        // Exploratory: mean peak height positive; the ordering in |rho| is
        // reported, not asserted.
        let cfg = QuadConfig::default();
        let mut means = Vec::new();
        for r in [-0.1, -0.5, -0.9] {
            let rho = Rho1D::new(r).unwrap();
            let m = integrate_1d(
                |x| x * peak_density_1d(rho, x),
                f64::NEG_INFINITY,
                f64::INFINITY,
                &cfg,
            )
            .unwrap()
            .value;
            assert!(m > 0.0, "mean peak height not positive at rho = {r}: {m}");
            means.push((r, m));
        }
        if !(means[0].1 < means[1].1 && means[1].1 < means[2].1) {
            eprintln!("note: mean peak height not monotone in |rho|: {means:?}");
        }
    }

    proptest! {
        #[test]
        fn tail_in_unit_interval_and_monotone(r in -0.999f64..-0.001, u in -6.0f64..6.0) {
            let rho = Rho1D::new(r).unwrap();
            let f = peak_tail_1d(rho, u);
            // Saturates to exactly 1.0 in floating point deep in the left tail.
            prop_assert!(f > 0.0 && f <= 1.0);
            let f2 = peak_tail_1d(rho, u + 0.1);
            prop_assert!(f2 <= f + 1e-13);
        }

        #[test]
        fn density_nonnegative(r in -0.999f64..-0.001, x in -8.0f64..8.0) {
            let rho = Rho1D::new(r).unwrap();
            prop_assert!(peak_density_1d(rho, x) >= -1e-15);
        }

        #[test]
        fn conditional_rho_in_open_interval(
            l1 in 0.05f64..4.0,
            l2_excess in 0.01f64..5.0,
            r_frac in -0.95f64..0.95,
        ) {
            // Construct a valid triple: pick r so that the PSD margin holds.
            let delta_sq = l1 * l1 + l2_excess;
            let r = r_frac * (delta_sq * l1).sqrt() * 0.99;
            let l2 = delta_sq + r * r / l1;
            let s = SpectralTriple1D::new(l1, l2, r).unwrap();
            let rho = conditional_rho(s).get();
            prop_assert!(rho > -1.0 && rho < 0.0);
        }
    }
}

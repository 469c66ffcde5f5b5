//! Peak height density for stationary planar Gaussian fields whose covariance
//! is quadrant symmetric: Cov(grad) diagonal, X12 uncorrelated with X11 and
//! X22. After rescaling to unit gradient covariance the density is a ratio of
//! two bivariate-normal expectations of the kernel `g_kernel`; the tail is
//! recovered by numerical integration of the density.

use crate::error::{Error, Result};
use crate::numerics::{
    integrate_1d, std_normal_cdf, std_normal_pdf, BivariateCorrelation, QuadConfig,
};
use std::sync::OnceLock;

/// Hessian variances of a planar field with identity gradient covariance:
/// Var(X11) = sigma1_sq, Var(X22) = sigma2_sq, Var(X12) = sigma3_sq
/// (= E[X11 X22] by the spectral identity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarSpec {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma3_sq: f64,
}

impl PlanarSpec {
    pub fn new(sigma1_sq: f64, sigma2_sq: f64, sigma3_sq: f64) -> Result<Self> {
        if !(sigma1_sq > 1.0) {
            return Err(Error::invariant(format!(
                "sigma1_sq > 1 required (conditional variance positive), got {sigma1_sq}"
            )));
        }
        if !(sigma2_sq > 1.0) {
            return Err(Error::invariant(format!(
                "sigma2_sq > 1 required (conditional variance positive), got {sigma2_sq}"
            )));
        }
        if !(sigma3_sq > 0.0) {
            return Err(Error::invariant(format!("sigma3_sq > 0 required, got {sigma3_sq}")));
        }
        if sigma3_sq * sigma3_sq > sigma1_sq * sigma2_sq {
            return Err(Error::invariant(format!(
                "sigma3_sq^2 <= sigma1_sq * sigma2_sq required (Hessian PSD): \
                 {sigma3_sq}^2 > {sigma1_sq} * {sigma2_sq}"
            )));
        }
        let cond = (sigma3_sq - 1.0).powi(2);
        if cond > (sigma1_sq - 1.0) * (sigma2_sq - 1.0) {
            return Err(Error::invariant(format!(
                "(sigma3_sq - 1)^2 <= (sigma1_sq - 1)(sigma2_sq - 1) required \
                 (conditional covariance PSD): ({sigma3_sq} - 1)^2 > ({sigma1_sq} - 1)({sigma2_sq} - 1)"
            )));
        }
        Ok(PlanarSpec {
            sigma1_sq,
            sigma2_sq,
            sigma3_sq,
        })
    }

    /// Spec with the coordinates relabeled.
    pub fn swapped(&self) -> PlanarSpec {
        PlanarSpec {
            sigma1_sq: self.sigma2_sq,
            sigma2_sq: self.sigma1_sq,
            sigma3_sq: self.sigma3_sq,
        }
    }
}

/// Gradient scales and raw (unscaled) Hessian variances of a quadrant-
/// symmetric planar field, before the Lemma rescaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawPlanarSpec {
    pub gamma1_sq: f64,
    pub gamma2_sq: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma3_sq: f64,
}

/// Rescale to the unit-gradient field Z(t1, t2) = X(t1/gamma1, t2/gamma2):
/// Var(Z_jk) = Var(X_jk) / (gamma_j^2 gamma_k^2). The peak height
/// distribution is unchanged by this substitution.
pub fn rescale_to_unit_gradient(raw: RawPlanarSpec) -> Result<PlanarSpec> {
    if !(raw.gamma1_sq > 0.0) {
        return Err(Error::invariant(format!("gamma1_sq > 0 required, got {}", raw.gamma1_sq)));
    }
    if !(raw.gamma2_sq > 0.0) {
        return Err(Error::invariant(format!("gamma2_sq > 0 required, got {}", raw.gamma2_sq)));
    }
    PlanarSpec::new(
        raw.sigma1_sq / (raw.gamma1_sq * raw.gamma1_sq),
        raw.sigma2_sq / (raw.gamma2_sq * raw.gamma2_sq),
        raw.sigma3_sq / (raw.gamma1_sq * raw.gamma2_sq),
    )
}

/// The integrand kernel of the planar peak height density. Vanishes outside
/// {z1 < x/a1, z2 < x/a2} and is continuous at the region boundary.
pub fn g_kernel(z1: f64, z2: f64, x: f64, a1_sq: f64, a2_sq: f64, a3_sq: f64) -> f64 {
    let a1 = a1_sq.sqrt();
    let a2 = a2_sq.sqrt();
    let b = a3_sq / (a1 * a2);
    let d1 = z1 - x / a1;
    let d2 = z2 - x / a2;
    if d1 >= 0.0 || d2 >= 0.0 {
        return 0.0;
    }
    let p = d1 * d2; // positive in the region
    let t = (p / b).sqrt();
    a1 * a2 * ((p - b) * (std_normal_cdf(t) - 0.5) + (b * p).sqrt() * std_normal_pdf(t))
}

/// The two Hessian-entry correlations: rho = sigma3^2/(sigma1 sigma2) for
/// the denominator and rho~ = (sigma3^2 - 1)/sqrt((sigma1^2-1)(sigma2^2-1))
/// for the conditional (numerator) law.
pub fn planar_correlations(spec: &PlanarSpec) -> Result<(BivariateCorrelation, BivariateCorrelation)> {
    let rho = spec.sigma3_sq / (spec.sigma1_sq * spec.sigma2_sq).sqrt();
    let rho_tilde =
        (spec.sigma3_sq - 1.0) / ((spec.sigma1_sq - 1.0) * (spec.sigma2_sq - 1.0)).sqrt();
    let rho = BivariateCorrelation::new(rho).map_err(|_| {
        Error::invariant(format!(
            "rho = sigma3_sq/(sigma1 sigma2) = {rho} is degenerate (quadrature in a degenerate \
             bivariate law not supported)"
        ))
    })?;
    let rho_tilde = BivariateCorrelation::new(rho_tilde).map_err(|_| {
        Error::invariant(format!("|rho~| = {} degenerate", rho_tilde.abs()))
    })?;
    Ok((rho, rho_tilde))
}

/// E_rho[g(Z1, Z2, x | a^2)] with the integration restricted to the rectangle
/// where the kernel's indicators are active; exact because g vanishes outside.
fn expect_g(
    x: f64,
    a1_sq: f64,
    a2_sq: f64,
    a3_sq: f64,
    rho: BivariateCorrelation,
    cfg: &QuadConfig,
) -> Result<f64> {
    let radius = cfg.truncation_radius;
    let hi1 = (x / a1_sq.sqrt()).min(radius);
    let hi2 = (x / a2_sq.sqrt()).min(radius);
    if hi1 <= -radius || hi2 <= -radius {
        return Ok(0.0);
    }
    let r = rho.get();
    let s = rho.one_minus_sq().sqrt();
    let inner_cfg = QuadConfig {
        abs_tol: 0.1 * cfg.abs_tol,
        rel_tol: 0.1 * cfg.rel_tol,
        ..*cfg
    };
    let outer_cfg = QuadConfig {
        abs_tol: 0.9 * cfg.abs_tol,
        rel_tol: 0.9 * cfg.rel_tol,
        ..*cfg
    };
    let outer = |z1: f64| -> f64 {
        let inner = integrate_1d(
            |z2: f64| {
                g_kernel(z1, z2, x, a1_sq, a2_sq, a3_sq)
                    * std_normal_pdf((z2 - r * z1) / s)
                    / s
            },
            -radius,
            hi2,
            &inner_cfg,
        );
        let inner = match inner {
            Ok(q) => q.value,
            Err(Error::QuadratureNonConvergence { value, .. }) => value,
            Err(_) => f64::NAN,
        };
        std_normal_pdf(z1) * inner
    };
    Ok(integrate_1d(outer, -radius, hi1, &outer_cfg)?.value)
}

/// Peak height density and tail evaluator for one planar spec.
///
/// The x-independent denominator expectation is computed once and cached;
/// concurrent first use races benignly (identical value, first writer wins).
#[derive(Debug)]
pub struct PlanarDist {
    spec: PlanarSpec,
    cfg: QuadConfig,
    rho: BivariateCorrelation,
    rho_tilde: BivariateCorrelation,
    denom: OnceLock<f64>,
}

impl PlanarDist {
    pub fn new(spec: PlanarSpec, cfg: QuadConfig) -> Result<Self> {
        cfg.validate()?;
        let (rho, rho_tilde) = planar_correlations(&spec)?;
        Ok(PlanarDist {
            spec,
            cfg,
            rho,
            rho_tilde,
            denom: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &PlanarSpec {
        &self.spec
    }

    fn denominator(&self) -> Result<f64> {
        if let Some(d) = self.denom.get() {
            return Ok(*d);
        }
        let s = &self.spec;
        let d = expect_g(0.0, s.sigma1_sq, s.sigma2_sq, s.sigma3_sq, self.rho, &self.cfg)?;
        if d < 1e-14 {
            return Err(Error::invariant(format!(
                "degenerate spec: denominator expectation {d:.3e} below 1e-14"
            )));
        }
        Ok(*self.denom.get_or_init(|| d))
    }

    /// Peak height density h(x): phi(x) times the ratio of conditional to
    /// unconditional determinant expectations.
    pub fn density(&self, x: f64) -> Result<f64> {
        let denom = self.denominator()?;
        let s = &self.spec;
        let num = expect_g(
            x,
            s.sigma1_sq - 1.0,
            s.sigma2_sq - 1.0,
            s.sigma3_sq,
            self.rho_tilde,
            &self.cfg,
        )?;
        Ok((std_normal_pdf(x) * num / denom).max(0.0))
    }

    /// Tail F(u) = integral of the density over (u, infinity), truncated at
    /// the configured radius.
    pub fn tail(&self, u: f64) -> Result<f64> {
        let denom = self.denominator()?;
        let s = &self.spec;
        let radius = self.cfg.truncation_radius;
        if u >= radius {
            return Ok(0.0);
        }
        // The density evaluations inside the outer quadrature fall back to
        // their best value on non-convergence; the outer error control sees
        // whatever residue is left.
        let inner_cfg = QuadConfig {
            abs_tol: 0.1 * self.cfg.abs_tol,
            rel_tol: 0.1 * self.cfg.rel_tol,
            ..self.cfg
        };
        let h = |x: f64| -> f64 {
            let num = match expect_g(
                x,
                s.sigma1_sq - 1.0,
                s.sigma2_sq - 1.0,
                s.sigma3_sq,
                self.rho_tilde,
                &inner_cfg,
            ) {
                Ok(v) => v,
                Err(Error::QuadratureNonConvergence { value, .. }) => value,
                Err(_) => f64::NAN,
            };
            (std_normal_pdf(x) * num / denom).max(0.0)
        };
        let q = integrate_1d(h, u.max(-radius), radius, &self.cfg)?;
        Ok(q.value.min(1.0))
    }

    /// Tabulate the tail on a uniform grid once and interpolate linearly;
    /// used when F must be evaluated at thousands of sample points.
    pub fn tail_table(&self, lo: f64, hi: f64, n: usize) -> Result<TailTable> {
        assert!(n >= 2 && hi > lo);
        let step = (hi - lo) / (n - 1) as f64;
        // Integrate the density once over the whole range, accumulating
        // partial sums at the grid points.
        let mut densities = Vec::with_capacity(n);
        for i in 0..n {
            densities.push(self.density(lo + i as f64 * step)?);
        }
        // Simpson on pairs of panels (n odd preferred; trapezoid fallback at
        // the tail end), accumulated from the right.
        let mut tail = vec![0.0f64; n];
        tail[n - 1] = self.tail(hi)?;
        let mut i = n - 1;
        while i > 0 {
            if i >= 2 {
                let chunk = step / 3.0 * (densities[i - 2] + 4.0 * densities[i - 1] + densities[i]);
                tail[i - 2] = tail[i] + chunk;
                tail[i - 1] = tail[i] + step / 2.0 * (densities[i - 1] + densities[i]);
                i -= 2;
            } else {
                tail[i - 1] = tail[i] + step / 2.0 * (densities[i - 1] + densities[i]);
                i -= 1;
            }
        }
        Ok(TailTable {
            lo,
            step,
            values: tail,
        })
    }
}

/// Linear interpolation of a precomputed tail function.
#[derive(Debug, Clone)]
pub struct TailTable {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl TailTable {
    pub fn eval(&self, u: f64) -> f64 {
        let n = self.values.len();
        let pos = (u - self.lo) / self.step;
        if pos <= 0.0 {
            return self.values[0].min(1.0);
        }
        if pos >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// One-shot density evaluation (no denominator reuse across calls).
pub fn peak_density_planar(spec: PlanarSpec, x: f64, cfg: &QuadConfig) -> Result<f64> {
    PlanarDist::new(spec, *cfg)?.density(x)
}

/// One-shot tail evaluation.
pub fn peak_tail_planar(spec: PlanarSpec, u: f64, cfg: &QuadConfig) -> Result<f64> {
    PlanarDist::new(spec, *cfg)?.tail(u)
}

use crate::error::{Error, Result};
use crate::numerics::normal::{std_normal_pdf, BivariateCorrelation};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Tolerances and budget for the adaptive quadrature routines.
///
/// Infinite integration limits are truncated at `truncation_radius` standard
/// deviations; with the default 10 the neglected Gaussian mass is below 1e-22,
/// far under the default tolerances.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub truncation_radius: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            truncation_radius: 10.0,
            max_subdivisions: 2000,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::invariant("abs_tol > 0 required"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invariant("rel_tol > 0 required"));
        }
        if !(self.truncation_radius >= 6.0) {
            return Err(Error::invariant("truncation_radius >= 6 required"));
        }
        if self.max_subdivisions < 10 {
            return Err(Error::invariant("max_subdivisions >= 10 required"));
        }
        Ok(())
    }

    fn with_tols(&self, abs_tol: f64, rel_tol: f64) -> QuadConfig {
        QuadConfig {
            abs_tol,
            rel_tol,
            ..*self
        }
    }
}

/// Value and error estimate returned by the adaptive integrators.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod panel; returns (kronrod value, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_kronrod = f_center * WGK[7];
    let mut res_gauss = f_center * WG[3];
    let mut res_abs = res_kronrod.abs();

    let mut fsum = [0.0f64; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fsum[j] = f1 + f2;
        res_kronrod += WGK[j] * fsum[j];
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * fsum[j];
        }
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * (fsum[j] - 2.0 * mean).abs();
    }

    let res_kronrod = res_kronrod * half;
    let res_gauss = res_gauss * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();

    let mut err = (res_kronrod - res_gauss).abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }

    (res_kronrod, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Deterministic adaptive Gauss-Kronrod integration of `f` over `[lo, hi]`.
///
/// Infinite endpoints are clamped to +-truncation_radius; callers integrate
/// Gaussian-dominated integrands for which the truncated mass is negligible.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    cfg.validate()?;
    let r = cfg.truncation_radius;
    let a = if lo.is_finite() { lo } else { -r };
    let b = if hi.is_finite() { hi } else { r };
    if a >= b {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            subdivisions: 0,
        });
    }

    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v,
        err: e,
    });
    let mut total_value = v;
    let mut total_err = e;
    let mut subdivisions = 0usize;

    while total_err > cfg.abs_tol.max(cfg.rel_tol * total_value.abs()) {
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                value: total_value,
                achieved: total_err,
                requested: cfg.abs_tol.max(cfg.rel_tol * total_value.abs()),
            });
        }
        let worst = heap.pop().expect("heap nonempty while error positive");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at machine resolution; error estimate is stuck.
            return Err(Error::QuadratureNonConvergence {
                value: total_value,
                achieved: total_err,
                requested: cfg.abs_tol.max(cfg.rel_tol * total_value.abs()),
            });
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total_value += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
        subdivisions += 1;
    }

    // Recompute the sums from the panels to shed accumulated cancellation.
    let mut value = 0.0;
    let mut err = 0.0;
    for p in heap.iter() {
        value += p.value;
        err += p.err;
    }
    Ok(QuadResult {
        value,
        error_estimate: err,
        subdivisions,
    })
}

/// Expectation E_rho[g(Z1, Z2)] under the standard bivariate normal law,
/// by tensor-product adaptive quadrature over the truncated square.
///
/// The joint density is factored as phi(z1) times the conditional normal of
/// z2 given z1; the inner integral is resolved to a tighter tolerance so its
/// error does not destabilize the outer subdivision.
pub fn expect_bivariate<G: Fn(f64, f64) -> f64>(
    g: G,
    rho: BivariateCorrelation,
    cfg: &QuadConfig,
) -> Result<f64> {
    cfg.validate()?;
    let r = rho.get();
    let s = rho.one_minus_sq().sqrt();
    let radius = cfg.truncation_radius;
    let inner_cfg = cfg.with_tols(0.1 * cfg.abs_tol, 0.1 * cfg.rel_tol);
    let outer_cfg = cfg.with_tols(0.9 * cfg.abs_tol, 0.9 * cfg.rel_tol);

    let outer = |z1: f64| -> f64 {
        let inner = integrate_1d(
            |z2: f64| g(z1, z2) * std_normal_pdf((z2 - r * z1) / s) / s,
            -radius,
            radius,
            &inner_cfg,
        );
        let inner = match inner {
            Ok(q) => q.value,
            // Keep the best value; the outer error control sees the residue.
            Err(Error::QuadratureNonConvergence { value, .. }) => value,
            Err(_) => f64::NAN,
        };
        std_normal_pdf(z1) * inner
    };

    Ok(integrate_1d(outer, -radius, radius, &outer_cfg)?.value)
}

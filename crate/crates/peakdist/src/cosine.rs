//! Peak height distribution of cosine random fields
//! X(t) = N^{-1/2} sum_k [zeta_k cos(omega_k t_k) + zeta'_k sin(omega_k t_k)].
//!
//! The distribution is frequency-free; the omegas only matter for simulation.
//! At a critical point the Hessian is diagonal and -trace equals the field
//! value, so peak heights are a.s. positive: F(u) = 1 for u < 0.

use crate::error::{Error, Result};
use crate::numerics::{integrate_1d, EstimateWithError, QuadConfig, RandomStream};
use rayon::prelude::*;

/// Dimension and positive frequencies of a cosine field.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSpec {
    pub n_dim: usize,
    pub omegas: Vec<f64>,
}

impl CosineSpec {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::invariant("at least one frequency required"));
        }
        if let Some(w) = omegas.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::invariant(format!("all omega_k > 0 required, got {w}")));
        }
        Ok(CosineSpec {
            n_dim: omegas.len(),
            omegas,
        })
    }

    pub fn unit_frequencies(n_dim: usize) -> Result<Self> {
        CosineSpec::new(vec![1.0; n_dim])
    }
}

/// Exact pointwise evaluation of the field for given coefficients
/// (zeta_1, ..., zeta_N, zeta'_1, ..., zeta'_N).
pub fn cosine_field_eval(spec: &CosineSpec, coeffs: &[f64], t: &[f64]) -> Result<f64> {
    let n = spec.n_dim;
    if coeffs.len() != 2 * n {
        return Err(Error::invariant(format!(
            "coefficient vector of length {} required, got {}",
            2 * n,
            coeffs.len()
        )));
    }
    if t.len() != n {
        return Err(Error::invariant(format!(
            "point of dimension {n} required, got {}",
            t.len()
        )));
    }
    let mut sum = 0.0;
    for k in 0..n {
        let arg = spec.omegas[k] * t[k];
        sum += coeffs[k] * arg.cos() + coeffs[n + k] * arg.sin();
    }
    Ok(sum / (n as f64).sqrt())
}

/// Recursive layer of the orthant integral. With the constant prefactor
/// absorbed, the innermost variable reduces in closed form to
/// exp(-max(0, s)^2 / 2); each remaining dimension contributes
/// int_0^R w exp(-w^2/2) * layer(s - w) dw.
fn orthant_layer(s: f64, dims_left: usize, cfg: &QuadConfig) -> Result<f64> {
    if dims_left == 0 {
        let m = s.max(0.0);
        return Ok((-0.5 * m * m).exp());
    }
    let level_cfg = QuadConfig {
        abs_tol: cfg.abs_tol / 2f64.powi(dims_left as i32),
        rel_tol: cfg.rel_tol / 2f64.powi(dims_left as i32),
        ..*cfg
    };
    let q = integrate_1d(
        |w: f64| {
            let inner = orthant_layer(s - w, dims_left - 1, cfg).unwrap_or(f64::NAN);
            w * (-0.5 * w * w).exp() * inner
        },
        0.0,
        cfg.truncation_radius,
        &level_cfg,
    )?;
    Ok(q.value)
}

/// Deterministic tail F(u) by nested quadrature, for N <= 4.
pub fn peak_tail_cosine_quad(n_dim: usize, u: f64, cfg: &QuadConfig) -> Result<f64> {
    if n_dim == 0 {
        return Err(Error::invariant("n_dim >= 1 required"));
    }
    if n_dim > 4 {
        return Err(Error::invariant(
            "nested quadrature supports N <= 4; use peak_tail_cosine_mc for larger N",
        ));
    }
    if u < 0.0 {
        return Ok(1.0);
    }
    cfg.validate()?;
    let s = (n_dim as f64).sqrt() * u;
    Ok(orthant_layer(s, n_dim - 1, cfg)?.min(1.0))
}

/// Monte-Carlo tail estimate. Uses the half-normal reformulation
/// F(u) = (pi/2)^{N/2} E[prod W_i 1{sum W_i >= sqrt(N) u}], W_i = |Z_i|,
/// which spends no draws on the negative-orthant indicator.
pub fn peak_tail_cosine_mc(
    n_dim: usize,
    u: f64,
    n_samples: usize,
    stream: &RandomStream,
) -> Result<EstimateWithError> {
    if n_dim == 0 {
        return Err(Error::invariant("n_dim >= 1 required"));
    }
    if n_samples < 10_000 {
        return Err(Error::invariant(format!(
            "n_samples >= 10^4 required, got {n_samples}"
        )));
    }
    if u < 0.0 {
        return Ok(EstimateWithError {
            value: 1.0,
            stderr: 0.0,
            n_samples,
        });
    }
    let prefactor = (std::f64::consts::PI / 2.0).powf(n_dim as f64 / 2.0);
    let threshold = (n_dim as f64).sqrt() * u;

    // Fixed chunk layout so the aggregate is independent of worker count.
    const CHUNKS: u64 = 64;
    let per_chunk = n_samples / CHUNKS as usize;
    let remainder = n_samples % CHUNKS as usize;

    let partials: Vec<(f64, f64, usize)> = (0..CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut s = stream.substream(stream.stream_index() * CHUNKS + chunk);
            let n = per_chunk + if (chunk as usize) < remainder { 1 } else { 0 };
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let mut prod = 1.0;
                let mut tot = 0.0;
                for _ in 0..n_dim {
                    let w = s.next_normal().abs();
                    prod *= w;
                    tot += w;
                }
                let term = if tot >= threshold { prefactor * prod } else { 0.0 };
                sum += term;
                sum_sq += term * term;
            }
            (sum, sum_sq, n)
        })
        .collect();

    let (sum, sum_sq, n) = partials
        .iter()
        .fold((0.0, 0.0, 0usize), |acc, p| (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2));
    Ok(EstimateWithError::from_moments(sum, sum_sq, n))
}

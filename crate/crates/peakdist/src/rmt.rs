//! GOI(c) random-matrix machinery and the peak height distribution of
//! anisotropic Gaussian fields.
//!
//! GOI expectations are evaluated by importance sampling from the GOE with
//! the exact eigenvalue-density ratio as weight. For the anisotropic tail,
//! the outer integral over the height x is done in closed form per eigenvalue
//! draw: with all lambda_j below kappa x / sqrt(2) the determinant factor is
//! a polynomial in x, so the integral against phi(x) reduces to truncated
//! Gaussian moments.

use crate::error::{Error, Result};
use crate::numerics::{std_normal_pdf, std_normal_tail, EstimateWithError, QuadConfig, RandomStream};
use nalgebra::DMatrix;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Covariance parameter of a nondegenerate GOI(c) ensemble, c > -1/N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GOICovParam {
    pub c: f64,
    pub n_dim: usize,
}

impl GOICovParam {
    pub fn new(c: f64, n_dim: usize) -> Result<Self> {
        if n_dim == 0 {
            return Err(Error::invariant("n_dim >= 1 required"));
        }
        if !(c > -1.0 / n_dim as f64) {
            return Err(Error::invariant(format!(
                "c > -1/N required for a nondegenerate GOI ensemble, got c = {c}, N = {n_dim}"
            )));
        }
        Ok(GOICovParam { c, n_dim })
    }
}

/// Entry covariance E[M_ij M_kl] = (delta_ik delta_jl + delta_il delta_jk)/2
/// + c delta_ij delta_kl. Reference for the sampler tests.
pub fn goi_entry_covariance(i: usize, j: usize, k: usize, l: usize, c: f64) -> f64 {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    0.5 * (d(i, k) * d(j, l) + d(i, l) * d(j, k)) + c * d(i, j) * d(k, l)
}

/// An exactly symmetric matrix draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrixSample {
    pub entries: DMatrix<f64>,
}

/// GOE draw: diagonal variance 1, off-diagonal variance 1/2, independent up
/// to symmetry. Draw order is fixed (row-major upper triangle) so a given
/// stream state always yields the same matrix.
pub fn sample_goe(n: usize, stream: &mut RandomStream) -> SymmetricMatrixSample {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = stream.next_normal();
            if i == j {
                m[(i, i)] = z;
            } else {
                let v = z / SQRT_2;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
    }
    SymmetricMatrixSample { entries: m }
}

/// GOI(c) draw for c >= 0 via the additive construction GOE + sqrt(c) xi I.
/// Negative c has no such construction; use `expect_goi`, which reweights
/// GOE draws instead.
pub fn sample_goi(n: usize, c: f64, stream: &mut RandomStream) -> Result<SymmetricMatrixSample> {
    if !(c >= 0.0) {
        return Err(Error::invariant(format!(
            "sample_goi requires c >= 0 (got {c}); for -1/N < c < 0 use expect_goi"
        )));
    }
    let mut sample = sample_goe(n, stream);
    let shift = c.sqrt() * stream.next_normal();
    for i in 0..n {
        sample.entries[(i, i)] += shift;
    }
    Ok(sample)
}

/// Log of the ordered-eigenvalue density f_c(lambda_1 <= ... <= lambda_N),
/// including the normalization K_N = 2^{N/2} prod Gamma(i/2).
pub fn goi_ordered_eig_logdensity(lambdas: &[f64], c: GOICovParam) -> Result<f64> {
    let n = c.n_dim;
    if lambdas.len() != n {
        return Err(Error::invariant(format!(
            "expected {n} eigenvalues, got {}",
            lambdas.len()
        )));
    }
    if lambdas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invariant("eigenvalues must be sorted ascending"));
    }
    let nf = n as f64;
    let ln_kn = 0.5 * nf * std::f64::consts::LN_2
        + (1..=n).map(|i| ln_gamma(i as f64 / 2.0)).sum::<f64>();
    let sum: f64 = lambdas.iter().sum();
    let sum_sq: f64 = lambdas.iter().map(|l| l * l).sum();
    let mut log_vandermonde = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            log_vandermonde += (lambdas[j] - lambdas[i]).abs().ln();
        }
    }
    Ok(-ln_kn - 0.5 * (1.0 + nf * c.c).ln() - 0.5 * sum_sq
        + c.c / (2.0 * (1.0 + nf * c.c)) * sum * sum
        + log_vandermonde)
}

/// Density ratio f_c / f_0 evaluated at an eigenvalue configuration with
/// trace s: the exact importance weight for GOE draws.
fn goi_weight(s: f64, c: f64, n: usize) -> f64 {
    let denom = 1.0 + n as f64 * c;
    (c * s * s / (2.0 * denom)).exp() / denom.sqrt()
}

fn check_ess(weight_sum: f64, weight_sq_sum: f64, n: usize) -> Result<()> {
    let ess = weight_sum * weight_sum / weight_sq_sum;
    if ess < 0.01 * n as f64 {
        return Err(Error::WeightDegeneracy { ess, n });
    }
    Ok(())
}

const CHUNKS: u64 = 64;

/// Eigenvalue draws shared by the estimators: unordered spectra with their
/// traces, in a deterministic chunked layout.
struct EigenDraws {
    spectra: Vec<Vec<f64>>,
}

impl EigenDraws {
    fn sample(n_dim: usize, n_samples: usize, stream: &RandomStream) -> Self {
        let per_chunk = n_samples / CHUNKS as usize;
        let remainder = n_samples % CHUNKS as usize;
        let spectra: Vec<Vec<f64>> = (0..CHUNKS)
            .into_par_iter()
            .flat_map_iter(|chunk| {
                let mut s = stream.substream(stream.stream_index() * CHUNKS + chunk);
                let n = per_chunk + if (chunk as usize) < remainder { 1 } else { 0 };
                (0..n)
                    .map(|_| {
                        let m = sample_goe(n_dim, &mut s);
                        m.entries.symmetric_eigenvalues().iter().copied().collect()
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        EigenDraws { spectra }
    }
}

/// E_GOI(c)[g(lambda_1, ..., lambda_N)] by GOE importance sampling; g must be
/// symmetric in its arguments (the sampled spectra are unordered).
pub fn expect_goi<G>(
    g: G,
    n_dim: usize,
    c: GOICovParam,
    n_samples: usize,
    stream: &RandomStream,
) -> Result<EstimateWithError>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    if c.n_dim != n_dim {
        return Err(Error::invariant("GOICovParam dimension mismatch"));
    }
    let draws = EigenDraws::sample(n_dim, n_samples, stream);
    let (sum, sum_sq, w_sum, w_sq_sum) = draws
        .spectra
        .iter()
        .fold((0.0, 0.0, 0.0, 0.0), |acc, spectrum| {
            let s: f64 = spectrum.iter().sum();
            let w = goi_weight(s, c.c, n_dim);
            let term = w * g(spectrum);
            (acc.0 + term, acc.1 + term * term, acc.2 + w, acc.3 + w * w)
        });
    check_ess(w_sum, w_sq_sum, n_samples)?;
    Ok(EstimateWithError::from_moments(sum, sum_sq, n_samples))
}

/// Anisotropic covariance spec: E[X(t)X(s)] = phi(||A(t-s)||^2) with
/// nondegenerate A. The matrix never enters the peak height distribution
/// (the field is an isotropic one composed with A); it is validated only.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisoSpec {
    pub n_dim: usize,
    pub a_matrix: DMatrix<f64>,
    pub phi1: f64,
    pub phi2: f64,
}

/// Which formula branch applies for a given kappa.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaBranch {
    Subcritical,
    Critical,
}

/// kappa = -phi'(0)/sqrt(phi''(0)) with its branch classification against
/// the bound kappa^2 <= (N+2)/N.
pub fn kappa_from_phi(phi1: f64, phi2: f64, n_dim: usize) -> Result<(f64, KappaBranch)> {
    if n_dim == 0 {
        return Err(Error::invariant("n_dim >= 1 required"));
    }
    if !(phi1 < 0.0) {
        return Err(Error::invariant(format!("phi'(0) < 0 required, got {phi1}")));
    }
    if !(phi2 > 0.0) {
        return Err(Error::invariant(format!("phi''(0) > 0 required, got {phi2}")));
    }
    let kappa = -phi1 / phi2.sqrt();
    let bound = (n_dim as f64 + 2.0) / n_dim as f64;
    let excess = kappa * kappa - bound;
    if excess.abs() <= 1e-9 {
        return Ok((kappa, KappaBranch::Critical));
    }
    if excess > 0.0 {
        return Err(Error::invariant(format!(
            "kappa^2 <= (N+2)/N required, got kappa^2 = {} > {bound}",
            kappa * kappa
        )));
    }
    Ok((kappa, KappaBranch::Subcritical))
}

impl AnisoSpec {
    pub fn new(a_matrix: DMatrix<f64>, phi1: f64, phi2: f64) -> Result<Self> {
        let n = a_matrix.nrows();
        if n == 0 || a_matrix.ncols() != n {
            return Err(Error::invariant("a_matrix must be square and nonempty"));
        }
        let det = a_matrix.determinant();
        let scale = a_matrix.norm().powi(n as i32);
        if det.abs() <= 1e-12 * scale {
            return Err(Error::invariant(format!(
                "det(A) != 0 required: |det| = {} <= 1e-12 * ||A||^N = {}",
                det.abs(),
                1e-12 * scale
            )));
        }
        kappa_from_phi(phi1, phi2, n)?;
        Ok(AnisoSpec {
            n_dim: n,
            a_matrix,
            phi1,
            phi2,
        })
    }

    pub fn kappa(&self) -> (f64, KappaBranch) {
        kappa_from_phi(self.phi1, self.phi2, self.n_dim).expect("validated at construction")
    }
}

/// Truncated Gaussian moments M_k(a) = int_a^inf x^k phi(x) dx for
/// k = 0..=deg, by the recursion M_k = a^{k-1} phi(a) + (k-1) M_{k-2}.
fn truncated_moments(a: f64, deg: usize) -> Vec<f64> {
    let mut m = vec![0.0; deg + 1];
    let pdf = std_normal_pdf(a);
    m[0] = std_normal_tail(a);
    if deg >= 1 {
        m[1] = pdf;
    }
    for k in 2..=deg {
        m[k] = a.powi(k as i32 - 1) * pdf + (k as f64 - 1.0) * m[k - 2];
    }
    m
}

/// Coefficients (ascending powers of x) of prod_j (alpha x - lambda_j).
fn det_polynomial(alpha: f64, lambdas: &[f64]) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for &l in lambdas {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, &ck) in coeffs.iter().enumerate() {
            next[k + 1] += alpha * ck;
            next[k] -= l * ck;
        }
        coeffs = next;
    }
    coeffs
}

/// Peak height tail of an anisotropic field, Monte Carlo over shared GOE
/// eigenvalue draws.
///
/// Subcritical branch: per draw, the determinant factor is the polynomial
/// prod_j (kappa x / sqrt(2) - lambda_j) on x > sqrt(2) lambda_max / kappa,
/// so its integral against phi(x) over (max(u, that), inf) is a finite sum of
/// truncated Gaussian moments; no outer quadrature is needed and the
/// numerator/denominator correlation is captured exactly for the stderr.
pub fn peak_tail_aniso(
    spec: &AnisoSpec,
    u: f64,
    n_samples: usize,
    stream: &RandomStream,
    cfg: &QuadConfig,
) -> Result<EstimateWithError> {
    cfg.validate()?;
    if !u.is_finite() {
        return Err(Error::invariant("u must be finite"));
    }
    let n = spec.n_dim;
    let nf = n as f64;
    let (kappa, branch) = spec.kappa();
    let lo = -cfg.truncation_radius;

    let draws = EigenDraws::sample(n, n_samples, stream);

    // Per-draw numerator and denominator terms.
    let mut num_sum = 0.0;
    let mut num_sq = 0.0;
    let mut den_sum = 0.0;
    let mut den_sq = 0.0;
    let mut cross = 0.0;
    let mut wn_sum = 0.0;
    let mut wn_sq = 0.0;
    let c_den = 0.5;
    let c_num = match branch {
        KappaBranch::Subcritical => (1.0 - kappa * kappa) / 2.0,
        KappaBranch::Critical => 0.5,
    };

    for spectrum in &draws.spectra {
        let s: f64 = spectrum.iter().sum();
        let lam_max = spectrum.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w_den = goi_weight(s, c_den, n);
        let abs_prod_neg = if lam_max < 0.0 {
            spectrum.iter().map(|l| l.abs()).product::<f64>()
        } else {
            0.0
        };
        let d_term = w_den * abs_prod_neg;

        let n_term = match branch {
            KappaBranch::Subcritical => {
                let w_num = goi_weight(s, c_num, n);
                wn_sum += w_num;
                wn_sq += w_num * w_num;
                let alpha = kappa / SQRT_2;
                let a = (SQRT_2 * lam_max / kappa).max(u).max(lo);
                let coeffs = det_polynomial(alpha, spectrum);
                let moments = truncated_moments(a, n);
                let integral: f64 = coeffs
                    .iter()
                    .zip(moments.iter())
                    .map(|(c, m)| c * m)
                    .sum();
                w_num * integral
            }
            KappaBranch::Critical => {
                let thresh = -((nf + 2.0) / (2.0 * nf)).sqrt() * u;
                if s / nf <= thresh {
                    d_term
                } else {
                    0.0
                }
            }
        };

        num_sum += n_term;
        num_sq += n_term * n_term;
        den_sum += d_term;
        den_sq += d_term * d_term;
        cross += n_term * d_term;
    }

    let n_draws = draws.spectra.len();
    let nd = n_draws as f64;
    if matches!(branch, KappaBranch::Subcritical) {
        check_ess(wn_sum, wn_sq, n_draws)?;
    }

    let num_mean = num_sum / nd;
    let den_mean = den_sum / nd;
    let den_var = (den_sq - den_sum * den_sum / nd).max(0.0) / (nd - 1.0);
    let den_stderr = (den_var / nd).sqrt();
    if den_mean.abs() <= 3.0 * den_stderr {
        return Err(Error::DegenerateDenominator {
            value: den_mean,
            stderr: den_stderr,
        });
    }

    let num_var = (num_sq - num_sum * num_sum / nd).max(0.0) / (nd - 1.0);
    let cov = (cross - num_sum * den_sum / nd) / (nd - 1.0);
    let ratio = num_mean / den_mean;
    // Delta method for the ratio of correlated means.
    let var_ratio = (num_var / (den_mean * den_mean)
        + ratio * ratio * den_var / (den_mean * den_mean)
        - 2.0 * ratio * cov / (den_mean * den_mean))
        .max(0.0)
        / nd;

    Ok(EstimateWithError {
        value: ratio,
        stderr: var_ratio.sqrt(),
        n_samples: n_draws,
    })
}

//! Exact Gaussian path simulation on a 1D grid via dense symmetric
//! factorization of the grid covariance.

use super::cov::CovarianceHandle1D;
use crate::error::{Error, Result};
use crate::numerics::RandomStream;
use nalgebra::{DMatrix, DVector};

/// Uniform 1D evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub origin: f64,
    pub step: f64,
    pub n_points: usize,
}

impl Grid1D {
    pub fn new(origin: f64, step: f64, n_points: usize) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::invariant(format!("grid step > 0 required, got {step}")));
        }
        if n_points < 16 {
            return Err(Error::invariant(format!(
                "n_points >= 16 required, got {n_points}"
            )));
        }
        Ok(Grid1D { origin, step, n_points })
    }

    pub fn point(&self, i: usize) -> f64 {
        self.origin + self.step * i as f64
    }
}

const EIGENVALUE_FLOOR: f64 = -1e-8;

/// Factorized grid covariance; draw paths by multiplying the factor into
/// standard normal vectors. Factor once, reuse across replications.
pub struct GaussianSampler1D {
    grid: Grid1D,
    factor: DMatrix<f64>,
}

impl GaussianSampler1D {
    pub fn new(cov: &CovarianceHandle1D, grid: Grid1D) -> Result<Self> {
        let n = grid.n_points;
        let mut c = DMatrix::zeros(n, n);
        let mut min_offdiag: f64 = f64::INFINITY;
        for i in 0..n {
            let ti = grid.point(i);
            let cii = cov.eval(ti, ti);
            if (cii - 1.0).abs() > 1e-10 {
                return Err(Error::invariant(format!(
                    "unit variance required: C({ti},{ti}) = {cii}"
                )));
            }
            c[(i, i)] = 1.0;
            for j in 0..i {
                let tj = grid.point(j);
                let (cij, cji) = (cov.eval(ti, tj), cov.eval(tj, ti));
                if (cij - cji).abs() > 1e-10 {
                    return Err(Error::invariant(format!(
                        "symmetric covariance required: C({ti},{tj}) = {cij} vs {cji}"
                    )));
                }
                c[(i, j)] = cij;
                c[(j, i)] = cij;
                if i == j + 1 {
                    min_offdiag = min_offdiag.min(cij);
                }
            }
        }
        if min_offdiag > 1.0 - 1e-10 {
            return Err(Error::invariant(
                "degenerate covariance: perfectly correlated neighbors, paths constant",
            ));
        }

        let eig = c.symmetric_eigen();
        let min_eig = eig.eigenvalues.min();
        if min_eig < EIGENVALUE_FLOOR {
            return Err(Error::IndefiniteCovariance {
                min_eig,
                floor: EIGENVALUE_FLOOR,
            });
        }
        let mut factor = eig.eigenvectors;
        for (j, &ev) in eig.eigenvalues.iter().enumerate() {
            let s = ev.max(0.0).sqrt();
            factor.column_mut(j).scale_mut(s);
        }
        Ok(GaussianSampler1D { grid, factor })
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn sample(&self, stream: &mut RandomStream) -> DVector<f64> {
        let mut z = DVector::zeros(self.grid.n_points);
        stream.fill_normals(z.as_mut_slice());
        &self.factor * z
    }

    /// Draws `n_paths` paths in one matrix product, one per column.
    /// Normals are consumed column-major so path k does not depend on n_paths.
    pub fn sample_batch(&self, n_paths: usize, stream: &mut RandomStream) -> DMatrix<f64> {
        let mut z = DMatrix::zeros(self.grid.n_points, n_paths);
        stream.fill_normals(z.as_mut_slice());
        &self.factor * z
    }
}

/// One exact draw of the process on the grid.
pub fn simulate_1d(
    cov: &CovarianceHandle1D,
    grid: Grid1D,
    stream: &mut RandomStream,
) -> Result<DVector<f64>> {
    Ok(GaussianSampler1D::new(cov, grid)?.sample(stream))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        assert!(Grid1D::new(0.0, 0.1, 16).is_ok());
        assert!(Grid1D::new(0.0, 0.0, 16).is_err());
        assert!(Grid1D::new(0.0, 0.1, 15).is_err());
    }

    #[test]
    fn squared_exponential_marginals() {
        let cov = CovarianceHandle1D::squared_exponential();
        let grid = Grid1D::new(0.0, 0.25, 32).unwrap();
        let sampler = GaussianSampler1D::new(&cov, grid).unwrap();
        let mut stream = RandomStream::new(21, 0);
        let n_paths = 10_000;
        let paths = sampler.sample_batch(n_paths, &mut stream);

        for &i in &[0usize, 15, 31] {
            let var = paths.row(i).iter().map(|v| v * v).sum::<f64>() / n_paths as f64;
            assert!((var - 1.0).abs() < 0.03, "var at {i} = {var}");
        }

        let lag1: f64 = (0..n_paths)
            .map(|k| paths[(10, k)] * paths[(11, k)])
            .sum::<f64>()
            / n_paths as f64;
        let expected = cov.eval(grid.point(10), grid.point(11));
        assert!((lag1 - expected).abs() < 0.03, "lag-1 corr {lag1} vs {expected}");
    }

    #[test]
    fn constant_covariance_rejected() {
        let cov = CovarianceHandle1D::new(|_, _| 1.0);
        let grid = Grid1D::new(0.0, 0.1, 16).unwrap();
        assert!(GaussianSampler1D::new(&cov, grid).is_err());
    }

    #[test]
    fn indefinite_covariance_rejected() {
        // exp(-|d|^3) is not positive semidefinite.
        let cov = CovarianceHandle1D::new(|t, s| (-(t - s).abs().powi(3)).exp());
        let grid = Grid1D::new(0.0, 0.3, 32).unwrap();
        match GaussianSampler1D::new(&cov, grid) {
            Err(crate::Error::IndefiniteCovariance { .. }) => {}
            Err(e) => panic!("expected IndefiniteCovariance, got {e:?}"),
            Ok(_) => panic!("expected IndefiniteCovariance, got a sampler"),
        }
    }

    #[test]
    fn asymmetric_rejected() {
        let cov = CovarianceHandle1D::new(|t, s| {
            let d = t - s;
            (-0.5 * d * d).exp() + 0.001 * d
        });
        let grid = Grid1D::new(0.0, 0.1, 16).unwrap();
        assert!(GaussianSampler1D::new(&cov, grid).is_err());
    }

    #[test]
    fn batch_matches_sequential_draw_order() {
        let cov = CovarianceHandle1D::squared_exponential();
        let grid = Grid1D::new(0.0, 0.5, 16).unwrap();
        let sampler = GaussianSampler1D::new(&cov, grid).unwrap();
        let mut s1 = RandomStream::new(9, 4);
        let mut s2 = RandomStream::new(9, 4);
        let batch = sampler.sample_batch(3, &mut s1);
        for k in 0..3 {
            let single = sampler.sample(&mut s2);
            for i in 0..16 {
                assert_eq!(batch[(i, k)].to_bits(), single[i].to_bits());
            }
        }
    }
}

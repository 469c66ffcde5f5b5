//! Exact gridded evaluation of cosine fields with freshly drawn coefficients.

use super::sim1d::Grid1D;
use super::sim2d::{Field2D, Grid2D};
use crate::cosine::{cosine_field_eval, CosineSpec};
use crate::error::{Error, Result};
use crate::numerics::RandomStream;

/// Draws 2N coefficients and evaluates the N=1 field on the grid.
pub fn simulate_cosine_1d(
    spec: &CosineSpec,
    grid: Grid1D,
    stream: &mut RandomStream,
) -> Result<Vec<f64>> {
    if spec.n_dim != 1 {
        return Err(Error::invariant(format!(
            "1D grid requires n_dim = 1, got {}",
            spec.n_dim
        )));
    }
    let mut coeffs = [0.0f64; 2];
    stream.fill_normals(&mut coeffs);
    (0..grid.n_points)
        .map(|i| cosine_field_eval(spec, &coeffs, &[grid.point(i)]))
        .collect()
}

/// Draws 2N coefficients and evaluates the N=2 field on the grid.
pub fn simulate_cosine_2d(
    spec: &CosineSpec,
    grid: Grid2D,
    stream: &mut RandomStream,
) -> Result<Field2D> {
    if spec.n_dim != 2 {
        return Err(Error::invariant(format!(
            "2D grid requires n_dim = 2, got {}",
            spec.n_dim
        )));
    }
    let mut coeffs = [0.0f64; 4];
    stream.fill_normals(&mut coeffs);
    let [n0, n1] = grid.n_points;
    let mut values = Vec::with_capacity(n0 * n1);
    for i in 0..n0 {
        for j in 0..n1 {
            let t = grid.point(i, j);
            values.push(cosine_field_eval(spec, &coeffs, &t)?);
        }
    }
    Field2D::from_row_major(grid.n_points, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_mismatch_rejected() {
        let spec = CosineSpec::unit_frequencies(2).unwrap();
        let grid = Grid1D::new(0.0, 0.1, 16).unwrap();
        assert!(simulate_cosine_1d(&spec, grid, &mut RandomStream::new(1, 0)).is_err());
    }

    #[test]
    fn variance_at_a_point() {
        let spec = CosineSpec::new(vec![1.3]).unwrap();
        let grid = Grid1D::new(0.4, 0.1, 16).unwrap();
        let mut stream = RandomStream::new(41, 0);
        let n = 100_000;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let path = simulate_cosine_1d(&spec, grid, &mut stream).unwrap();
            sum_sq += path[7] * path[7];
        }
        let var = sum_sq / n as f64;
        assert!((var - 1.0).abs() < 0.02, "var = {var}");
    }

    #[test]
    fn field_2d_matches_pointwise_eval() {
        let spec = CosineSpec::new(vec![1.0, 2.5]).unwrap();
        let grid = Grid2D::new([0.0, -1.0], [0.2, 0.3], [16, 16]).unwrap();
        let f = simulate_cosine_2d(&spec, grid, &mut RandomStream::new(42, 0)).unwrap();
        let mut stream = RandomStream::new(42, 0);
        let mut coeffs = [0.0f64; 4];
        stream.fill_normals(&mut coeffs);
        let t = grid.point(3, 11);
        let direct = cosine_field_eval(&spec, &coeffs, &t).unwrap();
        assert_eq!(f.get(3, 11).to_bits(), direct.to_bits());
    }
}

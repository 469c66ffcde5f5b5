//! Discrete local-maximum extraction and CSV emission of peak samples.

use super::sim1d::Grid1D;
use super::sim2d::{Field2D, Grid2D};
use std::io::Write;

/// A strict local maximum on the grid: height exceeds every grid neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSample {
    pub location: Vec<f64>,
    pub height: f64,
}

/// Strict interior local maxima of a sampled path (both neighbors lower).
/// Ties are discarded; they have probability zero for nondegenerate fields.
pub fn find_peaks_1d(values: &[f64], grid: Grid1D) -> Vec<PeakSample> {
    let mut peaks = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        if values[i] > values[i - 1] && values[i] > values[i + 1] {
            peaks.push(PeakSample {
                location: vec![grid.point(i)],
                height: values[i],
            });
        }
    }
    peaks
}

/// Strict interior local maxima over the full 8-neighborhood.
pub fn find_peaks_2d(field: &Field2D, grid: Grid2D) -> Vec<PeakSample> {
    let [n0, n1] = field.n_points;
    let mut peaks = Vec::new();
    if n0 < 3 || n1 < 3 {
        return peaks;
    }
    for i in 1..n0 - 1 {
        for j in 1..n1 - 1 {
            let v = field.get(i, j);
            let dominates = (-1i64..=1)
                .flat_map(|di| (-1i64..=1).map(move |dj| (di, dj)))
                .filter(|&(di, dj)| di != 0 || dj != 0)
                .all(|(di, dj)| {
                    v > field.get((i as i64 + di) as usize, (j as i64 + dj) as usize)
                });
            if dominates {
                let t = grid.point(i, j);
                peaks.push(PeakSample {
                    location: vec![t[0], t[1]],
                    height: v,
                });
            }
        }
    }
    peaks
}

/// Emits peak samples as CSV: replication, location per axis, height.
/// 17 significant digits so files are byte-comparable across runs.
pub fn write_peaks_csv<W: Write>(
    w: &mut W,
    rows: impl Iterator<Item = (usize, PeakSample)>,
    n_axes: usize,
) -> std::io::Result<()> {
    write!(w, "replication")?;
    for k in 0..n_axes {
        write!(w, ",location{}", k + 1)?;
    }
    writeln!(w, ",height")?;
    for (rep, peak) in rows {
        write!(w, "{rep}")?;
        for x in &peak.location {
            write!(w, ",{x:.16e}")?;
        }
        writeln!(w, ",{:.16e}", peak.height)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosine::CosineSpec;
    use crate::numerics::RandomStream;
    use crate::validate::simulate_cosine_1d;

    fn grid1(n: usize, step: f64) -> Grid1D {
        Grid1D::new(0.0, step, n).unwrap()
    }

    #[test]
    fn monotone_ramp_has_no_peaks() {
        let values: Vec<f64> = (0..32).map(|i| i as f64 * 0.1).collect();
        assert!(find_peaks_1d(&values, grid1(32, 0.1)).is_empty());
    }

    #[test]
    fn single_bump_has_one_peak() {
        let g = grid1(64, 0.1);
        let values: Vec<f64> = (0..64).map(|i| (-(g.point(i) - 3.0).powi(2)).exp()).collect();
        let peaks = find_peaks_1d(&values, g);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].location[0] - 3.0).abs() < 0.1 + 1e-12);
    }

    #[test]
    fn boundary_maxima_excluded() {
        let mut values = vec![0.0; 32];
        values[0] = 5.0;
        values[31] = 4.0;
        assert!(find_peaks_1d(&values, grid1(32, 0.1)).is_empty());
    }

    #[test]
    fn plateau_ties_discarded() {
        let mut values = vec![0.0; 32];
        values[10] = 1.0;
        values[11] = 1.0;
        assert!(find_peaks_1d(&values, grid1(32, 0.1)).is_empty());
    }

    #[test]
    fn cosine_peak_matches_amplitude() {
        // Single-harmonic field: the continuum maximum is sqrt(z^2 + z'^2).
        let spec = CosineSpec::new(vec![1.0]).unwrap();
        let grid = Grid1D::new(0.0, 0.01, 700).unwrap();
        let mut stream = RandomStream::new(51, 0);
        let path = simulate_cosine_1d(&spec, grid, &mut stream).unwrap();
        let mut coeff_stream = RandomStream::new(51, 0);
        let (z, zp) = (coeff_stream.next_normal(), coeff_stream.next_normal());
        let amp = (z * z + zp * zp).sqrt();
        let peaks = find_peaks_1d(&path, grid);
        // Span is one period plus a sliver, so the unique maximum appears
        // once, or twice when it lands in the overlap.
        assert!((1..=2).contains(&peaks.len()), "{} peaks", peaks.len());
        for p in &peaks {
            assert!((p.height - amp).abs() < 1e-3, "{} vs {amp}", p.height);
            assert!(p.height > 0.0);
        }
    }

    #[test]
    fn bump_2d_single_peak() {
        let grid = Grid2D::new([0.0, 0.0], [0.1, 0.1], [32, 32]).unwrap();
        let mut data = Vec::with_capacity(32 * 32);
        for i in 0..32 {
            for j in 0..32 {
                let [t1, t2] = grid.point(i, j);
                data.push((-(t1 - 1.5).powi(2) - (t2 - 1.5).powi(2)).exp());
            }
        }
        let field = Field2D::from_row_major([32, 32], data).unwrap();
        let peaks = find_peaks_2d(&field, grid);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].location[0] - 1.5).abs() < 0.1 + 1e-12);
        assert!((peaks[0].location[1] - 1.5).abs() < 0.1 + 1e-12);
    }

    #[test]
    fn saddle_is_not_a_peak() {
        let grid = Grid2D::new([-1.0, -1.0], [0.1, 0.1], [21, 21]).unwrap();
        let mut data = Vec::with_capacity(21 * 21);
        for i in 0..21 {
            for j in 0..21 {
                let [t1, t2] = grid.point(i, j);
                data.push(t1 * t1 - t2 * t2);
            }
        }
        let field = Field2D::from_row_major([21, 21], data).unwrap();
        assert!(find_peaks_2d(&field, grid).is_empty());
    }

    #[test]
    fn csv_format() {
        let peaks = vec![
            (
                0usize,
                PeakSample {
                    location: vec![1.0],
                    height: 2.5,
                },
            ),
            (
                1usize,
                PeakSample {
                    location: vec![-0.5],
                    height: 0.25,
                },
            ),
        ];
        let mut buf = Vec::new();
        write_peaks_csv(&mut buf, peaks.into_iter(), 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "replication,location1,height");
        assert!(lines.next().unwrap().starts_with("0,1.0000000000000000e0,"));
        assert_eq!(text.lines().count(), 3);
    }
}

//! Empirical exceedance distributions and the Kolmogorov-Smirnov statistic
//! against a theoretical tail function.

use crate::error::{Error, Result};

/// Minimum sample count for a KS verdict.
pub const MIN_KS_SAMPLES: usize = 200;

/// Sorted sample of peak heights; exposes the empirical exceedance function
/// P_hat[height > u].
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invariant("at least one sample required"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::invariant("samples must be finite"));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(EmpiricalCdf { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Right-continuous empirical exceedance P_hat[X > u].
    pub fn exceedance(&self, u: f64) -> f64 {
        let above = self.sorted.partition_point(|v| *v <= u);
        (self.sorted.len() - above) as f64 / self.sorted.len() as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }
}

/// KS statistic sup_u |empirical exceedance - F(u)| with F a theoretical
/// tail (exceedance) function, evaluated over both jump sides at every
/// sample point. Requires at least MIN_KS_SAMPLES samples for a verdict.
pub fn ks_distance(emp: &EmpiricalCdf, tail: impl Fn(f64) -> f64) -> Result<f64> {
    let n = emp.len();
    if n < MIN_KS_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: n,
            need: MIN_KS_SAMPLES,
        });
    }
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &h) in emp.samples().iter().enumerate() {
        let f = tail(h);
        let right = (n - i - 1) as f64 / nf;
        let left = (n - i) as f64 / nf;
        d = d.max((f - right).abs()).max((f - left).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RandomStream;
    use crate::Error;

    #[test]
    fn identity_within_one_over_n() {
        let samples: Vec<f64> = (0..500).map(|i| i as f64 * 0.01).collect();
        let emp = EmpiricalCdf::new(samples).unwrap();
        let emp2 = emp.clone();
        let d = ks_distance(&emp, move |u| emp2.exceedance(u)).unwrap();
        assert!(d <= 1.0 / 500.0 + 1e-12, "d = {d}");
    }

    #[test]
    fn uniform_draws_vs_uniform_tail() {
        let mut stream = RandomStream::new(61, 0);
        let samples: Vec<f64> = (0..10_000)
            .map(|_| crate::numerics::std_normal_cdf(stream.next_normal()))
            .collect();
        let emp = EmpiricalCdf::new(samples).unwrap();
        let d = ks_distance(&emp, |u| (1.0 - u).clamp(0.0, 1.0)).unwrap();
        assert!(d < 0.025, "d = {d}");
    }

    #[test]
    fn detects_wrong_distribution() {
        let mut stream = RandomStream::new(62, 0);
        let samples: Vec<f64> = (0..10_000).map(|_| stream.next_normal()).collect();
        let emp = EmpiricalCdf::new(samples).unwrap();
        // Claim the samples are N(0.5, 1): the shift must show up.
        let d = ks_distance(&emp, |u| crate::numerics::std_normal_tail(u - 0.5)).unwrap();
        assert!(d > 0.1, "d = {d}");
    }

    #[test]
    fn insufficient_samples_no_verdict() {
        let emp = EmpiricalCdf::new(vec![0.0; 199]).unwrap();
        match ks_distance(&emp, |_| 0.5) {
            Err(Error::InsufficientSamples { got: 199, need: 200 }) => {}
            other => panic!("expected InsufficientSamples, got {other:?}"),
        }
    }

    #[test]
    fn exceedance_is_right_continuous() {
        let emp = EmpiricalCdf::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(emp.exceedance(2.0), 0.5);
        assert_eq!(emp.exceedance(1.999_999), 0.75);
        assert_eq!(emp.exceedance(0.0), 1.0);
        assert_eq!(emp.exceedance(5.0), 0.0);
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Reproducible stream of standard normal variates.
///
/// Built on a counter-based stream cipher: a fixed `(seed, stream_index)`
/// pair yields the identical sequence on every platform, and distinct stream
/// indices yield independent non-overlapping streams. Parallel consumers each
/// take their own index, so chunking never changes the draws.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_index);
        RandomStream {
            seed,
            stream_index,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Fresh stream with the same seed and a different index.
    pub fn substream(&self, stream_index: u64) -> Self {
        RandomStream::new(self.seed, stream_index)
    }

    pub fn next_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn fill_normals(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.next_normal();
        }
    }
}

/// A Monte-Carlo estimate with its standard error and sample count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl EstimateWithError {
    /// Sample mean and stderr = sample standard deviation / sqrt(n).
    pub fn from_terms(terms: &[f64]) -> Self {
        let n = terms.len();
        assert!(n >= 1, "at least one estimator term required");
        let mean = terms.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        EstimateWithError {
            value: mean,
            stderr,
            n_samples: n,
        }
    }

    /// From streaming moments: sum of terms and sum of squared terms.
    pub fn from_moments(sum: f64, sum_sq: f64, n: usize) -> Self {
        assert!(n >= 1);
        let mean = sum / n as f64;
        let stderr = if n > 1 {
            let var = (sum_sq - sum * sum / n as f64).max(0.0) / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        EstimateWithError {
            value: mean,
            stderr,
            n_samples: n,
        }
    }
}

use thiserror::Error;

/// Errors shared across the formula evaluators and the simulation harness.
#[derive(Error, Debug, Clone)]
pub enum Error {
    /// A domain-type invariant failed at construction; the message names the
    /// violated inequality.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Adaptive quadrature ran out of subdivisions before reaching tolerance.
    #[error("quadrature did not converge: value {value:.6e}, achieved error {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNonConvergence {
        value: f64,
        achieved: f64,
        requested: f64,
    },

    /// Importance-sampling weights collapsed (effective sample size below 1%
    /// of the draw count); happens as c approaches -1/N.
    #[error("importance weights degenerate: effective sample size {ess:.1} of {n} draws")]
    WeightDegeneracy { ess: f64, n: usize },

    /// A Monte-Carlo denominator is statistically indistinguishable from zero.
    #[error("denominator estimate {value:.3e} within 3 stderr ({stderr:.3e}) of zero; result unreliable")]
    DegenerateDenominator { value: f64, stderr: f64 },

    /// Grid covariance matrix is indefinite beyond the clipping floor.
    #[error("covariance matrix indefinite: smallest eigenvalue {min_eig:.3e} below floor {floor:.3e}")]
    IndefiniteCovariance { min_eig: f64, floor: f64 },

    /// Not enough peak samples to make a Kolmogorov-Smirnov verdict.
    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}

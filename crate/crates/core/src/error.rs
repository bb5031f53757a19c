use thiserror::Error;

/// Errors raised by the library.
///
/// Every variant names the violated precondition so callers (and the CLI) can
/// report it verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid scale c = {0}: c must be a finite real > 1")]
    InvalidC(String),

    #[error("invalid rate: {0}")]
    InvalidRate(String),

    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("degenerate model: r = 1 makes the stationary law a point mass at c/(c-1)")]
    DegenerateModel,

    #[error("the innovation law is not infinitely divisible (r = {r} > pq = {pq}, p > 0)")]
    NotInfinitelyDivisible { r: f64, pq: f64 },

    #[error("p = 0: the innovation law is a shifted geometric law, use its closed form")]
    PZero,

    #[error("q = 0: Bernoulli-convolution regime, outside the hypothesis of this operation")]
    QZero,

    #[error("pmf has no mass at 0; Katti's recursion is undefined")]
    ZeroAtOrigin,

    #[error("p = r: A = 1 and the expansion of log(1 + A cos z) diverges at z = pi")]
    DegenerateAB,

    #[error("the Levy series sum_m a_m diverges since r >= p (r/p = {ratio})")]
    DivergentLevySeries { ratio: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error(
        "truncation too small: weight {weight:.3e} is not separated from 0 by the tail bound {tail_bound:.3e}; increase nmax/mmax"
    )]
    TruncationTooSmall { weight: f64, tail_bound: f64 },

    #[error("not a Pisot number: {0}")]
    NotPisot(String),

    #[error("roots could not be certified: {0}")]
    UncertifiedRoots(String),

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

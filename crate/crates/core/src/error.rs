use crate::chaos::MultiIndex;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("basis index {index} out of range for K = {k}")]
    IndexRange { index: usize, k: usize },

    #[error(
        "total degree {degree} exceeds cap {cap} while combining {lhs} and {rhs}; \
         raise max_degree or prune the operands"
    )]
    DegreeCap {
        degree: usize,
        cap: usize,
        lhs: MultiIndex,
        rhs: MultiIndex,
    },

    #[error("operands live on different coordinate counts: K = {0} vs K = {1}")]
    MixedK(usize, usize),

    #[error("spectral scaling overflowed: |log c| + p·Σ α_k·log λ_k = {exponent:.1} exceeds the f64 range")]
    GammaOverflow { exponent: f64 },

    #[error("quadrature failed to reach tolerance {tol:e} after {refinements} refinements (last delta {last:e})")]
    QuadratureStall {
        tol: f64,
        refinements: usize,
        last: f64,
    },

    #[error("gram cache rejected: {0}")]
    CacheFormat(String),

    #[error("time {t} is outside the cached grid [0, {t_max}]")]
    GridRange { t: f64, t_max: f64 },

    #[error("moment blow-up: {0}")]
    BeyondLifeTime(String),

    #[error("{what} requires p > {min_p} (got p = {p})")]
    RegularityRange { what: &'static str, min_p: f64, p: f64 },

    #[error("Monte Carlo projection of an unbounded function needs a declared growth bound")]
    MissingGrowthBound,

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian within tolerance")]
    NotHermitian,
    #[error("matrix has a negative eigenvalue {0:e} below tolerance")]
    NegativeEigenvalue(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("correlation coefficient magnitude {0} must be below 1")]
    CorrelationNotPsd(f64),
    #[error("invalid system dimensions: {0}")]
    InvalidDims(String),
    #[error("invalid link statistics: {0}")]
    InvalidLinkStats(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("codebook of 2^{bits} words exceeds the cap of {cap} words")]
    BudgetTooLarge { bits: u32, cap: usize },
    #[error("codeword {0} lies in the null space of the correlation transform")]
    DegenerateCodeword(usize),
    #[error("cannot quantize a zero matrix")]
    ZeroInput,
    #[error("link statistics have rank one; distortion coefficient is undefined")]
    RankOne,
    #[error("no link is eligible for bit allocation")]
    NoEligibleLinks,
    #[error("quadrature did not reach tolerance (estimated error {0:e})")]
    QuadratureFailure(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

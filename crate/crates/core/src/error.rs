use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("non-finite covariate at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error(
        "symmetric eigensolver did not converge (dimension {dimension}, {iterations} sweeps, \
         Frobenius norm {frobenius:e})"
    )]
    EigenFailure {
        dimension: usize,
        iterations: usize,
        frobenius: f64,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error("weights violate the truncated simplex: {reason}")]
    InfeasibleWeights { reason: &'static str },
    #[error("dual matrix violates |U_ij| <= lambda_star (max entry {max_entry:e} > {lambda_star:e})")]
    InfeasibleDual { max_entry: f64, lambda_star: f64 },
    #[error("empirical Gram matrix is singular (lambda_Sigma = 0); tuning requires lambda_Sigma > 0")]
    SingularGram,
    #[error("covariate law lacks the finite moments required for {what}")]
    MissingMoments { what: &'static str },
    #[error("oracle size limit exceeded: {what}")]
    OracleTooLarge { what: &'static str },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }
}

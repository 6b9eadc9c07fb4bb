use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver failed to converge: {reason} (outer={outer_iterations}, p(theta)={p_theta_residual:e}, kraft={kraft_residual:e})")]
    SolverFailure { reason: String, outer_iterations: usize, p_theta_residual: f64, kraft_residual: f64 },

    #[error("{count} subsets exceed the enumeration limit of {limit}")]
    TooManySubsets { count: u128, limit: u128 },

    #[error("no grid point converged")]
    NoConvergedPoints,

    #[error("internal error: {0}")]
    Internal(String),
}

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: String,
        expected: String,
        found: String,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("invalid tolerance {name} = {value}: must be finite and positive")]
    Tolerance { name: &'static str, value: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// `A` is not in the unique-solvability set: the named eigenvalue pair
    /// sums to (numerically) zero.
    #[error(
        "coefficient matrix admits no unique Lyapunov solution: eigenvalues {lambda_i} and {lambda_j} sum to {pair_sum:.3e} (threshold {threshold:.3e})"
    )]
    NotUniquelySolvable {
        lambda_i: Complex64,
        lambda_j: Complex64,
        pair_sum: f64,
        threshold: f64,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("corrupt data: no matrix maps the samples onto their derivatives (relative residual {residual:.3e})")]
    CorruptData { residual: f64 },

    #[error("invalid prior knowledge: {0}")]
    InvalidPrior(String),

    #[error("true system is not a member of the prior knowledge set: {0}")]
    PriorMembership(String),

    #[error(
        "no member of the affine set with a unique Lyapunov solution found in {attempts} attempts"
    )]
    NoMemberFound { attempts: usize },

    #[error("degenerate set: collected {collected} of {requested} admissible samples")]
    DegenerateSet { requested: usize, collected: usize },

    #[error("integrity failure: {0}")]
    Integrity(String),

    #[error("reduced system is rank deficient: rank {rank} < {unknowns} unknowns")]
    UniquenessViolation { rank: usize, unknowns: usize },

    #[error("reduced system has no solution: residual {residual:.3e} exceeds {threshold:.3e}")]
    ReducedResidual { residual: f64, threshold: f64 },

    #[error("basis is not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("{0}")]
    Input(String),
}

impl Error {
    pub(crate) fn dim(
        context: impl Into<String>,
        expected: impl std::fmt::Display,
        found: impl std::fmt::Display,
    ) -> Self {
        Error::Dimension {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

pub(crate) fn check_tol(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Tolerance { name, value })
    }
}

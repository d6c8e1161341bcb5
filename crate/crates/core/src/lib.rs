//! Decide whether a state-trajectory dataset together with prior knowledge
//! about an unknown continuous-time LTI system `ẋ = Ax` pins down the solution
//! of the Lyapunov equation `AP + PAᵀ = −Q`, and compute that solution from
//! the data/knowledge pair without identifying `A`.
//!
//! Module map:
//!
//! * [`matspace`]: vectorization, Kronecker-sum operator, SVD-based kernels,
//!   column spaces and affine-subspace intersection.
//! * [`lyapcore`]: spectral gap, unique-solvability test, dense Lyapunov solves.
//! * [`sysmodel`]: datasets, prior-knowledge classes, the consistent set.
//! * [`informativity`]: the joint-informativity checkers.
//! * [`solver`]: solution recovery (general and reduced paths).
//! * [`oracle`]: brute-force sampling verification of verdicts.
//! * [`trajgen`]: trajectory synthesis and derivative estimation.
//! * [`cli`]: instance file format, reports and command implementations.

pub mod cli;
pub mod error;
pub mod informativity;
pub mod lyapcore;
pub mod matspace;
pub mod oracle;
pub mod solver;
pub mod sysmodel;
pub mod trajgen;

pub use error::{Error, Result};
pub use matspace::{AffineMatrixSet, DenseMatrix, SubspaceBasis};

/// Default relative threshold for numerical rank and residual decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Default relative threshold for the `λ + λ′ ≠ 0` test.
pub const DEFAULT_GAP_TOL: f64 = 1e-8;
/// Default pairwise agreement threshold used by the sampling oracle.
pub const DEFAULT_AGREE_TOL: f64 = 1e-6;
/// Default number of member-search attempts.
pub const DEFAULT_MAX_ATTEMPTS: usize = 64;

/// Tolerance bundle threaded through the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub rank_tol: f64,
    pub gap_tol: f64,
    pub agree_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            gap_tol: DEFAULT_GAP_TOL,
            agree_tol: DEFAULT_AGREE_TOL,
        }
    }
}

//! Recovering the Lyapunov solution from an informative data/knowledge pair.
//!
//! When the pair is informative, every member of the consistent set with a
//! unique Lyapunov solution yields the same solution, so any such member can
//! stand in for the unknown system.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_tol, Error, Result};
use crate::lyapcore::{in_an, solve_lyapunov};
use crate::matspace::{
    ensure_finite, ensure_square, least_squares, vectorize, AffineMatrixSet, DenseMatrix,
};

/// Relative disagreement between two members' solutions above which
/// [`compute_phi`] reports an integrity failure.
pub const INTEGRITY_TOL: f64 = 1e-6;

/// Seeded stream of members `base + Σ cᵢ·directionᵢ`, `cᵢ ~ scale·N(0,1)`,
/// with the scale doubling after every draw.
struct MemberStream<'a> {
    set: &'a AffineMatrixSet,
    rng: ChaCha8Rng,
    scale: f64,
}

impl<'a> MemberStream<'a> {
    fn new(set: &'a AffineMatrixSet, seed: u64) -> Self {
        Self {
            set,
            rng: ChaCha8Rng::seed_from_u64(seed),
            scale: 1.0,
        }
    }

    fn next_member(&mut self) -> DenseMatrix {
        let coeffs: Vec<f64> = (0..self.set.dim())
            .map(|_| self.scale * Distribution::<f64>::sample(&StandardNormal, &mut self.rng))
            .collect();
        self.scale *= 2.0;
        self.set.member(&coeffs)
    }
}

/// A member of `set` with a unique Lyapunov solution: the base point if it
/// qualifies, otherwise seeded random members. At most `max_attempts` tries
/// in total.
pub fn pick_member_in_an(
    set: &AffineMatrixSet,
    gap_tol: f64,
    seed: u64,
    max_attempts: usize,
) -> Result<DenseMatrix> {
    check_tol("gap_tol", gap_tol)?;
    if max_attempts == 0 {
        return Err(Error::NoMemberFound { attempts: 0 });
    }
    if in_an(set.base(), gap_tol)? {
        return Ok(set.base().clone());
    }
    if set.dim() > 0 {
        let mut stream = MemberStream::new(set, seed);
        for _ in 1..max_attempts {
            let candidate = stream.next_member();
            if in_an(&candidate, gap_tol)? {
                return Ok(candidate);
            }
        }
    }
    Err(Error::NoMemberFound {
        attempts: max_attempts,
    })
}

/// A second member distinct from `first`, used for the integrity spot check.
fn second_member(
    set: &AffineMatrixSet,
    first: &DenseMatrix,
    gap_tol: f64,
    seed: u64,
    max_attempts: usize,
) -> Result<Option<DenseMatrix>> {
    if set.dim() == 0 {
        return Ok(None);
    }
    let mut stream = MemberStream::new(set, seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    for _ in 0..max_attempts {
        let candidate = stream.next_member();
        if (&candidate - first).norm() > 1e-6 * (1.0 + first.norm()) && in_an(&candidate, gap_tol)?
        {
            return Ok(Some(candidate));
        }
    }
    Ok(None)
}

/// `Φ(A,Q)` from the consistent set of an informative pair.
///
/// After solving with one member, a second independent member is solved as
/// a spot check; disagreement beyond [`INTEGRITY_TOL`] (relative) means the
/// pair was not informative and is reported as [`Error::Integrity`].
pub fn compute_phi(
    set: &AffineMatrixSet,
    q: &DenseMatrix,
    gap_tol: f64,
    seed: u64,
) -> Result<DenseMatrix> {
    let max_attempts = crate::DEFAULT_MAX_ATTEMPTS;
    let member = pick_member_in_an(set, gap_tol, seed, max_attempts)?;
    let p = solve_lyapunov(&member, q, gap_tol)?;
    if let Some(other) = second_member(set, &member, gap_tol, seed, max_attempts)? {
        let p2 = solve_lyapunov(&other, q, gap_tol)?;
        let gap = (&p - &p2).norm() / (1.0 + p.norm());
        if gap > INTEGRITY_TOL {
            return Err(Error::Integrity(format!(
                "two members of the consistent set give solutions {gap:.3e} apart; the pair is not informative"
            )));
        }
    }
    Ok(p)
}

/// `Φ(Ã,Q)` for a caller-chosen member `Ã` of the consistent set.
pub fn compute_phi_from_member(
    set: &AffineMatrixSet,
    member: &DenseMatrix,
    q: &DenseMatrix,
    gap_tol: f64,
    rank_tol: f64,
) -> Result<DenseMatrix> {
    check_tol("rank_tol", rank_tol)?;
    if !set.contains(member, rank_tol) {
        return Err(Error::Input(format!(
            "chosen matrix is {:.3e} away from the consistent set",
            set.membership_residual(member)
        )));
    }
    solve_lyapunov(member, q, gap_tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSolution {
    /// `r × r` unknown of the reduced equation.
    pub w: DenseMatrix,
    /// `n × r`, orthonormal columns.
    pub z: DenseMatrix,
    /// `Z W Zᵀ`.
    pub p: DenseMatrix,
}

impl ReducedSolution {
    pub fn r(&self) -> usize {
        self.z.ncols()
    }
}

pub(crate) fn check_orthonormal_columns(z: &DenseMatrix) -> Result<()> {
    ensure_finite(z, "Z")?;
    let r = z.ncols();
    let deviation = (z.transpose() * z - DMatrix::<f64>::identity(r, r)).amax();
    if deviation > 1e-10 {
        return Err(Error::NotOrthonormal { deviation });
    }
    Ok(())
}

/// The `n² × r²` matrix of `W ↦ vec(Ã Z W Zᵀ + Z W Zᵀ Ãᵀ)`,
/// namely `Z ⊗ ÃZ + ÃZ ⊗ Z`.
pub fn reduced_system(a: &DenseMatrix, z: &DenseMatrix) -> Result<DenseMatrix> {
    let n = ensure_square(a, "reduced_system")?;
    if z.nrows() != n {
        return Err(Error::dim("Z rows", n, z.nrows()));
    }
    let az = a * z;
    Ok(z.kronecker(&az) + az.kronecker(z))
}

/// Solves `ÃZWZᵀ + ZWZᵀÃᵀ = −Q` for the `r × r` matrix `W`.
///
/// The system must have full column rank `r²` (otherwise the premises of
/// the reduction fail) and a residual at most `rank_tol·(1 + ‖Q‖_F)`
/// (otherwise the pair is not informative for this `Q`).
pub fn compute_phi_reduced(
    a: &DenseMatrix,
    z: &DenseMatrix,
    q: &DenseMatrix,
    rank_tol: f64,
) -> Result<ReducedSolution> {
    check_tol("rank_tol", rank_tol)?;
    let n = ensure_square(a, "compute_phi_reduced")?;
    if q.shape() != (n, n) {
        return Err(Error::dim(
            "Q",
            format!("{n}x{n}"),
            format!("{}x{}", q.nrows(), q.ncols()),
        ));
    }
    check_orthonormal_columns(z)?;
    let r = z.ncols();
    let system = reduced_system(a, z)?;
    debug_assert_eq!(system.ncols(), r * r);
    let ls = least_squares(&system, &(-vectorize(q)), rank_tol)?;
    if ls.rank != r * r {
        return Err(Error::UniquenessViolation {
            rank: ls.rank,
            unknowns: r * r,
        });
    }
    let threshold = rank_tol * (1.0 + q.norm());
    if ls.residual > threshold {
        return Err(Error::ReducedResidual {
            residual: ls.residual,
            threshold,
        });
    }
    let w = DMatrix::from_column_slice(r, r, ls.solution.as_slice());
    let p = z * &w * z.transpose();
    Ok(ReducedSolution { w, z: z.clone(), p })
}

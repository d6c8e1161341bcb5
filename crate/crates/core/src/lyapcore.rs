//! Unique solvability of `AP + PAᵀ = −Q` and dense solvers for it.
//!
//! The equation has a unique solution iff `λ + λ′ ≠ 0` for every pair of
//! eigenvalues of `A` (pairs with `λ = λ′` included). [`in_an`] tests that
//! condition with a threshold relative to `1 + ‖A‖_F`.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{check_tol, Error, Result};
use crate::matspace::{
    devectorize, ensure_finite, ensure_square, kron_sum_operator, vectorize, DenseMatrix,
};

/// Residual bound asserted on every returned Lyapunov solution, relative to
/// `1 + ‖Q‖_F`.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-9;

const SCHUR_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGap {
    /// `min |λᵢ + λⱼ|` over all ordered pairs, `i = j` included.
    pub min_pair_sum: f64,
    pub eigenvalues: Vec<Complex64>,
    /// Indices of the minimizing pair.
    pub argmin: (usize, usize),
}

pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<Complex64>> {
    let n = ensure_square(a, "eigenvalues")?;
    ensure_finite(a, "eigenvalues")?;
    let schur = Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITER * n).ok_or_else(|| {
        Error::Numerical(format!(
            "real Schur iteration did not converge for {n}x{n} matrix with ‖A‖_F = {:.3e}",
            a.norm()
        ))
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn spectral_gap(a: &DenseMatrix) -> Result<SpectralGap> {
    let eigenvalues = eigenvalues(a)?;
    let mut min_pair_sum = f64::INFINITY;
    let mut argmin = (0, 0);
    for (i, li) in eigenvalues.iter().enumerate() {
        for (j, lj) in eigenvalues.iter().enumerate().skip(i) {
            let s = (li + lj).norm();
            if s < min_pair_sum {
                min_pair_sum = s;
                argmin = (i, j);
            }
        }
    }
    Ok(SpectralGap {
        min_pair_sum,
        eigenvalues,
        argmin,
    })
}

fn gap_threshold(a: &DenseMatrix, gap_tol: f64) -> f64 {
    gap_tol * (1.0 + a.norm())
}

/// Whether `AP + PAᵀ = −Q` is (numerically) uniquely solvable.
pub fn in_an(a: &DenseMatrix, gap_tol: f64) -> Result<bool> {
    check_tol("gap_tol", gap_tol)?;
    Ok(spectral_gap(a)?.min_pair_sum > gap_threshold(a, gap_tol))
}

fn require_an(a: &DenseMatrix, gap_tol: f64) -> Result<()> {
    check_tol("gap_tol", gap_tol)?;
    let gap = spectral_gap(a)?;
    let threshold = gap_threshold(a, gap_tol);
    if gap.min_pair_sum > threshold {
        Ok(())
    } else {
        let (i, j) = gap.argmin;
        Err(Error::NotUniquelySolvable {
            lambda_i: gap.eigenvalues[i],
            lambda_j: gap.eigenvalues[j],
            pair_sum: gap.min_pair_sum,
            threshold,
        })
    }
}

fn check_operands(a: &DenseMatrix, q: &DenseMatrix) -> Result<usize> {
    let n = ensure_square(a, "Lyapunov coefficient A")?;
    if q.shape() != (n, n) {
        return Err(Error::dim(
            "Lyapunov right-hand side Q",
            format!("{n}x{n}"),
            format!("{}x{}", q.nrows(), q.ncols()),
        ));
    }
    ensure_finite(a, "Lyapunov coefficient A")?;
    ensure_finite(q, "Lyapunov right-hand side Q")?;
    Ok(n)
}

/// `‖AP + PAᵀ + Q‖_F`.
pub fn lyapunov_residual(a: &DenseMatrix, p: &DenseMatrix, q: &DenseMatrix) -> f64 {
    (a * p + p * a.transpose() + q).norm()
}

fn check_residual(a: &DenseMatrix, p: &DenseMatrix, q: &DenseMatrix) -> Result<()> {
    let residual = lyapunov_residual(a, p, q);
    let bound = SOLVE_RESIDUAL_TOL * (1.0 + q.norm());
    if residual <= bound && p.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "Lyapunov residual {residual:.3e} exceeds {bound:.3e}"
        )))
    }
}

/// Unique solution `P` of `AP + PAᵀ = −Q` via an LU solve of the
/// `n² × n²` vectorized system. `Q` need not be symmetric.
pub fn solve_lyapunov(a: &DenseMatrix, q: &DenseMatrix, gap_tol: f64) -> Result<DenseMatrix> {
    let n = check_operands(a, q)?;
    require_an(a, gap_tol)?;
    let op = kron_sum_operator(a)?;
    let rhs = -vectorize(q);
    let x = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("vectorized Lyapunov operator is singular".into()))?;
    let p = devectorize(x.as_slice(), n, n);
    check_residual(a, &p, q)?;
    Ok(p)
}

/// Same equation solved by complex Schur reduction (Bartels–Stewart).
///
/// With `A = U T Uᴴ` the equation becomes `T Y + Y Tᴴ = −Uᴴ Q U` for
/// `Y = Uᴴ P U`, which is solved entrywise by back substitution.
pub fn solve_lyapunov_schur(a: &DenseMatrix, q: &DenseMatrix, gap_tol: f64) -> Result<DenseMatrix> {
    let n = check_operands(a, q)?;
    require_an(a, gap_tol)?;
    let ac: DMatrix<Complex64> = a.map(|v| Complex64::new(v, 0.0));
    let qc: DMatrix<Complex64> = q.map(|v| Complex64::new(v, 0.0));
    let (u, t) = Schur::try_new(ac, f64::EPSILON, SCHUR_MAX_ITER * n)
        .ok_or_else(|| Error::Numerical("complex Schur iteration did not converge".into()))?
        .unpack();
    let c = -(u.adjoint() * qc * &u);

    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let mut acc = c[(i, j)];
            for k in i + 1..n {
                acc -= t[(i, k)] * y[(k, j)];
            }
            for k in j + 1..n {
                acc -= y[(i, k)] * t[(j, k)].conj();
            }
            let denom = t[(i, i)] + t[(j, j)].conj();
            y[(i, j)] = acc / denom;
        }
    }
    let p = (&u * y * u.adjoint()).map(|z| z.re);
    check_residual(a, &p, q)?;
    Ok(p)
}

//! Dense subspace utilities: column-stacking vectorization, the Kronecker-sum
//! operator of `P ↦ AP + PAᵀ`, SVD-based kernels and column spaces, and
//! intersection of affine matrix subspaces.
//!
//! All rank decisions use singular values relative to the largest one, and
//! all subspace equalities are decided by projection residuals.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_tol, Error, Result};

/// Real dense matrix carrier. Storage is column-major, so
/// `as_slice()` is exactly the column-stacking `vec(·)`.
pub type DenseMatrix = DMatrix<f64>;

/// Orthonormality tolerance for [`SubspaceBasis`] invariants.
pub const ORTHO_TOL: f64 = 1e-8;

const SIGN_EPS: f64 = 1e-12;

pub fn ensure_finite(m: &DenseMatrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn ensure_square(m: &DenseMatrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::dim(
            what,
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    if m.nrows() == 0 {
        return Err(Error::dim(what, "at least 1x1", "0x0"));
    }
    Ok(m.nrows())
}

/// Column-stacking vectorization.
pub fn vectorize(m: &DenseMatrix) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &[f64], rows: usize, cols: usize) -> DenseMatrix {
    assert_eq!(v.len(), rows * cols, "devectorize: length mismatch");
    DMatrix::from_column_slice(rows, cols, v)
}

/// `I ⊗ A + A ⊗ I`, the matrix of `P ↦ AP + PAᵀ` acting on `vec(P)`.
pub fn kron_sum_operator(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = ensure_square(a, "kron_sum_operator")?;
    let eye = DMatrix::<f64>::identity(n, n);
    Ok(eye.kronecker(a) + a.kronecker(&eye))
}

/// Singular value decomposition sorted by descending singular value.
struct SortedSvd {
    u: Option<DenseMatrix>,
    singular_values: DVector<f64>,
    /// Right singular vectors as columns.
    v: Option<DenseMatrix>,
}

const SVD_CHECK_TOL: f64 = 1e-10;

fn orthonormality_error(m: &DenseMatrix) -> f64 {
    (m.transpose() * m - DMatrix::identity(m.ncols(), m.ncols())).norm()
}

/// Thin SVD, with factors verified (orthonormal, reconstructing `m`)
/// before use. nalgebra's bidiagonal sweep stops on inaccurate
/// factorizations for some structured inputs, so this goes through faer.
fn svd(m: &DenseMatrix, compute_u: bool, compute_v: bool) -> Result<SortedSvd> {
    debug_assert!(!m.is_empty());
    let f = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let dec = f
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let (fu, fv) = (dec.U(), dec.V());
    let fs = dec.S().column_vector();
    let u = DMatrix::from_fn(fu.nrows(), fu.ncols(), |i, j| fu[(i, j)]);
    let v = DMatrix::from_fn(fv.nrows(), fv.ncols(), |i, j| fv[(i, j)]);
    let singular_values = DVector::from_fn(fs.nrows(), |i, _| fs[i]);

    let err = (&u * DMatrix::from_diagonal(&singular_values) * v.transpose() - m).norm()
        / (1.0 + m.norm());
    let ortho = orthonormality_error(&u).max(orthonormality_error(&v));
    if err > SVD_CHECK_TOL || ortho > SVD_CHECK_TOL {
        return Err(Error::Numerical(format!(
            "inaccurate SVD (reconstruction {err:.3e}, orthonormality {ortho:.3e})"
        )));
    }
    Ok(SortedSvd {
        u: compute_u.then_some(u),
        singular_values,
        v: compute_v.then_some(v),
    })
}

fn threshold(singular_values: &DVector<f64>, rank_tol: f64) -> f64 {
    rank_tol * singular_values.iter().cloned().fold(0.0, f64::max)
}

/// Flips each column so that its first non-negligible coordinate is positive.
fn canonicalize_signs(m: &mut DenseMatrix) {
    for mut col in m.column_iter_mut() {
        if let Some(first) = col.iter().find(|v| v.abs() > SIGN_EPS).copied() {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Orthonormal basis of the numerical null space of `m`, as the columns of
/// the returned `ncols × k` matrix.
pub fn null_space(m: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    check_tol("rank_tol", rank_tol)?;
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if rows == 0 {
        return Ok(DMatrix::identity(cols, cols));
    }
    // A thin SVD only yields min(rows, cols) right singular vectors; padding
    // with zero rows leaves the kernel unchanged and makes V square.
    let padded;
    let target = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        padded = p;
        &padded
    } else {
        m
    };
    let dec = svd(target, false, true)?;
    let thr = threshold(&dec.singular_values, rank_tol);
    let v = dec.v.expect("right singular vectors requested");
    let idx: Vec<usize> = dec
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= thr)
        .map(|(i, _)| i)
        .collect();
    let mut basis = DMatrix::zeros(cols, idx.len());
    for (k, &i) in idx.iter().enumerate() {
        basis.set_column(k, &v.column(i));
    }
    canonicalize_signs(&mut basis);
    Ok(basis)
}

/// Orthonormal kernel basis of `m`, each element an `ncols × 1` matrix.
pub fn kernel_basis(m: &DenseMatrix, rank_tol: f64) -> Result<SubspaceBasis> {
    let k = null_space(m, rank_tol)?;
    SubspaceBasis::from_vec_columns(m.ncols(), 1, &k)
}

/// Orthonormal basis of the numerical column space of `m` (`rows × r`,
/// `r` = numerical rank), ordered by descending singular value.
pub fn column_space_basis(m: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    check_tol("rank_tol", rank_tol)?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(DMatrix::zeros(rows, 0));
    }
    let dec = svd(m, true, false)?;
    let thr = threshold(&dec.singular_values, rank_tol);
    let u = dec.u.expect("left singular vectors requested");
    let r = dec
        .singular_values
        .iter()
        .filter(|&&s| s > thr && s > 0.0)
        .count();
    let mut basis = u.columns(0, r).into_owned();
    canonicalize_signs(&mut basis);
    Ok(basis)
}

/// Numerical rank with a relative singular-value threshold.
pub fn numerical_rank(m: &DenseMatrix, rank_tol: f64) -> Result<usize> {
    Ok(column_space_basis(m, rank_tol)?.ncols())
}

/// Minimum-norm least-squares solution of `m x ≈ b`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: DVector<f64>,
    /// `‖m x − b‖₂`.
    pub residual: f64,
    pub rank: usize,
}

pub fn least_squares(m: &DenseMatrix, b: &DVector<f64>, rank_tol: f64) -> Result<LeastSquares> {
    check_tol("rank_tol", rank_tol)?;
    if m.nrows() != b.len() {
        return Err(Error::dim(
            "least_squares right-hand side",
            m.nrows(),
            b.len(),
        ));
    }
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(LeastSquares {
            solution: DVector::zeros(cols),
            residual: b.norm(),
            rank: 0,
        });
    }
    let dec = svd(m, true, true)?;
    let thr = threshold(&dec.singular_values, rank_tol);
    let u = dec.u.expect("u requested");
    let v = dec.v.expect("v requested");
    let mut solution = DVector::zeros(cols);
    let mut rank = 0;
    for (i, &s) in dec.singular_values.iter().enumerate() {
        if s > thr && s > 0.0 {
            rank += 1;
            let coeff = u.column(i).dot(b) / s;
            solution.axpy(coeff, &v.column(i), 1.0);
        }
    }
    let residual = (m * &solution - b).norm();
    Ok(LeastSquares {
        solution,
        residual,
        rank,
    })
}

/// Ordered orthonormal basis (Frobenius inner product) of a subspace of
/// `rows × cols` matrices. May be empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    rows: usize,
    cols: usize,
    basis: Vec<DenseMatrix>,
}

impl SubspaceBasis {
    /// Builds from matrices that must already be orthonormal.
    pub fn new(rows: usize, cols: usize, basis: Vec<DenseMatrix>) -> Result<Self> {
        for b in &basis {
            if b.shape() != (rows, cols) {
                return Err(Error::dim(
                    "subspace basis element",
                    format!("{rows}x{cols}"),
                    format!("{}x{}", b.nrows(), b.ncols()),
                ));
            }
            ensure_finite(b, "subspace basis element")?;
        }
        let s = Self { rows, cols, basis };
        let deviation = s.orthonormality_deviation();
        if deviation > ORTHO_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(s)
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            basis: Vec::new(),
        }
    }

    /// The standard basis `{E_ij}` in column-stacking order.
    pub fn full(rows: usize, cols: usize) -> Self {
        let basis = (0..rows * cols)
            .map(|k| {
                let mut e = DMatrix::zeros(rows, cols);
                e[(k % rows, k / rows)] = 1.0;
                e
            })
            .collect();
        Self { rows, cols, basis }
    }

    /// Orthonormal basis of the span of arbitrary (possibly dependent)
    /// matrices.
    pub fn span_of(
        rows: usize,
        cols: usize,
        spanning: &[DenseMatrix],
        rank_tol: f64,
    ) -> Result<Self> {
        for s in spanning {
            if s.shape() != (rows, cols) {
                return Err(Error::dim(
                    "spanning matrix",
                    format!("{rows}x{cols}"),
                    format!("{}x{}", s.nrows(), s.ncols()),
                ));
            }
        }
        let mut stacked = DMatrix::zeros(rows * cols, spanning.len());
        for (k, s) in spanning.iter().enumerate() {
            stacked.column_mut(k).copy_from_slice(s.as_slice());
        }
        Self::from_vec_columns(rows, cols, &column_space_basis(&stacked, rank_tol)?)
    }

    /// Wraps the orthonormal columns of `cols_mat` (each a vectorized matrix).
    pub(crate) fn from_vec_columns(
        rows: usize,
        cols: usize,
        cols_mat: &DenseMatrix,
    ) -> Result<Self> {
        let basis = cols_mat
            .column_iter()
            .map(|c| devectorize(c.as_slice(), rows, cols))
            .collect();
        Self::new(rows, cols, basis)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn elements(&self) -> &[DenseMatrix] {
        &self.basis
    }

    /// `(rows·cols) × dim` matrix whose columns are the vectorized elements.
    pub fn as_vec_matrix(&self) -> DenseMatrix {
        let mut m = DMatrix::zeros(self.rows * self.cols, self.basis.len());
        for (k, b) in self.basis.iter().enumerate() {
            m.column_mut(k).copy_from_slice(b.as_slice());
        }
        m
    }

    /// Orthogonal projection of `x` onto the span.
    pub fn project(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut p = DMatrix::zeros(self.rows, self.cols);
        for b in &self.basis {
            p += b * b.dot(x);
        }
        p
    }

    /// Frobenius norm of the component of `x` orthogonal to the span.
    pub fn projection_residual(&self, x: &DenseMatrix) -> f64 {
        (x - self.project(x)).norm()
    }

    fn orthonormality_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - target).abs());
            }
        }
        worst
    }
}

/// Affine subspace `{base + Σ cᵢ·directionᵢ}` of matrices.
///
/// The base point is kept as the minimum-Frobenius-norm member (orthogonal
/// to the direction span), so two representations of the same set share
/// the same base up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMatrixSet {
    base: DenseMatrix,
    directions: SubspaceBasis,
}

impl AffineMatrixSet {
    /// Builds the set from any base point and any spanning list of
    /// directions.
    pub fn new(base: DenseMatrix, spanning: &[DenseMatrix], rank_tol: f64) -> Result<Self> {
        ensure_finite(&base, "affine base")?;
        let directions = SubspaceBasis::span_of(base.nrows(), base.ncols(), spanning, rank_tol)?;
        Self::from_basis(base, directions)
    }

    pub fn from_basis(base: DenseMatrix, directions: SubspaceBasis) -> Result<Self> {
        ensure_finite(&base, "affine base")?;
        if (directions.rows, directions.cols) != base.shape() {
            return Err(Error::dim(
                "affine set directions",
                format!("{}x{}", base.nrows(), base.ncols()),
                format!("{}x{}", directions.rows, directions.cols),
            ));
        }
        let base = &base - directions.project(&base);
        Ok(Self { base, directions })
    }

    pub fn singleton(point: DenseMatrix) -> Self {
        let (r, c) = point.shape();
        Self {
            base: point,
            directions: SubspaceBasis::empty(r, c),
        }
    }

    /// All of `ℝ^{rows×cols}`.
    pub fn full_space(rows: usize, cols: usize) -> Self {
        Self {
            base: DMatrix::zeros(rows, cols),
            directions: SubspaceBasis::full(rows, cols),
        }
    }

    pub fn base(&self) -> &DenseMatrix {
        &self.base
    }

    pub fn directions(&self) -> &SubspaceBasis {
        &self.directions
    }

    /// Number of free directions `d`.
    pub fn dim(&self) -> usize {
        self.directions.dim()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.base.shape()
    }

    /// `base + Σ coeffs[i]·directionᵢ`.
    pub fn member(&self, coeffs: &[f64]) -> DenseMatrix {
        assert_eq!(coeffs.len(), self.dim(), "member: coefficient count");
        let mut m = self.base.clone();
        for (c, d) in coeffs.iter().zip(self.directions.elements()) {
            m += d * *c;
        }
        m
    }

    /// Distance from `x` to the set.
    pub fn membership_residual(&self, x: &DenseMatrix) -> f64 {
        self.directions.projection_residual(&(x - &self.base))
    }

    pub fn contains(&self, x: &DenseMatrix, tol: f64) -> bool {
        x.shape() == self.shape() && self.membership_residual(x) <= tol * (1.0 + x.norm())
    }

    /// Coordinates of the orthogonal projection of `x` onto the set.
    pub fn coordinates(&self, x: &DenseMatrix) -> Vec<f64> {
        let delta = x - &self.base;
        self.directions
            .elements()
            .iter()
            .map(|d| d.dot(&delta))
            .collect()
    }

    /// Set equality up to `tol`: each base lies in the other set and the
    /// direction spans project onto each other.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.shape() != other.shape() || self.dim() != other.dim() {
            return false;
        }
        self.membership_residual(&other.base) <= tol
            && other.membership_residual(&self.base) <= tol
            && self
                .directions
                .elements()
                .iter()
                .all(|d| other.directions.projection_residual(d) <= tol)
            && other
                .directions
                .elements()
                .iter()
                .all(|d| self.directions.projection_residual(d) <= tol)
    }
}

/// Intersection of two affine matrix subspaces; `None` when they are
/// disjoint.
///
/// Solves `D₁c₁ − D₂c₂ = vec(b₂ − b₁)` in the least-squares sense; the sets
/// meet iff the residual is at most `rank_tol·(1 + ‖b₂ − b₁‖)`. The kernel of
/// `[D₁ −D₂]` maps through `D₁` onto the directions of the intersection.
pub fn affine_intersect(
    s1: &AffineMatrixSet,
    s2: &AffineMatrixSet,
    rank_tol: f64,
) -> Result<Option<AffineMatrixSet>> {
    check_tol("rank_tol", rank_tol)?;
    if s1.shape() != s2.shape() {
        return Err(Error::dim(
            "affine_intersect",
            format!("{:?}", s1.shape()),
            format!("{:?}", s2.shape()),
        ));
    }
    let (rows, cols) = s1.shape();
    let d1 = s1.dim();
    let d2 = s2.dim();
    let rhs_m = &s2.base - &s1.base;
    let rhs = vectorize(&rhs_m);
    let threshold = rank_tol * (1.0 + rhs.norm());

    let mut system = DMatrix::zeros(rows * cols, d1 + d2);
    system
        .columns_mut(0, d1)
        .copy_from(&s1.directions.as_vec_matrix());
    system
        .columns_mut(d1, d2)
        .copy_from(&(-s2.directions.as_vec_matrix()));

    let ls = least_squares(&system, &rhs, rank_tol)?;
    if ls.residual > threshold {
        return Ok(None);
    }
    let point = s1.member(&ls.solution.as_slice()[..d1]);

    let kernel = null_space(&system, rank_tol)?;
    let dirs = if kernel.ncols() == 0 || d1 == 0 {
        DMatrix::zeros(rows * cols, 0)
    } else {
        s1.directions.as_vec_matrix() * kernel.rows(0, d1)
    };
    let directions =
        SubspaceBasis::from_vec_columns(rows, cols, &column_space_basis(&dirs, rank_tol)?)?;
    AffineMatrixSet::from_basis(point, directions).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    fn e(n: usize, i: usize, j: usize) -> DenseMatrix {
        let mut m = DMatrix::zeros(n, n);
        m[(i, j)] = 1.0;
        m
    }

    #[test]
    fn wide_least_squares_is_exact() {
        // [D | −I] with D the annihilator directions of a non-axis vector;
        // full row rank, so every right-hand side is hit exactly.
        let x = dmatrix![0.8; -0.35; 0.5];
        let comp = null_space(&x.transpose(), 1e-9).unwrap();
        let mut cols = Vec::new();
        for j in 0..comp.ncols() {
            for i in 0..3 {
                let mut d = DMatrix::zeros(3, 3);
                d.row_mut(i).copy_from(&comp.column(j).transpose());
                cols.push(vectorize(&d));
            }
        }
        let mut m = DMatrix::zeros(9, 15);
        for (k, c) in cols.iter().enumerate() {
            m.set_column(k, c);
        }
        m.columns_mut(6, 9)
            .copy_from(&-DMatrix::<f64>::identity(9, 9));
        let b = DVector::from_fn(9, |i, _| (i as f64 * 0.7).sin() + 0.3);
        let ls = least_squares(&m, &b, 1e-9).unwrap();
        assert_eq!(ls.rank, 9);
        assert!(ls.residual < 1e-12, "residual {}", ls.residual);
    }

    #[test]
    fn vec_is_column_stacking() {
        let m = dmatrix![1.0, 2.0; 3.0, 4.0];
        assert_eq!(vectorize(&m).as_slice(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(devectorize(&[1.0, 3.0, 2.0, 4.0], 2, 2), m);
    }

    #[test]
    fn kron_sum_trivial_cases() {
        let z = kron_sum_operator(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(z, DMatrix::zeros(4, 4));
        let i = kron_sum_operator(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(i, DMatrix::identity(4, 4) * 2.0);
        let d = kron_sum_operator(&dmatrix![-1.0, 0.0; 0.0, -2.0]).unwrap();
        assert_eq!(
            d,
            DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, -3.0, -3.0, -4.0]))
        );
    }

    #[test]
    fn kron_sum_rejects_rectangular() {
        assert!(matches!(
            kron_sum_operator(&DMatrix::zeros(2, 3)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn kernel_of_identity_and_zero() {
        assert_eq!(
            null_space(&DMatrix::identity(3, 3), 1e-9).unwrap().ncols(),
            0
        );
        let k = null_space(&DMatrix::zeros(2, 2), 1e-9).unwrap();
        assert_eq!(k.ncols(), 2);
        assert_abs_diff_eq!(k.transpose() * &k, DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn kernel_of_nilpotent_kron_sum() {
        // {P : NP + PNᵀ = 0} for N = E₁₂ is {[α −β; β 0]}.
        let n = dmatrix![0.0, 1.0; 0.0, 0.0];
        let basis = kernel_basis(&kron_sum_operator(&n).unwrap(), 1e-9).unwrap();
        assert_eq!(basis.dim(), 2);
        let expected = SubspaceBasis::span_of(
            2,
            2,
            &[dmatrix![1.0, 0.0; 0.0, 0.0], dmatrix![0.0, -1.0; 1.0, 0.0]],
            1e-9,
        )
        .unwrap();
        for b in basis.elements() {
            let m = devectorize(b.as_slice(), 2, 2);
            assert!(expected.projection_residual(&m) < 1e-12);
        }
    }

    #[test]
    fn kernel_is_sign_canonical() {
        let m = dmatrix![1.0, 1.0];
        let k = null_space(&m, 1e-9).unwrap();
        assert_eq!(k.ncols(), 1);
        assert!(k[(0, 0)] > 0.0);
        assert_abs_diff_eq!(k[(0, 0)], -k[(1, 0)], epsilon = 1e-12);
    }

    #[test]
    fn column_space_examples() {
        let z = column_space_basis(&DMatrix::identity(2, 2), 1e-9).unwrap();
        assert_eq!(z.ncols(), 2);
        assert_abs_diff_eq!(z.transpose() * &z, DMatrix::identity(2, 2), epsilon = 1e-12);

        let z = column_space_basis(&dmatrix![1.0, 0.0; 0.0, 0.0], 1e-9).unwrap();
        assert_eq!(z.ncols(), 1);
        assert_abs_diff_eq!(z, dmatrix![1.0; 0.0], epsilon = 1e-12);

        let z = column_space_basis(&dmatrix![1.0, 1.0; 1.0, 1.0], 1e-9).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(z, dmatrix![s; s], epsilon = 1e-12);
    }

    #[test]
    fn column_space_of_zero_is_empty() {
        assert_eq!(
            column_space_basis(&DMatrix::zeros(3, 2), 1e-9)
                .unwrap()
                .ncols(),
            0
        );
        assert_eq!(
            column_space_basis(&DMatrix::zeros(3, 0), 1e-9)
                .unwrap()
                .ncols(),
            0
        );
    }

    #[test]
    fn least_squares_reports_residual() {
        let m = dmatrix![1.0; 0.0];
        let b = DVector::from_vec(vec![2.0, 1.0]);
        let ls = least_squares(&m, &b, 1e-9).unwrap();
        assert_abs_diff_eq!(ls.solution[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ls.residual, 1.0, epsilon = 1e-14);
        assert_eq!(ls.rank, 1);
    }

    #[test]
    fn bad_tolerance_rejected() {
        assert!(matches!(
            null_space(&DMatrix::identity(2, 2), 0.0),
            Err(Error::Tolerance { .. })
        ));
    }

    #[test]
    fn subspace_basis_rejects_non_orthonormal() {
        let r = SubspaceBasis::new(2, 2, vec![DMatrix::identity(2, 2)]);
        assert!(matches!(r, Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn intersect_identical_singletons() {
        let b = dmatrix![1.0, 2.0; 3.0, 4.0];
        let s = AffineMatrixSet::singleton(b.clone());
        let r = affine_intersect(&s, &s, 1e-9).unwrap().unwrap();
        assert_eq!(r.dim(), 0);
        assert_abs_diff_eq!(r.base(), &b, epsilon = 1e-12);
    }

    #[test]
    fn intersect_data_set_with_prior_hull() {
        // {ã₁₁ = −1, ã₂₁ = 0} ∩ {ã₂₂ = −2}
        let s1 = AffineMatrixSet::new(
            dmatrix![-1.0, 0.0; 0.0, 0.0],
            &[e(2, 0, 1), e(2, 1, 1)],
            1e-9,
        )
        .unwrap();
        let s2 = AffineMatrixSet::new(
            dmatrix![0.0, 0.0; 0.0, -2.0],
            &[e(2, 0, 0), e(2, 0, 1), e(2, 1, 0)],
            1e-9,
        )
        .unwrap();
        let r = affine_intersect(&s1, &s2, 1e-9).unwrap().unwrap();
        assert_eq!(r.dim(), 1);
        assert_abs_diff_eq!(r.base(), &dmatrix![-1.0, 0.0; 0.0, -2.0], epsilon = 1e-12);
        assert!(r.directions().projection_residual(&e(2, 0, 1)) < 1e-12);
    }

    #[test]
    fn intersect_contradictory_is_empty() {
        let free: Vec<_> = [(0, 1), (1, 0), (1, 1)]
            .iter()
            .map(|&(i, j)| e(2, i, j))
            .collect();
        let s1 = AffineMatrixSet::new(DMatrix::zeros(2, 2), &free, 1e-9).unwrap();
        let s2 = AffineMatrixSet::new(e(2, 0, 0), &free, 1e-9).unwrap();
        assert!(affine_intersect(&s1, &s2, 1e-9).unwrap().is_none());
    }

    #[test]
    fn intersect_with_full_space_is_identity() {
        let s = AffineMatrixSet::new(dmatrix![1.0, 2.0; 0.0, 1.0], &[e(2, 1, 0)], 1e-9).unwrap();
        let r = affine_intersect(&s, &AffineMatrixSet::full_space(2, 2), 1e-9)
            .unwrap()
            .unwrap();
        assert!(r.approx_eq(&s, 1e-10));
    }

    #[test]
    fn base_is_minimum_norm() {
        let s = AffineMatrixSet::new(dmatrix![3.0, 5.0; 0.0, 1.0], &[e(2, 0, 1)], 1e-9).unwrap();
        assert_abs_diff_eq!(s.base(), &dmatrix![3.0, 0.0; 0.0, 1.0], epsilon = 1e-14);
        assert!(s.contains(&dmatrix![3.0, -7.0; 0.0, 1.0], 1e-12));
        assert!(!s.contains(&dmatrix![3.0, -7.0; 1.0, 1.0], 1e-12));
    }
}

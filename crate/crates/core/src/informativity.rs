//! Joint-informativity checkers.
//!
//! For a consistent set `A₀ + span{A₁,…,A_d}` the pair is informative for `Q`
//! iff the stacked equations
//!
//! ```text
//! A₀P + PA₀ᵀ = −Q,   AᵢP + PAᵢᵀ = 0  (i = 1..d)
//! ```
//!
//! have a solution, equivalently iff `Q ∈ L₀(𝒦)` where `L₀(P) = A₀P + PA₀ᵀ`
//! and `𝒦 = {P : AᵢP + PAᵢᵀ = 0 ∀i}`. Both forms are implemented; the
//! stacked form is the production path. Under a subspace-action prior the
//! solutions are exactly `P = ZWZᵀ`, which gives a third, reduced checker.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{check_tol, Error, Result};
use crate::lyapcore::solve_lyapunov;
use crate::matspace::{
    devectorize, kron_sum_operator, least_squares, null_space, vectorize, AffineMatrixSet,
    DenseMatrix, SubspaceBasis,
};
use crate::solver::{check_orthonormal_columns, pick_member_in_an, reduced_system};
use crate::sysmodel::annihilator_directions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictTag {
    Informative,
    NotInformative,
    AssumptionViolated,
}

impl VerdictTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Informative => "informative",
            Self::NotInformative => "not_informative",
            Self::AssumptionViolated => "assumption_violated",
        }
    }
}

impl std::fmt::Display for VerdictTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Two members of the consistent set whose Lyapunov solutions differ.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub a1: DenseMatrix,
    pub a2: DenseMatrix,
    pub phi1: DenseMatrix,
    pub phi2: DenseMatrix,
}

impl Witness {
    pub fn separation(&self) -> f64 {
        (&self.phi1 - &self.phi2).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// Least-squares residual of the decisive linear system.
    pub residual: f64,
    /// Decision threshold `rank_tol·(1 + ‖Q‖_F)`.
    pub threshold: f64,
    pub note: String,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InformativityVerdict {
    pub tag: VerdictTag,
    /// `P*`, present iff the tag is [`VerdictTag::Informative`].
    pub solution: Option<DenseMatrix>,
    pub certificate: Certificate,
}

impl InformativityVerdict {
    pub fn is_informative(&self) -> bool {
        self.tag == VerdictTag::Informative
    }

    fn decide(residual: f64, threshold: f64, p: DenseMatrix, note: &str) -> Self {
        let informative = residual <= threshold;
        Self {
            tag: if informative {
                VerdictTag::Informative
            } else {
                VerdictTag::NotInformative
            },
            solution: informative.then_some(p),
            certificate: Certificate {
                residual,
                threshold,
                note: note.to_string(),
                witness: None,
            },
        }
    }

    fn assumption_violated(note: String) -> Self {
        Self {
            tag: VerdictTag::AssumptionViolated,
            solution: None,
            certificate: Certificate {
                residual: f64::NAN,
                threshold: f64::NAN,
                note,
                witness: None,
            },
        }
    }
}

/// Knobs shared by the checkers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    pub rank_tol: f64,
    pub gap_tol: f64,
    /// Seed of the member search that guards against an empty
    /// `S ∩ 𝒜ₙ`.
    pub seed: u64,
    pub max_attempts: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            rank_tol: crate::DEFAULT_RANK_TOL,
            gap_tol: crate::DEFAULT_GAP_TOL,
            seed: 0,
            max_attempts: crate::DEFAULT_MAX_ATTEMPTS,
        }
    }
}

impl CheckConfig {
    pub fn with_tolerances(t: &crate::Tolerances, seed: u64) -> Self {
        Self {
            rank_tol: t.rank_tol,
            gap_tol: t.gap_tol,
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        check_tol("rank_tol", self.rank_tol)?;
        check_tol("gap_tol", self.gap_tol)
    }
}

/// Orthonormal basis of `𝒦 = ∩ᵢ ker(I⊗Aᵢ + Aᵢ⊗I)`, as `n × n` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSet {
    pub basis: SubspaceBasis,
}

pub fn kernel_set(n: usize, directions: &[DenseMatrix], rank_tol: f64) -> Result<KernelSet> {
    check_tol("rank_tol", rank_tol)?;
    if directions.is_empty() {
        return Ok(KernelSet {
            basis: SubspaceBasis::full(n, n),
        });
    }
    let nn = n * n;
    let mut stacked = DMatrix::zeros(nn * directions.len(), nn);
    for (k, d) in directions.iter().enumerate() {
        if d.shape() != (n, n) {
            return Err(Error::dim(
                "kernel_set direction",
                format!("{n}x{n}"),
                format!("{}x{}", d.nrows(), d.ncols()),
            ));
        }
        stacked
            .view_mut((k * nn, 0), (nn, nn))
            .copy_from(&kron_sum_operator(d)?);
    }
    let basis = SubspaceBasis::from_vec_columns(n, n, &null_space(&stacked, rank_tol)?)?;
    Ok(KernelSet { basis })
}

fn check_q(set: &AffineMatrixSet, q: &DenseMatrix) -> Result<usize> {
    let (n, m) = set.shape();
    if n != m {
        return Err(Error::dim(
            "consistent set",
            "square matrices",
            format!("{n}x{m}"),
        ));
    }
    if q.shape() != (n, n) {
        return Err(Error::dim(
            "Q",
            format!("{n}x{n}"),
            format!("{}x{}", q.nrows(), q.ncols()),
        ));
    }
    crate::matspace::ensure_finite(q, "Q")?;
    Ok(n)
}

/// Runs the member search; `None` when `S ∩ 𝒜ₙ` appears empty.
fn guard_members(set: &AffineMatrixSet, cfg: &CheckConfig) -> Result<Option<InformativityVerdict>> {
    match pick_member_in_an(set, cfg.gap_tol, cfg.seed, cfg.max_attempts) {
        Ok(_) => Ok(None),
        Err(Error::NoMemberFound { attempts }) => {
            Ok(Some(InformativityVerdict::assumption_violated(format!(
                "no member with a unique Lyapunov solution found in {attempts} attempts"
            ))))
        }
        Err(e) => Err(e),
    }
}

fn singleton_verdict(
    set: &AffineMatrixSet,
    q: &DenseMatrix,
    cfg: &CheckConfig,
) -> Result<InformativityVerdict> {
    let p = solve_lyapunov(set.base(), q, cfg.gap_tol)?;
    let residual = crate::lyapcore::lyapunov_residual(set.base(), &p, q);
    Ok(InformativityVerdict::decide(
        residual,
        cfg.rank_tol * (1.0 + q.norm()),
        p,
        "singleton consistent set",
    ))
}

/// Stacked-equation checker; the returned `P*` is the minimum-norm
/// least-squares solution.
pub fn check_informativity_system(
    set: &AffineMatrixSet,
    q: &DenseMatrix,
    cfg: &CheckConfig,
) -> Result<InformativityVerdict> {
    cfg.validate()?;
    let n = check_q(set, q)?;
    if let Some(v) = guard_members(set, cfg)? {
        return Ok(v);
    }
    if set.dim() == 0 {
        return singleton_verdict(set, q, cfg);
    }
    let nn = n * n;
    let d = set.dim();
    let mut system = DMatrix::zeros((d + 1) * nn, nn);
    system
        .view_mut((0, 0), (nn, nn))
        .copy_from(&kron_sum_operator(set.base())?);
    for (k, dir) in set.directions().elements().iter().enumerate() {
        system
            .view_mut(((k + 1) * nn, 0), (nn, nn))
            .copy_from(&kron_sum_operator(dir)?);
    }
    let mut rhs = nalgebra::DVector::zeros((d + 1) * nn);
    rhs.rows_mut(0, nn).copy_from(&(-vectorize(q)));
    let ls = least_squares(&system, &rhs, cfg.rank_tol)?;
    let p = devectorize(ls.solution.as_slice(), n, n);
    Ok(InformativityVerdict::decide(
        ls.residual,
        cfg.rank_tol * (1.0 + q.norm()),
        p,
        &format!("stacked system of {} Lyapunov operators", d + 1),
    ))
}

/// `L₀(𝒦)` as an orthonormal basis: the set of `Q` for which the pair is
/// informative.
pub fn informative_q_space(set: &AffineMatrixSet, rank_tol: f64) -> Result<SubspaceBasis> {
    let (n, _) = set.shape();
    let kernel = kernel_set(n, set.directions().elements(), rank_tol)?;
    let images: Vec<DenseMatrix> = kernel
        .basis
        .elements()
        .iter()
        .map(|k| set.base() * k + k * set.base().transpose())
        .collect();
    SubspaceBasis::span_of(n, n, &images, rank_tol)
}

/// `Q ∈ L₀(𝒦)` checker.
pub fn check_informativity_subspace(
    set: &AffineMatrixSet,
    q: &DenseMatrix,
    cfg: &CheckConfig,
) -> Result<InformativityVerdict> {
    cfg.validate()?;
    let n = check_q(set, q)?;
    if let Some(v) = guard_members(set, cfg)? {
        return Ok(v);
    }
    let kernel = kernel_set(n, set.directions().elements(), cfg.rank_tol)?;
    let elements = kernel.basis.elements();
    let mut images = DMatrix::zeros(n * n, elements.len());
    for (j, k) in elements.iter().enumerate() {
        let img = set.base() * k + k * set.base().transpose();
        images.column_mut(j).copy_from_slice(img.as_slice());
    }
    let ls = least_squares(&images, &(-vectorize(q)), cfg.rank_tol)?;
    let mut p = DMatrix::zeros(n, n);
    for (c, k) in ls.solution.iter().zip(elements) {
        p += k * *c;
    }
    Ok(InformativityVerdict::decide(
        ls.residual,
        cfg.rank_tol * (1.0 + q.norm()),
        p,
        &format!("projection onto L0(K), dim K = {}", elements.len()),
    ))
}

/// `{Ã : (Ã − A₀)Z = 0}`.
pub fn special_case_set(
    a0: &DenseMatrix,
    z: &DenseMatrix,
    rank_tol: f64,
) -> Result<AffineMatrixSet> {
    AffineMatrixSet::from_basis(a0.clone(), annihilator_directions(z, rank_tol)?)
}

/// Checker for the consistent set `{Ã : (Ã − A₀)Z = 0}` that searches only
/// over `P = ZWZᵀ` (`r²` unknowns). `Z` must have orthonormal columns.
pub fn check_informativity_special(
    z: &DenseMatrix,
    a0: &DenseMatrix,
    q: &DenseMatrix,
    cfg: &CheckConfig,
) -> Result<InformativityVerdict> {
    cfg.validate()?;
    check_orthonormal_columns(z)?;
    let set = special_case_set(a0, z, cfg.rank_tol)?;
    let n = check_q(&set, q)?;
    if let Some(v) = guard_members(&set, cfg)? {
        return Ok(v);
    }
    let r = z.ncols();
    let system = reduced_system(a0, z)?;
    let ls = least_squares(&system, &(-vectorize(q)), cfg.rank_tol)?;
    let w = DMatrix::from_column_slice(r, r, ls.solution.as_slice());
    let p = if r == 0 {
        DMatrix::zeros(n, n)
    } else {
        z * w * z.transpose()
    };
    Ok(InformativityVerdict::decide(
        ls.residual,
        cfg.rank_tol * (1.0 + q.norm()),
        p,
        &format!("reduced system with r = {r}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    fn e(i: usize, j: usize) -> DenseMatrix {
        let mut m = DMatrix::zeros(2, 2);
        m[(i, j)] = 1.0;
        m
    }

    fn running_set() -> AffineMatrixSet {
        AffineMatrixSet::new(dmatrix![-1.0, 0.0; 0.0, -2.0], &[e(0, 1)], 1e-9).unwrap()
    }

    fn data_only_set() -> AffineMatrixSet {
        AffineMatrixSet::new(dmatrix![-1.0, 0.0; 0.0, 0.0], &[e(0, 1), e(1, 1)], 1e-9).unwrap()
    }

    fn q() -> DenseMatrix {
        dmatrix![2.0, 3.0; -3.0, 0.0]
    }

    #[test]
    fn kernel_set_examples() {
        let k = kernel_set(2, &[e(0, 1)], 1e-9).unwrap();
        assert_eq!(k.basis.dim(), 2);
        let expected = SubspaceBasis::span_of(
            2,
            2,
            &[dmatrix![1.0, 0.0; 0.0, 0.0], dmatrix![0.0, -1.0; 1.0, 0.0]],
            1e-9,
        )
        .unwrap();
        for b in k.basis.elements() {
            assert!(expected.projection_residual(b) < 1e-12);
            assert!((e(0, 1) * b + b * e(0, 1).transpose()).norm() < 1e-8);
        }
        assert_eq!(kernel_set(2, &[], 1e-9).unwrap().basis.dim(), 4);
        assert_eq!(
            kernel_set(2, &[DMatrix::identity(2, 2)], 1e-9)
                .unwrap()
                .basis
                .dim(),
            0
        );
    }

    #[test]
    fn system_checker_on_running_example() {
        let v = check_informativity_system(&running_set(), &q(), &CheckConfig::default()).unwrap();
        assert_eq!(v.tag, VerdictTag::Informative);
        assert_abs_diff_eq!(
            v.solution.unwrap(),
            dmatrix![1.0, 1.0; -1.0, 0.0],
            epsilon = 1e-10
        );

        let v =
            check_informativity_system(&data_only_set(), &q(), &CheckConfig::default()).unwrap();
        assert_eq!(v.tag, VerdictTag::NotInformative);
        assert!(v.solution.is_none());
        assert!(v.certificate.residual > v.certificate.threshold);
    }

    #[test]
    fn singleton_is_plain_solve() {
        let a = dmatrix![-1.0, 1.0; 0.0, -2.0];
        let v = check_informativity_system(
            &AffineMatrixSet::singleton(a.clone()),
            &q(),
            &CheckConfig::default(),
        )
        .unwrap();
        assert_eq!(v.tag, VerdictTag::Informative);
        assert_abs_diff_eq!(
            v.solution.unwrap(),
            solve_lyapunov(&a, &q(), 1e-8).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn subspace_checker_examples() {
        let cfg = CheckConfig::default();
        let v = check_informativity_subspace(&running_set(), &q(), &cfg).unwrap();
        assert_eq!(v.tag, VerdictTag::Informative);
        assert_abs_diff_eq!(
            v.solution.unwrap(),
            dmatrix![1.0, 1.0; -1.0, 0.0],
            epsilon = 1e-10
        );

        let v =
            check_informativity_subspace(&running_set(), &DMatrix::identity(2, 2), &cfg).unwrap();
        assert_eq!(v.tag, VerdictTag::NotInformative);
        // distance from vec(I) to span{vec diag(−2,0), vec [0 3; −3 0]} is ‖e₄‖ = 1
        assert_abs_diff_eq!(v.certificate.residual, 1.0, epsilon = 1e-12);

        let s = AffineMatrixSet::singleton(dmatrix![-1.0, 5.0; 0.0, -2.0]);
        let v = check_informativity_subspace(&s, &DMatrix::identity(2, 2), &cfg).unwrap();
        assert_eq!(v.tag, VerdictTag::Informative);
    }

    #[test]
    fn q_space_of_running_example() {
        let l0k = informative_q_space(&running_set(), 1e-9).unwrap();
        assert_eq!(l0k.dim(), 2);
        assert!(l0k.projection_residual(&dmatrix![-2.0, 0.0; 0.0, 0.0]) < 1e-12);
        assert!(l0k.projection_residual(&dmatrix![0.0, 3.0; -3.0, 0.0]) < 1e-12);
    }

    #[test]
    fn special_checker_examples() {
        let cfg = CheckConfig::default();
        let a0 = dmatrix![-1.0, 0.0; 0.0, -2.0];
        let v = check_informativity_special(&DMatrix::identity(2, 2), &a0, &q(), &cfg).unwrap();
        assert_eq!(v.tag, VerdictTag::Informative);
        assert_abs_diff_eq!(
            v.solution.unwrap(),
            solve_lyapunov(&a0, &q(), 1e-8).unwrap(),
            epsilon = 1e-12
        );

        let e1 = dmatrix![1.0; 0.0];
        let v = check_informativity_special(&e1, &a0, &dmatrix![2.0, 0.0; 0.0, 0.0], &cfg).unwrap();
        assert_eq!(v.tag, VerdictTag::Informative);
        assert_abs_diff_eq!(
            v.solution.unwrap(),
            dmatrix![1.0, 0.0; 0.0, 0.0],
            epsilon = 1e-12
        );

        let v = check_informativity_special(&e1, &a0, &DMatrix::identity(2, 2), &cfg).unwrap();
        assert_eq!(v.tag, VerdictTag::NotInformative);
        assert_abs_diff_eq!(v.certificate.residual, 1.0, epsilon = 1e-12);

        assert!(matches!(
            check_informativity_special(&dmatrix![2.0; 0.0], &a0, &q(), &cfg),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn special_agrees_with_system_on_its_set() {
        let cfg = CheckConfig::default();
        let a0 = dmatrix![-1.0, 0.0; 0.0, -2.0];
        let e1 = dmatrix![1.0; 0.0];
        for qm in [dmatrix![2.0, 0.0; 0.0, 0.0], DMatrix::identity(2, 2), q()] {
            let special = check_informativity_special(&e1, &a0, &qm, &cfg).unwrap();
            let general =
                check_informativity_system(&special_case_set(&a0, &e1, 1e-9).unwrap(), &qm, &cfg)
                    .unwrap();
            assert_eq!(special.tag, general.tag);
        }
    }

    #[test]
    fn empty_member_set_is_assumption_violation() {
        let s = AffineMatrixSet::new(DMatrix::zeros(2, 2), &[e(0, 1)], 1e-9).unwrap();
        let v = check_informativity_system(&s, &q(), &CheckConfig::default()).unwrap();
        assert_eq!(v.tag, VerdictTag::AssumptionViolated);
        let v = check_informativity_subspace(&s, &q(), &CheckConfig::default()).unwrap();
        assert_eq!(v.tag, VerdictTag::AssumptionViolated);
    }

    #[test]
    fn wrong_q_shape_is_error() {
        let r = check_informativity_system(
            &running_set(),
            &DMatrix::zeros(3, 2),
            &CheckConfig::default(),
        );
        assert!(matches!(r, Err(Error::Dimension { .. })));
    }
}

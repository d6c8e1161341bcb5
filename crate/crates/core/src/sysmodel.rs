//! Datasets, prior-knowledge classes and the consistent set of system
//! matrices they leave open.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_tol, Error, Result};
use crate::matspace::{
    affine_intersect, ensure_finite, least_squares, null_space, numerical_rank, vectorize,
    AffineMatrixSet, DenseMatrix, SubspaceBasis,
};

/// One time-stamped state sample, optionally with its derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: DVector<f64>,
    pub dx: Option<DVector<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceScheme {
    /// Three-point second-order differences everywhere, one-sided at the ends.
    Central,
    /// Three-point central differences inside, two-point one-sided at the ends.
    ForwardBackwardEnds,
}

/// Where the derivative samples came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DerivativeSource {
    /// No derivatives attached.
    Missing,
    /// Supplied with the data and taken at face value.
    Provided,
    /// `A·x` from a simulation with known `A`.
    Exact,
    /// Finite-difference estimates.
    Estimated {
        scheme: DifferenceScheme,
        max_truncation: f64,
    },
}

/// Fragment of one state trajectory of `ẋ = Ax`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    samples: Vec<Sample>,
    derivatives: DerivativeSource,
}

impl Dataset {
    /// Validates and wraps samples. Derivatives must be attached to all
    /// samples or to none.
    pub fn new(n: usize, samples: Vec<Sample>) -> Result<Self> {
        let with_dx = samples.iter().filter(|s| s.dx.is_some()).count();
        let derivatives = if with_dx == 0 {
            DerivativeSource::Missing
        } else if with_dx == samples.len() {
            DerivativeSource::Provided
        } else {
            return Err(Error::InvalidDataset(format!(
                "derivatives given for {with_dx} of {} samples",
                samples.len()
            )));
        };
        Self::with_source(n, samples, derivatives)
    }

    pub(crate) fn with_source(
        n: usize,
        samples: Vec<Sample>,
        derivatives: DerivativeSource,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDataset(
                "state dimension must be positive".into(),
            ));
        }
        if samples.is_empty() {
            return Err(Error::InvalidDataset(
                "at least one sample is required".into(),
            ));
        }
        let mut prev = f64::NEG_INFINITY;
        for (k, s) in samples.iter().enumerate() {
            if !s.t.is_finite() || s.t < 0.0 {
                return Err(Error::InvalidDataset(format!(
                    "sample {k}: time {} must be finite and nonnegative",
                    s.t
                )));
            }
            if s.t <= prev {
                return Err(Error::InvalidDataset(format!(
                    "sample {k}: times must be strictly increasing ({} after {prev})",
                    s.t
                )));
            }
            prev = s.t;
            if s.x.len() != n {
                return Err(Error::dim(format!("sample {k} state"), n, s.x.len()));
            }
            if s.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("sample {k} state")));
            }
            if let Some(dx) = &s.dx {
                if dx.len() != n {
                    return Err(Error::dim(format!("sample {k} derivative"), n, dx.len()));
                }
                if dx.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("sample {k} derivative")));
                }
            }
        }
        Ok(Self {
            n,
            samples,
            derivatives,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// State at the earliest sample time.
    pub fn x0(&self) -> &DVector<f64> {
        &self.samples[0].x
    }

    pub fn derivative_source(&self) -> DerivativeSource {
        self.derivatives
    }

    /// Finite-difference derivatives are only approximate; rank decisions on
    /// such data need a looser tolerance.
    pub fn is_approximate(&self) -> bool {
        matches!(self.derivatives, DerivativeSource::Estimated { .. })
    }

    pub fn has_derivatives(&self) -> bool {
        !matches!(self.derivatives, DerivativeSource::Missing)
    }

    /// `n × N` matrix of state samples.
    pub fn state_matrix(&self) -> DenseMatrix {
        DMatrix::from_columns(&self.samples.iter().map(|s| s.x.clone()).collect::<Vec<_>>())
    }

    /// `n × N` matrix of derivative samples, if attached.
    pub fn derivative_matrix(&self) -> Option<DenseMatrix> {
        let cols: Option<Vec<_>> = self.samples.iter().map(|s| s.dx.clone()).collect();
        cols.map(|c| DMatrix::from_columns(&c))
    }

    /// Appends samples (times must continue increasing).
    pub fn extended(&self, more: Vec<Sample>) -> Result<Self> {
        let mut samples = self.samples.clone();
        samples.extend(more);
        Self::with_source(self.n, samples, self.derivatives)
    }
}

/// Multiplier on `rank_tol` applied to datasets with estimated derivatives.
pub const APPROXIMATE_DATA_TOL_FACTOR: f64 = 100.0;

pub fn effective_rank_tol(ds: &Dataset, rank_tol: f64) -> f64 {
    if ds.is_approximate() {
        rank_tol * APPROXIMATE_DATA_TOL_FACTOR
    } else {
        rank_tol
    }
}

/// Open interval `(lower, upper)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower >= upper {
            return Err(Error::InvalidPrior(format!(
                "bound ({lower}, {upper}) is not a nonempty open interval"
            )));
        }
        if lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(Error::InvalidPrior(format!(
                "bound ({lower}, {upper}) is empty"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.lower == f64::NEG_INFINITY && self.upper == f64::INFINITY
    }

    /// Strict membership with a margin `tol·(1 + |end|)` from each finite end.
    pub fn contains_strictly(&self, theta: f64, tol: f64) -> bool {
        let above =
            self.lower == f64::NEG_INFINITY || theta > self.lower + tol * (1.0 + self.lower.abs());
        let below =
            self.upper == f64::INFINITY || theta < self.upper - tol * (1.0 + self.upper.abs());
        above && below
    }
}

/// `{base + Σ θᵢ Dᵢ : θᵢ ∈ (θ̲ᵢ, θ̄ᵢ)}` with linearly independent `Dᵢ`.
///
/// Fixed entries are absorbed in `base` and excluded from the directions.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedAffine {
    base: DenseMatrix,
    directions: Vec<DenseMatrix>,
    bounds: Vec<Bound>,
}

impl BoundedAffine {
    pub fn new(
        base: DenseMatrix,
        directions: Vec<DenseMatrix>,
        bounds: Vec<Bound>,
    ) -> Result<Self> {
        let (n, m) = base.shape();
        if n != m || n == 0 {
            return Err(Error::dim(
                "prior base",
                "square matrix",
                format!("{n}x{m}"),
            ));
        }
        ensure_finite(&base, "prior base")?;
        if directions.len() != bounds.len() {
            return Err(Error::InvalidPrior(format!(
                "{} directions but {} bounds",
                directions.len(),
                bounds.len()
            )));
        }
        for (k, d) in directions.iter().enumerate() {
            if d.shape() != (n, n) {
                return Err(Error::dim(
                    format!("prior direction {k}"),
                    format!("{n}x{n}"),
                    format!("{}x{}", d.nrows(), d.ncols()),
                ));
            }
            ensure_finite(d, "prior direction")?;
        }
        let s = Self {
            base,
            directions,
            bounds,
        };
        let rank = numerical_rank(&s.direction_matrix(), crate::DEFAULT_RANK_TOL)?;
        if rank != s.directions.len() {
            return Err(Error::InvalidPrior(format!(
                "directions are linearly dependent (rank {rank} of {})",
                s.directions.len()
            )));
        }
        Ok(s)
    }

    /// Entry-wise prior on `n × n` matrices: `fixed` entries are pinned,
    /// `bounded` entries range over open intervals, all others are free.
    pub fn from_entries(
        n: usize,
        fixed: &[(usize, usize, f64)],
        bounded: &[(usize, usize, Bound)],
    ) -> Result<Self> {
        let mut base = DMatrix::zeros(n, n);
        let mut status = vec![None::<Bound>; n * n];
        let mut pinned = vec![false; n * n];
        for &(i, j, v) in fixed {
            if i >= n || j >= n {
                return Err(Error::InvalidPrior(format!(
                    "entry ({i},{j}) outside {n}x{n}"
                )));
            }
            base[(i, j)] = v;
            pinned[i + j * n] = true;
        }
        for &(i, j, b) in bounded {
            if i >= n || j >= n {
                return Err(Error::InvalidPrior(format!(
                    "entry ({i},{j}) outside {n}x{n}"
                )));
            }
            if pinned[i + j * n] {
                return Err(Error::InvalidPrior(format!(
                    "entry ({i},{j}) is both fixed and bounded"
                )));
            }
            status[i + j * n] = Some(b);
        }
        let mut directions = Vec::new();
        let mut bounds = Vec::new();
        for k in 0..n * n {
            if pinned[k] {
                continue;
            }
            let mut e = DMatrix::zeros(n, n);
            e[(k % n, k / n)] = 1.0;
            directions.push(e);
            bounds.push(status[k].unwrap_or_else(Bound::unbounded));
        }
        Self::new(base, directions, bounds)
    }

    pub fn n(&self) -> usize {
        self.base.nrows()
    }

    pub fn base(&self) -> &DenseMatrix {
        &self.base
    }

    pub fn directions(&self) -> &[DenseMatrix] {
        &self.directions
    }

    pub fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    /// `n² × p` matrix of vectorized directions.
    pub fn direction_matrix(&self) -> DenseMatrix {
        let n = self.n();
        let mut m = DMatrix::zeros(n * n, self.directions.len());
        for (k, d) in self.directions.iter().enumerate() {
            m.column_mut(k).copy_from_slice(d.as_slice());
        }
        m
    }

    /// Least-squares parameters `θ` of `x ≈ base + Σ θᵢ Dᵢ` and the fit
    /// residual.
    pub fn parameters(&self, x: &DenseMatrix, rank_tol: f64) -> Result<(Vec<f64>, f64)> {
        let ls = least_squares(
            &self.direction_matrix(),
            &vectorize(&(x - &self.base)),
            rank_tol,
        )?;
        Ok((ls.solution.iter().copied().collect(), ls.residual))
    }

    /// `x` lies in the prior set: on the affine hull and strictly inside
    /// every bound.
    pub fn contains(&self, x: &DenseMatrix, tol: f64) -> Result<bool> {
        let (theta, residual) = self.parameters(x, tol)?;
        Ok(residual <= tol * (1.0 + x.norm())
            && theta
                .iter()
                .zip(&self.bounds)
                .all(|(t, b)| b.contains_strictly(*t, tol)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriorKnowledge {
    BoundedAffine(BoundedAffine),
    /// Every candidate `Ã` satisfies `Ã·y0 = g`.
    SubspaceAction {
        y0: DenseMatrix,
        g: DenseMatrix,
    },
    /// No prior knowledge: every `n × n` matrix is a candidate.
    Unconstrained,
}

impl PriorKnowledge {
    pub fn subspace_action(y0: DenseMatrix, g: DenseMatrix) -> Result<Self> {
        if y0.shape() != g.shape() {
            return Err(Error::dim(
                "subspace action G",
                format!("{}x{}", y0.nrows(), y0.ncols()),
                format!("{}x{}", g.nrows(), g.ncols()),
            ));
        }
        ensure_finite(&y0, "subspace action Y0")?;
        ensure_finite(&g, "subspace action G")?;
        Ok(Self::SubspaceAction { y0, g })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::BoundedAffine(_) => "bounded_affine",
            Self::SubspaceAction { .. } => "subspace_action",
            Self::Unconstrained => "unconstrained",
        }
    }

    /// State dimension implied by the prior, when it carries one.
    pub fn n(&self) -> Option<usize> {
        match self {
            Self::BoundedAffine(b) => Some(b.n()),
            Self::SubspaceAction { y0, .. } => Some(y0.nrows()),
            Self::Unconstrained => None,
        }
    }

    fn check_n(&self, n: usize) -> Result<()> {
        match self.n() {
            Some(m) if m != n => Err(Error::dim("prior knowledge", n, m)),
            _ => Ok(()),
        }
    }

    /// Membership of `x` in the prior set itself (bounds included).
    pub fn contains(&self, x: &DenseMatrix, tol: f64) -> Result<bool> {
        match self {
            Self::BoundedAffine(b) => b.contains(x, tol),
            Self::SubspaceAction { y0, g } => {
                Ok((x * y0 - g).norm() <= tol * (1.0 + g.norm() + x.norm() * y0.norm()))
            }
            Self::Unconstrained => Ok(true),
        }
    }
}

/// Directions `{Δ : ΔX = 0}` as the orthonormal family `eᵢ nⱼᵀ` where the
/// `nⱼ` span `image(X)^⊥`.
pub fn annihilator_directions(x: &DenseMatrix, rank_tol: f64) -> Result<SubspaceBasis> {
    let n = x.nrows();
    if x.ncols() == 0 {
        return Ok(SubspaceBasis::full(n, n));
    }
    let complement = null_space(&x.transpose(), rank_tol)?;
    let mut basis = Vec::with_capacity(n * complement.ncols());
    for j in 0..complement.ncols() {
        for i in 0..n {
            let mut d = DMatrix::zeros(n, n);
            d.row_mut(i).copy_from(&complement.column(j).transpose());
            basis.push(d);
        }
    }
    SubspaceBasis::new(n, n, basis)
}

/// Solution set `{Ã : ÃX = Y}` with minimum-norm base `Y X⁺`. Returns the
/// relative residual `‖(YX⁺)X − Y‖_F / (1 + ‖Y‖_F)` alongside.
pub fn right_solution_set(
    x: &DenseMatrix,
    y: &DenseMatrix,
    rank_tol: f64,
) -> Result<(AffineMatrixSet, f64)> {
    check_tol("rank_tol", rank_tol)?;
    if x.shape() != y.shape() {
        return Err(Error::dim(
            "right_solution_set",
            format!("{}x{}", x.nrows(), x.ncols()),
            format!("{}x{}", y.nrows(), y.ncols()),
        ));
    }
    let n = x.nrows();
    let mut base = DMatrix::zeros(n, n);
    if x.ncols() > 0 {
        let xt = x.transpose();
        for i in 0..n {
            let rhs = y.row(i).transpose();
            let ls = least_squares(&xt, &rhs, rank_tol)?;
            base.row_mut(i).copy_from(&ls.solution.transpose());
        }
    }
    let residual = (&base * x - y).norm() / (1.0 + y.norm());
    let directions = annihilator_directions(x, rank_tol)?;
    Ok((AffineMatrixSet::from_basis(base, directions)?, residual))
}

/// All `Ã` consistent with the data, `{Ã : ÃX₀ = X₁}`.
pub fn build_sigma_d(ds: &Dataset, rank_tol: f64) -> Result<AffineMatrixSet> {
    let x1 = ds.derivative_matrix().ok_or_else(|| {
        Error::InvalidDataset("derivative samples are required; estimate them first".into())
    })?;
    let (set, residual) = right_solution_set(&ds.state_matrix(), &x1, rank_tol)?;
    if residual > rank_tol {
        return Err(Error::CorruptData { residual });
    }
    Ok(set)
}

/// Affine hull of the prior set. Open nonempty bounds do not shrink it.
pub fn prior_affine_hull(pk: &PriorKnowledge, n: usize, rank_tol: f64) -> Result<AffineMatrixSet> {
    check_tol("rank_tol", rank_tol)?;
    pk.check_n(n)?;
    match pk {
        PriorKnowledge::BoundedAffine(b) => {
            AffineMatrixSet::new(b.base().clone(), b.directions(), rank_tol)
        }
        PriorKnowledge::SubspaceAction { y0, g } => {
            let (set, residual) = right_solution_set(y0, g, rank_tol)?;
            if residual > rank_tol {
                return Err(Error::InvalidPrior(format!(
                    "no matrix maps Y0 onto G (relative residual {residual:.3e})"
                )));
            }
            Ok(set)
        }
        PriorKnowledge::Unconstrained => Ok(AffineMatrixSet::full_space(n, n)),
    }
}

/// Affine hull of `Σ_D ∩ Σ_pk`, or `None` when data and prior contradict
/// each other.
pub fn consistent_set(
    ds: &Dataset,
    pk: &PriorKnowledge,
    rank_tol: f64,
) -> Result<Option<AffineMatrixSet>> {
    let sigma_d = build_sigma_d(ds, rank_tol)?;
    let hull = prior_affine_hull(pk, ds.n(), rank_tol)?;
    affine_intersect(&sigma_d, &hull, rank_tol)
}

/// Orthonormal `Z` with `image(Z) = image([X₀ Y₀])` for a subspace-action
/// prior.
pub fn joint_column_basis(ds: &Dataset, y0: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    let x0 = ds.state_matrix();
    if y0.nrows() != x0.nrows() {
        return Err(Error::dim("Y0 rows", x0.nrows(), y0.nrows()));
    }
    let mut joint = DMatrix::zeros(x0.nrows(), x0.ncols() + y0.ncols());
    joint.columns_mut(0, x0.ncols()).copy_from(&x0);
    joint.columns_mut(x0.ncols(), y0.ncols()).copy_from(y0);
    crate::matspace::column_space_basis(&joint, rank_tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum Assumption1Status {
    /// The prior class is convex and relatively open, and the caller asserts
    /// that the true system belongs to it.
    Validated,
    /// A supplied true system lies in the relative interior of the prior.
    ValidatedGivenTruth,
    NotCheckable(String),
}

/// Checks the sufficient condition "convex prior with the true system in its
/// relative interior" for reducing informativity to affine hulls.
pub fn validate_assumption1(
    pk: &PriorKnowledge,
    truth: Option<&DenseMatrix>,
    membership_asserted: bool,
    rank_tol: f64,
) -> Result<Assumption1Status> {
    check_tol("rank_tol", rank_tol)?;
    if let PriorKnowledge::Unconstrained = pk {
        return Ok(Assumption1Status::Validated);
    }
    let Some(a) = truth else {
        return Ok(if membership_asserted {
            Assumption1Status::Validated
        } else {
            Assumption1Status::NotCheckable(
                "true system unknown and membership in the prior not asserted".into(),
            )
        });
    };
    pk.check_n(a.nrows())?;
    match pk {
        PriorKnowledge::BoundedAffine(b) => {
            let (theta, residual) = b.parameters(a, rank_tol)?;
            if residual > rank_tol * (1.0 + a.norm()) {
                return Err(Error::PriorMembership(format!(
                    "off the affine hull by {residual:.3e}"
                )));
            }
            for (k, (t, bound)) in theta.iter().zip(b.bounds()).enumerate() {
                if !bound.contains_strictly(*t, rank_tol) {
                    return Err(Error::PriorMembership(format!(
                        "parameter {k} = {t} not strictly inside ({}, {})",
                        bound.lower, bound.upper
                    )));
                }
            }
            Ok(Assumption1Status::ValidatedGivenTruth)
        }
        PriorKnowledge::SubspaceAction { .. } => {
            if pk.contains(a, rank_tol)? {
                Ok(Assumption1Status::ValidatedGivenTruth)
            } else {
                Err(Error::PriorMembership("A·Y0 differs from G".into()))
            }
        }
        PriorKnowledge::Unconstrained => unreachable!(),
    }
}

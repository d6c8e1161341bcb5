//! Brute-force verification by sampling the consistent set and comparing
//! Lyapunov solutions pairwise.
//!
//! Every sample index draws from its own ChaCha stream derived from
//! `(seed, index)`, so results do not depend on evaluation order.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_tol, Error, Result};
use crate::informativity::{InformativityVerdict, VerdictTag, Witness};
use crate::lyapcore::{in_an, solve_lyapunov};
use crate::matspace::{least_squares, vectorize, AffineMatrixSet, DenseMatrix};
use crate::sysmodel::{BoundedAffine, PriorKnowledge};

/// Draw budget per requested sample.
pub const DRAWS_PER_SAMPLE: usize = 2000;

/// Fraction of each finite interval's width that samples must fall in,
/// centered on the midpoint.
const INNER_WIDTH: f64 = 0.9;

/// Affine map `c ↦ θ₀ + T c` from consistent-set coordinates to the
/// prior's bounded parameters, with the acceptance window of each.
struct BoundedCoordinates {
    theta0: DVector<f64>,
    map: DMatrix<f64>,
    windows: Vec<(f64, f64)>,
}

impl BoundedCoordinates {
    fn new(set: &AffineMatrixSet, prior: &BoundedAffine, rank_tol: f64) -> Result<Option<Self>> {
        let bounded: Vec<usize> = prior
            .bounds()
            .iter()
            .enumerate()
            .filter(|(_, b)| !b.is_unbounded())
            .map(|(i, _)| i)
            .collect();
        if bounded.is_empty() {
            return Ok(None);
        }
        let dmat = prior.direction_matrix();
        let theta_base =
            least_squares(&dmat, &vectorize(&(set.base() - prior.base())), rank_tol)?.solution;
        let mut theta0 = DVector::zeros(bounded.len());
        let mut map = DMatrix::zeros(bounded.len(), set.dim());
        for (j, dir) in set.directions().elements().iter().enumerate() {
            let t = least_squares(&dmat, &vectorize(dir), rank_tol)?.solution;
            // Set directions have unit norm, so a gain at roundoff level
            // means the parameter does not move along this direction.
            for (row, &i) in bounded.iter().enumerate() {
                if t[i].abs() > rank_tol {
                    map[(row, j)] = t[i];
                }
            }
        }
        let windows = bounded
            .iter()
            .enumerate()
            .map(|(row, &i)| {
                theta0[row] = theta_base[i];
                let b = prior.bounds()[i];
                if b.lower.is_finite() && b.upper.is_finite() {
                    let mid = 0.5 * (b.lower + b.upper);
                    let half = 0.5 * INNER_WIDTH * (b.upper - b.lower);
                    (mid - half, mid + half)
                } else {
                    (b.lower, b.upper)
                }
            })
            .collect();
        Ok(Some(Self {
            theta0,
            map,
            windows,
        }))
    }

    fn accepts(&self, c: &DVector<f64>) -> bool {
        let theta = &self.theta0 + &self.map * c;
        theta
            .iter()
            .zip(&self.windows)
            .all(|(t, (lo, hi))| (!lo.is_finite() || t > lo) && (!hi.is_finite() || t < hi))
    }

    /// Coordinates whose parameters sit at the window centers (least
    /// squares), and a draw scale that keeps most draws inside the windows.
    fn center_and_scale(&self, rank_tol: f64) -> Result<(DVector<f64>, f64)> {
        let mut target = DVector::zeros(self.windows.len());
        for (k, (lo, hi)) in self.windows.iter().enumerate() {
            target[k] = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 1.0 + lo.abs(),
                (false, true) => hi - 1.0 - hi.abs(),
                (false, false) => self.theta0[k],
            };
        }
        let center = least_squares(&self.map, &(target - &self.theta0), rank_tol)?.solution;
        let mut scale: f64 = 1.0;
        for (k, (lo, hi)) in self.windows.iter().enumerate() {
            let gain = self.map.row(k).norm();
            if lo.is_finite() && hi.is_finite() && gain > 0.0 {
                scale = scale.min(0.5 * (hi - lo) / gain);
            }
        }
        Ok((center, scale))
    }
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `count` members of the consistent set, inside the prior's bounds when it
/// has any, each with a unique Lyapunov solution.
pub fn sample_consistent(
    set: &AffineMatrixSet,
    pk: &PriorKnowledge,
    count: usize,
    seed: u64,
    gap_tol: f64,
) -> Result<Vec<DenseMatrix>> {
    check_tol("gap_tol", gap_tol)?;
    if count < 2 {
        return Err(Error::Input(format!(
            "sample count must be at least 2, got {count}"
        )));
    }
    let rank_tol = crate::DEFAULT_RANK_TOL;
    let coords = match pk {
        PriorKnowledge::BoundedAffine(b) => BoundedCoordinates::new(set, b, rank_tol)?,
        _ => None,
    };
    let (center, scale) = match &coords {
        Some(c) if set.dim() > 0 => c.center_and_scale(rank_tol)?,
        _ => (DVector::zeros(set.dim()), 1.0),
    };

    let mut samples = Vec::with_capacity(count);
    for index in 0..count {
        let mut rng = sample_rng(seed, index);
        let mut found = None;
        for _ in 0..DRAWS_PER_SAMPLE {
            let c = DVector::from_fn(set.dim(), |j, _| {
                center[j] + scale * Distribution::<f64>::sample(&StandardNormal, &mut rng)
            });
            let inside = coords.as_ref().is_none_or(|k| k.accepts(&c));
            if !inside {
                continue;
            }
            let member = set.member(c.as_slice());
            if in_an(&member, gap_tol)? {
                found = Some(member);
                break;
            }
            if set.dim() == 0 {
                break;
            }
        }
        match found {
            Some(m) => samples.push(m),
            None => {
                return Err(Error::DegenerateSet {
                    requested: count,
                    collected: samples.len(),
                })
            }
        }
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    /// All sampled solutions agree; carries the first one.
    Agree(DenseMatrix),
    /// The maximally separated pair of sampled solutions.
    Disagree(Witness),
}

impl OracleOutcome {
    pub fn tag(&self) -> VerdictTag {
        match self {
            Self::Agree(_) => VerdictTag::Informative,
            Self::Disagree(_) => VerdictTag::NotInformative,
        }
    }
}

/// Samples the consistent set and compares `Φ(Ã, Q)` across all pairs;
/// agreement means every pairwise distance is within
/// `agree_tol·(1 + ‖Q‖_F)`.
pub fn brute_force_informative(
    set: &AffineMatrixSet,
    pk: &PriorKnowledge,
    q: &DenseMatrix,
    count: usize,
    seed: u64,
    gap_tol: f64,
    agree_tol: f64,
) -> Result<OracleOutcome> {
    check_tol("agree_tol", agree_tol)?;
    let members = sample_consistent(set, pk, count, seed, gap_tol)?;
    let solutions = members
        .iter()
        .map(|a| solve_lyapunov(a, q, gap_tol))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = (0.0, 0, 0);
    for i in 0..solutions.len() {
        for j in i + 1..solutions.len() {
            let dist = (&solutions[i] - &solutions[j]).norm();
            if dist > worst.0 {
                worst = (dist, i, j);
            }
        }
    }
    let (dist, i, j) = worst;
    if dist <= agree_tol * (1.0 + q.norm()) {
        Ok(OracleOutcome::Agree(solutions[0].clone()))
    } else {
        Ok(OracleOutcome::Disagree(Witness {
            a1: members[i].clone(),
            a2: members[j].clone(),
            phi1: solutions[i].clone(),
            phi2: solutions[j].clone(),
        }))
    }
}

/// Result of comparing a checker verdict with the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub agreed: bool,
    /// `None` when the oracle could not sample (degenerate set).
    pub oracle: Option<OracleOutcome>,
    /// Whether the enlarged second round was needed.
    pub retried: bool,
    pub samples_used: usize,
}

/// Compares `verdict` with the oracle. An oracle agreement against a
/// not-informative verdict is retried once with four times the samples
/// before it counts as a mismatch; an oracle witness against an informative
/// verdict is a mismatch immediately.
#[allow(clippy::too_many_arguments)]
pub fn cross_check(
    verdict: &InformativityVerdict,
    set: &AffineMatrixSet,
    pk: &PriorKnowledge,
    q: &DenseMatrix,
    count: usize,
    seed: u64,
    gap_tol: f64,
    agree_tol: f64,
) -> Result<CrossCheck> {
    let run = |k: usize| match brute_force_informative(set, pk, q, k, seed, gap_tol, agree_tol) {
        Ok(o) => Ok(Some(o)),
        Err(Error::DegenerateSet { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let first = run(count)?;
    let agreed = |o: &Option<OracleOutcome>| match (verdict.tag, o) {
        (VerdictTag::AssumptionViolated, None) => true,
        (VerdictTag::AssumptionViolated, Some(_)) | (_, None) => false,
        (tag, Some(o)) => o.tag() == tag,
    };
    if verdict.tag == VerdictTag::NotInformative && matches!(first, Some(OracleOutcome::Agree(_))) {
        let second = run(count * 4)?;
        return Ok(CrossCheck {
            agreed: agreed(&second),
            oracle: second,
            retried: true,
            samples_used: count * 4,
        });
    }
    Ok(CrossCheck {
        agreed: agreed(&first),
        oracle: first,
        retried: false,
        samples_used: count,
    })
}

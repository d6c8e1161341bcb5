//! Seeded random instances shared by the integration and acceptance tests.
//!
//! Each instance is built from a known true system `A`, so the expected
//! answer for "informative by construction" right-hand sides is available
//! without going through the library's checkers.

#![allow(dead_code)]

use lyapinfo::sysmodel::{Bound, BoundedAffine, Dataset, PriorKnowledge};
use lyapinfo::trajgen::simulate_trajectory;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        Distribution::<f64>::sample(&StandardNormal, rng)
    })
}

/// Orthonormal basis of the column span of a full-column-rank `m`.
pub fn orthonormal_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().qr().q()
}

/// Stable `A = T B T⁻¹` with `B` block upper triangular, so the first `r`
/// columns of `T` span an `A`-invariant subspace. Every eigenvalue has real
/// part below `-0.5`, which keeps `λᵢ + λⱼ` well away from zero.
pub fn stable_with_invariant(
    rng: &mut ChaCha8Rng,
    n: usize,
    r: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut b = gaussian(rng, n, n) * 0.6;
    for i in r..n {
        for j in 0..r {
            b[(i, j)] = 0.0;
        }
    }
    let shift = b.norm() + 0.5;
    b -= DMatrix::identity(n, n) * shift;
    let t = DMatrix::identity(n, n) + gaussian(rng, n, n) * 0.3;
    let t_inv = t
        .clone()
        .try_inverse()
        .expect("perturbed identity is invertible");
    let a = &t * b * t_inv;
    (a, t.columns(0, r).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    Unconstrained,
    SubspaceAction,
    Bounded,
}

impl PriorKind {
    pub fn cycle(i: usize) -> Self {
        [Self::Unconstrained, Self::SubspaceAction, Self::Bounded][i % 3]
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub n: usize,
    pub a: DMatrix<f64>,
    pub dataset: Dataset,
    pub prior: PriorKnowledge,
    pub q: DMatrix<f64>,
    /// Orthonormal basis of the span every consistent system agrees on.
    pub z: DMatrix<f64>,
    /// `Q = −(AP + PAᵀ)` with `P = ZWZᵀ`, informative by construction.
    pub informative_by_construction: bool,
}

/// Random instance: data rank `r < n` most of the time, prior of the given
/// kind with the truth in its relative interior, and `Q` informative by
/// construction for half of the seeds.
pub fn random_instance(seed: u64, n: usize, kind: PriorKind) -> Instance {
    let mut rng = rng(seed);
    let r = if rng.random_bool(0.15) {
        n
    } else {
        rng.random_range(1..n)
    };
    let (a, basis) = stable_with_invariant(&mut rng, n, r);
    let x0: DVector<f64> = &basis * DVector::from_fn(r, |_, _| rng.random_range(0.5..1.5));
    let samples = r + rng.random_range(1..4);
    let times: Vec<f64> = (0..samples).map(|k| 0.3 * k as f64).collect();
    let dataset = simulate_trajectory(&a, &x0, &times).expect("stable system simulates");

    let mut span = basis.clone();
    let prior = match kind {
        PriorKind::Unconstrained => PriorKnowledge::Unconstrained,
        PriorKind::SubspaceAction => {
            let k = if r < n {
                rng.random_range(1..=n - r)
            } else {
                1
            };
            let y0 = gaussian(&mut rng, n, k);
            let g = &a * &y0;
            if r + k <= n {
                let mut joint = DMatrix::zeros(n, r + k);
                joint.columns_mut(0, r).copy_from(&basis);
                joint.columns_mut(r, k).copy_from(&y0);
                span = joint;
            }
            PriorKnowledge::subspace_action(y0, g).expect("shapes agree")
        }
        PriorKind::Bounded => {
            let mut fixed = Vec::new();
            let mut bounded = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let u: f64 = rng.random();
                    if u < 0.3 {
                        fixed.push((i, j, a[(i, j)]));
                    } else if u < 0.6 {
                        let lo = a[(i, j)] - rng.random_range(0.5..1.5);
                        let hi = a[(i, j)] + rng.random_range(0.5..1.5);
                        bounded.push((i, j, Bound::new(lo, hi).expect("ordered")));
                    }
                }
            }
            PriorKnowledge::BoundedAffine(
                BoundedAffine::from_entries(n, &fixed, &bounded).expect("valid entries"),
            )
        }
    };
    let z = orthonormal_columns(&span);

    let informative_by_construction = rng.random_bool(0.5);
    let q = if informative_by_construction {
        let w = gaussian(&mut rng, z.ncols(), z.ncols());
        let p = &z * w * z.transpose();
        -(&a * &p + &p * a.transpose())
    } else {
        gaussian(&mut rng, n, n)
    };
    Instance {
        seed,
        n,
        a,
        dataset,
        prior,
        q,
        z,
        informative_by_construction,
    }
}

/// The `i`-th instance of a fixed benchmark family cycling through
/// `n ∈ {2, 3, 4}` and the three prior kinds.
pub fn family_instance(base_seed: u64, i: usize) -> Instance {
    let n = 2 + i % 3;
    random_instance(base_seed.wrapping_add(i as u64), n, PriorKind::cycle(i / 3))
}

pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

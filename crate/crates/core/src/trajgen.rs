//! Trajectory synthesis from a known system and derivative estimation for
//! ingested trajectories.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::matspace::{ensure_finite, ensure_square, DenseMatrix};
use crate::sysmodel::{Dataset, DerivativeSource, DifferenceScheme, Sample};

/// `e^{At}` by Padé scaling and squaring.
pub fn matrix_exponential(a: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    ensure_square(a, "matrix_exponential")?;
    ensure_finite(a, "matrix_exponential")?;
    if !t.is_finite() {
        return Err(Error::NonFinite("matrix_exponential time".into()));
    }
    let e = (a * t).exp();
    if e.iter().all(|v| v.is_finite()) {
        Ok(e)
    } else {
        Err(Error::Numerical(format!(
            "matrix exponential overflow (‖At‖_F = {:.3e})",
            a.norm() * t.abs()
        )))
    }
}

/// Samples `x(t) = e^{At}x₀` with exact derivatives `A·x(t)` attached.
pub fn simulate_trajectory(a: &DenseMatrix, x0: &DVector<f64>, times: &[f64]) -> Result<Dataset> {
    let n = ensure_square(a, "simulate_trajectory")?;
    if x0.len() != n {
        return Err(Error::dim("initial state", n, x0.len()));
    }
    if times.is_empty() {
        return Err(Error::InvalidDataset("no sample times".into()));
    }
    let samples = times
        .iter()
        .map(|&t| {
            let x = matrix_exponential(a, t)? * x0;
            let dx = a * &x;
            Ok(Sample { t, x, dx: Some(dx) })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::with_source(n, samples, DerivativeSource::Exact)
}

/// Three-point Lagrange derivative weights at `t[at]` for nodes `t[i0..i0+3]`.
fn three_point_weights(t: &[f64], i0: usize, at: usize) -> [f64; 3] {
    let (a, b, c) = (t[i0], t[i0 + 1], t[i0 + 2]);
    let x = t[at];
    [
        ((x - b) + (x - c)) / ((a - b) * (a - c)),
        ((x - a) + (x - c)) / ((b - a) * (b - c)),
        ((x - a) + (x - b)) / ((c - a) * (c - b)),
    ]
}

/// Finite-difference derivatives on a nonuniform grid.
///
/// Interior points always use the second-order three-point formula. Ends use
/// the one-sided three-point formula under [`DifferenceScheme::Central`] and
/// two-point differences under [`DifferenceScheme::ForwardBackwardEnds`].
/// Existing derivatives are replaced. The result records the largest local
/// truncation estimate, from third divided differences when at least four
/// samples are available.
pub fn estimate_derivatives(ds: &Dataset, scheme: DifferenceScheme) -> Result<Dataset> {
    let n_samples = ds.len();
    let min = match scheme {
        DifferenceScheme::Central => 3,
        DifferenceScheme::ForwardBackwardEnds => 2,
    };
    if n_samples < min {
        return Err(Error::InvalidDataset(format!(
            "{scheme:?} differences need at least {min} samples, got {n_samples}"
        )));
    }
    let t = ds.times();
    let xs: Vec<&DVector<f64>> = ds.samples().iter().map(|s| &s.x).collect();
    let combine = |i0: usize, at: usize| -> DVector<f64> {
        let w = three_point_weights(&t, i0, at);
        xs[i0] * w[0] + xs[i0 + 1] * w[1] + xs[i0 + 2] * w[2]
    };

    let last = n_samples - 1;
    let mut dx = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let d = if n_samples == 2 {
            (xs[1] - xs[0]) / (t[1] - t[0])
        } else if i == 0 {
            match scheme {
                DifferenceScheme::Central => combine(0, 0),
                DifferenceScheme::ForwardBackwardEnds => (xs[1] - xs[0]) / (t[1] - t[0]),
            }
        } else if i == last {
            match scheme {
                DifferenceScheme::Central => combine(last - 2, last),
                DifferenceScheme::ForwardBackwardEnds => {
                    (xs[last] - xs[last - 1]) / (t[last] - t[last - 1])
                }
            }
        } else {
            combine(i - 1, i)
        };
        dx.push(d);
    }

    // |x'''| estimate from third divided differences, times the stencil's
    // error constant at each node.
    let mut third: f64 = 0.0;
    for i in 0..n_samples.saturating_sub(3) {
        let dd = |j: usize, k: usize| -> DVector<f64> { (xs[k] - xs[j]) / (t[k] - t[j]) };
        let d01 = dd(i, i + 1);
        let d12 = dd(i + 1, i + 2);
        let d23 = dd(i + 2, i + 3);
        let d012 = (&d12 - &d01) / (t[i + 2] - t[i]);
        let d123 = (&d23 - &d12) / (t[i + 3] - t[i + 1]);
        let d0123 = (d123 - d012) / (t[i + 3] - t[i]);
        third = third.max(6.0 * d0123.amax());
    }
    let mut max_truncation: f64 = 0.0;
    for i in 1..last {
        let h1 = t[i] - t[i - 1];
        let h2 = t[i + 1] - t[i];
        max_truncation = max_truncation.max(third * h1 * h2 / 6.0);
    }
    if n_samples >= 3 && scheme == DifferenceScheme::Central {
        let h1 = t[1] - t[0];
        let h2 = t[2] - t[0];
        let k1 = t[last] - t[last - 1];
        let k2 = t[last] - t[last - 2];
        max_truncation = max_truncation.max(third * (h1 * h2).max(k1 * k2) / 6.0);
    }

    let samples = ds
        .samples()
        .iter()
        .zip(dx)
        .map(|(s, d)| Sample {
            t: s.t,
            x: s.x.clone(),
            dx: Some(d),
        })
        .collect();
    Dataset::with_source(
        ds.n(),
        samples,
        DerivativeSource::Estimated {
            scheme,
            max_truncation,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector, DMatrix};

    #[test]
    fn exponential_examples() {
        assert_abs_diff_eq!(
            matrix_exponential(&DMatrix::zeros(3, 3), 1.0).unwrap(),
            DMatrix::identity(3, 3),
            epsilon = 1e-15
        );
        let e = matrix_exponential(&dmatrix![-1.0, 0.0; 0.0, -2.0], 1.0).unwrap();
        assert_abs_diff_eq!(
            e,
            dmatrix![(-1.0f64).exp(), 0.0; 0.0, (-2.0f64).exp()],
            epsilon = 1e-15
        );
        let x =
            matrix_exponential(&dmatrix![-1.0, 1.0; 0.0, -2.0], 1.0).unwrap() * dvector![1.0, 0.0];
        assert_abs_diff_eq!(x, dvector![(-1.0f64).exp(), 0.0], epsilon = 1e-15);
    }

    #[test]
    fn exponential_overflow_is_an_error() {
        assert!(matches!(
            matrix_exponential(&dmatrix![800.0, 0.0; 0.0, 1.0], 1.0),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn simulation_attaches_exact_derivatives() {
        let a = dmatrix![-1.0, 1.0; 0.0, -2.0];
        let ds = simulate_trajectory(&a, &dvector![1.0, 0.0], &[0.0, 0.5, 1.0, 1.5]).unwrap();
        assert_eq!(ds.derivative_source(), DerivativeSource::Exact);
        for s in ds.samples() {
            assert_abs_diff_eq!(s.x, dvector![(-s.t).exp(), 0.0], epsilon = 1e-14);
            assert_abs_diff_eq!(
                s.dx.clone().unwrap(),
                dvector![-(-s.t).exp(), 0.0],
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn simulation_edge_cases() {
        let a = dmatrix![-1.0, 1.0; 0.0, -2.0];
        let ds = simulate_trajectory(&a, &dvector![0.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(ds.samples().iter().all(|s| s.x.norm() == 0.0));
        let ds = simulate_trajectory(&a, &dvector![1.0, 2.0], &[0.0]).unwrap();
        assert_eq!(ds.len(), 1);
        assert_abs_diff_eq!(ds.samples()[0].dx.clone().unwrap(), &a * dvector![1.0, 2.0]);
        assert!(simulate_trajectory(&a, &dvector![1.0, 0.0], &[]).is_err());
        assert!(simulate_trajectory(&a, &dvector![1.0, 0.0], &[1.0, 0.5]).is_err());
    }

    fn without_derivatives(ds: &Dataset) -> Dataset {
        let samples = ds
            .samples()
            .iter()
            .map(|s| Sample {
                t: s.t,
                x: s.x.clone(),
                dx: None,
            })
            .collect();
        Dataset::new(ds.n(), samples).unwrap()
    }

    #[test]
    fn central_differences_are_second_order() {
        let a = dmatrix![-1.0, 1.0; 0.0, -2.0];
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.01).collect();
        let exact = simulate_trajectory(&a, &dvector![1.0, 0.0], &times).unwrap();
        let est =
            estimate_derivatives(&without_derivatives(&exact), DifferenceScheme::Central).unwrap();
        assert!(est.is_approximate());
        for s in est.samples() {
            let err = (s.dx.clone().unwrap() - dvector![-(-s.t).exp(), 0.0]).amax();
            assert!(err < 1e-4, "t = {}: error {err}", s.t);
        }
        match est.derivative_source() {
            DerivativeSource::Estimated { max_truncation, .. } => {
                assert!(max_truncation > 0.0 && max_truncation < 1e-4)
            }
            other => panic!("unexpected source {other:?}"),
        }
    }

    #[test]
    fn differences_exact_on_quadratics_with_uneven_grid() {
        let times = [0.0, 0.1, 0.35, 0.4, 1.0];
        let samples = times
            .iter()
            .map(|&t| Sample {
                t,
                x: dvector![1.0 + 2.0 * t, 3.0 * t * t - t],
                dx: None,
            })
            .collect();
        let ds = Dataset::new(2, samples).unwrap();
        let est = estimate_derivatives(&ds, DifferenceScheme::Central).unwrap();
        for s in est.samples() {
            assert_abs_diff_eq!(
                s.dx.clone().unwrap(),
                dvector![2.0, 6.0 * s.t - 1.0],
                epsilon = 1e-12
            );
        }
        let est = estimate_derivatives(&ds, DifferenceScheme::ForwardBackwardEnds).unwrap();
        for s in est.samples() {
            assert_abs_diff_eq!(s.dx.clone().unwrap()[0], 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn too_few_samples_for_central() {
        let ds = Dataset::new(
            1,
            vec![
                Sample {
                    t: 0.0,
                    x: dvector![1.0],
                    dx: None,
                },
                Sample {
                    t: 1.0,
                    x: dvector![2.0],
                    dx: None,
                },
            ],
        )
        .unwrap();
        assert!(estimate_derivatives(&ds, DifferenceScheme::Central).is_err());
        let fb = estimate_derivatives(&ds, DifferenceScheme::ForwardBackwardEnds).unwrap();
        assert_abs_diff_eq!(fb.samples()[0].dx.clone().unwrap()[0], 1.0);
    }
}

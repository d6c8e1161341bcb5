//! JSON problem-instance format.
//!
//! ```json
//! {
//!   "n": 2,
//!   "Q": [[2, 3], [-3, 0]],
//!   "generator": { "A": [[-1, 1], [0, -2]], "x0": [1, 0], "times": [0, 0.25] },
//!   "prior": { "type": "bounded_affine", "base": ..., "directions": [...], "bounds": [[0, 2]] },
//!   "tolerances": { "rank_tol": 1e-9 },
//!   "seed": 0
//! }
//! ```
//!
//! Matrices are row-major nested arrays. Exactly one of `generator` and
//! `dataset` is present; `dataset.samples[k].dx` is optional (all or none),
//! and when absent derivatives are estimated with `dataset.derivative_scheme`
//! (default `central`). Infinite bound ends are written as `null`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matspace::DenseMatrix;
use crate::sysmodel::{Bound, BoundedAffine, Dataset, DifferenceScheme, PriorKnowledge, Sample};
use crate::trajgen::{estimate_derivatives, simulate_trajectory};
use crate::Tolerances;

pub type RawMatrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    pub n: usize,
    #[serde(rename = "Q")]
    pub q: RawMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<RawGenerator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<RawDataset>,
    pub prior: RawPrior,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<RawTolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGenerator {
    #[serde(rename = "A")]
    pub a: RawMatrix,
    pub x0: Vec<f64>,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSample {
    pub t: f64,
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDataset {
    pub samples: Vec<RawSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative_scheme: Option<DifferenceScheme>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RawPrior {
    BoundedAffine {
        base: RawMatrix,
        #[serde(default)]
        directions: Vec<RawMatrix>,
        #[serde(default)]
        bounds: Vec<(Option<f64>, Option<f64>)>,
    },
    SubspaceAction {
        #[serde(rename = "Y0")]
        y0: RawMatrix,
        #[serde(rename = "G")]
        g: RawMatrix,
    },
    Unconstrained,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agree_tol: Option<f64>,
}

/// How the dataset was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataOrigin {
    Generated,
    Inline,
}

/// A validated instance ready for analysis.
#[derive(Debug, Clone)]
pub struct Problem {
    pub n: usize,
    pub q: DenseMatrix,
    pub dataset: Dataset,
    pub prior: PriorKnowledge,
    /// The generating system, known only in generator mode.
    pub truth: Option<DenseMatrix>,
    pub origin: DataOrigin,
    pub tolerances: Tolerances,
    pub seed: u64,
}

pub fn matrix_from_rows(raw: &RawMatrix, path: &str) -> Result<DenseMatrix> {
    let rows = raw.len();
    let cols = raw.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::Input(format!("{path}: matrix must be nonempty")));
    }
    if let Some((i, r)) = raw.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(Error::Input(format!(
            "{path}[{i}]: row has {} entries, expected {cols}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(rows, cols, |i, j| raw[i][j]))
}

pub fn matrix_to_rows(m: &DenseMatrix) -> RawMatrix {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn square(raw: &RawMatrix, n: usize, path: &str) -> Result<DenseMatrix> {
    let m = matrix_from_rows(raw, path)?;
    if m.shape() != (n, n) {
        return Err(Error::Input(format!(
            "{path}: expected {n}x{n}, found {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

fn vector(raw: &[f64], n: usize, path: &str) -> Result<DVector<f64>> {
    if raw.len() != n {
        return Err(Error::Input(format!(
            "{path}: expected {n} entries, found {}",
            raw.len()
        )));
    }
    Ok(DVector::from_column_slice(raw))
}

fn contextualize(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Input(m) => Error::Input(m),
        other => Error::Input(format!("{path}: {other}")),
    }
}

impl RawGenerator {
    pub fn to_dataset(&self, n: usize, path: &str) -> Result<(DenseMatrix, Dataset)> {
        let a = square(&self.a, n, &format!("{path}.A"))?;
        let x0 = vector(&self.x0, n, &format!("{path}.x0"))?;
        if self.times.is_empty() {
            return Err(Error::Input(format!(
                "{path}.times: at least one time is required"
            )));
        }
        let ds = simulate_trajectory(&a, &x0, &self.times).map_err(contextualize(path))?;
        Ok((a, ds))
    }
}

impl RawDataset {
    pub fn to_dataset(&self, n: usize, path: &str) -> Result<Dataset> {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(k, s)| {
                Ok(Sample {
                    t: s.t,
                    x: vector(&s.x, n, &format!("{path}.samples[{k}].x"))?,
                    dx: s
                        .dx
                        .as_ref()
                        .map(|d| vector(d, n, &format!("{path}.samples[{k}].dx")))
                        .transpose()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ds = Dataset::new(n, samples).map_err(contextualize(path))?;
        if ds.has_derivatives() {
            Ok(ds)
        } else {
            estimate_derivatives(
                &ds,
                self.derivative_scheme.unwrap_or(DifferenceScheme::Central),
            )
            .map_err(contextualize(path))
        }
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        Self {
            samples: ds
                .samples()
                .iter()
                .map(|s| RawSample {
                    t: s.t,
                    x: s.x.iter().copied().collect(),
                    dx: s.dx.as_ref().map(|d| d.iter().copied().collect()),
                })
                .collect(),
            derivative_scheme: None,
        }
    }
}

impl RawPrior {
    pub fn to_prior(&self, n: usize) -> Result<PriorKnowledge> {
        match self {
            RawPrior::BoundedAffine {
                base,
                directions,
                bounds,
            } => {
                let base = square(base, n, "prior.base")?;
                let directions = directions
                    .iter()
                    .enumerate()
                    .map(|(k, d)| square(d, n, &format!("prior.directions[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                let bounds = bounds
                    .iter()
                    .enumerate()
                    .map(|(k, (lo, hi))| {
                        Bound::new(lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY))
                            .map_err(contextualize(&format!("prior.bounds[{k}]")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(PriorKnowledge::BoundedAffine(
                    BoundedAffine::new(base, directions, bounds).map_err(contextualize("prior"))?,
                ))
            }
            RawPrior::SubspaceAction { y0, g } => {
                let y0 = matrix_from_rows(y0, "prior.Y0")?;
                let g = matrix_from_rows(g, "prior.G")?;
                if y0.nrows() != n {
                    return Err(Error::Input(format!(
                        "prior.Y0: expected {n} rows, found {}",
                        y0.nrows()
                    )));
                }
                PriorKnowledge::subspace_action(y0, g).map_err(contextualize("prior"))
            }
            RawPrior::Unconstrained => Ok(PriorKnowledge::Unconstrained),
        }
    }

    pub fn from_prior(pk: &PriorKnowledge) -> Self {
        match pk {
            PriorKnowledge::BoundedAffine(b) => RawPrior::BoundedAffine {
                base: matrix_to_rows(b.base()),
                directions: b.directions().iter().map(matrix_to_rows).collect(),
                bounds: b
                    .bounds()
                    .iter()
                    .map(|b| {
                        (
                            b.lower.is_finite().then_some(b.lower),
                            b.upper.is_finite().then_some(b.upper),
                        )
                    })
                    .collect(),
            },
            PriorKnowledge::SubspaceAction { y0, g } => RawPrior::SubspaceAction {
                y0: matrix_to_rows(y0),
                g: matrix_to_rows(g),
            },
            PriorKnowledge::Unconstrained => RawPrior::Unconstrained,
        }
    }
}

impl RawInstance {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("invalid instance: {e}")))
    }

    pub fn to_problem(&self) -> Result<Problem> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Input("n: state dimension must be positive".into()));
        }
        let q = square(&self.q, n, "Q")?;
        let (dataset, truth, origin) = match (&self.generator, &self.dataset) {
            (Some(g), None) => {
                let (a, ds) = g.to_dataset(n, "generator")?;
                (ds, Some(a), DataOrigin::Generated)
            }
            (None, Some(d)) => (d.to_dataset(n, "dataset")?, None, DataOrigin::Inline),
            (Some(_), Some(_)) => {
                return Err(Error::Input(
                    "exactly one of \"generator\" and \"dataset\" may be given, found both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Input(
                    "exactly one of \"generator\" and \"dataset\" must be given, found neither"
                        .into(),
                ))
            }
        };
        let prior = self.prior.to_prior(n)?;
        let mut tolerances = Tolerances::default();
        if let Some(t) = &self.tolerances {
            if let Some(v) = t.rank_tol {
                tolerances.rank_tol = v;
            }
            if let Some(v) = t.gap_tol {
                tolerances.gap_tol = v;
            }
            if let Some(v) = t.agree_tol {
                tolerances.agree_tol = v;
            }
        }
        for (name, v) in [
            ("tolerances.rank_tol", tolerances.rank_tol),
            ("tolerances.gap_tol", tolerances.gap_tol),
            ("tolerances.agree_tol", tolerances.agree_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Input(format!(
                    "{name}: must be finite and positive, got {v}"
                )));
            }
        }
        Ok(Problem {
            n,
            q,
            dataset,
            prior,
            truth,
            origin,
            tolerances,
            seed: self.seed.unwrap_or(0),
        })
    }
}

pub fn load_problem(path: &std::path::Path) -> Result<Problem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    RawInstance::parse(&text)?.to_problem()
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUNNING: &str = r#"{
        "n": 2,
        "Q": [[2, 3], [-3, 0]],
        "generator": {"A": [[-1, 1], [0, -2]], "x0": [1, 0], "times": [0, 0.5, 1.0]},
        "prior": {
            "type": "bounded_affine",
            "base": [[0, 0], [0, -2]],
            "directions": [[[1, 0], [0, 0]], [[0, 1], [0, 0]], [[0, 0], [1, 0]]],
            "bounds": [[null, null], [0, 2], [null, null]]
        },
        "seed": 3
    }"#;

    #[test]
    fn parses_running_instance() {
        let p = RawInstance::parse(RUNNING).unwrap().to_problem().unwrap();
        assert_eq!(p.n, 2);
        assert_eq!(p.seed, 3);
        assert_eq!(p.origin, DataOrigin::Generated);
        assert!(p.truth.is_some());
        assert_eq!(p.dataset.len(), 3);
        match &p.prior {
            PriorKnowledge::BoundedAffine(b) => {
                assert_eq!(b.bounds()[1], Bound::new(0.0, 2.0).unwrap());
                assert!(b.bounds()[0].is_unbounded());
            }
            other => panic!("unexpected prior {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_q_shape() {
        let text = RUNNING.replace(
            r#""Q": [[2, 3], [-3, 0]]"#,
            r#""Q": [[2, 3], [-3, 0], [1, 1]]"#,
        );
        let err = RawInstance::parse(&text).unwrap().to_problem().unwrap_err();
        assert!(err.to_string().contains("Q: expected 2x2"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = RawInstance::parse("{\n  \"n\": 2,\n  \"Q\": [[1,]]\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys_and_both_sources() {
        assert!(RawInstance::parse(&RUNNING.replace("\"seed\"", "\"sed\"")).is_err());
        let both = RUNNING.replace(
            "\"seed\": 3",
            "\"seed\": 3, \"dataset\": {\"samples\": [{\"t\": 0, \"x\": [1, 0]}]}",
        );
        let err = RawInstance::parse(&both).unwrap().to_problem().unwrap_err();
        assert!(err.to_string().contains("found both"));
    }

    #[test]
    fn inline_dataset_without_derivatives_is_estimated() {
        let text = r#"{
            "n": 1, "Q": [[1]],
            "dataset": {"samples": [{"t": 0, "x": [1]}, {"t": 0.1, "x": [0.9]}, {"t": 0.2, "x": [0.81]}]},
            "prior": {"type": "unconstrained"}
        }"#;
        let p = RawInstance::parse(text).unwrap().to_problem().unwrap();
        assert!(p.dataset.is_approximate());
        assert!(p.truth.is_none());
    }

    #[test]
    fn prior_round_trips_through_raw_form() {
        let p = RawInstance::parse(RUNNING).unwrap().to_problem().unwrap();
        let back = RawPrior::from_prior(&p.prior).to_prior(2).unwrap();
        assert_eq!(back, p.prior);
    }
}

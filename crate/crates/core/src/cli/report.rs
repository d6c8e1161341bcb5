//! Machine-readable (`--json`) and human-readable command reports.

use std::fmt::Write as _;

use serde::Serialize;

use super::instance::{matrix_to_rows, DataOrigin, RawMatrix};
use crate::informativity::{VerdictTag, Witness};
use crate::sysmodel::{Assumption1Status, DerivativeSource};

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub exit_code: i32,
    pub verdict: Option<VerdictTag>,
    pub message: String,
    /// `P*` when the pair is informative.
    pub solution: Option<RawMatrix>,
    pub certificate: Option<CertificateReport>,
    /// Tag of the `Q ∈ L₀(𝒦)` checker, run as a cross-check.
    pub subspace_form: Option<VerdictTag>,
    pub assumption1: Option<Assumption1Status>,
    pub consistent_set: Option<SetReport>,
    pub data: DataReport,
    pub tolerances: ToleranceReport,
    pub seed: u64,
    pub witness: Option<WitnessReport>,
    pub reduced: Option<ReducedReport>,
    pub oracle: Option<OracleReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub residual: Option<f64>,
    pub threshold: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SetReport {
    pub dim: usize,
    pub base: RawMatrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct DataReport {
    pub origin: DataOrigin,
    pub samples: usize,
    pub derivatives: DerivativeSource,
    pub approximate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ToleranceReport {
    pub rank_tol: f64,
    pub gap_tol: f64,
    pub agree_tol: f64,
    /// `rank_tol` actually used; loosened for estimated derivatives.
    pub effective_rank_tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub a1: RawMatrix,
    pub a2: RawMatrix,
    pub phi1: RawMatrix,
    pub phi2: RawMatrix,
    pub separation: f64,
}

impl From<&Witness> for WitnessReport {
    fn from(w: &Witness) -> Self {
        Self {
            a1: matrix_to_rows(&w.a1),
            a2: matrix_to_rows(&w.a2),
            phi1: matrix_to_rows(&w.phi1),
            phi2: matrix_to_rows(&w.phi2),
            separation: w.separation(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedReport {
    pub r: usize,
    pub unknowns: usize,
    pub z: RawMatrix,
    pub w: RawMatrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    /// `informative` when all samples agree, `not_informative` with a
    /// witness, `null` when the set could not be sampled.
    pub outcome: Option<VerdictTag>,
    pub samples: usize,
    pub retried: bool,
    pub agrees_with_checker: bool,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl CertificateReport {
    pub fn new(residual: f64, threshold: f64, note: &str) -> Self {
        Self {
            residual: finite(residual),
            threshold: finite(threshold),
            note: note.to_string(),
        }
    }
}

fn write_matrix(out: &mut String, name: &str, m: &RawMatrix) {
    let _ = writeln!(out, "{name} =");
    for row in m {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>16.10}")).collect();
        let _ = writeln!(out, "  [{} ]", cells.join(""));
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        match self.verdict {
            Some(v) => {
                let _ = writeln!(out, "verdict: {v}");
            }
            None => {
                let _ = writeln!(out, "verdict: none");
            }
        }
        if !self.message.is_empty() {
            let _ = writeln!(out, "message: {}", self.message);
        }
        let _ = writeln!(
            out,
            "data: {} samples ({:?}), derivatives {}",
            self.data.samples,
            self.data.origin,
            if self.data.approximate {
                "approximate"
            } else {
                "exact"
            }
        );
        if let Some(a) = &self.assumption1 {
            let _ = writeln!(out, "prior check: {a:?}");
        }
        if let Some(s) = &self.consistent_set {
            let _ = writeln!(out, "consistent set: dimension {}", s.dim);
        }
        if let Some(c) = &self.certificate {
            match (c.residual, c.threshold) {
                (Some(r), Some(t)) => {
                    let _ = writeln!(out, "residual: {r:.3e} (threshold {t:.3e}); {}", c.note);
                }
                _ => {
                    let _ = writeln!(out, "certificate: {}", c.note);
                }
            }
        }
        if let Some(t) = self.subspace_form {
            let _ = writeln!(out, "cross-check (Q in L0(K)): {t}");
        }
        let _ = writeln!(
            out,
            "tolerances: rank {:.1e} (effective {:.1e}), gap {:.1e}, agree {:.1e}; seed {}",
            self.tolerances.rank_tol,
            self.tolerances.effective_rank_tol,
            self.tolerances.gap_tol,
            self.tolerances.agree_tol,
            self.seed
        );
        if let Some(p) = &self.solution {
            write_matrix(&mut out, "P*", p);
        }
        if let Some(r) = &self.reduced {
            let _ = writeln!(out, "reduced: r = {}, unknowns = {}", r.r, r.unknowns);
            write_matrix(&mut out, "Z", &r.z);
            write_matrix(&mut out, "W*", &r.w);
        }
        if let Some(o) = &self.oracle {
            let outcome = o
                .outcome
                .map_or("no samples".to_string(), |t| t.to_string());
            let _ = writeln!(
                out,
                "oracle: {outcome} from {} samples{}; {}",
                o.samples,
                if o.retried { " (retried)" } else { "" },
                if o.agrees_with_checker {
                    "agrees with checker"
                } else {
                    "DISAGREES with checker"
                }
            );
        }
        if let Some(w) = &self.witness {
            let _ = writeln!(out, "witness pair (solutions {:.3e} apart):", w.separation);
            write_matrix(&mut out, "A1", &w.a1);
            write_matrix(&mut out, "Phi(A1,Q)", &w.phi1);
            write_matrix(&mut out, "A2", &w.a2);
            write_matrix(&mut out, "Phi(A2,Q)", &w.phi2);
        }
        out
    }
}

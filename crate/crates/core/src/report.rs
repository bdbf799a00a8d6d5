//! Run reports and artifact serialization: JSON report, CSV traces, and the
//! binary snapshot dump (little-endian f64, header of n_nodes and n_times).

use crate::classify::ClassificationReport;
use crate::evolve::{ConservativenessReport, SemigroupTrace, ViolationReport};
use crate::krein::KreinDiagnostics;
use crate::shoot::{BlowupReport, DeficiencyDiagnostics, ShootingSolution};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Assertion {
    pub fn check(name: &str, pass: bool, detail: String) -> Self {
        Assertion {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

/// Per-analysis outcome: errors are recorded without aborting the rest.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome<T: Serialize> {
    Ok { data: T },
    Error { message: String },
    Skipped,
}

impl<T: Serialize> Outcome<T> {
    pub fn from_result(r: crate::error::Result<T>) -> Self {
        match r {
            Ok(data) => Outcome::Ok { data },
            Err(e) => Outcome::Error {
                message: e.to_string(),
            },
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Outcome::Error { .. })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshInfo {
    pub n_cells: usize,
    pub grading_ratio: f64,
    pub truncation: f64,
    pub min_cell: f64,
    pub max_min_cell_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveSummary {
    pub scheme: String,
    /// Backward Euler preserves positivity exactly on an M-matrix;
    /// Crank-Nicolson metrics are accuracy-study data only.
    pub positivity_reliable: bool,
    pub horizon: f64,
    pub n_steps: usize,
    pub final_metrics: crate::evolve::SnapshotMetrics,
    pub min_over_trace: f64,
    pub sup_expansion: f64,
    pub l2_monotone: bool,
    pub left_mass_fraction_final: f64,
    pub conservativeness: Option<ConservativenessReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffSummary {
    pub n: f64,
    pub energy: f64,
    pub nu_n: f64,
    pub energy_times_nu: f64,
    pub flux_divergence_l1: f64,
    pub corrected_l1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeficiencySummary {
    pub gamma: f64,
    pub sides: Vec<(String, DeficiencyDiagnostics)>,
    pub eta: Option<EtaSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaSummary {
    pub positive: bool,
    pub non_increasing: bool,
    pub tail_exponent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupSummary {
    pub boundary: String,
    pub monotone_square: bool,
    pub growth_factor: f64,
}

impl From<&BlowupReport> for BlowupSummary {
    fn from(r: &BlowupReport) -> Self {
        BlowupSummary {
            boundary: String::new(),
            monotone_square: r.monotone_square,
            growth_factor: r.growth_factor,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisResults {
    pub classification: Outcome<ClassificationReport>,
    pub deficiency: Outcome<Vec<DeficiencySummary>>,
    pub evolve: Outcome<EvolveSummary>,
    pub submarkov: Outcome<ViolationReport>,
    pub krein: Outcome<Vec<KreinDiagnostics>>,
    pub blowup: Outcome<Vec<BlowupSummary>>,
    pub decompose: Outcome<crate::decompose::Decomposition>,
    pub cutoffs: Outcome<Vec<CutoffSummary>>,
}

impl Default for AnalysisResults {
    fn default() -> Self {
        AnalysisResults {
            classification: Outcome::Skipped,
            deficiency: Outcome::Skipped,
            evolve: Outcome::Skipped,
            submarkov: Outcome::Skipped,
            krein: Outcome::Skipped,
            blowup: Outcome::Skipped,
            decompose: Outcome::Skipped,
            cutoffs: Outcome::Skipped,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: String,
    pub seed: u64,
    pub scenario: Vec<(String, String)>,
    pub tolerances: crate::scenario::Tolerances,
    pub mesh: Option<MeshInfo>,
    pub analyses: AnalysisResults,
    pub assertions: Vec<Assertion>,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// CSV of a semigroup trace: t, min, sup, l1, l2, mass_left, mass_right.
pub fn trace_csv(trace: &SemigroupTrace) -> String {
    let mut out = String::from("t,min,sup,l1,l2,mass_left,mass_right\n");
    for m in &trace.metrics {
        out.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            m.time,
            m.min_value,
            m.sup_norm,
            m.l1_mass,
            m.l2_norm,
            m.mass_left_of_origin,
            m.mass_right_of_origin
        ));
    }
    out
}

/// CSV of a shooting solution: x, psi, flux, l2_partial.
pub fn shooting_csv(sol: &ShootingSolution) -> String {
    let mut out = String::from("x,psi,flux,l2_partial\n");
    for i in 0..sol.grid.len() {
        out.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e}\n",
            sol.grid[i], sol.psi[i], sol.flux[i], sol.l2_partial[i]
        ));
    }
    out
}

/// Binary snapshot dump: u64 n_nodes, u64 n_times, times, then snapshots
/// row-major, all little-endian 64-bit.
pub fn snapshot_dump(trace: &SemigroupTrace) -> Vec<u8> {
    let n_nodes = trace.snapshots.first().map_or(0, |s| s.len()) as u64;
    let n_times = trace.times.len() as u64;
    let mut out = Vec::with_capacity(16 + 8 * (n_times as usize) * (1 + n_nodes as usize));
    out.extend_from_slice(&n_nodes.to_le_bytes());
    out.extend_from_slice(&n_times.to_le_bytes());
    for t in &trace.times {
        out.extend_from_slice(&t.to_le_bytes());
    }
    for snap in &trace.snapshots {
        for v in snap {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub exponent_left: f64,
    pub exponent_right: f64,
    pub alpha_over_beta: Option<f64>,
    pub case: Option<String>,
    pub deficiency_index: Option<u32>,
    pub unique_submarkovian: Option<bool>,
    pub submarkovian_bc: Option<bool>,
    pub invariance_leak: Option<f64>,
    pub lambda_min: Option<f64>,
    pub error: Option<String>,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "exponent_left,exponent_right,alpha_over_beta,case,deficiency_index,unique_submarkovian,submarkovian_bc,invariance_leak,lambda_min,error\n",
    );
    let fmt_opt = |v: &Option<f64>| v.map_or(String::new(), |x| format!("{x:.12e}"));
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.exponent_left,
            r.exponent_right,
            fmt_opt(&r.alpha_over_beta),
            r.case.clone().unwrap_or_default(),
            r.deficiency_index.map_or(String::new(), |v| v.to_string()),
            r.unique_submarkovian
                .map_or(String::new(), |v| v.to_string()),
            r.submarkovian_bc.map_or(String::new(), |v| v.to_string()),
            fmt_opt(&r.invariance_leak),
            fmt_opt(&r.lambda_min),
            r.error.clone().unwrap_or_default(),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_dump_layout() {
        let trace = SemigroupTrace {
            times: vec![0.0, 0.5],
            snapshots: vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
            metrics: vec![],
            scheme: crate::evolve::Scheme::BackwardEuler,
        };
        let bytes = snapshot_dump(&trace);
        assert_eq!(bytes.len(), 16 + 8 * 2 + 8 * 6);
        assert_eq!(u64::from_le_bytes(bytes[0..8].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
        let t0 = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
        assert_eq!(t0, 0.0);
        let last = f64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
        assert_eq!(last, 6.0);
    }
}

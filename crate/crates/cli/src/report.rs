//! JSON report structures shared by the subcommands.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    /// PASS | FAIL | SKIPPED
    pub status: String,
    /// Names the property checked (and why it was skipped, if it was).
    pub reason: String,
}

impl Verdict {
    pub fn pass(reason: impl Into<String>) -> Self {
        Verdict { status: "PASS".into(), reason: reason.into() }
    }

    pub fn fail(reason: impl Into<String>) -> Self {
        Verdict { status: "FAIL".into(), reason: reason.into() }
    }

    pub fn skipped(reason: impl Into<String>) -> Self {
        Verdict { status: "SKIPPED".into(), reason: reason.into() }
    }

    pub fn check(ok: bool, reason: impl Into<String>) -> Self {
        if ok {
            Verdict::pass(reason)
        } else {
            Verdict::fail(reason)
        }
    }

    pub fn failed(&self) -> bool {
        self.status == "FAIL"
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterRow {
    pub start: usize,
    pub size: usize,
    pub lambda: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSummary {
    pub count: usize,
    pub lambdas: Vec<f64>,
    pub max_residual: f64,
    pub clusters: Vec<ClusterRow>,
    pub kernel_directions_excluded: usize,
    pub rank_deficient: bool,
    pub dofs: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DimInfSection {
    pub slope: f64,
    pub per_delta: Vec<(f64, f64)>,
    pub hypothesis_violated: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodalRow {
    pub index: usize,
    pub lambda: f64,
    pub m: usize,
    pub r: usize,
    pub positive: usize,
    pub negative: usize,
    pub unsigned_fraction: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodalSection {
    pub rows: Vec<NodalRow>,
    pub worst_margin: Option<i64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct AgreementRow {
    pub index: usize,
    pub lambda_galerkin: f64,
    pub lambda_green: f64,
    pub rel_diff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AgreementSection {
    pub rows: Vec<AgreementRow>,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Documents the quadrature defaults a run used (the degree-exactness
/// contract is a configuration choice, so it is recorded with the results).
#[derive(Clone, Debug, Serialize)]
pub struct QuadratureNote {
    pub segment_cells: usize,
    pub area_cells_per_axis: usize,
    pub gauss_order: usize,
    pub nystrom_nodes_per_segment: usize,
    pub nystrom_area_nodes_per_axis: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config_hash: String,
    pub seed: u64,
    pub command: String,
    pub dim_inf: Option<DimInfSection>,
    pub spectrum: Option<SpectrumSummary>,
    pub nodal: Option<NodalSection>,
    pub green_agreement: Option<AgreementSection>,
    pub validation: Option<Vec<FixtureReport>>,
    pub quadrature: QuadratureNote,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixtureReport {
    pub name: String,
    pub measured: BTreeMap<String, serde_json::Value>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionSection {
    pub sup: f64,
    pub sup_refined: f64,
    pub rel_change: f64,
    pub stable: bool,
    pub singular_at: Option<[f64; 2]>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecaySection {
    pub boundary_point: [f64; 2],
    pub distances: Vec<f64>,
    pub values: Vec<f64>,
    pub interior_max: f64,
    pub final_ratio: f64,
    pub threshold: f64,
    pub monotone_ish: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulusSection {
    pub spacings: Vec<f64>,
    pub moduli: Vec<f64>,
    pub ratios: Vec<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetrySection {
    pub defect: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct GreenReport {
    pub config_hash: String,
    pub seed: u64,
    pub condition: Option<ConditionSection>,
    pub route_agreement: Option<AgreementSection>,
    pub operator_symmetry: Option<SymmetrySection>,
    pub boundary_decay: Option<Vec<DecaySection>>,
    pub continuity_modulus: Option<ModulusSection>,
    pub skipped_reason: Option<String>,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidateReport {
    pub config_hash: String,
    pub seed: u64,
    pub example: Option<String>,
    pub fixtures: Vec<FixtureReport>,
    pub timings_ms: BTreeMap<String, f64>,
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization");
    s.push('\n');
    s
}

/// True when any verdict in the serialized report failed.
pub fn any_fail<T: Serialize>(value: &T) -> bool {
    fn walk(v: &serde_json::Value) -> bool {
        match v {
            serde_json::Value::Object(map) => {
                if map.get("status").and_then(|s| s.as_str()) == Some("FAIL") {
                    return true;
                }
                map.values().any(walk)
            }
            serde_json::Value::Array(items) => items.iter().any(walk),
            _ => false,
        }
    }
    walk(&serde_json::to_value(value).expect("report serialization"))
}

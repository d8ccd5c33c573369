//! Machine-readable run reports.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// `covlp` for explicit LPs, `binpack` for bin-packing instances.
    pub kind: String,
    pub instance_sha256: String,
    pub params: Params,
    pub outcome: Option<Outcome>,
    /// Solver error, if the run aborted.
    pub error: Option<String>,
    pub counters: Counters,
    pub bounds: Bounds,
    pub checks: BoundChecks,
    pub verification: Option<Verification>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub eps: f64,
    /// Weakness the solver assumes.
    pub eta: f64,
    pub oracle: String,
    pub q: f64,
    pub rho: f64,
    pub feas_tol: f64,
    /// Point-find cap per inner solve.
    pub max_calls: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub objective: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub solution: Vec<SolutionEntry>,
}

/// A column id with its weight. Explicit LPs use column indices,
/// bin packing uses count vectors over the sorted item sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionEntry {
    pub column: Value,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub index_find_calls: u64,
    pub column_calls: u64,
    pub cost_calls: u64,
    pub point_find_calls: u64,
    pub max_point_find_per_probe: u64,
    pub improve_cover_calls: u64,
    pub max_improve_cover_per_probe: u64,
    pub probes: u64,
    pub search_iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// Bound on bisection iterations.
    pub m: f64,
    /// True when `m` uses a lower bound on the optimum instead of its exact value.
    pub m_worst_case: bool,
    /// Bound on point-find calls per inner solve.
    pub u: u64,
    /// Bound on improve-cover invocations per inner solve.
    pub improve_cover: u64,
    /// `m * u`, bound on index-find calls in total.
    pub total_calls: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundChecks {
    pub iterations_within_m: bool,
    pub point_find_within_u: bool,
    pub improve_cover_within_bound: bool,
    pub index_find_within_total: bool,
}

impl BoundChecks {
    pub fn all(&self) -> bool {
        self.iterations_within_m && self.point_find_within_u && self.improve_cover_within_bound && self.index_find_within_total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub r_star: f64,
    /// Exact optimum as a reduced fraction.
    pub r_star_exact: String,
    /// `(1 + eps + eps^2) / eta`
    pub factor: f64,
    pub ratio: Option<f64>,
    pub objective_ok: bool,
    pub feasible_ok: bool,
    pub bounds_ok: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

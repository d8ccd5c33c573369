//! Covering LP solver: binary search on the objective value, with each probe
//! `r` answered by weakly solving `fcov(A, b, P_r)` over the cost slice
//! `P_r = {x >= 0 : c^T x = r}`.
//!
//! The extreme points of `P_r` are `(r / c_j) e_j`, so an index-finding
//! oracle becomes a point-finding oracle with one call (`tau = 1`), and the
//! product `Ax` of a sparse `x` costs `|support(x)|` column calls. Every
//! `r <= q` has `width(A, b, P_r) <= rho`, so the caller's `rho` serves all
//! probes.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac_cover::{frac_cover, FcovObserver, FcovOptions, FcovOutcome, FcovResult, FcovStats};
use crate::lp_core::{derived_params, CoveringOracleSuite, DenseVec, SolveParams, SparseVec};

/// Validates `0 <= r <= q` and returns `rho` as the width bound for `P_r`.
///
/// `width(A, b, P_r) = r max_{i,j} A[i,j] / (b_i c_j)`, which is at most
/// `q max_{i,j} A[i,j] / (b_i c_j) <= rho`.
pub fn width_bound_check(q: f64, rho: f64, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain(format!("r must be nonnegative, got {r}")));
    }
    if r > q {
        return Err(Error::domain(format!("r = {r} exceeds q = {q}")));
    }
    if !(rho >= 0.0) {
        return Err(Error::domain(format!("rho must be nonnegative, got {rho}")));
    }
    Ok(rho)
}

fn slice_point<O: CoveringOracleSuite>(covering: &O, r: f64, y: &DenseVec) -> Result<(O::Column, f64)> {
    let k = covering.index_find(y)?;
    let ck = covering.cost(&k)?;
    if !(ck > 0.0 && ck.is_finite()) {
        return Err(Error::contract(format!("cost oracle returned {ck} for column {k:?}")));
    }
    Ok((k, r / ck))
}

fn column_product<O: CoveringOracleSuite>(covering: &O, x: &SparseVec<O::Column>) -> Result<DenseVec> {
    let m = covering.rows();
    let mut out = DenseVec::zeros(m);
    for (j, &w) in x {
        let a = covering.column(j)?;
        if a.len() != m {
            return Err(Error::contract(format!("column {j:?} has {} rows, expected {m}", a.len())));
        }
        if !a.all_nonnegative() {
            return Err(Error::contract(format!("column {j:?} has a negative entry")));
        }
        out.add_scaled(w, &a);
    }
    Ok(out)
}

/// Point-finding oracle over `P_r`: `y -> (r / c_k) e_k` with
/// `k = index_find(y)`. It is `eta`-weak whenever `index_find` is.
pub fn make_point_find<O: CoveringOracleSuite>(
    covering: &O,
    r: f64,
) -> impl Fn(&DenseVec) -> Result<SparseVec<O::Column>> + '_ {
    move |y| {
        let (k, w) = slice_point(covering, r, y)?;
        Ok(SparseVec::singleton(k, w))
    }
}

/// Product oracle `x -> sum_j x_j a_j` using `|support(x)|` column calls.
pub fn make_product<O: CoveringOracleSuite>(covering: &O) -> impl Fn(&SparseVec<O::Column>) -> Result<DenseVec> + '_ {
    move |x| column_product(covering, x)
}

/// Per-oracle call counts of the covering suite.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCalls {
    pub index_find: u64,
    pub cost: u64,
    pub column: u64,
}

impl std::ops::AddAssign for OracleCalls {
    fn add_assign(&mut self, o: Self) {
        self.index_find += o.index_find;
        self.cost += o.cost;
        self.column += o.column;
    }
}

/// Fractional covering oracles for `P_r` synthesized from a covering suite.
pub struct PrOracles<'a, O: CoveringOracleSuite> {
    covering: &'a O,
    r: f64,
    eta: f64,
    index_find: Cell<u64>,
    cost: Cell<u64>,
    column: Cell<u64>,
}

impl<'a, O: CoveringOracleSuite> PrOracles<'a, O> {
    pub fn new(covering: &'a O, r: f64, eta: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain(format!("r must be positive, got {r}")));
        }
        Ok(PrOracles { covering, r, eta, index_find: Cell::new(0), cost: Cell::new(0), column: Cell::new(0) })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn calls(&self) -> OracleCalls {
        OracleCalls { index_find: self.index_find.get(), cost: self.cost.get(), column: self.column.get() }
    }
}

impl<O: CoveringOracleSuite> crate::lp_core::FcovOracleSuite for PrOracles<'_, O> {
    type Column = O::Column;

    fn rows(&self) -> usize {
        self.covering.rows()
    }

    fn product(&self, x: &SparseVec<O::Column>) -> Result<DenseVec> {
        self.column.set(self.column.get() + x.len() as u64);
        column_product(self.covering, x)
    }

    fn point_find(&self, y: &DenseVec) -> Result<SparseVec<O::Column>> {
        self.index_find.set(self.index_find.get() + 1);
        self.cost.set(self.cost.get() + 1);
        let (k, w) = slice_point(self.covering, self.r, y)?;
        Ok(SparseVec::singleton(k, w))
    }

    fn eta(&self) -> f64 {
        self.eta
    }

    fn tau(&self) -> usize {
        1
    }
}

/// Outcome of one probe plus the covering-oracle calls it made.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult<C: Ord> {
    pub r: f64,
    pub result: FcovResult<C>,
    pub calls: OracleCalls,
}

/// `eta / (1 + eps)`-weakly solves `fcov(A, b, P_r)`.
pub fn frac_cov_2<O: CoveringOracleSuite>(
    covering: &O,
    b: &DenseVec,
    r: f64,
    params: &SolveParams,
    observer: &mut dyn FcovObserver<O::Column>,
) -> Result<ProbeResult<O::Column>> {
    params.validate()?;
    let rho = width_bound_check(params.q, params.rho, r)?;
    let oracles = PrOracles::new(covering, r, params.eta)?;
    let opts = FcovOptions { feas_tol: params.feas_tol, max_point_find_calls: params.max_oracle_calls };
    let result = frac_cover(&oracles, b, rho, params.eps, &opts, observer)?;
    Ok(ProbeResult { r, result, calls: oracles.calls() })
}

/// One probe of the binary search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub r: f64,
    pub satisfiable: bool,
    pub stats: FcovStats,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CovLpStats {
    pub calls: OracleCalls,
    pub point_find_calls: u64,
    pub product_calls: u64,
    pub improve_cover_calls: u64,
    /// Iterations of the bisection loop (the initial probe at `r = q` excluded).
    pub iterations: u64,
    pub probes: Vec<ProbeRecord>,
}

impl CovLpStats {
    fn record<C: Ord>(&mut self, p: &ProbeResult<C>) {
        self.calls += p.calls;
        self.point_find_calls += p.result.stats.point_find_calls;
        self.product_calls += p.result.stats.product_calls;
        self.improve_cover_calls += p.result.stats.improve_cover_calls;
        self.probes.push(ProbeRecord { r: p.r, satisfiable: p.result.is_solution(), stats: p.result.stats.clone() });
    }

    /// Largest point-find count of a single probe.
    pub fn max_point_find_per_probe(&self) -> u64 {
        self.probes.iter().map(|p| p.stats.point_find_calls).max().unwrap_or(0)
    }

    pub fn max_improve_cover_per_probe(&self) -> u64 {
        self.probes.iter().map(|p| p.stats.improve_cover_calls).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovLpResult<C: Ord> {
    /// Largest probed level with `g = 0` (or 0).
    pub alpha: f64,
    /// Smallest probed level with `g = 1`.
    pub beta: f64,
    /// Solution of the last satisfiable probe; `c^T x_raw = beta`, `A x_raw >= mu b`.
    pub x_raw: SparseVec<C>,
    /// Point-find calls of the probe that produced `x_raw`.
    pub x_raw_point_find_calls: u64,
    /// `x_raw / mu`, feasible for the covering LP.
    pub x_feasible: SparseVec<C>,
    /// `c^T x_feasible = beta / mu`
    pub objective: f64,
    pub mu: f64,
    pub stats: CovLpStats,
}

/// Solves `covLP(A, b, c)` to within `(1 + eps + eps^2) / eta`.
pub fn cov_lp_solve<O: CoveringOracleSuite>(
    covering: &O,
    b: &DenseVec,
    params: &SolveParams,
) -> Result<CovLpResult<O::Column>> {
    cov_lp_solve_observed(covering, b, params, &mut ())
}

pub fn cov_lp_solve_observed<O: CoveringOracleSuite>(
    covering: &O,
    b: &DenseVec,
    params: &SolveParams,
    observer: &mut dyn FcovObserver<O::Column>,
) -> Result<CovLpResult<O::Column>> {
    params.validate()?;
    if params.eta > covering.eta() {
        return Err(Error::domain(format!(
            "requested eta = {} exceeds the oracle's declared eta = {}",
            params.eta,
            covering.eta()
        )));
    }
    if b.len() != covering.rows() {
        return Err(Error::domain(format!("b has {} rows but the oracles have {}", b.len(), covering.rows())));
    }
    if b.is_empty() || !b.all_positive() {
        return Err(Error::domain("b must be nonempty and strictly positive"));
    }
    let d = derived_params(params.eps, params.eta)?;
    let mu = d.mu();
    let mut stats = CovLpStats::default();

    let first = frac_cov_2(covering, b, params.q, params, observer)?;
    stats.record(&first);
    let (mut x_hat, mut x_hat_calls) = match first.result.outcome {
        FcovOutcome::Solution { x, .. } => (x, first.result.stats.point_find_calls),
        FcovOutcome::Unsatisfiable => {
            return Err(Error::Precondition(format!(
                "no solution at r = q = {}: q is not an upper bound on the optimum, or rho is too small",
                params.q
            )))
        }
    };

    let mut alpha = 0.0;
    let mut beta = params.q;
    while beta > (1.0 + d.delta) * alpha {
        let r = 0.5 * (alpha + beta);
        debug_assert!(r > 0.0);
        let probe = frac_cov_2(covering, b, r, params, observer)?;
        stats.record(&probe);
        stats.iterations += 1;
        match probe.result.outcome {
            FcovOutcome::Unsatisfiable => alpha = r,
            FcovOutcome::Solution { x, .. } => {
                beta = r;
                x_hat = x;
                x_hat_calls = probe.result.stats.point_find_calls;
            }
        }
    }

    let x_feasible = x_hat.scaled(1.0 / mu);
    Ok(CovLpResult {
        alpha,
        beta,
        x_raw: x_hat,
        x_raw_point_find_calls: x_hat_calls,
        x_feasible,
        objective: beta / mu,
        mu,
        stats,
    })
}

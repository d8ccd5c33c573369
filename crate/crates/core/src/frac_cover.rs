//! Multiplicative-weights solver for the fractional covering problem
//! `fcov(A, b, P)`: find `x` in `P` with `Ax >= b` or report that none exists.
//!
//! Given an `eta`-weak point-finding oracle the solver either returns `x` in
//! `P` with `Ax >= (eta / (1 + eps)) b` or proves unsatisfiability. It works on
//! the optimisation form `max_{x in P} lambda(x)` with
//! `lambda(x) = min_i (Ax)_i / b_i`, improving a seed point by repeated convex
//! steps towards oracle answers, steered by exponential dual weights
//! `y_i = exp(-alpha (Ax)_i / b_i) / b_i`.
//!
//! Two relaxed optimality conditions certify progress:
//!
//! - `C1(eps1)`: `(1 + eps1) lambda(x) y^T b >= y^T A x`
//! - `C2(eps2, eps3)`: `y^T A x >= (1 - eps2) C(y) - eps3 lambda(x) y^T b`,
//!   where `C(y) = max_{x' in P} y^T A x'`.
//!
//! `C(y)` cannot be evaluated through a weak oracle, so `C2` is tested through
//! the oracle answer `x~` for the same `y`:
//!
//! ```text
//! y^T A x >= (1 - eps2) (y^T A x~) / eta - eps3 lambda y^T b
//! ```
//!
//! Since `C(y) <= y^T A x~ / eta`, passing the surrogate implies `C2`. Failing
//! it gives `y^T A x~ > (eta / (1 - eps2)) (y^T A x + eps3 lambda y^T b)`. The
//! potential-decrease argument only ever uses `y^T A x~ >= eta C(y)` and
//! `(1 - eps2) C(y) > y^T A x + eps3 lambda y^T b` through their product; the
//! single surrogate inequality replaces both and yields the same bound
//!
//! ```text
//! (b^T y - b^T y') / b^T y > alpha sigma lambda eps3 (1 - eps_sigma) eta / (1 - eps2)
//! ```
//!
//! for the weights `y'` after the step. Each loop iteration therefore calls the
//! oracle once, tests the surrogate, and only steps on failure.
//!
//! Weights are kept with the factor `exp(-alpha lambda(x))` pulled out (see
//! [`DualWeights`]); every test above is linear in `y` and the oracle's argmax
//! is scale invariant, so the scaled weights are used throughout.

use crate::error::{Error, Result};
use crate::lp_core::{
    bound_u, check_unit_interval, derived_params, ColumnId, DenseVec, DerivedParams, FcovOracleSuite, SparseVec,
    DEFAULT_FEAS_TOL,
};

/// `gamma` below this folds into the accumulated base vector.
const GAMMA_RENORMALIZE: f64 = 1e-150;

/// `min_i (Ax)_i / b_i`
pub fn lambda_of(ax: &DenseVec, b: &DenseVec) -> Result<f64> {
    if ax.len() != b.len() {
        return Err(Error::domain(format!("dimension mismatch: Ax has {} rows, b has {}", ax.len(), b.len())));
    }
    if b.is_empty() {
        return Err(Error::domain("b must have at least one row"));
    }
    if !b.all_positive() {
        return Err(Error::domain("b must be strictly positive"));
    }
    Ok(lambda_unchecked(ax, b))
}

fn lambda_unchecked(ax: &DenseVec, b: &DenseVec) -> f64 {
    ax.iter().zip(b.iter()).map(|(a, bi)| a / bi).fold(f64::INFINITY, f64::min)
}

/// Dual weights `y_alpha(x)` stored as `y = scaled * exp(log_scale)`.
///
/// `scaled_i = exp(-alpha ((Ax)_i / b_i - lambda(x))) / b_i` and
/// `log_scale = -alpha lambda(x)`, so the row attaining `lambda` has
/// `b_i scaled_i = 1`. Entries of rows far above `lambda` may underflow to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DualWeights {
    pub scaled: DenseVec,
    pub log_scale: f64,
}

impl DualWeights {
    /// `b^T scaled`, which lies in `[1, m]`.
    pub fn scaled_potential(&self, b: &DenseVec) -> f64 {
        self.scaled.dot(b)
    }

    /// `ln(b^T y)` for the unscaled weights.
    pub fn log_potential(&self, b: &DenseVec) -> f64 {
        self.scaled_potential(b).ln() + self.log_scale
    }

    /// The unscaled weights. Underflows when `alpha lambda` is large.
    pub fn unscaled(&self) -> DenseVec {
        let f = self.log_scale.exp();
        DenseVec::from_vec_unchecked(self.scaled.iter().map(|v| v * f).collect())
    }
}

pub fn dual_weights(ax: &DenseVec, b: &DenseVec, alpha: f64) -> Result<DualWeights> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    let lambda = lambda_of(ax, b)?;
    Ok(weights_at(ax, b, alpha, lambda))
}

fn weights_at(ax: &DenseVec, b: &DenseVec, alpha: f64, lambda: f64) -> DualWeights {
    let scaled = ax
        .iter()
        .zip(b.iter())
        .map(|(a, bi)| (-alpha * (a / bi - lambda)).exp() / bi)
        .collect();
    DualWeights { scaled: DenseVec::from_vec_unchecked(scaled), log_scale: -alpha * lambda }
}

/// Condition `C1(eps1)`: `(1 + eps1) lambda y^T b >= y^T A x`.
pub fn check_c1(lambda: f64, y_tb: f64, y_tax: f64, eps1: f64) -> bool {
    (1.0 + eps1) * lambda * y_tb >= y_tax
}

/// Computable stand-in for `C2(eps2, eps3)` using the oracle answer `x~` for
/// the same weights: `y^T A x >= (1 - eps2) y^T A x~ / eta - eps3 lambda y^T b`.
pub fn check_c2_surrogate(y_tax: f64, y_taxt: f64, lambda: f64, y_tb: f64, eps2: f64, eps3: f64, eta: f64) -> bool {
    y_tax >= (1.0 - eps2) * y_taxt / eta - eps3 * lambda * y_tb
}

/// Counters for one inner solve.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FcovStats {
    /// Point-find calls `T`.
    pub point_find_calls: u64,
    pub product_calls: u64,
    /// Sum of `|support(x)|` over product-oracle inputs.
    pub product_support_total: u64,
    pub improve_cover_calls: u64,
    /// Convex steps taken across all improve-cover calls.
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FcovOutcome<C: Ord> {
    Solution { x: SparseVec<C>, ax: DenseVec, lambda: f64 },
    Unsatisfiable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcovResult<C: Ord> {
    pub outcome: FcovOutcome<C>,
    pub stats: FcovStats,
}

impl<C: Ord> FcovResult<C> {
    pub fn is_solution(&self) -> bool {
        matches!(self.outcome, FcovOutcome::Solution { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcovOptions {
    pub feas_tol: f64,
    /// Hard cap on point-find calls; `None` means `10 * bound_u`.
    pub max_point_find_calls: Option<u64>,
}

impl Default for FcovOptions {
    fn default() -> Self {
        FcovOptions { feas_tol: DEFAULT_FEAS_TOL, max_point_find_calls: None }
    }
}

/// One evaluation of the improve-cover loop guard.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateEvent {
    pub m: usize,
    pub lambda0: f64,
    pub lambda: f64,
    pub alpha: f64,
    /// `b^T scaled`
    pub scaled_potential: f64,
    /// `-alpha lambda`
    pub log_scale: f64,
    /// `alpha lambda >= (2 / eps1) ln(4m / eps1)`, the premise under which
    /// `C1` is guaranteed.
    pub c1_premise: bool,
    pub c1: bool,
    pub c2_surrogate: bool,
}

/// One convex step `x <- (1 - sigma) x + sigma x~`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepEvent {
    pub lambda0: f64,
    pub lambda_before: f64,
    pub lambda_after: f64,
    pub alpha: f64,
    pub sigma: f64,
    /// `b^T y` before the step, divided by `exp(-alpha lambda_before)`.
    pub potential_before: f64,
    /// `b^T y` after the step, divided by the same factor.
    pub potential_after: f64,
    /// Guaranteed relative potential drop
    /// `alpha sigma lambda eps3 (1 - eps_sigma) eta / (1 - eps2)`.
    pub guaranteed_drop: f64,
}

impl StepEvent {
    pub fn relative_drop(&self) -> f64 {
        (self.potential_before - self.potential_after) / self.potential_before
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImproveCoverExit<C: Ord> {
    pub lambda0: f64,
    pub lambda: f64,
    pub success: bool,
    pub steps: u64,
    pub x: SparseVec<C>,
    pub ax: DenseVec,
}

/// Instrumentation hook for the inner loop. Detail events are only produced
/// when [`FcovObserver::wants_detail`] returns true, since they cost extra
/// work per iteration.
pub trait FcovObserver<C: Ord> {
    fn wants_detail(&self) -> bool {
        false
    }
    fn on_iterate(&mut self, _ev: &IterateEvent) {}
    fn on_step(&mut self, _ev: &StepEvent) {}
    fn on_improve_cover_exit(&mut self, _ev: &ImproveCoverExit<C>) {}
}

impl<C: Ord> FcovObserver<C> for () {}

/// Inner-loop state. The iterate is `x = gamma * base`; `Ax` is cached and
/// updated incrementally, never recomputed from `x`.
#[derive(Debug, Clone)]
pub struct FcovState<C: Ord> {
    gamma: f64,
    base: SparseVec<C>,
    ax: DenseVec,
    lambda: f64,
    lambda0: f64,
    alpha: f64,
    sigma: f64,
    log_scale: f64,
}

impl<C: ColumnId> FcovState<C> {
    /// Starts from a point `x` in `P` together with its product `Ax`.
    pub fn new(x: SparseVec<C>, ax: DenseVec, b: &DenseVec) -> Result<Self> {
        let lambda = lambda_of(&ax, b)?;
        Ok(FcovState { gamma: 1.0, base: x, ax, lambda, lambda0: lambda, alpha: 0.0, sigma: 0.0, log_scale: 0.0 })
    }

    /// Materializes the current iterate.
    pub fn x(&self) -> SparseVec<C> {
        self.base.scaled(self.gamma)
    }

    pub fn ax(&self) -> &DenseVec {
        &self.ax
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `-alpha lambda` of the most recently computed dual weights.
    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn support(&self) -> usize {
        self.base.len()
    }

    fn into_parts(self) -> (SparseVec<C>, DenseVec, f64) {
        let x = self.x();
        (x, self.ax, self.lambda)
    }

    // x_t = gamma_t (x_0 + sum_s sigma_s x~_s / gamma_s), gamma_t = prod (1 - sigma_s)
    fn step(&mut self, sigma: f64, xt: &SparseVec<C>, axt: &DenseVec, b: &DenseVec) {
        self.gamma *= 1.0 - sigma;
        self.base.add_scaled(sigma / self.gamma, xt);
        if self.gamma < GAMMA_RENORMALIZE {
            self.base.scale(self.gamma);
            self.gamma = 1.0;
        }
        self.ax.mix(sigma, axt);
        self.lambda = lambda_unchecked(&self.ax, b);
    }
}

/// Step bound of one improve-cover call:
/// `ceil(4 rho / (3 eps_sigma eps3 lambda0) (ln m + (4 / eps1) ln(4m / eps1)))`.
pub fn improve_cover_step_bound(m: usize, rho: f64, lambda0: f64, d: &DerivedParams) -> u64 {
    let mf = m as f64;
    let v = (4.0 * rho / (3.0 * d.eps_sigma * d.eps3 * lambda0)
        * (mf.ln() + 4.0 / d.eps1 * (4.0 * mf / d.eps1).ln()))
    .ceil();
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v as u64
    }
}

struct CallBudget {
    cap: u64,
}

impl CallBudget {
    fn charge(&self, stats: &FcovStats) -> Result<()> {
        if stats.point_find_calls > self.cap {
            return Err(Error::CapExceeded { what: "point-find call", value: stats.point_find_calls, cap: self.cap });
        }
        Ok(())
    }
}

fn checked_point_find<O: FcovOracleSuite>(
    oracles: &O,
    y: &DenseVec,
    stats: &mut FcovStats,
) -> Result<(SparseVec<O::Column>, DenseVec)> {
    stats.point_find_calls += 1;
    let xt = oracles.point_find(y)?;
    if xt.len() > oracles.tau() {
        return Err(Error::contract(format!(
            "point_find returned support {} above tau = {}",
            xt.len(),
            oracles.tau()
        )));
    }
    let axt = checked_product(oracles, &xt, stats)?;
    Ok((xt, axt))
}

fn checked_product<O: FcovOracleSuite>(
    oracles: &O,
    x: &SparseVec<O::Column>,
    stats: &mut FcovStats,
) -> Result<DenseVec> {
    stats.product_calls += 1;
    stats.product_support_total += x.len() as u64;
    let ax = oracles.product(x)?;
    if ax.len() != oracles.rows() {
        return Err(Error::contract(format!("product returned {} rows, expected {}", ax.len(), oracles.rows())));
    }
    if !ax.all_nonnegative() {
        return Err(Error::contract("product returned a negative entry"));
    }
    Ok(ax)
}

/// Seed point `(1/m) sum_i point_find(e_i)` with `lambda >= eta / m`, or
/// `None` when some row cannot reach `eta b_i`, which proves unsatisfiability.
pub fn get_seed<O: FcovOracleSuite>(
    oracles: &O,
    b: &DenseVec,
    feas_tol: f64,
    stats: &mut FcovStats,
) -> Result<Option<(SparseVec<O::Column>, DenseVec)>> {
    let m = b.len();
    if m != oracles.rows() {
        return Err(Error::domain(format!("b has {m} rows but the oracles have {}", oracles.rows())));
    }
    if m == 0 || !b.all_positive() {
        return Err(Error::domain("b must be nonempty and strictly positive"));
    }
    let eta = oracles.eta();
    let inv_m = 1.0 / m as f64;
    let mut x = SparseVec::new();
    let mut ax = DenseVec::zeros(m);
    for i in 0..m {
        let (xi, axi) = checked_point_find(oracles, &DenseVec::unit(m, i), stats)?;
        if axi[i] < eta * b[i] * (1.0 - feas_tol) {
            return Ok(None);
        }
        x.add_scaled(inv_m, &xi);
        ax.add_scaled(inv_m, &axi);
    }
    Ok(Some((x, ax)))
}

/// Runs one improve-cover pass from the current iterate, taking `lambda0`
/// and `alpha` from the entry point. Returns `success`: when true the
/// iterate satisfies both relaxed conditions and is `eps'`-optimal; when
/// false `lambda` has more than doubled.
pub fn improve_cover<O: FcovOracleSuite>(
    state: &mut FcovState<O::Column>,
    oracles: &O,
    b: &DenseVec,
    rho: f64,
    d: &DerivedParams,
    stats: &mut FcovStats,
    observer: &mut dyn FcovObserver<O::Column>,
) -> Result<bool> {
    let lambda0 = state.lambda;
    improve_cover_from(state, oracles, b, rho, d, lambda0, u64::MAX, stats, observer)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn improve_cover_from<O: FcovOracleSuite>(
    state: &mut FcovState<O::Column>,
    oracles: &O,
    b: &DenseVec,
    rho: f64,
    d: &DerivedParams,
    lambda0: f64,
    call_cap: u64,
    stats: &mut FcovStats,
    observer: &mut dyn FcovObserver<O::Column>,
) -> Result<bool> {
    let m = b.len();
    if !(lambda0 > 0.0) {
        return Err(Error::domain(format!("improve-cover needs lambda(x) > 0, got {lambda0}")));
    }
    if !(rho > 0.0) {
        return Err(Error::domain(format!("improve-cover needs rho > 0, got {rho}")));
    }
    let eta = oracles.eta();
    // eta >= (1 - eps2)(1 + eps_sigma)/(1 - eps_sigma) holds with equality by construction.
    let eta_floor = (1.0 - d.eps2) * (1.0 + d.eps_sigma) / (1.0 - d.eps_sigma);
    if eta < eta_floor * (1.0 - 1e-12) {
        return Err(Error::domain(format!("eta = {eta} is below the step-size floor {eta_floor}")));
    }

    let mf = m as f64;
    let ln_term = (4.0 * mf / d.eps1).ln();
    let alpha = 4.0 / (lambda0 * d.eps1) * ln_term;
    let sigma = d.eps_sigma / (alpha * rho);
    if sigma > 0.5 {
        return Err(Error::Precondition(format!("rho = {rho} is below the width: lambda(x) = {lambda0}")));
    }
    let c1_threshold = 2.0 / d.eps1 * ln_term;
    let guaranteed_factor = alpha * sigma * d.eps3 * (1.0 - d.eps_sigma) * eta / (1.0 - d.eps2);
    let step_cap = improve_cover_step_bound(m, rho, lambda0, d);
    let budget = CallBudget { cap: call_cap };
    let detail = observer.wants_detail();

    state.lambda0 = lambda0;
    state.alpha = alpha;
    state.sigma = sigma;
    stats.improve_cover_calls += 1;

    let mut steps = 0u64;
    let success = loop {
        let lambda = state.lambda;
        let w = weights_at(&state.ax, b, alpha, lambda);
        state.log_scale = w.log_scale;
        let y_tb = w.scaled.dot(b);
        let y_tax = w.scaled.dot(&state.ax);

        let (xt, axt) = checked_point_find(oracles, &w.scaled, stats)?;
        budget.charge(stats)?;
        let y_taxt = w.scaled.dot(&axt);
        let c2 = check_c2_surrogate(y_tax, y_taxt, lambda, y_tb, d.eps2, d.eps3, eta);

        if detail {
            observer.on_iterate(&IterateEvent {
                m,
                lambda0,
                lambda,
                alpha,
                scaled_potential: y_tb,
                log_scale: w.log_scale,
                c1_premise: alpha * lambda >= c1_threshold,
                c1: check_c1(lambda, y_tb, y_tax, d.eps1),
                c2_surrogate: c2,
            });
        }

        if c2 {
            break true;
        }
        if lambda > 2.0 * lambda0 {
            break false;
        }

        let width_xt = lambda_max(&axt, b);
        if width_xt > rho * (1.0 + 1e-9) {
            return Err(Error::Precondition(format!(
                "rho = {rho} is below the width: oracle point reaches (Ax)_i / b_i = {width_xt}"
            )));
        }
        state.step(sigma, &xt, &axt, b);
        steps += 1;
        stats.steps += 1;

        if detail {
            let after: f64 = state
                .ax
                .iter()
                .zip(b.iter())
                .map(|(a, bi)| (-alpha * (a / bi - lambda)).exp())
                .sum();
            observer.on_step(&StepEvent {
                lambda0,
                lambda_before: lambda,
                lambda_after: state.lambda,
                alpha,
                sigma,
                potential_before: y_tb,
                potential_after: after,
                guaranteed_drop: guaranteed_factor * lambda,
            });
        }

        if steps > step_cap {
            return Err(Error::contract(format!(
                "improve-cover exceeded its step bound {step_cap}; the oracle is weaker than eta = {eta}"
            )));
        }
    };

    if detail {
        observer.on_improve_cover_exit(&ImproveCoverExit {
            lambda0,
            lambda: state.lambda,
            success,
            steps,
            x: state.x(),
            ax: state.ax.clone(),
        });
    }
    Ok(success)
}

fn lambda_max(ax: &DenseVec, b: &DenseVec) -> f64 {
    ax.iter().zip(b.iter()).map(|(a, bi)| a / bi).fold(0.0, f64::max)
}

/// Weakly solves `fcov(A, b, P)`. `rho` must bound `width(A, b, P)`.
///
/// Returns `Solution` with `Ax >= (eta / (1 + eps)) b`, or `Unsatisfiable`
/// only when no `x` in `P` has `Ax >= b`.
pub fn frac_cover<O: FcovOracleSuite>(
    oracles: &O,
    b: &DenseVec,
    rho: f64,
    eps: f64,
    opts: &FcovOptions,
    observer: &mut dyn FcovObserver<O::Column>,
) -> Result<FcovResult<O::Column>> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::domain(format!("rho must be nonnegative, got {rho}")));
    }
    check_unit_interval("eps", eps)?;
    let eta = oracles.eta();
    let d = derived_params(eps, eta)?;
    let mut stats = FcovStats::default();
    let unsat = |stats| Ok(FcovResult { outcome: FcovOutcome::Unsatisfiable, stats });

    if rho == 0.0 {
        return unsat(stats);
    }
    let m = b.len();
    let cap = match opts.max_point_find_calls {
        Some(c) => c,
        None => bound_u(m.max(1), rho, eps, eta)?.saturating_mul(10),
    };

    let Some((x0, ax0)) = get_seed(oracles, b, opts.feas_tol, &mut stats)? else {
        return unsat(stats);
    };
    let mut state = FcovState::new(x0, ax0, b)?;

    // Coverage within the float tolerance of `b` counts as reaching it, as
    // in the seed test; this keeps the improve-cover count at lg(m / eta).
    let covered = 1.0 - opts.feas_tol.min(d.eps_prime);
    loop {
        if state.lambda >= covered {
            break;
        }
        let lambda0 = state.lambda;
        let success = improve_cover_from(&mut state, oracles, b, rho, &d, lambda0, cap, &mut stats, observer)?;
        if success {
            if state.lambda >= 1.0 - d.eps_prime {
                break;
            }
            return unsat(stats);
        }
    }
    let (x, ax, lambda) = state.into_parts();
    Ok(FcovResult { outcome: FcovOutcome::Solution { x, ax, lambda }, stats })
}

//! Shared vocabulary: vectors, oracle contracts, solver parameters and the
//! closed-form bounds on iteration and oracle-call counts.

use std::collections::btree_map;
use std::collections::BTreeMap;
use std::fmt::Debug;
use std::hash::Hash;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative feasibility tolerance.
pub const DEFAULT_FEAS_TOL: f64 = 1e-9;

/// Dense real vector of fixed dimension with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVec(Vec<f64>);

impl DenseVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("entry {i} is not finite")));
        }
        Ok(DenseVec(values))
    }

    pub fn zeros(m: usize) -> Self {
        DenseVec(vec![0.0; m])
    }

    /// The `i`-th standard basis vector of dimension `m`.
    pub fn unit(m: usize, i: usize) -> Self {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        DenseVec(v)
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        DenseVec(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &DenseVec) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// `self += w * other`
    pub fn add_scaled(&mut self, w: f64, other: &DenseVec) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += w * b;
        }
    }

    /// `self = (1 - sigma) * self + sigma * other`
    pub fn mix(&mut self, sigma: f64, other: &DenseVec) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = (1.0 - sigma) * *a + sigma * b;
        }
    }

    pub fn scale(&mut self, f: f64) {
        for a in &mut self.0 {
            *a *= f;
        }
    }

    pub fn all_nonnegative(&self) -> bool {
        self.0.iter().all(|&v| v >= 0.0)
    }

    pub fn all_positive(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0)
    }
}

impl Index<usize> for DenseVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Identifier of a column of an implicit matrix.
///
/// Equality must be canonical: two values naming the same column compare
/// equal. `Ord` gives sparse vectors a deterministic iteration order.
pub trait ColumnId: Clone + Ord + Hash + Debug {}

impl<T: Clone + Ord + Hash + Debug> ColumnId for T {}

/// Sparse nonnegative vector over an arbitrary column space. Zero weights are
/// never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec<C: Ord> {
    entries: BTreeMap<C, f64>,
}

impl<C: Ord> Default for SparseVec<C> {
    fn default() -> Self {
        SparseVec { entries: BTreeMap::new() }
    }
}

impl<C: ColumnId> SparseVec<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(c: C, w: f64) -> Self {
        let mut v = Self::new();
        v.set(c, w);
        v
    }

    /// Sets the weight of `c`, dropping the entry when `w == 0`.
    pub fn set(&mut self, c: C, w: f64) {
        debug_assert!(w.is_finite() && w >= 0.0, "weight {w} for {c:?}");
        if w == 0.0 {
            self.entries.remove(&c);
        } else {
            self.entries.insert(c, w);
        }
    }

    /// Adds `w` to the weight of `c`. Duplicate columns merge into one entry.
    pub fn add(&mut self, c: C, w: f64) {
        debug_assert!(w.is_finite() && w >= 0.0, "weight {w} for {c:?}");
        if w == 0.0 {
            return;
        }
        *self.entries.entry(c).or_insert(0.0) += w;
    }

    pub fn remove(&mut self, c: &C) -> Option<f64> {
        self.entries.remove(c)
    }

    pub fn get(&self, c: &C) -> f64 {
        self.entries.get(c).copied().unwrap_or(0.0)
    }

    /// `|support(x)|`
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> btree_map::Iter<'_, C, f64> {
        self.entries.iter()
    }

    pub fn scale(&mut self, f: f64) {
        debug_assert!(f.is_finite() && f >= 0.0);
        if f == 0.0 {
            self.entries.clear();
            return;
        }
        for w in self.entries.values_mut() {
            *w *= f;
        }
        // Underflow can turn tiny weights into zeros.
        self.entries.retain(|_, w| *w > 0.0);
    }

    pub fn scaled(&self, f: f64) -> Self {
        let mut v = self.clone();
        v.scale(f);
        v
    }

    /// `self += f * other`
    pub fn add_scaled(&mut self, f: f64, other: &SparseVec<C>) {
        for (c, &w) in other.iter() {
            self.add(c.clone(), f * w);
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.values().sum()
    }
}

impl<C: ColumnId> FromIterator<(C, f64)> for SparseVec<C> {
    fn from_iter<I: IntoIterator<Item = (C, f64)>>(iter: I) -> Self {
        let mut v = SparseVec::new();
        for (c, w) in iter {
            v.add(c, w);
        }
        v
    }
}

impl<'a, C: Ord> IntoIterator for &'a SparseVec<C> {
    type Item = (&'a C, &'a f64);
    type IntoIter = btree_map::Iter<'a, C, f64>;
    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// The callbacks that implicitly define `covLP(A, b, c)`.
///
/// Implementations must be pure: the same input always yields the same output.
pub trait CoveringOracleSuite {
    type Column: ColumnId;

    /// Number of rows `m` of `A`.
    fn rows(&self) -> usize;

    /// Column `a_j` of `A`; nonnegative, length `m`.
    fn column(&self, j: &Self::Column) -> Result<DenseVec>;

    /// Cost `c_j > 0`.
    fn cost(&self, j: &Self::Column) -> Result<f64>;

    /// Returns `k` with `D_k(y) >= eta * max_j D_j(y)` where
    /// `D_j(y) = y^T a_j / c_j`.
    fn index_find(&self, y: &DenseVec) -> Result<Self::Column>;

    /// The weakness `eta` in `(0, 1]` this suite promises.
    fn eta(&self) -> f64;
}

/// The callbacks that implicitly define `fcov(A, b, P)`.
pub trait FcovOracleSuite {
    type Column: ColumnId;

    fn rows(&self) -> usize;

    /// `Ax` for `x` in `P`.
    fn product(&self, x: &SparseVec<Self::Column>) -> Result<DenseVec>;

    /// Returns `x` in `P` with `y^T A x >= eta * max_{x' in P} y^T A x'`.
    fn point_find(&self, y: &DenseVec) -> Result<SparseVec<Self::Column>>;

    fn eta(&self) -> f64;

    /// Upper bound on `|support(point_find(y))|`.
    fn tau(&self) -> usize;
}

/// Inputs of the covering LP solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    pub eps: f64,
    pub eta: f64,
    /// Upper bound on the LP optimum.
    pub q: f64,
    /// Upper bound on `q * max_{i,j} A[i,j] / (b_i c_j)`.
    pub rho: f64,
    /// Safety cap on point-find calls per inner solve. `None` means
    /// `10 * bound_u`.
    pub max_oracle_calls: Option<u64>,
    pub feas_tol: f64,
}

impl SolveParams {
    pub fn new(eps: f64, eta: f64, q: f64, rho: f64) -> Result<Self> {
        let p = SolveParams { eps, eta, q, rho, max_oracle_calls: None, feas_tol: DEFAULT_FEAS_TOL };
        p.validate()?;
        Ok(p)
    }

    pub fn with_max_oracle_calls(mut self, cap: Option<u64>) -> Self {
        self.max_oracle_calls = cap;
        self
    }

    pub fn with_feas_tol(mut self, tol: f64) -> Self {
        self.feas_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_interval("eps", self.eps)?;
        check_unit_interval("eta", self.eta)?;
        if !(self.q.is_finite() && self.q > 0.0) {
            return Err(Error::domain(format!("q must be positive, got {}", self.q)));
        }
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return Err(Error::domain(format!("rho must be nonnegative, got {}", self.rho)));
        }
        if !(self.feas_tol.is_finite() && (0.0..1.0).contains(&self.feas_tol)) {
            return Err(Error::domain(format!("feas_tol must lie in [0, 1), got {}", self.feas_tol)));
        }
        if self.max_oracle_calls == Some(0) {
            return Err(Error::domain("max_oracle_calls must be positive"));
        }
        Ok(())
    }
}

pub(crate) fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in (0, 1], got {v}")))
    }
}

/// Constants derived from `(eps, eta)` that drive the inner loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub eps: f64,
    pub eta: f64,
    /// Step-size slack `eps / (6 + 5 eps)`.
    pub eps_sigma: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    /// Optimality gap certified by the two relaxed conditions:
    /// `1 - eps_prime = eta / (1 + eps)`.
    pub eps_prime: f64,
    /// Binary-search termination ratio `eps^2 / (1 + eps)`.
    pub delta: f64,
}

impl DerivedParams {
    /// `mu = eta / (1 + eps)`, the weak-solve factor of one inner solve.
    pub fn mu(&self) -> f64 {
        self.eta / (1.0 + self.eps)
    }

    /// The approximation factor `(1 + eps + eps^2) / eta` of the outer solve.
    pub fn approx_factor(&self) -> f64 {
        (1.0 + self.eps + self.eps * self.eps) / self.eta
    }
}

pub fn derived_params(eps: f64, eta: f64) -> Result<DerivedParams> {
    check_unit_interval("eps", eps)?;
    check_unit_interval("eta", eta)?;
    let eps_sigma = eps / (6.0 + 5.0 * eps);
    let eps1 = eps / 3.0;
    let eps3 = eps1;
    let eps2 = 1.0 - eta * (1.0 - eps_sigma) / (1.0 + eps_sigma);
    let eps_prime = (eps1 + eps2 + eps3) / (1.0 + eps1 + eps3);
    let delta = eps * eps / (1.0 + eps);
    Ok(DerivedParams { eps, eta, eps_sigma, eps1, eps2, eps3, eps_prime, delta })
}

/// `ceil(lg(m / eta))`, the most improve-cover invocations one inner solve
/// can make.
pub fn improve_cover_invocation_bound(m: usize, eta: f64) -> u64 {
    let v = (m as f64 / eta).log2().ceil();
    if v <= 0.0 {
        0
    } else {
        v as u64
    }
}

/// Bound `U` on point-find calls of one inner solve:
/// `m + ceil(lg(m/eta)) * ceil(312 m rho (1+eps) / (eta eps^3) * ln(12 m / eps))`.
pub fn bound_u(m: usize, rho: f64, eps: f64, eta: f64) -> Result<u64> {
    if m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::domain(format!("rho must be nonnegative, got {rho}")));
    }
    check_unit_interval("eps", eps)?;
    check_unit_interval("eta", eta)?;
    let mf = m as f64;
    let per_call = (312.0 * mf * rho * (1.0 + eps) / (eta * eps.powi(3)) * (12.0 * mf / eps).ln()).ceil();
    let per_call = if per_call >= u64::MAX as f64 { u64::MAX } else { per_call as u64 };
    Ok((m as u64).saturating_add(improve_cover_invocation_bound(m, eta).saturating_mul(per_call)))
}

/// Bound `M` on the number of inner solves (probes) of the outer binary
/// search: `3 + 2 lg(1/eps + 1) + lg(1/eta) + lg(q / r_star)`.
pub fn bound_m(eps: f64, eta: f64, q: f64, r_star: f64) -> Result<f64> {
    check_unit_interval("eps", eps)?;
    check_unit_interval("eta", eta)?;
    if !(r_star > 0.0 && r_star.is_finite()) {
        return Err(Error::domain(format!("r_star must be positive, got {r_star}")));
    }
    if !(q >= r_star && q.is_finite()) {
        return Err(Error::domain(format!("q = {q} is below r_star = {r_star}")));
    }
    Ok(3.0 + 2.0 * (1.0 / eps + 1.0).log2() + (1.0 / eta).log2() + (q / r_star).log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn derived_params_eps_one() {
        let d = derived_params(1.0, 1.0).unwrap();
        assert!(close(d.eps_sigma, 1.0 / 11.0));
        assert!(close(d.eps1, 1.0 / 3.0));
        assert!(close(d.eps3, 1.0 / 3.0));
        assert!(close(d.eps2, 1.0 / 6.0));
        assert!(close(d.delta, 0.5));
        assert!(close(1.0 - d.eps_prime, 0.5));
    }

    #[test]
    fn derived_params_other_points() {
        let d = derived_params(1.0 / 3.0, 1.0).unwrap();
        assert!(close(d.delta, 1.0 / 12.0));
        assert!(close(1.0 - d.eps_prime, 0.75));
        let d = derived_params(0.5, 0.5).unwrap();
        assert!(close(1.0 - d.eps_prime, 1.0 / 3.0));
    }

    #[test]
    fn derived_params_rejects_out_of_range() {
        assert!(derived_params(0.0, 1.0).is_err());
        assert!(derived_params(1.5, 1.0).is_err());
        assert!(derived_params(0.5, 0.0).is_err());
        assert!(derived_params(0.5, -1.0).is_err());
        assert!(derived_params(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn bound_u_examples() {
        for &(rho, eps) in &[(0.0, 1.0), (1.0, 0.5), (100.0, 0.01)] {
            assert_eq!(bound_u(1, rho, eps, 1.0).unwrap(), 1);
        }
        assert_eq!(bound_u(2, 1.0, 1.0, 1.0).unwrap(), 3969);
        assert!(bound_u(0, 1.0, 1.0, 1.0).is_err());
        assert!(bound_u(2, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn bound_u_monotone() {
        let mut prev = 0;
        for m in 1..20 {
            let u = bound_u(m, 3.0, 0.5, 0.5).unwrap();
            assert!(u >= prev);
            prev = u;
        }
        let mut prev = 0;
        for k in 0..20 {
            let u = bound_u(3, k as f64 * 0.7, 0.5, 0.5).unwrap();
            assert!(u >= prev);
            prev = u;
        }
    }

    #[test]
    fn bound_m_examples() {
        assert!(close(bound_m(1.0, 1.0, 3.0, 3.0).unwrap(), 5.0));
        assert!(close(bound_m(1.0, 0.5, 2.0, 1.0).unwrap(), 7.0));
        assert!(close(bound_m(1.0 / 3.0, 1.0, 1.0, 1.0).unwrap(), 7.0));
        assert!(bound_m(1.0, 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn sparse_vec_drops_zeros() {
        let mut v: SparseVec<usize> = SparseVec::new();
        v.set(3, 0.0);
        assert!(v.is_empty());
        v.add(1, 0.5);
        v.add(1, 0.25);
        assert_eq!(v.len(), 1);
        assert_eq!(v.get(&1), 0.75);
        let before = v.clone();
        v.set(7, 2.0);
        v.remove(&7);
        assert_eq!(v, before);
        v.set(1, 0.0);
        assert!(v.is_empty());
    }

    #[test]
    fn dense_vec_rejects_non_finite() {
        assert!(DenseVec::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(DenseVec::new(vec![1.0, f64::NAN]).is_err());
        let mut a = DenseVec::new(vec![1.0, 2.0]).unwrap();
        a.mix(0.25, &DenseVec::new(vec![5.0, 2.0]).unwrap());
        assert_eq!(a.as_slice(), &[2.0, 2.0]);
    }

    #[test]
    fn solve_params_validation() {
        assert!(SolveParams::new(0.5, 1.0, 1.0, 1.0).is_ok());
        assert!(SolveParams::new(0.5, 1.0, 0.0, 1.0).is_err());
        assert!(SolveParams::new(0.5, 1.0, 1.0, -1.0).is_err());
        assert!(SolveParams::new(0.5, 1.0, 1.0, 1.0).unwrap().with_max_oracle_calls(Some(0)).validate().is_err());
    }
}

//! Configuration LP for bin packing, with knapsack-based index finders.
//!
//! A configuration is a multiset of item types that fits in one unit bin.
//! The configuration LP is `min 1^T x, Ax >= b, x >= 0` where `A[i, C]` is
//! the number of copies of type `i` in `C`. Finding the most violated dual
//! constraint is a bounded knapsack problem with profits `y`, so any
//! `eta`-approximate knapsack solver is an `eta`-weak index finder.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cov_lp::{cov_lp_solve, CovLpResult};
use crate::error::{Error, Result};
use crate::lp_core::{CoveringOracleSuite, DenseVec, SolveParams, DEFAULT_FEAS_TOL};

/// Default cap on the total item count for [`KnapsackOracle::ExactBnB`].
pub const DEFAULT_BNB_CAP: u64 = 40;

/// Distinct item sizes in ascending order with their multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinPackInstance {
    sizes: Vec<f64>,
    multiplicities: Vec<u32>,
    #[serde(skip)]
    feas_tol: f64,
}

#[derive(Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum InstanceFile {
    Grouped { sizes: Vec<f64>, multiplicities: Vec<u32> },
    Items { items: Vec<f64> },
}

impl BinPackInstance {
    /// Sorts the types by size. Sizes must be distinct and in `(0, 1]`.
    pub fn new(sizes: Vec<f64>, multiplicities: Vec<u32>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::domain("a bin-packing instance needs at least one item"));
        }
        if sizes.len() != multiplicities.len() {
            return Err(Error::domain(format!(
                "{} sizes but {} multiplicities",
                sizes.len(),
                multiplicities.len()
            )));
        }
        if let Some(s) = sizes.iter().find(|s| !(s.is_finite() && **s > 0.0 && **s <= 1.0)) {
            return Err(Error::domain(format!("item size {s} is outside (0, 1]")));
        }
        if multiplicities.contains(&0) {
            return Err(Error::domain("multiplicities must be positive integers"));
        }
        let mut pairs: Vec<(f64, u32)> = sizes.into_iter().zip(multiplicities).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::domain(format!("item size {} appears twice; sizes must be distinct", w[0].0)));
        }
        let (sizes, multiplicities) = pairs.into_iter().unzip();
        Ok(BinPackInstance { sizes, multiplicities, feas_tol: DEFAULT_FEAS_TOL })
    }

    /// Groups equal sizes into one type.
    pub fn from_items(items: &[f64]) -> Result<Self> {
        let mut sorted = items.to_vec();
        if sorted.iter().any(|s| s.is_nan()) {
            return Err(Error::domain("item size is NaN"));
        }
        sorted.sort_by(f64::total_cmp);
        let mut sizes: Vec<f64> = Vec::new();
        let mut mult: Vec<u32> = Vec::new();
        for s in sorted {
            if sizes.last() == Some(&s) {
                *mult.last_mut().unwrap() += 1;
            } else {
                sizes.push(s);
                mult.push(1);
            }
        }
        Self::new(sizes, mult)
    }

    /// Accepts `{"sizes": [...], "multiplicities": [...]}` or `{"items": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str::<InstanceFile>(text) {
            Ok(InstanceFile::Grouped { sizes, multiplicities }) => Self::new(sizes, multiplicities),
            Ok(InstanceFile::Items { items }) => Self::from_items(&items),
            Err(e) => Err(Error::Parse(format!(
                "expected {{\"sizes\", \"multiplicities\"}} or {{\"items\"}}: {e}"
            ))),
        }
    }

    pub fn with_feas_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(Error::domain("feas_tol must be a nonnegative number"));
        }
        self.feas_tol = tol;
        Ok(self)
    }

    /// Number of item types.
    pub fn m(&self) -> usize {
        self.sizes.len()
    }

    /// Total number of items.
    pub fn n(&self) -> u64 {
        self.multiplicities.iter().map(|&b| b as u64).sum()
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    pub fn b(&self) -> DenseVec {
        DenseVec::from_vec_unchecked(self.multiplicities.iter().map(|&v| v as f64).collect())
    }

    /// Bin capacity including the float tolerance.
    pub fn capacity(&self) -> f64 {
        1.0 + self.feas_tol
    }

    pub fn feas_tol(&self) -> f64 {
        self.feas_tol
    }

    /// How many copies of type `i` could ever share a bin.
    pub fn max_copies(&self, i: usize) -> u32 {
        let by_size = (self.capacity() / self.sizes[i]).floor();
        (self.multiplicities[i] as f64).min(by_size) as u32
    }

    /// Fits one bin and uses no type more often than it occurs.
    pub fn is_feasible(&self, c: &Configuration) -> bool {
        c.counts.len() == self.m()
            && c.counts.iter().zip(&self.multiplicities).all(|(k, b)| k <= b)
            && c.size(self) <= self.capacity()
    }
}

/// Copies of each item type placed in one bin, indexed like the instance's
/// ascending sizes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    counts: Vec<u32>,
}

impl Configuration {
    pub fn new(counts: Vec<u32>) -> Self {
        Configuration { counts }
    }

    pub fn empty(m: usize) -> Self {
        Configuration { counts: vec![0; m] }
    }

    pub fn single(m: usize, i: usize) -> Self {
        let mut c = Self::empty(m);
        c.counts[i] = 1;
        c
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&k| k == 0)
    }

    pub fn total_items(&self) -> u64 {
        self.counts.iter().map(|&k| k as u64).sum()
    }

    pub fn profit(&self, y: &DenseVec) -> f64 {
        self.counts.iter().zip(y.iter()).map(|(&k, yi)| k as f64 * yi).sum()
    }

    pub fn size(&self, inst: &BinPackInstance) -> f64 {
        self.counts.iter().zip(inst.sizes()).map(|(&k, s)| k as f64 * s).sum()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, k) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, "]")
    }
}

/// Knapsack solvers used as index finders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnapsackOracle {
    /// Exact branch and bound; refuses instances with more than `max_items` items.
    ExactBnB { max_items: u64 },
    /// Better of the density-greedy prefix and the best single item.
    GreedyDensity,
    /// The single most profitable item.
    Singleton,
}

impl KnapsackOracle {
    pub fn exact() -> Self {
        KnapsackOracle::ExactBnB { max_items: DEFAULT_BNB_CAP }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KnapsackOracle::ExactBnB { .. } => "exact",
            KnapsackOracle::GreedyDensity => "greedy",
            KnapsackOracle::Singleton => "singleton",
        }
    }

    /// Guaranteed ratio to the best configuration on `inst`.
    pub fn eta(&self, inst: &BinPackInstance) -> f64 {
        match self {
            KnapsackOracle::ExactBnB { .. } => 1.0,
            KnapsackOracle::GreedyDensity => 0.5,
            KnapsackOracle::Singleton => 1.0 / singleton_items_per_bin(inst) as f64,
        }
    }

    pub fn solve(&self, y: &DenseVec, inst: &BinPackInstance) -> Result<Configuration> {
        check_profits(y, inst)?;
        Ok(match *self {
            KnapsackOracle::ExactBnB { max_items } => exact_knapsack_bnb_capped(y, inst, max_items)?,
            KnapsackOracle::GreedyDensity => greedy_knapsack(y, inst)?,
            KnapsackOracle::Singleton => singleton_knapsack(y, inst)?,
        })
    }
}

impl std::str::FromStr for KnapsackOracle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(KnapsackOracle::exact()),
            "greedy" => Ok(KnapsackOracle::GreedyDensity),
            "singleton" => Ok(KnapsackOracle::Singleton),
            other => Err(Error::Parse(format!("unknown knapsack oracle {other:?}; use exact, greedy or singleton"))),
        }
    }
}

/// Most items any configuration can hold: `floor(1 / s_min)`, and never
/// more than the instance has.
fn singleton_items_per_bin(inst: &BinPackInstance) -> u64 {
    let k = (inst.capacity() / inst.sizes()[0]).floor() as u64;
    k.clamp(1, inst.n().max(1))
}

fn check_profits(y: &DenseVec, inst: &BinPackInstance) -> Result<()> {
    if y.len() != inst.m() {
        return Err(Error::domain(format!("y has {} entries, the instance has {} item types", y.len(), inst.m())));
    }
    Ok(())
}

/// Types with positive profit, by decreasing density then ascending index.
fn density_order(y: &DenseVec, inst: &BinPackInstance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.m()).filter(|&i| y[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let da = y[a] / inst.sizes()[a];
        let db = y[b] / inst.sizes()[b];
        db.total_cmp(&da).then(a.cmp(&b))
    });
    order
}

/// Exact bounded knapsack with the default item cap.
pub fn exact_knapsack_bnb(y: &DenseVec, inst: &BinPackInstance) -> Result<Configuration> {
    check_profits(y, inst)?;
    exact_knapsack_bnb_capped(y, inst, DEFAULT_BNB_CAP)
}

fn exact_knapsack_bnb_capped(y: &DenseVec, inst: &BinPackInstance, max_items: u64) -> Result<Configuration> {
    if inst.n() > max_items {
        return Err(Error::CapExceeded { what: "exact knapsack item count", value: inst.n(), cap: max_items });
    }
    let order = density_order(y, inst);
    let mut search = Bnb {
        y,
        inst,
        order: &order,
        counts: vec![0; inst.m()],
        best: Configuration::empty(inst.m()),
        best_profit: 0.0,
    };
    search.dfs(0, inst.capacity(), 0.0);
    Ok(search.best)
}

struct Bnb<'a> {
    y: &'a DenseVec,
    inst: &'a BinPackInstance,
    order: &'a [usize],
    counts: Vec<u32>,
    best: Configuration,
    best_profit: f64,
}

impl Bnb<'_> {
    fn dfs(&mut self, depth: usize, room: f64, profit: f64) {
        if profit > self.best_profit {
            self.best_profit = profit;
            self.best = Configuration::new(self.counts.clone());
        }
        if depth == self.order.len() {
            return;
        }
        let slack = 1e-12 * self.best_profit.max(1.0);
        if profit + self.fractional_bound(depth, room) <= self.best_profit + slack {
            return;
        }
        let i = self.order[depth];
        let s = self.inst.sizes()[i];
        let most = (self.inst.multiplicities()[i] as f64).min((room / s).floor()).max(0.0) as u32;
        for k in (0..=most).rev() {
            self.counts[i] = k;
            self.dfs(depth + 1, room - k as f64 * s, profit + k as f64 * self.y[i]);
        }
        self.counts[i] = 0;
    }

    /// Optimum of the bounded fractional relaxation over the remaining types.
    fn fractional_bound(&self, depth: usize, mut room: f64) -> f64 {
        let mut bound = 0.0;
        for &i in &self.order[depth..] {
            let s = self.inst.sizes()[i];
            let b = self.inst.multiplicities()[i] as f64;
            if b * s <= room {
                bound += b * self.y[i];
                room -= b * s;
            } else {
                bound += room / s * self.y[i];
                break;
            }
        }
        bound
    }
}

/// Takes items by decreasing density until one does not fit, then returns
/// that prefix or the best single item, whichever earns more.
pub fn greedy_knapsack(y: &DenseVec, inst: &BinPackInstance) -> Result<Configuration> {
    check_profits(y, inst)?;
    let mut prefix = Configuration::empty(inst.m());
    let mut room = inst.capacity();
    'outer: for i in density_order(y, inst) {
        let s = inst.sizes()[i];
        for _ in 0..inst.multiplicities()[i] {
            if s > room {
                break 'outer;
            }
            prefix.counts[i] += 1;
            room -= s;
        }
    }
    let single = singleton_knapsack(y, inst)?;
    Ok(if single.profit(y) > prefix.profit(y) { single } else { prefix })
}

/// One copy of the most profitable type, lowest index on ties; empty if no
/// profit is positive.
pub fn singleton_knapsack(y: &DenseVec, inst: &BinPackInstance) -> Result<Configuration> {
    check_profits(y, inst)?;
    let mut best: Option<usize> = None;
    for i in 0..inst.m() {
        if y[i] > 0.0 && best.is_none_or(|b| y[i] > y[b]) {
            best = Some(i);
        }
    }
    Ok(match best {
        Some(i) => Configuration::single(inst.m(), i),
        None => Configuration::empty(inst.m()),
    })
}

/// Covering oracles of the configuration LP: unit costs, count columns,
/// and a knapsack solver as index finder.
#[derive(Debug, Clone)]
pub struct ConfigLpOracles<'a> {
    inst: &'a BinPackInstance,
    ks: KnapsackOracle,
}

pub fn config_lp_oracles(inst: &BinPackInstance, ks: KnapsackOracle) -> ConfigLpOracles<'_> {
    ConfigLpOracles { inst, ks }
}

impl ConfigLpOracles<'_> {
    pub fn instance(&self) -> &BinPackInstance {
        self.inst
    }

    pub fn knapsack(&self) -> KnapsackOracle {
        self.ks
    }
}

impl CoveringOracleSuite for ConfigLpOracles<'_> {
    type Column = Configuration;

    fn rows(&self) -> usize {
        self.inst.m()
    }

    fn column(&self, c: &Configuration) -> Result<DenseVec> {
        if c.counts().len() != self.inst.m() {
            return Err(Error::domain(format!("configuration {c} has the wrong number of types")));
        }
        Ok(DenseVec::from_vec_unchecked(c.counts().iter().map(|&k| k as f64).collect()))
    }

    fn cost(&self, _c: &Configuration) -> Result<f64> {
        Ok(1.0)
    }

    fn index_find(&self, y: &DenseVec) -> Result<Configuration> {
        let c = self.ks.solve(y, self.inst)?;
        if !self.inst.is_feasible(&c) {
            return Err(Error::contract(format!("knapsack oracle returned infeasible configuration {c}")));
        }
        if c.is_empty() {
            return Err(Error::contract("knapsack oracle returned the empty configuration"));
        }
        Ok(c)
    }

    fn eta(&self) -> f64 {
        self.ks.eta(self.inst)
    }
}

/// `(q, rho) = (n, n)`: every configuration LP optimum lies in `[1, n]` and
/// no configuration covers a type more than `b_i` times.
pub fn default_bounds(inst: &BinPackInstance) -> (f64, f64) {
    let n = inst.n() as f64;
    (n, n)
}

/// Solver parameters for the configuration LP of `inst`.
pub fn binpack_params(inst: &BinPackInstance, ks: KnapsackOracle, eps: f64) -> Result<SolveParams> {
    let (q, rho) = default_bounds(inst);
    Ok(SolveParams::new(eps, ks.eta(inst), q, rho)?.with_feas_tol(inst.feas_tol()))
}

/// Approximates the configuration LP to within `(1 + eps + eps^2) / eta`.
pub fn solve_binpack_lp(inst: &BinPackInstance, ks: KnapsackOracle, eps: f64) -> Result<CovLpResult<Configuration>> {
    let params = binpack_params(inst, ks, eps)?;
    cov_lp_solve(&config_lp_oracles(inst, ks), &inst.b(), &params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DenseVec {
        DenseVec::new(v.to_vec()).unwrap()
    }

    fn inst(sizes: &[f64], b: &[u32]) -> BinPackInstance {
        BinPackInstance::new(sizes.to_vec(), b.to_vec()).unwrap()
    }

    /// Best profit over all feasible count vectors.
    fn brute_force(y: &DenseVec, inst: &BinPackInstance) -> f64 {
        fn rec(y: &DenseVec, inst: &BinPackInstance, i: usize, c: &mut Vec<u32>, best: &mut f64) {
            if i == inst.m() {
                let conf = Configuration::new(c.clone());
                if inst.is_feasible(&conf) {
                    *best = best.max(conf.profit(y));
                }
                return;
            }
            for k in 0..=inst.multiplicities()[i] {
                c[i] = k;
                rec(y, inst, i + 1, c, best);
            }
            c[i] = 0;
        }
        let mut best = 0.0;
        rec(y, inst, 0, &mut vec![0; inst.m()], &mut best);
        best
    }

    #[test]
    fn instance_validation_and_sorting() {
        let i = inst(&[0.4, 0.3], &[1, 2]);
        assert_eq!(i.sizes(), &[0.3, 0.4]);
        assert_eq!(i.multiplicities(), &[2, 1]);
        assert_eq!(i.n(), 3);
        assert!(BinPackInstance::new(vec![0.5, 0.5], vec![1, 1]).is_err());
        assert!(BinPackInstance::new(vec![1.5], vec![1]).is_err());
        assert!(BinPackInstance::new(vec![0.0], vec![1]).is_err());
        assert!(BinPackInstance::new(vec![0.5], vec![0]).is_err());
        assert!(BinPackInstance::new(vec![], vec![]).is_err());
        assert!(BinPackInstance::from_items(&[]).is_err());
    }

    #[test]
    fn json_formats() {
        let a = BinPackInstance::from_json(r#"{"sizes": [0.5, 0.25], "multiplicities": [2, 1]}"#).unwrap();
        let b = BinPackInstance::from_json(r#"{"items": [0.5, 0.25, 0.5]}"#).unwrap();
        assert_eq!(a, b);
        assert!(BinPackInstance::from_json(r#"{"sizes": [0.5]}"#).is_err());
        assert!(BinPackInstance::from_json("[]").is_err());
    }

    #[test]
    fn default_bounds_examples() {
        assert_eq!(default_bounds(&inst(&[0.2, 0.3], &[1, 3])), (4.0, 4.0));
        assert_eq!(default_bounds(&inst(&[0.7], &[1])), (1.0, 1.0));
        assert_eq!(default_bounds(&inst(&[0.5], &[6])), (6.0, 6.0));
    }

    #[test]
    fn oracle_suite_basics() {
        let i = inst(&[0.5], &[2]);
        let o = config_lp_oracles(&i, KnapsackOracle::exact());
        let c = Configuration::new(vec![2]);
        assert_eq!(o.cost(&c).unwrap(), 1.0);
        assert_eq!(o.column(&c).unwrap(), dv(&[2.0]));
        assert_eq!(o.eta(), 1.0);
    }

    #[test]
    fn exact_ties_go_to_lower_index() {
        // Only one of the two fits at a time; both earn 1.
        let i = inst(&[0.6, 0.5], &[1, 1]);
        let c = exact_knapsack_bnb(&dv(&[1.0, 1.0]), &i).unwrap();
        assert_eq!(c, Configuration::single(2, 0));
        let o = config_lp_oracles(&i, KnapsackOracle::exact());
        assert_eq!(o.index_find(&dv(&[1.0, 1.0])).unwrap(), Configuration::single(2, 0));
    }

    #[test]
    fn exact_examples() {
        let i = inst(&[0.4, 0.3], &[2, 3]);
        assert!(exact_knapsack_bnb(&dv(&[0.0, 0.0]), &i).unwrap().is_empty());
        // Sorted types are (0.3 x3, 0.4 x2) with profits (1, 2).
        let y = dv(&[1.0, 2.0]);
        let c = exact_knapsack_bnb(&y, &i).unwrap();
        assert_eq!(c.profit(&y), 4.0);
        assert_eq!(c.profit(&y), brute_force(&y, &i));
        assert!(i.is_feasible(&c));

        let i = inst(&[0.5], &[2]);
        let c = exact_knapsack_bnb(&dv(&[3.0]), &i).unwrap();
        assert_eq!(c, Configuration::new(vec![2]));
    }

    #[test]
    fn exact_respects_cap() {
        let i = inst(&[0.1], &[41]);
        assert!(matches!(exact_knapsack_bnb(&dv(&[1.0]), &i), Err(Error::CapExceeded { .. })));
        let ks = KnapsackOracle::ExactBnB { max_items: 50 };
        assert_eq!(ks.solve(&dv(&[1.0]), &i).unwrap(), Configuration::new(vec![10]));
    }

    #[test]
    fn greedy_examples() {
        let i = inst(&[0.5], &[3]);
        let y = dv(&[1.0]);
        assert_eq!(greedy_knapsack(&y, &i).unwrap(), exact_knapsack_bnb(&y, &i).unwrap());

        // Types (0.5 x2, 0.6 x1): greedy grabs 0.6 first and stops.
        let i = inst(&[0.6, 0.5], &[1, 2]);
        let y = dv(&[0.5, 0.61]);
        let g = greedy_knapsack(&y, &i).unwrap();
        assert!((g.profit(&y) - 0.61).abs() < 1e-12);
        assert!((exact_knapsack_bnb(&y, &i).unwrap().profit(&y) - 1.0).abs() < 1e-12);

        let i = inst(&[0.1, 0.2, 0.3], &[1, 1, 2]);
        let y = dv(&[0.3, 0.1, 0.7]);
        assert_eq!(greedy_knapsack(&y, &i).unwrap(), exact_knapsack_bnb(&y, &i).unwrap());
    }

    #[test]
    fn singleton_examples() {
        let i = inst(&[0.2, 0.9], &[1, 1]);
        assert_eq!(singleton_knapsack(&dv(&[5.0, 1.0]), &i).unwrap(), Configuration::single(2, 0));

        let i = inst(&[0.5], &[2]);
        let y = dv(&[1.0]);
        assert_eq!(singleton_knapsack(&y, &i).unwrap().profit(&y), 1.0);
        assert_eq!(exact_knapsack_bnb(&y, &i).unwrap().profit(&y), 2.0);
        assert_eq!(KnapsackOracle::Singleton.eta(&i), 0.5);

        let i = inst(&[0.6, 0.7, 0.8], &[2, 1, 1]);
        assert_eq!(KnapsackOracle::Singleton.eta(&i), 1.0);
        let y = dv(&[0.3, 0.9, 0.2]);
        assert_eq!(singleton_knapsack(&y, &i).unwrap(), exact_knapsack_bnb(&y, &i).unwrap());
    }

    #[test]
    fn solve_two_halves() {
        let i = inst(&[0.5], &[2]);
        let r = solve_binpack_lp(&i, KnapsackOracle::exact(), 1.0).unwrap();
        assert!(r.objective >= 1.0 - 1e-9 && r.objective <= 3.0 + 1e-9, "{}", r.objective);
        let cover: f64 = r.x_feasible.iter().map(|(c, w)| w * c.counts()[0] as f64).sum();
        assert!(cover >= 2.0 * (1.0 - 1e-9));
    }

    #[test]
    fn solve_singleton_forced() {
        let i = inst(&[0.6, 0.7, 0.8], &[1, 1, 1]);
        let eps = 0.5;
        let r = solve_binpack_lp(&i, KnapsackOracle::exact(), eps).unwrap();
        assert!(r.objective >= 3.0 * (1.0 - 1e-9));
        assert!(r.objective <= 3.0 * (1.0 + eps + eps * eps) + 1e-9, "{}", r.objective);
    }
}

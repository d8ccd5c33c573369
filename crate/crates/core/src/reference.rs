//! Exact ground truth for small instances: a two-phase simplex over
//! arbitrary-precision rationals with Bland's rule, primal-dual certificates,
//! the exact optimum of `max_{x in P_r} lambda(x)`, and enumeration of all
//! bin-packing configurations.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Deserialize;

use crate::binpack::{BinPackInstance, Configuration};
use crate::error::{Error, Result};

pub type Rational = BigRational;

pub const MAX_ROWS: usize = 50;
pub const MAX_COLS: usize = 10_000;
pub const DEFAULT_ENUM_CAP: usize = 1_000_000;

/// Exact value of a 64-bit float.
pub fn rational_from_f64(v: f64) -> Result<Rational> {
    Rational::from_float(v).ok_or_else(|| Error::domain(format!("{v} is not a finite number")))
}

pub fn rational_to_f64(v: &Rational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"3"`, `"-1.25"`, `"2.5e-3"` or `"7/3"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(p) => (&s[..p], s[p + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int_part}{frac_part}0").parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32 - 1;
    let ten = BigInt::from(10);
    let mut v = Rational::from_integer(digits);
    if scale >= 0 {
        v *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        v /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -v } else { v })
}

/// `covLP(A, b, c)` with all data given explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitLp {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    c: Vec<Rational>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonNumber {
    Int(i64),
    Float(f64),
    Text(String),
}

impl JsonNumber {
    fn to_rational(&self) -> Result<Rational> {
        match self {
            JsonNumber::Int(i) => Ok(Rational::from_integer(BigInt::from(*i))),
            JsonNumber::Float(f) => rational_from_f64(*f),
            JsonNumber::Text(s) => parse_rational(s),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LpFile {
    #[serde(rename = "A")]
    a: Vec<Vec<JsonNumber>>,
    b: Vec<JsonNumber>,
    c: Vec<JsonNumber>,
}

impl ExplicitLp {
    /// Checks `A >= 0`, `b > 0`, `c > 0` and matching dimensions.
    pub fn new(a: Vec<Vec<Rational>>, b: Vec<Rational>, c: Vec<Rational>) -> Result<Self> {
        if b.is_empty() || c.is_empty() {
            return Err(Error::domain("the LP needs at least one row and one column"));
        }
        if a.len() != b.len() {
            return Err(Error::domain(format!("A has {} rows but b has {}", a.len(), b.len())));
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != c.len() {
                return Err(Error::domain(format!("row {i} of A has {} entries, c has {}", row.len(), c.len())));
            }
            if row.iter().any(|v| v.is_negative()) {
                return Err(Error::domain(format!("row {i} of A has a negative entry; A must be nonnegative")));
            }
        }
        if b.iter().any(|v| !v.is_positive()) {
            return Err(Error::domain("b must be strictly positive (b > 0)"));
        }
        if c.iter().any(|v| !v.is_positive()) {
            return Err(Error::domain("c must be strictly positive (c > 0)"));
        }
        Ok(ExplicitLp { a, b, c })
    }

    pub fn from_f64(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<Self> {
        let conv = |v: &[f64]| v.iter().map(|&x| rational_from_f64(x)).collect::<Result<Vec<_>>>();
        let a = a.iter().map(|row| conv(row)).collect::<Result<Vec<_>>>()?;
        Self::new(a, conv(b)?, conv(c)?)
    }

    /// Parses `{"A": [[...]], "b": [...], "c": [...]}` where each number is
    /// a JSON number or a decimal/fraction string.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: LpFile = serde_json::from_str(text)?;
        let conv = |v: &[JsonNumber]| v.iter().map(JsonNumber::to_rational).collect::<Result<Vec<_>>>();
        let a = f.a.iter().map(|row| conv(row)).collect::<Result<Vec<_>>>()?;
        Self::new(a, conv(&f.b)?, conv(&f.c)?)
    }

    pub fn rows(&self) -> usize {
        self.b.len()
    }

    pub fn cols(&self) -> usize {
        self.c.len()
    }

    pub fn a(&self) -> &[Vec<Rational>] {
        &self.a
    }

    pub fn b(&self) -> &[Rational] {
        &self.b
    }

    pub fn c(&self) -> &[Rational] {
        &self.c
    }

    pub fn to_f64(&self) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let conv = |v: &[Rational]| v.iter().map(rational_to_f64).collect::<Vec<_>>();
        (self.a.iter().map(|r| conv(r)).collect(), conv(&self.b), conv(&self.c))
    }

    fn check_caps(&self) -> Result<()> {
        if self.rows() > MAX_ROWS {
            return Err(Error::CapExceeded { what: "reference LP row", value: self.rows() as u64, cap: MAX_ROWS as u64 });
        }
        if self.cols() > MAX_COLS {
            return Err(Error::CapExceeded { what: "reference LP column", value: self.cols() as u64, cap: MAX_COLS as u64 });
        }
        Ok(())
    }
}

/// Optimal primal-dual pair of a covering LP.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLpSolution {
    pub x: Vec<Rational>,
    pub objective: Rational,
    /// Optimal solution of the dual `max b^T y, A^T y <= c, y >= 0`.
    pub y: Vec<Rational>,
}

impl ExactLpSolution {
    /// Checks primal and dual feasibility and `c^T x = b^T y` exactly.
    pub fn verify(&self, lp: &ExplicitLp) -> std::result::Result<(), CertificateError> {
        if self.x.len() != lp.cols() || self.y.len() != lp.rows() {
            return Err(CertificateError("dimension mismatch".into()));
        }
        if self.x.iter().any(|v| v.is_negative()) {
            return Err(CertificateError("x has a negative entry".into()));
        }
        if self.y.iter().any(|v| v.is_negative()) {
            return Err(CertificateError("y has a negative entry".into()));
        }
        for (i, row) in lp.a.iter().enumerate() {
            let lhs: Rational = row.iter().zip(&self.x).map(|(a, x)| a * x).sum();
            if lhs < lp.b[i] {
                return Err(CertificateError(format!("primal row {i} is violated")));
            }
        }
        for j in 0..lp.cols() {
            let lhs: Rational = (0..lp.rows()).map(|i| &lp.a[i][j] * &self.y[i]).sum();
            if lhs > lp.c[j] {
                return Err(CertificateError(format!("dual constraint {j} is violated")));
            }
        }
        let primal: Rational = lp.c.iter().zip(&self.x).map(|(c, x)| c * x).sum();
        let dual: Rational = lp.b.iter().zip(&self.y).map(|(b, y)| b * y).sum();
        if primal != dual || primal != self.objective {
            return Err(CertificateError(format!("objectives differ: primal {primal}, dual {dual}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateError(pub String);

impl fmt::Display for CertificateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "certificate check failed: {}", self.0)
    }
}

/// Result of a standard-form solve.
struct StdSolution {
    x: Vec<Rational>,
    objective: Rational,
    /// Equality-constraint multipliers `y = c_B^T B^{-1}`.
    y: Vec<Rational>,
}

#[derive(Debug)]
enum SimplexFailure {
    Infeasible,
    Unbounded,
}

/// Two-phase tableau simplex for `min c^T x, Ax = b, x >= 0` with `b >= 0`.
/// Artificial columns are kept through phase 2 so `B^{-1}` stays readable.
struct Simplex {
    rows: Vec<Vec<Rational>>,
    obj: Vec<Rational>,
    basis: Vec<usize>,
    n: usize,
    m: usize,
}

impl Simplex {
    fn solve(a: Vec<Vec<Rational>>, b: Vec<Rational>, c: &[Rational]) -> std::result::Result<StdSolution, SimplexFailure> {
        let m = b.len();
        let n = c.len();
        let width = n + m + 1;
        let mut rows = Vec::with_capacity(m);
        for (i, (mut row, bi)) in a.into_iter().zip(b).enumerate() {
            debug_assert!(!bi.is_negative());
            row.resize(width, Rational::zero());
            row[n + i] = Rational::one();
            row[width - 1] = bi;
            rows.push(row);
        }
        // Phase 1: min sum of artificials; reduced costs are -sum of rows on
        // structural columns.
        let mut obj = vec![Rational::zero(); width];
        for row in &rows {
            for j in 0..n {
                obj[j] -= &row[j];
            }
            obj[width - 1] -= &row[width - 1];
        }
        let mut s = Simplex { rows, obj, basis: (n..n + m).collect(), n, m };
        s.run(n).map_err(|_| SimplexFailure::Infeasible)?;
        if !s.obj[width - 1].is_zero() {
            return Err(SimplexFailure::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible.
        for i in 0..m {
            if s.basis[i] >= n {
                if let Some(j) = (0..n).find(|&j| !s.rows[i][j].is_zero()) {
                    s.pivot(i, j);
                }
            }
        }
        // Phase 2.
        let mut obj = vec![Rational::zero(); width];
        obj[..n].clone_from_slice(c);
        for i in 0..m {
            let cb = if s.basis[i] < n { c[s.basis[i]].clone() } else { Rational::zero() };
            if cb.is_zero() {
                continue;
            }
            for j in 0..width {
                let t = &cb * &s.rows[i][j];
                obj[j] -= t;
            }
        }
        s.obj = obj;
        s.run(n).map_err(|_| SimplexFailure::Unbounded)?;

        let mut x = vec![Rational::zero(); n];
        for (i, &bj) in s.basis.iter().enumerate() {
            if bj < n {
                x[bj] = s.rows[i][width - 1].clone();
            }
        }
        let objective: Rational = c.iter().zip(&x).map(|(c, x)| c * x).sum();
        let y = (0..m).map(|i| -s.obj[n + i].clone()).collect();
        Ok(StdSolution { x, objective, y })
    }

    /// Bland's rule: lowest-index entering column with negative reduced cost
    /// among the first `allowed` columns; ratio ties to the lowest basic index.
    fn run(&mut self, allowed: usize) -> std::result::Result<(), ()> {
        let last = self.n + self.m;
        loop {
            let Some(enter) = (0..allowed).find(|&j| self.obj[j].is_negative()) else {
                return Ok(());
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.m {
                let a = &self.rows[i][enter];
                if a.is_positive() {
                    let ratio = &self.rows[i][last] / a;
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Err(());
            };
            self.pivot(row, enter);
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }
}

/// Exact optimum of a covering LP with a verified strong-duality certificate.
pub fn exact_lp_solve(lp: &ExplicitLp) -> Result<ExactLpSolution> {
    lp.check_caps()?;
    let (m, n) = (lp.rows(), lp.cols());
    // Ax - s = b, with surplus columns s after the structural ones.
    let mut a = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = lp.a[i].clone();
        row.extend((0..m).map(|k| if k == i { -Rational::one() } else { Rational::zero() }));
        a.push(row);
    }
    let mut c = lp.c.clone();
    c.extend((0..m).map(|_| Rational::zero()));
    let sol = Simplex::solve(a, lp.b.clone(), &c).map_err(|e| match e {
        SimplexFailure::Infeasible => Error::Infeasible("covering LP is infeasible (some row of A is zero)".into()),
        SimplexFailure::Unbounded => Error::Infeasible("covering LP is unbounded".into()),
    })?;
    let out = ExactLpSolution { x: sol.x[..n].to_vec(), objective: sol.objective, y: sol.y };
    out.verify(lp).map_err(|e| Error::Infeasible(e.to_string()))?;
    Ok(out)
}

/// Exact `lambda* = max { lambda : Ax >= lambda b, c^T x = r, x >= 0 }`.
pub fn exact_lambda_star(lp: &ExplicitLp, r: &Rational) -> Result<Rational> {
    lp.check_caps()?;
    if r.is_negative() {
        return Err(Error::domain("r must be nonnegative"));
    }
    let (m, n) = (lp.rows(), lp.cols());
    // Columns: x (n), lambda (1), s (m). Rows: Ax - lambda b - s = 0; c^T x = r.
    let width = n + 1 + m;
    let mut a = Vec::with_capacity(m + 1);
    for i in 0..m {
        let mut row = vec![Rational::zero(); width];
        row[..n].clone_from_slice(&lp.a[i]);
        row[n] = -lp.b[i].clone();
        row[n + 1 + i] = -Rational::one();
        a.push(row);
    }
    let mut cost_row = vec![Rational::zero(); width];
    cost_row[..n].clone_from_slice(&lp.c);
    a.push(cost_row);
    let mut rhs = vec![Rational::zero(); m];
    rhs.push(r.clone());
    let mut obj = vec![Rational::zero(); width];
    obj[n] = -Rational::one();
    let sol = Simplex::solve(a, rhs, &obj).map_err(|e| Error::Infeasible(format!("lambda* LP failed: {e:?}")))?;
    Ok(sol.x[n].clone())
}

/// All nonempty configurations of `inst` (count vectors with
/// `counts_i <= b_i` fitting one bin), ordered by item count and then by
/// descending count vector.
pub fn enumerate_configurations(inst: &BinPackInstance, cap: usize) -> Result<Vec<Configuration>> {
    let m = inst.m();
    let mut out = Vec::new();
    let mut counts = vec![0u32; m];
    fn rec(
        inst: &BinPackInstance,
        i: usize,
        used: f64,
        counts: &mut Vec<u32>,
        out: &mut Vec<Configuration>,
        cap: usize,
    ) -> Result<()> {
        if i == inst.m() {
            if counts.iter().any(|&c| c > 0) {
                if out.len() >= cap {
                    return Err(Error::CapExceeded { what: "configuration enumeration", value: cap as u64 + 1, cap: cap as u64 });
                }
                out.push(Configuration::new(counts.clone()));
            }
            return Ok(());
        }
        let s = inst.sizes()[i];
        let mut k = 0u32;
        loop {
            counts[i] = k;
            rec(inst, i + 1, used + k as f64 * s, counts, out, cap)?;
            k += 1;
            if k > inst.multiplicities()[i] || used + k as f64 * s > inst.capacity() {
                break;
            }
        }
        counts[i] = 0;
        Ok(())
    }
    rec(inst, 0, 0.0, &mut counts, &mut out, cap)?;
    out.sort_by(|a, b| a.total_items().cmp(&b.total_items()).then_with(|| b.cmp(a)));
    debug_assert!(out.iter().all(|c| inst.is_feasible(c)));
    Ok(out)
}

/// The configuration LP `covLP(A, b, 1)` over the given configurations.
/// Sizes are only used for the configuration list; the LP data is integral.
pub fn configuration_lp(inst: &BinPackInstance, configs: &[Configuration]) -> Result<ExplicitLp> {
    let m = inst.m();
    let a = (0..m)
        .map(|i| configs.iter().map(|c| Rational::from_integer(BigInt::from(c.counts()[i]))).collect())
        .collect();
    let b = inst.multiplicities().iter().map(|&v| Rational::from_integer(BigInt::from(v))).collect();
    let c = vec![Rational::one(); configs.len()];
    ExplicitLp::new(a, b, c)
}

/// Exact configuration-LP optimum of a bin-packing instance.
pub fn exact_binpack_lp(inst: &BinPackInstance) -> Result<ExactLpSolution> {
    let configs = enumerate_configurations(inst, DEFAULT_ENUM_CAP)?;
    exact_lp_solve(&configuration_lp(inst, &configs)?)
}

//! Covering LPs given by an explicit dense matrix.

use crate::error::{Error, Result};
use crate::lp_core::{check_unit_interval, CoveringOracleSuite, DenseVec};
use crate::reference::ExplicitLp;

/// How the index-finding oracle picks a column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexMode {
    /// `argmax_j D_j(y)`, ties to the lowest index.
    Exact,
    /// The column with the smallest `D_j(y)` among those with
    /// `D_j(y) >= eta * max_k D_k(y)`: deliberately as weak as the promise
    /// allows.
    Degrade(f64),
}

impl IndexMode {
    pub fn eta(&self) -> f64 {
        match *self {
            IndexMode::Exact => 1.0,
            IndexMode::Degrade(eta) => eta,
        }
    }
}

/// Oracle suite over an explicit `m x N` matrix with integer column ids.
#[derive(Debug, Clone)]
pub struct ExplicitOracles {
    a: Vec<Vec<f64>>,
    c: Vec<f64>,
    mode: IndexMode,
    declared_eta: f64,
}

impl ExplicitOracles {
    /// `a` is row-major, `m` rows of `N` entries each.
    pub fn new(a: Vec<Vec<f64>>, c: Vec<f64>, mode: IndexMode) -> Result<Self> {
        let n = c.len();
        if a.is_empty() || n == 0 {
            return Err(Error::domain("A must have at least one row and one column"));
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::domain(format!("row {i} of A has {} entries, expected {n}", row.len())));
            }
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::domain(format!("row {i} of A has a negative or non-finite entry")));
            }
        }
        if c.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::domain("c must be strictly positive"));
        }
        if let IndexMode::Degrade(eta) = mode {
            check_unit_interval("eta", eta)?;
        }
        Ok(ExplicitOracles { a, c, mode, declared_eta: mode.eta() })
    }

    pub fn from_lp(lp: &ExplicitLp, mode: IndexMode) -> Result<Self> {
        let (a, _, c) = lp.to_f64();
        Self::new(a, c, mode)
    }

    /// Overrides the weakness the suite claims, independent of how it
    /// actually behaves. Used for negative controls.
    pub fn with_declared_eta(mut self, eta: f64) -> Result<Self> {
        check_unit_interval("eta", eta)?;
        self.declared_eta = eta;
        Ok(self)
    }

    pub fn cols(&self) -> usize {
        self.c.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    pub fn costs(&self) -> &[f64] {
        &self.c
    }

    /// `D_j(y) = y^T a_j / c_j`
    pub fn score(&self, y: &DenseVec, j: usize) -> f64 {
        self.a.iter().zip(y.iter()).map(|(row, yi)| yi * row[j]).sum::<f64>() / self.c[j]
    }

    /// Objective of the cheapest single-column cover of each row, summed.
    /// Always feasible, so an upper bound on the optimum.
    pub fn greedy_upper_bound(&self, b: &DenseVec) -> Result<f64> {
        self.check_b(b)?;
        let mut total = 0.0;
        for (i, row) in self.a.iter().enumerate() {
            let best = (0..self.cols())
                .filter(|&j| row[j] > 0.0)
                .map(|j| b[i] * self.c[j] / row[j])
                .fold(f64::INFINITY, f64::min);
            if !best.is_finite() {
                return Err(Error::Infeasible(format!("row {i} of A is zero, so the LP is infeasible")));
            }
            total += best;
        }
        Ok(total)
    }

    /// `max_i b_i / max_j (A[i,j] / c_j)`, a lower bound on the optimum.
    pub fn lower_bound(&self, b: &DenseVec) -> Result<f64> {
        self.check_b(b)?;
        let mut lb: f64 = 0.0;
        for (i, row) in self.a.iter().enumerate() {
            let best = (0..self.cols()).map(|j| row[j] / self.c[j]).fold(0.0, f64::max);
            if best == 0.0 {
                return Err(Error::Infeasible(format!("row {i} of A is zero, so the LP is infeasible")));
            }
            lb = lb.max(b[i] / best);
        }
        Ok(lb)
    }

    /// `q * max_{i,j} A[i,j] / (b_i c_j)`
    pub fn rho_for(&self, b: &DenseVec, q: f64) -> Result<f64> {
        self.check_b(b)?;
        let mut mx: f64 = 0.0;
        for (i, row) in self.a.iter().enumerate() {
            for j in 0..self.cols() {
                mx = mx.max(row[j] / (b[i] * self.c[j]));
            }
        }
        Ok(q * mx)
    }

    /// `(q, rho)` from [`Self::greedy_upper_bound`] and [`Self::rho_for`].
    pub fn default_bounds(&self, b: &DenseVec) -> Result<(f64, f64)> {
        let q = self.greedy_upper_bound(b)?;
        Ok((q, self.rho_for(b, q)?))
    }

    fn check_b(&self, b: &DenseVec) -> Result<()> {
        if b.len() != self.a.len() {
            return Err(Error::domain(format!("b has {} rows, A has {}", b.len(), self.a.len())));
        }
        if !b.all_positive() {
            return Err(Error::domain("b must be strictly positive"));
        }
        Ok(())
    }
}

impl CoveringOracleSuite for ExplicitOracles {
    type Column = usize;

    fn rows(&self) -> usize {
        self.a.len()
    }

    fn column(&self, j: &usize) -> Result<DenseVec> {
        if *j >= self.cols() {
            return Err(Error::domain(format!("column {j} out of range")));
        }
        DenseVec::new(self.a.iter().map(|row| row[*j]).collect())
    }

    fn cost(&self, j: &usize) -> Result<f64> {
        self.c.get(*j).copied().ok_or_else(|| Error::domain(format!("column {j} out of range")))
    }

    fn index_find(&self, y: &DenseVec) -> Result<usize> {
        if y.len() != self.a.len() {
            return Err(Error::domain(format!("y has {} rows, A has {}", y.len(), self.a.len())));
        }
        let scores: Vec<f64> = (0..self.cols()).map(|j| self.score(y, j)).collect();
        let mut best = 0;
        for (j, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = j;
            }
        }
        Ok(match self.mode {
            IndexMode::Exact => best,
            IndexMode::Degrade(eta) => {
                let floor = eta * scores[best];
                let mut pick = best;
                for (j, &s) in scores.iter().enumerate() {
                    if s >= floor && s < scores[pick] {
                        pick = j;
                    }
                }
                pick
            }
        })
    }

    fn eta(&self) -> f64 {
        self.declared_eta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DenseVec {
        DenseVec::new(v.to_vec()).unwrap()
    }

    #[test]
    fn exact_and_degraded_index_find() {
        let o = ExplicitOracles::new(vec![vec![1.0, 0.5, 0.9, 0.2]], vec![1.0; 4], IndexMode::Exact).unwrap();
        assert_eq!(o.index_find(&dv(&[1.0])).unwrap(), 0);
        let o = ExplicitOracles::new(vec![vec![1.0, 0.5, 0.9, 0.2]], vec![1.0; 4], IndexMode::Degrade(0.5)).unwrap();
        assert_eq!(o.index_find(&dv(&[1.0])).unwrap(), 1);
        assert_eq!(o.eta(), 0.5);
        let o = o.with_declared_eta(1.0).unwrap();
        assert_eq!(o.eta(), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ExplicitOracles::new(vec![vec![1.0, -1.0]], vec![1.0, 1.0], IndexMode::Exact).is_err());
        assert!(ExplicitOracles::new(vec![vec![1.0, 1.0]], vec![1.0, 0.0], IndexMode::Exact).is_err());
        assert!(ExplicitOracles::new(vec![vec![1.0]], vec![1.0, 1.0], IndexMode::Exact).is_err());
        assert!(ExplicitOracles::new(vec![vec![1.0]], vec![1.0], IndexMode::Degrade(0.0)).is_err());
    }

    #[test]
    fn bounds_bracket_optimum() {
        // min x1 + x2, x1 >= 1, x2 >= 2: optimum 3
        let o = ExplicitOracles::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0], IndexMode::Exact).unwrap();
        let b = dv(&[1.0, 2.0]);
        assert_eq!(o.greedy_upper_bound(&b).unwrap(), 3.0);
        assert_eq!(o.lower_bound(&b).unwrap(), 2.0);
        assert_eq!(o.rho_for(&b, 3.0).unwrap(), 3.0);
        let z = ExplicitOracles::new(vec![vec![1.0], vec![0.0]], vec![1.0], IndexMode::Exact).unwrap();
        assert!(z.greedy_upper_bound(&b).is_err());
    }
}

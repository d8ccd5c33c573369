//! Approximate solver for implicitly defined covering linear programs.
//!
//! A covering LP is `min c^T x` subject to `Ax >= b`, `x >= 0` with a
//! nonnegative matrix `A` and strictly positive `b` and `c`. The matrix may
//! have far too many columns to write down; the solver only talks to it
//! through three callbacks (see [`CoveringOracleSuite`]):
//!
//! - a column oracle returning `a_j`,
//! - a cost oracle returning `c_j`,
//! - an `eta`-weak index-finding oracle returning a column whose
//!   cost-normalised dual value is within a factor `eta` of the best.
//!
//! [`cov_lp::cov_lp_solve`] binary-searches the objective value and, at each
//! probed level, runs the multiplicative-weights fractional covering routine in
//! [`frac_cover`]. The result is a `(1 + eps + eps^2) / eta`-approximate
//! solution.
//!
//! The [`binpack`] module builds the configuration LP of classic bin packing
//! on top of this, with knapsack solvers of varying strength serving as the
//! index-finding oracle. [`reference`] holds an exact rational simplex used
//! to check results on small instances.
//!
//! ```
//! use covlp::{cov_lp::cov_lp_solve, explicit::{ExplicitOracles, IndexMode}, SolveParams};
//!
//! // min x1 + x2  s.t.  x1 >= 1, x2 >= 1
//! let lp = ExplicitOracles::new(
//!     vec![vec![1.0, 0.0], vec![0.0, 1.0]],
//!     vec![1.0, 1.0],
//!     IndexMode::Exact,
//! )
//! .unwrap();
//! let b = covlp::DenseVec::new(vec![1.0, 1.0]).unwrap();
//! let params = SolveParams::new(1.0, 1.0, 2.0, 2.0).unwrap();
//! let res = cov_lp_solve(&lp, &b, &params).unwrap();
//! assert!(res.objective >= 2.0 - 1e-9 && res.objective <= 6.0 + 1e-9);
//! ```

pub mod binpack;
pub mod cov_lp;
pub mod error;
pub mod explicit;
pub mod frac_cover;
pub mod lp_core;
pub mod reference;

pub use error::{Error, Result};
pub use lp_core::{
    bound_m, bound_u, derived_params, ColumnId, CoveringOracleSuite, DenseVec, DerivedParams,
    FcovOracleSuite, SolveParams, SparseVec,
};

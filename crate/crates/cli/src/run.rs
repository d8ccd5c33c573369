//! Loading instances and turning solver runs into reports.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use covlp::binpack::{binpack_params, config_lp_oracles, BinPackInstance, KnapsackOracle};
use covlp::cov_lp::{cov_lp_solve, CovLpResult};
use covlp::explicit::{ExplicitOracles, IndexMode};
use covlp::lp_core::improve_cover_invocation_bound;
use covlp::reference::{exact_binpack_lp, exact_lp_solve, rational_to_f64, ExplicitLp, Rational};
use covlp::{bound_m, bound_u, CoveringOracleSuite, DenseVec, Error, SolveParams};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::report::{BoundChecks, Bounds, Counters, Outcome, Params, RunReport, SolutionEntry, Verdict, Verification};

pub enum Instance {
    Lp(ExplicitLp),
    BinPack(BinPackInstance),
}

pub struct Loaded {
    pub instance: Instance,
    pub digest: String,
}

/// Reads a file and decides by its keys whether it is an explicit LP
/// (`"A"`) or a bin-packing instance (`"sizes"` or `"items"`).
pub fn load(path: &Path, want: Option<Kind>, feas_tol: f64) -> Result<Loaded> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let text = std::str::from_utf8(&bytes).context("instance file is not UTF-8")?;
    let value: Value = serde_json::from_str(text).with_context(|| format!("{} is not valid JSON", path.display()))?;
    let kind = match want {
        Some(k) => k,
        None if value.get("A").is_some() => Kind::Lp,
        None if value.get("sizes").is_some() || value.get("items").is_some() => Kind::BinPack,
        None => bail!("{}: expected an explicit LP (\"A\", \"b\", \"c\") or a bin-packing instance (\"sizes\" or \"items\")", path.display()),
    };
    let instance = match kind {
        Kind::Lp => Instance::Lp(ExplicitLp::from_json(text)?),
        Kind::BinPack => Instance::BinPack(BinPackInstance::from_json(text)?.with_feas_tol(feas_tol)?),
    };
    Ok(Loaded { instance, digest })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Lp,
    BinPack,
}

/// Index-finding behaviour for explicit LPs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOracle {
    pub mode: IndexMode,
    /// Weakness to declare instead of the true one.
    pub claim_eta: Option<f64>,
}

impl LpOracle {
    pub fn name(&self) -> String {
        match self.mode {
            IndexMode::Exact => "exact".into(),
            IndexMode::Degrade(eta) => format!("degrade:{eta}"),
        }
    }
}

pub fn parse_eta_mode(s: &str) -> std::result::Result<IndexMode, String> {
    if s == "exact" {
        return Ok(IndexMode::Exact);
    }
    if let Some(v) = s.strip_prefix("degrade:") {
        let eta: f64 = v.parse().map_err(|_| format!("bad eta in {s:?}"))?;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(format!("eta must lie in (0, 1], got {eta}"));
        }
        return Ok(IndexMode::Degrade(eta));
    }
    Err(format!("expected `exact` or `degrade:<eta>`, got {s:?}"))
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub eps: f64,
    pub feas_tol: f64,
    pub max_calls: Option<u64>,
    pub verify: bool,
}

pub fn run_lp(lp: &ExplicitLp, digest: &str, oracle: LpOracle, opts: &RunOptions) -> Result<RunReport> {
    let mut o = ExplicitOracles::from_lp(lp, oracle.mode)?;
    if let Some(eta) = oracle.claim_eta {
        o = o.with_declared_eta(eta)?;
    }
    let b = DenseVec::new(lp.to_f64().1)?;
    let (q, rho) = o.default_bounds(&b)?;
    let params = SolveParams::new(opts.eps, o.eta(), q, rho)?
        .with_feas_tol(opts.feas_tol)
        .with_max_oracle_calls(opts.max_calls);
    let exact = if opts.verify { Some(exact_lp_solve(lp)?.objective) } else { None };
    let lower = o.lower_bound(&b)?;
    run_generic(&o, &b, params, Meta { kind: "covlp", digest, oracle: oracle.name(), lower_bound: lower }, exact, |j| json!(j), opts)
}

pub fn run_binpack(inst: &BinPackInstance, digest: &str, ks: KnapsackOracle, opts: &RunOptions) -> Result<RunReport> {
    if let KnapsackOracle::ExactBnB { max_items } = ks {
        if inst.n() > max_items {
            bail!("instance has {} items, more than the exact knapsack oracle accepts ({max_items})", inst.n());
        }
    }
    let o = config_lp_oracles(inst, ks);
    let params = binpack_params(inst, ks, opts.eps)?.with_max_oracle_calls(opts.max_calls);
    let exact = if opts.verify { Some(exact_binpack_lp(inst)?.objective) } else { None };
    // Every configuration LP optimum is at least 1.
    let meta = Meta { kind: "binpack", digest, oracle: ks.name().into(), lower_bound: 1.0 };
    run_generic(&o, &inst.b(), params, meta, exact, |c| json!(c.counts()), opts)
}

struct Meta<'a> {
    kind: &'a str,
    digest: &'a str,
    oracle: String,
    lower_bound: f64,
}

fn run_generic<O: CoveringOracleSuite>(
    o: &O,
    b: &DenseVec,
    params: SolveParams,
    meta: Meta<'_>,
    exact: Option<Rational>,
    column_json: impl Fn(&O::Column) -> Value,
    opts: &RunOptions,
) -> Result<RunReport> {
    let m = b.len();
    let u = bound_u(m, params.rho, params.eps, params.eta)?;
    let r_for_m = match &exact {
        Some(r) => rational_to_f64(r).min(params.q),
        None => meta.lower_bound.min(params.q),
    };
    let m_bound = bound_m(params.eps, params.eta, params.q, r_for_m)?;
    let ic_bound = improve_cover_invocation_bound(m, params.eta);
    let max_calls = params.max_oracle_calls.unwrap_or(u.saturating_mul(10));

    let start = Instant::now();
    let solved = cov_lp_solve(o, b, &params);
    let wall = start.elapsed().as_secs_f64();

    let (result, error) = match solved {
        Ok(r) => (Some(r), None),
        // A broken run is a verification failure, not an input error.
        Err(e @ (Error::Precondition(_) | Error::OracleContract(_) | Error::CapExceeded { .. })) if opts.verify => {
            (None, Some(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };

    let counters = result.as_ref().map(counters_of).unwrap_or_default();
    let bounds = Bounds { m: m_bound, m_worst_case: exact.is_none(), u, improve_cover: ic_bound, total_calls: m_bound * u as f64 };
    let checks = BoundChecks {
        iterations_within_m: counters.search_iterations as f64 <= m_bound,
        point_find_within_u: counters.max_point_find_per_probe <= u,
        improve_cover_within_bound: counters.max_improve_cover_per_probe <= ic_bound,
        index_find_within_total: counters.index_find_calls as f64 <= bounds.total_calls,
    };

    let outcome = result.as_ref().map(|r| Outcome {
        objective: r.objective,
        alpha: r.alpha,
        beta: r.beta,
        mu: r.mu,
        solution: r.x_feasible.iter().map(|(c, w)| SolutionEntry { column: column_json(c), weight: *w }).collect(),
    });

    let verification = match &exact {
        Some(r_star) => Some(verify(o, b, &params, r_star, result.as_ref(), checks.all())?),
        None => None,
    };

    Ok(RunReport {
        kind: meta.kind.into(),
        instance_sha256: meta.digest.into(),
        params: Params {
            eps: params.eps,
            eta: params.eta,
            oracle: meta.oracle,
            q: params.q,
            rho: params.rho,
            feas_tol: params.feas_tol,
            max_calls,
        },
        outcome,
        error,
        counters,
        bounds,
        checks,
        verification,
        wall_time_secs: wall,
    })
}

fn counters_of<C: Ord>(r: &CovLpResult<C>) -> Counters {
    let s = &r.stats;
    Counters {
        index_find_calls: s.calls.index_find,
        column_calls: s.calls.column,
        cost_calls: s.calls.cost,
        point_find_calls: s.point_find_calls,
        max_point_find_per_probe: s.max_point_find_per_probe(),
        improve_cover_calls: s.improve_cover_calls,
        max_improve_cover_per_probe: s.max_improve_cover_per_probe(),
        probes: s.probes.len() as u64,
        search_iterations: s.iterations,
    }
}

fn verify<O: CoveringOracleSuite>(
    o: &O,
    b: &DenseVec,
    params: &SolveParams,
    r_star: &Rational,
    result: Option<&CovLpResult<O::Column>>,
    bounds_ok: bool,
) -> Result<Verification> {
    let r = rational_to_f64(r_star);
    let factor = (1.0 + params.eps + params.eps * params.eps) / params.eta;
    let (objective_ok, feasible_ok, ratio) = match result {
        None => (false, false, None),
        Some(res) => {
            let mut ax = vec![0.0; b.len()];
            for (col, w) in res.x_feasible.iter() {
                let a = o.column(col)?;
                for (acc, v) in ax.iter_mut().zip(a.iter()) {
                    *acc += w * v;
                }
            }
            let feasible = ax.iter().zip(b.iter()).all(|(a, bi)| *a >= bi * (1.0 - params.feas_tol));
            (res.objective <= factor * r + params.feas_tol, feasible, Some(res.objective / r))
        }
    };
    let pass = objective_ok && feasible_ok && bounds_ok;
    Ok(Verification {
        r_star: r,
        r_star_exact: r_star.to_string(),
        factor,
        ratio,
        objective_ok,
        feasible_ok,
        bounds_ok,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use covlp::reference::parse_rational;

    fn opts(verify: bool) -> RunOptions {
        RunOptions { eps: 0.5, feas_tol: 1e-9, max_calls: None, verify }
    }

    #[test]
    fn report_round_trips_through_json() {
        let lp = ExplicitLp::from_json(r#"{"A": [[1, 0.5], [0.3, 2]], "b": [1, 1.7], "c": [1, 1.1]}"#).unwrap();
        let oracle = LpOracle { mode: IndexMode::Exact, claim_eta: None };
        let r = run_lp(&lp, "digest", oracle, &opts(true)).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);

        let inst = BinPackInstance::from_items(&[0.3, 0.3, 0.45, 0.7]).unwrap();
        let r = run_binpack(&inst, "digest", KnapsackOracle::GreedyDensity, &opts(false)).unwrap();
        let back: RunReport = serde_json::from_str(&serde_json::to_string_pretty(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn verification_uses_exact_optimum() {
        let lp = ExplicitLp::from_json(r#"{"A": [[1, 0], [0, 1]], "b": [1, 2], "c": [1, 1]}"#).unwrap();
        let r = run_lp(&lp, "d", LpOracle { mode: IndexMode::Exact, claim_eta: None }, &opts(true)).unwrap();
        let v = r.verification.unwrap();
        assert_eq!(parse_rational(&v.r_star_exact).unwrap(), parse_rational("3").unwrap());
        assert_eq!(v.verdict, Verdict::Pass);
        assert!(!r.bounds.m_worst_case);
    }

    #[test]
    fn eta_mode_parsing() {
        assert_eq!(parse_eta_mode("exact"), Ok(IndexMode::Exact));
        assert_eq!(parse_eta_mode("degrade:0.25"), Ok(IndexMode::Degrade(0.25)));
        assert!(parse_eta_mode("degrade:0").is_err());
        assert!(parse_eta_mode("degrade:x").is_err());
        assert!(parse_eta_mode("fast").is_err());
    }
}

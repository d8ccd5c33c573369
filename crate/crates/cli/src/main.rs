mod report;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use covlp::binpack::KnapsackOracle;
use covlp::explicit::IndexMode;
use serde::Serialize;

use report::{RunReport, Verdict};
use run::{load, parse_eta_mode, run_binpack, run_lp, Instance, Kind, LpOracle, RunOptions};

/// Approximate covering-LP and bin-packing LP solver.
#[derive(Parser)]
#[command(name = "covlp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an explicit covering LP given as {"A", "b", "c"}.
    CovlpSolve {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lp: LpFlags,
    },
    /// Solve the configuration LP of a bin-packing instance.
    BinpackSolve {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Knapsack oracle: exact, greedy or singleton.
        #[arg(long, default_value = "exact")]
        oracle: KnapsackOracle,
    },
    /// Solve and check the result against the exact rational optimum.
    /// Exits 0 on PASS and 3 on FAIL.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Knapsack oracle for bin-packing instances.
        #[arg(long, default_value = "exact")]
        oracle: KnapsackOracle,
        #[command(flatten)]
        lp: LpFlags,
    },
    /// Sweep eps and oracle choices over instances and print CSV.
    Bench {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,0.5")]
        eps: Vec<f64>,
        /// Knapsack oracles for bin-packing instances.
        #[arg(long, value_delimiter = ',', default_value = "exact,greedy,singleton")]
        oracles: Vec<KnapsackOracle>,
        /// Index modes for explicit LPs.
        #[arg(long, value_delimiter = ',', default_value = "exact", value_parser = parse_eta_mode)]
        eta_modes: Vec<IndexMode>,
        #[arg(long, default_value_t = 1e-9)]
        feas_tol: f64,
        #[arg(long, env = "COVLP_MAX_CALLS")]
        max_calls: Option<u64>,
    },
}

#[derive(Args)]
struct Common {
    /// Accuracy; the result is within (1 + eps + eps^2) / eta of optimal.
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Tolerance for float comparisons against b and the bin capacity.
    #[arg(long, default_value_t = 1e-9)]
    feas_tol: f64,
    /// Point-find cap per inner solve [default: 10 * U].
    #[arg(long, env = "COVLP_MAX_CALLS")]
    max_calls: Option<u64>,
    /// Print the report on one line.
    #[arg(long)]
    compact: bool,
}

#[derive(Args)]
struct LpFlags {
    /// Index finding for explicit LPs: `exact`, or `degrade:<eta>` to return
    /// the weakest column an eta-approximate oracle may return.
    #[arg(long, default_value = "exact", value_parser = parse_eta_mode)]
    eta_mode: IndexMode,
    /// Declare this eta to the solver regardless of the index mode.
    #[arg(long)]
    claim_eta: Option<f64>,
}

impl Common {
    fn options(&self, verify: bool) -> RunOptions {
        RunOptions { eps: self.eps, feas_tol: self.feas_tol, max_calls: self.max_calls, verify }
    }
}

fn print_report(r: &RunReport, compact: bool) -> Result<()> {
    let text = if compact { serde_json::to_string(r)? } else { serde_json::to_string_pretty(r)? };
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}")?;
    Ok(())
}

#[derive(Serialize)]
struct BenchRow {
    instance: String,
    eps: f64,
    eta: f64,
    objective: Option<f64>,
    r_star: Option<f64>,
    ratio: Option<f64>,
    pointfind_calls: u64,
    #[serde(rename = "U")]
    u: u64,
    #[serde(rename = "M")]
    m: f64,
}

fn real_main(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::CovlpSolve { file, common, lp } => {
            let loaded = load(&file, Some(Kind::Lp), common.feas_tol)?;
            let Instance::Lp(inst) = &loaded.instance else { unreachable!() };
            let oracle = LpOracle { mode: lp.eta_mode, claim_eta: lp.claim_eta };
            let report = run_lp(inst, &loaded.digest, oracle, &common.options(false))?;
            print_report(&report, common.compact)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::BinpackSolve { file, common, oracle } => {
            let loaded = load(&file, Some(Kind::BinPack), common.feas_tol)?;
            let Instance::BinPack(inst) = &loaded.instance else { unreachable!() };
            let report = run_binpack(inst, &loaded.digest, oracle, &common.options(false))?;
            print_report(&report, common.compact)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { file, common, oracle, lp } => {
            let loaded = load(&file, None, common.feas_tol)?;
            let report = match &loaded.instance {
                Instance::Lp(inst) => {
                    let o = LpOracle { mode: lp.eta_mode, claim_eta: lp.claim_eta };
                    run_lp(inst, &loaded.digest, o, &common.options(true))?
                }
                Instance::BinPack(inst) => run_binpack(inst, &loaded.digest, oracle, &common.options(true))?,
            };
            print_report(&report, common.compact)?;
            let pass = report.verification.as_ref().is_some_and(|v| v.verdict == Verdict::Pass);
            eprintln!("{}", if pass { "PASS" } else { "FAIL" });
            Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
        Command::Bench { files, eps, oracles, eta_modes, feas_tol, max_calls } => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for file in &files {
                let loaded = load(file, None, feas_tol)?;
                let name = file.file_name().map_or_else(|| file.display().to_string(), |s| s.to_string_lossy().into_owned());
                for &e in &eps {
                    let opts = RunOptions { eps: e, feas_tol, max_calls, verify: true };
                    let reports: Vec<RunReport> = match &loaded.instance {
                        Instance::Lp(inst) => eta_modes
                            .iter()
                            .map(|&mode| run_lp(inst, &loaded.digest, LpOracle { mode, claim_eta: None }, &opts))
                            .collect::<Result<_>>()?,
                        Instance::BinPack(inst) => {
                            oracles.iter().map(|&ks| run_binpack(inst, &loaded.digest, ks, &opts)).collect::<Result<_>>()?
                        }
                    };
                    for r in reports {
                        let v = r.verification.as_ref();
                        w.serialize(BenchRow {
                            instance: name.clone(),
                            eps: e,
                            eta: r.params.eta,
                            objective: r.outcome.as_ref().map(|o| o.objective),
                            r_star: v.map(|v| v.r_star),
                            ratio: v.and_then(|v| v.ratio),
                            pointfind_calls: r.counters.point_find_calls,
                            u: r.bounds.u,
                            m: r.bounds.m,
                        })?;
                    }
                }
            }
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share exit code 1 with input errors.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match real_main(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

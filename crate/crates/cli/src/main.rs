//! `ose` — command-line front end for the open-supply pricing solver.
//!
//! Exit codes: 0 success, 1 verification-check failure, 2 invalid input
//! (parameter domain, malformed scenario file, unusable grid, I/O).

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ose_core::follower::follower_best_response;
use ose_core::oracle::{verify_scenario_with, CorruptTarget, GridSpec, ToleranceSpec};
use ose_core::scenario::{validate_params, ScenarioParams};
use ose_core::strategy::{pareto_sweep, stage1_decide, write_csv, AxisSpec, Strategy};
use ose_core::FollowerDecision;

#[derive(Parser)]
#[command(name = "ose", version, about = "Open-supply pricing game solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario: stage-1 strategy, stage-2 prices, stage-3 response.
    Solve(SolveArgs),
    /// Sweep the stage-1 decision over an (A, gamma1) lattice and emit CSV.
    Zones(ZonesArgs),
    /// Certify the closed forms against the brute-force oracles.
    Verify(VerifyArgs),
}

/// Scenario source: a JSON file or inline flags (mutually exclusive).
#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file; mutually exclusive with the inline parameter flags
    #[arg(long, value_name = "FILE")]
    scenario: Option<PathBuf>,

    /// Relative perceived value of the exterior product
    #[arg(long)]
    theta: Option<f64>,

    /// Original market share of the interior manufacturer
    #[arg(long = "A")]
    a: Option<f64>,

    /// Market spillover intensity of opening supply
    #[arg(long)]
    gamma1: Option<f64>,

    /// Exterior manufacturer's share of the remaining market
    #[arg(long, default_value_t = 0.5)]
    gamma2: f64,

    /// Interior unit production cost
    #[arg(long = "m-i")]
    m_i: Option<f64>,

    /// Exterior unit production cost
    #[arg(long = "m-e")]
    m_e: Option<f64>,

    /// Incumbent supplier's component wholesale price
    #[arg(long, default_value_t = 0.05)]
    w0: f64,

    /// One-off investment for opening component supply
    #[arg(long = "K", default_value_t = 0.0)]
    k: f64,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioParams, String> {
        let inline_given = self.theta.is_some()
            || self.a.is_some()
            || self.gamma1.is_some()
            || self.m_i.is_some()
            || self.m_e.is_some();
        let raw = if let Some(path) = &self.scenario {
            if inline_given {
                return Err("--scenario and inline parameter flags are mutually exclusive".into());
            }
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str::<ScenarioParams>(&text)
                .map_err(|e| format!("malformed scenario {}: {e}", path.display()))?
        } else {
            ScenarioParams {
                theta: self.theta.ok_or("--theta is required (or use --scenario)")?,
                a: self.a.ok_or("--A is required (or use --scenario)")?,
                gamma1: self.gamma1.ok_or("--gamma1 is required (or use --scenario)")?,
                gamma2: self.gamma2,
                m_i: self.m_i.ok_or("--m-i is required (or use --scenario)")?,
                m_e: self.m_e.ok_or("--m-e is required (or use --scenario)")?,
                w0: self.w0,
                k: self.k,
            }
        };
        validate_params(raw).map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct GridArgs {
    /// Exterior-price grid step for the oracles
    #[arg(long = "grid-pe", default_value_t = 1e-3)]
    grid_pe: f64,

    /// Sale-price grid step for the leader oracle
    #[arg(long = "grid-pi", default_value_t = 2e-3)]
    grid_pi: f64,

    /// Wholesale-price grid step for the leader oracle
    #[arg(long = "grid-w", default_value_t = 2e-3)]
    grid_w: f64,
}

impl GridArgs {
    fn resolve(&self) -> Result<GridSpec, String> {
        if self.grid_pe <= 0.0 || self.grid_pi <= 0.0 || self.grid_w <= 0.0 {
            return Err("grid steps must be positive".into());
        }
        Ok(GridSpec {
            step_pe: self.grid_pe,
            step_pi: self.grid_pi,
            step_w: self.grid_w,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Output file (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct ZonesArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    #[arg(long, default_value_t = 0.05)]
    a_min: f64,
    #[arg(long, default_value_t = 0.95)]
    a_max: f64,
    #[arg(long, default_value_t = 50)]
    a_steps: usize,
    #[arg(long, default_value_t = 0.0)]
    gamma1_min: f64,
    /// Upper gamma1 bound (defaults to the spillover budget 1 - gamma2)
    #[arg(long)]
    gamma1_max: Option<f64>,
    #[arg(long, default_value_t = 50)]
    gamma1_steps: usize,

    /// Output file (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    #[command(flatten)]
    grid: GridArgs,

    /// Absolute tolerance on demand quantities
    #[arg(long, default_value_t = 1e-9)]
    tol_demand: f64,

    /// Absolute tolerance on prices
    #[arg(long, default_value_t = 1e-3)]
    tol_price: f64,

    /// Absolute tolerance on profits
    #[arg(long, default_value_t = 1e-3)]
    tol_profit: f64,

    /// Output file for the JSON report (stdout table is always printed)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Deliberately corrupt the closed-form demand (negative control)
    #[arg(long, hide = true)]
    corrupt_demand: bool,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    scenario: &'a ScenarioParams,
    outcome: &'a ose_core::strategy::StrategyOutcome,
    follower: Option<&'a FollowerDecision>,
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| format!("cannot write to stdout: {e}")),
    }
}

fn run_solve(args: &SolveArgs) -> Result<u8, String> {
    if args.format == Format::Csv {
        return Err("solve only emits JSON".into());
    }
    let p = args.scenario.resolve()?;
    let outcome = stage1_decide(&p);
    let follower = outcome
        .decision
        .as_ref()
        .map(|d| follower_best_response(d.p_i_star, d.w_star, &p));
    let report = SolveReport {
        scenario: &p,
        outcome: &outcome,
        follower: follower.as_ref(),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    emit(&args.out, text.as_bytes())?;
    Ok(0)
}

fn run_zones(args: &ZonesArgs) -> Result<u8, String> {
    if args.format == Format::Json {
        return Err("zones only emits CSV".into());
    }
    let mut fixed = args.scenario.resolve()?;
    fixed.k = fixed.k.max(0.0);
    if args.a_steps == 0 || args.gamma1_steps == 0 {
        return Err("axis steps must be at least 1".into());
    }
    let gamma1_max = args.gamma1_max.unwrap_or(1.0 - fixed.gamma2);
    let a_axis = AxisSpec {
        min: args.a_min,
        max: args.a_max,
        steps: args.a_steps,
    };
    let g_axis = AxisSpec {
        min: args.gamma1_min,
        max: gamma1_max,
        steps: args.gamma1_steps,
    };
    if !(a_axis.min > 0.0 && a_axis.max < 1.0 && a_axis.min <= a_axis.max) {
        return Err("A axis must lie within (0, 1)".into());
    }
    if !(g_axis.min >= 0.0 && g_axis.max <= 1.0 - fixed.gamma2 && g_axis.min <= g_axis.max) {
        return Err("gamma1 axis must lie within [0, 1 - gamma2]".into());
    }
    let zm = pareto_sweep(&fixed, a_axis, g_axis);
    let open = zm
        .cells
        .iter()
        .filter(|c| c.outcome.strategy == Strategy::Open)
        .count();
    let mut buf = Vec::new();
    write_csv(&zm, &mut buf).expect("in-memory write");
    emit(&args.out, &buf)?;
    eprintln!(
        "{} cells: {} open, {} closed",
        zm.cells.len(),
        open,
        zm.cells.len() - open
    );
    Ok(0)
}

fn run_verify(args: &VerifyArgs) -> Result<u8, String> {
    let p = args.scenario.resolve()?;
    let grid = args.grid.resolve()?;
    let tol = ToleranceSpec {
        demand: args.tol_demand,
        price: args.tol_price,
        profit: args.tol_profit,
    };
    let corrupt = args.corrupt_demand.then_some(CorruptTarget::Demand);
    let report = verify_scenario_with(&p, &grid, &tol, corrupt).map_err(|e| e.to_string())?;
    print!("{}", report.render());
    if let Some(path) = &args.out {
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(if report.all_pass() { 0 } else { 1 })
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("OSE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| format!("OSE_THREADS must be a nonnegative integer, got {raw:?}"))?;
    if n == 0 {
        return Ok(()); // 0 = auto
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot configure thread pool: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Zones(args) => run_zones(args),
        Command::Verify(args) => run_verify(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

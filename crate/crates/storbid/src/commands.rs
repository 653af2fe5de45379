//! The `storbid` command-line surface.
//!
//! Exit codes are a stable contract: 0 clean, 1 computation error, 2 usage
//! error (from argument parsing), 3 audit window not certified.
//!
//! JSON outputs carry a top-level `schema_version: 1`. Numbers use shortest
//! round-trip formatting, so identical inputs give byte-identical outputs.
//! The env var `STORBID_TOL` overrides the default certification threshold
//! and audit price slack when no flag or config value sets them.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use storbid_core::bid::{
    clear_single_interval, equivalent_withholding, optimal_bid_maker, optimal_bid_taker,
    BidCurve, ClearingOutcome, QuadraticCost, RestOfSystem,
};
use storbid_core::model::{
    DispatchProfile, PriceKind, PriceSeries, StorageSpec, DEFAULT_CLASSIFY_TOL_FRAC,
};
use storbid_core::monitor::{
    audit, counterexample_catalogue, AuditClassification, MonitorOptions, ObservationWindow,
    DEFAULT_PRICE_SLACK,
};
use storbid_core::schedule::{policy_two_interval_maker, policy_two_interval_taker, ScheduleProblem};
use storbid_core::sim::{build_alpha, run_scenario, ScenarioConfig, ScenarioLabel, ScenarioResult};
use storbid_core::solver::{ConvexProgram, SparseRow};

use crate::config::{RunConfig, SpecOverrides, DEFAULT_ALPHA_LEVELS};
use crate::io;

pub const SCHEMA_VERSION: u64 = 1;

/// KKT residual threshold below which a solve reports as certified.
pub const DEFAULT_CERTIFY_TOL: f64 = 1e-6;

/// 24 hourly prices with a morning and an evening peak, an overnight
/// valley, and one negative hour, so every command runs offline.
const SYNTHETIC_DAY: &str = include_str!("../data/synthetic_day.csv");

#[derive(Parser, Debug)]
#[command(
    name = "storbid",
    version,
    about = "Schedule, simulate, and audit an energy storage unit bidding into an electricity market"
)]
pub struct Cli {
    /// Config file, TOML by default or JSON for a .json extension.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the optimal charge/discharge schedule for a price series.
    Schedule(ScheduleArgs),
    /// Run market-power scenarios and report the profit breakdown.
    Simulate(SimulateArgs),
    /// Check an observed dispatch window for capacity withholding.
    Audit(AuditArgs),
    /// Emit single-interval bid curves and their clearing outcomes.
    Bidcurve(BidcurveArgs),
    /// Print the closed-form two-interval dispatch decision.
    Policy(PolicyArgs),
    /// Write the audit counterexample catalogue as CSV fixtures.
    Fixtures(FixturesArgs),
}

/// Storage parameters; any flag given here outranks the config file.
#[derive(Args, Debug, Clone, Default)]
pub struct SpecArgs {
    /// Power rating, MW.
    #[arg(long, value_name = "MW")]
    pub pbar: Option<f64>,
    /// Energy capacity, MWh.
    #[arg(long, value_name = "MWH")]
    pub energy: Option<f64>,
    /// One-way conversion efficiency in (0, 1].
    #[arg(long, value_name = "ETA")]
    pub eta: Option<f64>,
    /// Initial state of charge, MWh (default: half the energy capacity).
    #[arg(long, value_name = "MWH")]
    pub soc_init: Option<f64>,
    /// Terminal state of charge, MWh (default: the initial state).
    #[arg(long, value_name = "MWH")]
    pub soc_terminal: Option<f64>,
    /// Leave the terminal state of charge unconstrained.
    #[arg(long)]
    pub terminal_free: bool,
}

impl SpecArgs {
    fn overrides(&self) -> SpecOverrides {
        SpecOverrides {
            power_cap_mw: self.pbar,
            energy_cap_mwh: self.energy,
            efficiency: self.eta,
            soc_init_mwh: self.soc_init,
            soc_terminal_mwh: self.soc_terminal,
            soc_terminal_free: self.terminal_free,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct ScheduleArgs {
    /// Price CSV (default: the bundled synthetic day).
    #[arg(long, value_name = "FILE")]
    pub prices: Option<PathBuf>,
    /// Price-impact level; 0 solves the pure price-taker problem.
    #[arg(long, default_value_t = 0.0, value_name = "LEVEL")]
    pub alpha_level: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Print the canonical quadratic program as JSON instead of solving.
    #[arg(long)]
    pub dump_program: bool,
    #[command(flatten)]
    pub spec: SpecArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Competitive price CSV (default: the bundled synthetic day).
    #[arg(long, value_name = "FILE")]
    pub prices: Option<PathBuf>,
    /// Price-impact level; repeat for several scenarios (default: 0, 1, 2).
    #[arg(long = "level", value_name = "LEVEL")]
    pub levels: Vec<f64>,
    /// Scheduling horizon in intervals; the series must tile into it.
    #[arg(long, value_name = "N")]
    pub period_length: Option<usize>,
    /// Directory for per-scenario JSON and tidy CSV files.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub spec: SpecArgs,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    /// Observed dispatch CSV with columns interval,p_mwh,b_mwh,price.
    #[arg(long, value_name = "FILE")]
    pub observations: Option<PathBuf>,
    /// Interval length in hours.
    #[arg(long, default_value_t = 1.0, value_name = "H")]
    pub interval_hours: f64,
    /// Audit period length in intervals (default: the whole window).
    #[arg(long, value_name = "N")]
    pub period_length: Option<usize>,
    /// Idle/full classification tolerance as a fraction of the interval cap.
    #[arg(long, value_name = "FRAC")]
    pub classify_tol_frac: Option<f64>,
    /// Additive slack for the price consistency rules, $/MWh.
    #[arg(long, value_name = "USD")]
    pub price_slack: Option<f64>,
    /// Also write the verdict JSON here.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub spec: SpecArgs,
}

#[derive(Args, Debug)]
pub struct BidcurveArgs {
    /// Quadratic cost coefficient, $/MWh per MWh.
    #[arg(long, default_value_t = 0.5)]
    pub c2: f64,
    /// Linear cost coefficient, $/MWh.
    #[arg(long, default_value_t = 10.0)]
    pub c1: f64,
    /// Price sensitivity felt by the maker, $/MWh per MWh.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Rest-of-system supply slope, MWh per $/MWh.
    #[arg(long, default_value_t = 1.0)]
    pub rest_slope: f64,
    /// Rest-of-system supply at zero price, MWh.
    #[arg(long, default_value_t = 0.0)]
    pub rest_intercept: f64,
    /// Inelastic demand, MWh.
    #[arg(long, default_value_t = 16.0)]
    pub demand: f64,
    /// Sample both curves to a CSV (lambda,taker_mwh,maker_mwh).
    #[arg(long, value_name = "FILE")]
    pub curve_out: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PolicyArgs {
    /// First-interval price, $/MWh.
    #[arg(long, allow_negative_numbers = true)]
    pub l1: f64,
    /// Second-interval price, $/MWh.
    #[arg(long, allow_negative_numbers = true)]
    pub l2: f64,
    /// One-way conversion efficiency in (0, 1].
    #[arg(long, default_value_t = 0.9)]
    pub eta: f64,
    /// Power rating, MW.
    #[arg(long, default_value_t = 2.5)]
    pub pbar: f64,
    /// First-interval price sensitivity, $/MWh per MWh.
    #[arg(long, default_value_t = 0.0)]
    pub alpha1: f64,
    /// Second-interval price sensitivity, $/MWh per MWh.
    #[arg(long, default_value_t = 0.0)]
    pub alpha2: f64,
    /// Interval length in hours.
    #[arg(long, default_value_t = 1.0)]
    pub hours: f64,
}

#[derive(Args, Debug)]
pub struct FixturesArgs {
    /// Directory to create the fixture CSVs and manifest in.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Also generate this many solver-built price-taker windows.
    #[arg(long, default_value_t = 0, value_name = "N")]
    pub random: usize,
    /// Seed for the random windows.
    #[arg(long, default_value_t = 0, value_name = "SEED")]
    pub seed: u64,
    #[command(flatten)]
    pub spec: SpecArgs,
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Schedule(args) => run_schedule(&config, args),
        Command::Simulate(args) => run_simulate(&config, args),
        Command::Audit(args) => run_audit(&config, args),
        Command::Bidcurve(args) => run_bidcurve(args),
        Command::Policy(args) => run_policy(args),
        Command::Fixtures(args) => run_fixtures(&config, args),
    }
}

fn env_tol() -> Result<Option<f64>> {
    let Some(text) = std::env::var_os("STORBID_TOL") else {
        return Ok(None);
    };
    let text = text
        .into_string()
        .map_err(|_| anyhow::anyhow!("STORBID_TOL is not valid UTF-8"))?;
    let value: f64 = text
        .trim()
        .parse()
        .with_context(|| format!("STORBID_TOL {text:?} is not a number"))?;
    if !value.is_finite() || value <= 0.0 {
        bail!("STORBID_TOL must be a positive number, got {text:?}");
    }
    Ok(Some(value))
}

fn load_prices(flag: Option<&Path>, config: &RunConfig, kind: PriceKind) -> Result<PriceSeries> {
    match flag.or(config.paths.prices.as_deref()) {
        Some(path) => io::parse_price_csv(path, kind),
        None => io::parse_price_reader(SYNTHETIC_DAY.as_bytes(), kind)
            .context("parsing the bundled synthetic day"),
    }
}

/// Writes `text` to `out`, or to stdout when no path is given.
fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            std::io::stdout().flush()?;
            Ok(())
        }
    }
}

fn pretty(value: &Value) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn profile_json(profile: &DispatchProfile) -> Value {
    json!({
        "interval_hours": profile.interval_hours,
        "discharge_mwh": profile.discharge,
        "charge_mwh": profile.charge,
        "soc_mwh": profile.soc,
    })
}

/// Non-finite bounds serialize as JSON null, read as "unbounded".
fn program_json(program: &ConvexProgram) -> Value {
    fn rows(rows: &[SparseRow]) -> Vec<Value> {
        rows.iter().map(|r| json!(r.entries)).collect()
    }
    json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "canonical-program",
        "variable_order": "discharge, charge, net-output, state-of-charge",
        "num_vars": program.num_vars,
        "quadratic_diag": program.quadratic_diag,
        "linear": program.linear,
        "lower": program.lower,
        "upper": program.upper,
        "equalities": rows(&program.equalities),
        "eq_rhs": program.eq_rhs,
        "inequalities": rows(&program.inequalities),
        "ineq_lower": program.ineq_lower,
        "ineq_upper": program.ineq_upper,
    })
}

fn run_schedule(config: &RunConfig, args: ScheduleArgs) -> Result<ExitCode> {
    let spec = config.storage_spec(&args.spec.overrides())?;
    let prices = load_prices(args.prices.as_deref(), config, PriceKind::Forecast)?;
    let alpha = build_alpha(&prices, args.alpha_level)?;
    let problem = ScheduleProblem::maker(prices.clone(), alpha.clone(), spec)?;

    if args.dump_program {
        let text = pretty(&program_json(&problem.canonical_program()))?;
        return emit(&text, args.out.as_deref()).map(|_| ExitCode::SUCCESS);
    }

    let solution = problem.solve()?;
    let text = match args.format {
        OutputFormat::Json => {
            let tol = env_tol()?.unwrap_or(DEFAULT_CERTIFY_TOL);
            let cert = &solution.certificate;
            pretty(&json!({
                "schema_version": SCHEMA_VERSION,
                "kind": "schedule",
                "role": if args.alpha_level == 0.0 { "taker" } else { "maker" },
                "alpha_level": args.alpha_level,
                "alpha": alpha.values(),
                "prices": prices.values(),
                "forecast_profit_usd": solution.forecast_profit,
                "objective": solution.objective,
                "iterations": solution.iterations,
                "certified": cert.is_certified(tol),
                "certification_tolerance": tol,
                "residuals": {
                    "stationarity": cert.stationarity_residual,
                    "primal": cert.primal_residual,
                    "dual": cert.dual_residual,
                    "complementarity": cert.complementarity_residual,
                },
                "profile": profile_json(&solution.profile),
            }))?
        }
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            io::write_profile_csv(&mut buf, &solution.profile, &prices)?;
            String::from_utf8(buf)?
        }
    };
    emit(&text, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn scenario_config(level: f64, period_length: Option<usize>) -> Result<ScenarioConfig> {
    let standard = [
        ScenarioLabel::NoMarketPower,
        ScenarioLabel::LowMarketPower,
        ScenarioLabel::HighMarketPower,
    ]
    .into_iter()
    .find(|label| label.default_level() == Some(level));
    let config = match standard {
        Some(label) => ScenarioConfig::for_label(label)
            .expect("standard labels always have a default config"),
        None => ScenarioConfig::custom(level)?,
    };
    Ok(match period_length {
        Some(n) => config.with_period_length(n)?,
        None => config,
    })
}

fn scenario_json(result: &ScenarioResult) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "scenario",
        "label": result.label.to_string(),
        "alpha_level": result.alpha_level,
        "interval_hours": result.competitive.interval_hours(),
        "alpha": result.alpha.values(),
        "competitive": result.competitive.values(),
        "nominal": result.nominal.values(),
        "realized": result.realized.values(),
        "benchmark_profit_usd": result.benchmark_profit,
        "taker_profit_usd": result.taker_profit,
        "maker_profit_usd": result.maker_profit,
        "benchmark": profile_json(&result.benchmark),
        "taker": profile_json(&result.taker),
        "maker": result.maker.as_ref().map(profile_json),
        "withheld_mwh": result.withheld,
    })
}

/// File stem for a scenario's outputs; custom levels get the level spelled
/// out so two custom runs cannot collide.
fn scenario_stem(result: &ScenarioResult) -> String {
    match result.label {
        ScenarioLabel::Custom => format!("custom-{}", result.alpha_level),
        label => label.to_string(),
    }
}

fn run_simulate(config: &RunConfig, args: SimulateArgs) -> Result<ExitCode> {
    let spec = config.storage_spec(&args.spec.overrides())?;
    let prices = load_prices(args.prices.as_deref(), config, PriceKind::Forecast)?;
    let levels = if args.levels.is_empty() {
        config
            .scenario
            .alpha_levels
            .clone()
            .unwrap_or_else(|| DEFAULT_ALPHA_LEVELS.to_vec())
    } else {
        args.levels.clone()
    };
    let period = args.period_length.or(config.scenario.period_length);
    let out_dir = args.out_dir.as_deref().or(config.paths.output_dir.as_deref());

    let mut results = Vec::with_capacity(levels.len());
    for &level in &levels {
        let scenario = scenario_config(level, period)?;
        results.push(run_scenario(&prices, &spec, &scenario)?);
    }

    let mut table = String::new();
    writeln!(
        table,
        "{:<18} {:>6} {:>16} {:>16}",
        "scenario", "alpha", "price_taker_usd", "price_maker_usd"
    )?;
    for result in &results {
        let maker = match result.maker_profit {
            Some(profit) => format!("{profit:.2}"),
            None => String::from("--"),
        };
        writeln!(
            table,
            "{:<18} {:>6} {:>16.2} {:>16}",
            result.label.to_string(),
            result.alpha_level,
            result.taker_profit,
            maker
        )?;
    }
    print!("{table}");

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
        let mut summary = Vec::new();
        for result in &results {
            let stem = scenario_stem(result);
            emit(&pretty(&scenario_json(result))?, Some(&dir.join(format!("{stem}.json"))))?;
            let mut buf = Vec::new();
            io::write_tidy_csv(&mut buf, result)?;
            emit(&String::from_utf8(buf)?, Some(&dir.join(format!("{stem}_tidy.csv"))))?;
            summary.push(json!({
                "label": result.label.to_string(),
                "alpha_level": result.alpha_level,
                "benchmark_profit_usd": result.benchmark_profit,
                "taker_profit_usd": result.taker_profit,
                "maker_profit_usd": result.maker_profit,
            }));
        }
        let summary = json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "simulate-summary",
            "scenarios": summary,
        });
        emit(&pretty(&summary)?, Some(&dir.join("summary.json")))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_audit(config: &RunConfig, args: AuditArgs) -> Result<ExitCode> {
    // The terminal pin constrains planning, not observation; the audit spec
    // keeps only the physical parameters.
    let mut spec = config.storage_spec(&args.spec.overrides())?;
    spec.soc_terminal = None;
    let path = match args.observations.as_deref().or(config.paths.observations.as_deref()) {
        Some(path) => path.to_path_buf(),
        None => bail!("audit needs --observations or [paths] observations in the config"),
    };
    let records = io::parse_observation_csv(&path)?;
    let profile = DispatchProfile::from_dispatch(
        records.discharge,
        records.charge,
        &spec,
        args.interval_hours,
    )?;
    let prices = PriceSeries::new(records.prices, PriceKind::Realized, args.interval_hours)?;
    let period = args
        .period_length
        .or(config.monitor.period_length)
        .unwrap_or(profile.len());
    let window = ObservationWindow::new(profile, prices, spec, period)?;

    let env = env_tol()?;
    let options = MonitorOptions {
        classify_tol_frac: args
            .classify_tol_frac
            .or(config.monitor.classify_tol_frac)
            .unwrap_or(DEFAULT_CLASSIFY_TOL_FRAC),
        price_slack: args
            .price_slack
            .or(config.monitor.price_slack)
            .or(env)
            .unwrap_or(DEFAULT_PRICE_SLACK),
    };
    let verdict = audit(&window, &options)?;

    let violations: Vec<Value> = verdict
        .violations
        .iter()
        .map(|v| {
            json!({
                "period": v.period,
                "subject": v.subject,
                "withholding": v.withholding,
                "rule": v.rule.to_string(),
                "lhs": v.lhs,
                "rhs": v.rhs,
            })
        })
        .collect();
    let text = pretty(&json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "audit",
        "classification": verdict.classification.to_string(),
        "withholding_count": verdict.withholding_count,
        "nonidle_periods": verdict.nonidle_periods,
        "count_margin": verdict.count_margin,
        "condition1_ok": verdict.condition1_ok,
        "condition2_ok": verdict.condition2_ok,
        "period_length": window.period_length(),
        "periods": window.periods(),
        "price_slack": options.price_slack,
        "classify_tol_frac": options.classify_tol_frac,
        "violations": violations,
    }))?;
    print!("{text}");
    if let Some(out) = &args.out {
        emit(&text, Some(out))?;
    }
    Ok(match verdict.classification {
        AuditClassification::NotEvidentlyExercising => ExitCode::SUCCESS,
        AuditClassification::NotCertified => ExitCode::from(3),
    })
}

fn clearing_json(outcome: &ClearingOutcome) -> Value {
    json!({
        "price_usd_per_mwh": outcome.price,
        "unit_quantity_mwh": outcome.unit_quantity,
        "rest_quantity_mwh": outcome.rest_quantity,
    })
}

fn curve_json(curve: &BidCurve, clearing: &ClearingOutcome) -> Value {
    json!({
        "slope_mwh_per_usd": curve.slope,
        "intercept_usd_per_mwh": curve.intercept,
        "clearing": clearing_json(clearing),
    })
}

fn run_bidcurve(args: BidcurveArgs) -> Result<ExitCode> {
    let cost = QuadraticCost::new(args.c2, args.c1)?;
    let rest = RestOfSystem::new(args.rest_slope, args.rest_intercept, args.demand)?;
    let taker = optimal_bid_taker(&cost);
    let maker = optimal_bid_maker(&cost, args.alpha)?;
    let taker_clearing = clear_single_interval(&taker, &rest)?;
    let maker_clearing = clear_single_interval(&maker, &rest)?;
    let withholding = equivalent_withholding(&taker, &maker, &rest)?;

    let text = pretty(&json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "bidcurve",
        "cost": { "c2": args.c2, "c1": args.c1 },
        "alpha": args.alpha,
        "rest_of_system": {
            "slope": args.rest_slope,
            "intercept": args.rest_intercept,
            "demand_mwh": args.demand,
        },
        "taker": curve_json(&taker, &taker_clearing),
        "maker": curve_json(&maker, &maker_clearing),
        "equivalent_withholding_mwh": withholding,
    }))?;
    emit(&text, args.out.as_deref())?;

    if let Some(path) = &args.curve_out {
        let top = taker_clearing
            .price
            .max(maker_clearing.price)
            .max(args.c1)
            .max(1.0);
        let mut csv = String::from("lambda,taker_mwh,maker_mwh\n");
        for i in 0..=100u32 {
            let lambda = 2.0 * top * f64::from(i) / 100.0;
            writeln!(
                csv,
                "{lambda},{},{}",
                taker.quantity_at(lambda),
                maker.quantity_at(lambda)
            )?;
        }
        emit(&csv, Some(path))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_policy(args: PolicyArgs) -> Result<ExitCode> {
    let cap = args.pbar * args.hours;
    // Energy box sized so it never binds: one interval moves at most
    // cap * eta <= cap of stored energy away from the midpoint.
    let spec = StorageSpec::new(args.pbar, 4.0 * cap, args.eta, 2.0 * cap, Some(2.0 * cap))?;
    let policy = if args.alpha1 == 0.0 && args.alpha2 == 0.0 {
        policy_two_interval_taker(args.l1, args.l2, &spec, args.hours)?
    } else {
        policy_two_interval_maker(args.l1, args.l2, args.alpha1, args.alpha2, &spec, args.hours)?
    };
    let p = &policy.profile.discharge;
    let b = &policy.profile.charge;
    println!(
        "({}, {}, {}, {})",
        display_trim(p[0]),
        display_trim(p[1]),
        display_trim(b[0]),
        display_trim(b[1])
    );
    Ok(ExitCode::SUCCESS)
}

/// Rounds to 12 significant digits so the one-line policy tuple prints
/// without float noise (2.025, not 2.0250000000000004). Display only; file
/// outputs keep full precision.
fn display_trim(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(11 - mag);
    (x * scale).round() / scale
}

fn min_gap(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

fn run_fixtures(config: &RunConfig, args: FixturesArgs) -> Result<ExitCode> {
    let spec = config.storage_spec(&args.spec.overrides())?;
    let catalogue = counterexample_catalogue(&spec)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;

    let write_window = |name: &str, window: &ObservationWindow| -> Result<Value> {
        let path = args.out_dir.join(name);
        let file = File::create(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        io::write_observation_csv(file, window.profile(), window.prices())?;
        Ok(json!({
            "file": name,
            "period_length": window.period_length(),
            "interval_hours": window.prices().interval_hours(),
            "spec": io::spec_summary(window.spec()),
        }))
    };

    let mut entries = Vec::new();
    for entry in &catalogue {
        entries.push(json!({
            "id": entry.id,
            "description": entry.description,
            "taker": write_window(&format!("{}_taker.csv", entry.id), &entry.taker)?,
            "maker": write_window(&format!("{}_maker.csv", entry.id), &entry.maker)?,
        }));
    }

    let mut random_entries = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    for i in 0..args.random {
        let t_len = rng.gen_range(3..=12usize);
        let values: Vec<f64> = loop {
            let draw: Vec<f64> = (0..t_len).map(|_| rng.gen_range(1.0..200.0)).collect();
            if min_gap(&draw) > 1e-3 {
                break draw;
            }
        };
        let cap = spec.interval_cap(1.0);
        let energy = 2.0 * t_len as f64 * cap;
        let wspec = StorageSpec::new(
            spec.power_cap,
            energy,
            spec.efficiency,
            energy / 2.0,
            Some(energy / 2.0),
        )?;
        let prices = PriceSeries::hourly(values, PriceKind::Realized)?;
        let solution =
            ScheduleProblem::taker(prices.rekind(PriceKind::Forecast), wspec.clone())?.solve()?;
        let window = ObservationWindow::new(solution.profile, prices, wspec, t_len)?;
        let name = format!("random_taker_{i:03}.csv");
        random_entries.push(write_window(&name, &window)?);
    }

    let manifest = pretty(&json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "fixtures-manifest",
        "spec": io::spec_summary(&spec),
        "seed": args.seed,
        "catalogue": entries,
        "random_takers": random_entries,
    }))?;
    emit(&manifest, Some(&args.out_dir.join("manifest.json")))?;
    println!(
        "wrote {} catalogue windows and {} random windows to {}",
        2 * catalogue.len(),
        args.random,
        args.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

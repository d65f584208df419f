//! Command-line front end. `main.rs` only forwards `std::env::args` here so
//! every command can be driven from tests with in-memory writers.
//!
//! Exit codes: 0 success, 2 invalid input (bad flags, files, books, configs),
//! 3 numerical failure (zero volatility, no root, no convergence).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::clob::{ClobError, OrderBook, Side};
use crate::engine::PassivePolicy;
use crate::horizon::{self, BiasSpec, HorizonError};
use crate::simulator::{self, ScenarioConfig, ScenarioError};
use crate::volatility::{self, Estimator, VolError, VolEstimate};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ethos", version, about = "Equilibrium trading horizon toolkit")]
pub struct Cli {
    /// Trading seconds per year used to convert between seconds and years.
    #[arg(long, global = true, env = "ETHOS_SECONDS_PER_YEAR")]
    pub seconds_per_year: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Liquidity premium and equilibrium horizon for an order against a book.
    Horizon(HorizonArgs),
    /// Static execution schedule over the current horizon, as CSV.
    Schedule(ScheduleArgs),
    /// Run a scenario file and write `run.csv` and `summary.json`.
    Simulate(SimulateArgs),
    /// Estimate volatility from OHLC bars, optionally blended with a term structure.
    EstimateVol(EstimateVolArgs),
}

#[derive(Debug, Args)]
pub struct BookArgs {
    /// Book file with `side,price,qty` rows (`bid`/`ask`).
    #[arg(long)]
    pub book: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub tick_size: f64,
    #[arg(long, default_value_t = 50.0)]
    pub multiplier: f64,
}

#[derive(Debug, Args)]
pub struct OrderArgs {
    #[command(flatten)]
    pub book: BookArgs,
    /// Volatility in price-units per √year.
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub qty: u64,
    #[arg(long)]
    pub side: Side,
    /// Price distance from arrival at which slippage is capped.
    #[arg(long)]
    pub slippage_cap: Option<f64>,
    /// Forward drift per year, used with the slippage cap.
    #[arg(long, default_value_t = 0.0)]
    pub drift: f64,
    /// Upper bound on the horizon, seconds.
    #[arg(long)]
    pub max_horizon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct HorizonArgs {
    #[command(flatten)]
    pub order: OrderArgs,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub order: OrderArgs,
    /// Gamma position in ATM-gamma units; nonzero gives the hyperbolic schedule.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub upsilon: f64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the engine's per-decision child order cap.
    #[arg(long)]
    pub max_child_size: Option<u64>,
    /// Enable the passive imbalance hook with this horizon extension factor.
    #[arg(long)]
    pub extension_factor: Option<f64>,
    /// Imbalance threshold for the passive hook.
    #[arg(long, default_value_t = 0.3)]
    pub imbalance_threshold: f64,
}

#[derive(Debug, Args)]
pub struct EstimateVolArgs {
    /// Bars CSV with header `timestamp,open,high,low,close`.
    #[arg(long)]
    pub bars: PathBuf,
    #[arg(long, default_value = "yang-zhang")]
    pub estimator: Estimator,
    /// Term structure CSV with header `tau,sigma` (tau in years).
    #[arg(long, requires = "tenor")]
    pub term: Option<PathBuf>,
    /// Tenor to read from the term structure, seconds.
    #[arg(long)]
    pub tenor: Option<f64>,
    /// Weight on the implied vol in the variance blend.
    #[arg(long, default_value_t = 0.5)]
    pub blend_weight: f64,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl From<ClobError> for CliError {
    fn from(e: ClobError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<HorizonError> for CliError {
    fn from(e: HorizonError) -> Self {
        match e {
            HorizonError::InvalidInput(_) => Self::validation(e.to_string()),
            _ => Self::numerical(e.to_string()),
        }
    }
}

impl From<VolError> for CliError {
    fn from(e: VolError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::validation(e.to_string())
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let spy = match cli.seconds_per_year {
        Some(s) if !(s > 0.0) || !s.is_finite() => {
            return Err(CliError::validation(format!(
                "seconds per year must be positive, got {s}"
            )))
        }
        Some(s) => Some(s),
        None => None,
    };
    match &cli.command {
        Command::Horizon(a) => {
            cmd_horizon(a, spy.unwrap_or(volatility::DEFAULT_SECONDS_PER_YEAR), out)
        }
        Command::Schedule(a) => {
            cmd_schedule(a, spy.unwrap_or(volatility::DEFAULT_SECONDS_PER_YEAR), out)
        }
        Command::Simulate(a) => cmd_simulate(a, spy, out),
        Command::EstimateVol(a) => {
            cmd_estimate_vol(a, spy.unwrap_or(volatility::DEFAULT_SECONDS_PER_YEAR), out)
        }
    }
}

fn load_book(args: &BookArgs) -> Result<OrderBook, CliError> {
    let text = fs::read_to_string(&args.book)
        .map_err(|e| CliError::validation(format!("{}: {e}", args.book.display())))?;
    Ok(OrderBook::parse(&text, args.tick_size, args.multiplier)?)
}

#[derive(Debug, Serialize)]
struct HorizonReport {
    side: Side,
    qty: u64,
    arrival: f64,
    premium_per_lot: f64,
    premium_sum: f64,
    total_cost: f64,
    sigma: f64,
    seconds_per_year: f64,
    t_star_seconds: f64,
    t_star_years: f64,
    equilibrium_seconds: f64,
    slippage_cap: Option<f64>,
    clamped: bool,
}

fn horizon_report(a: &OrderArgs, spy: f64) -> Result<HorizonReport, CliError> {
    if !(a.sigma >= 0.0) || !a.sigma.is_finite() {
        return Err(CliError::validation(format!(
            "sigma must be >= 0, got {}",
            a.sigma
        )));
    }
    let max_years = match a.max_horizon {
        Some(m) if !(m > 0.0) => {
            return Err(CliError::validation(format!(
                "max horizon must be positive, got {m}"
            )))
        }
        Some(m) => m / spy,
        None => f64::INFINITY,
    };
    let book = load_book(&a.book)?;
    let fill = book.sweep_to_fill(a.side, a.qty)?;
    let premium = fill.premium;
    let equilibrium = horizon::equilibrium_horizon(premium, a.sigma, f64::INFINITY)?;
    let t_star = match a.slippage_cap {
        Some(cap) => {
            horizon::slippage_capped_horizon(
                premium,
                a.sigma,
                fill.arrival_price,
                cap,
                a.side,
                a.drift,
            )?
            .t_star
        }
        None => equilibrium,
    };
    Ok(HorizonReport {
        side: a.side,
        qty: a.qty,
        arrival: fill.arrival_price,
        premium_per_lot: premium,
        premium_sum: fill.premium_sum,
        total_cost: fill.total_cost,
        sigma: a.sigma,
        seconds_per_year: spy,
        t_star_seconds: t_star.min(max_years) * spy,
        t_star_years: t_star.min(max_years),
        equilibrium_seconds: equilibrium * spy,
        slippage_cap: a.slippage_cap,
        clamped: t_star > max_years,
    })
}

fn cmd_horizon(a: &HorizonArgs, spy: f64, out: &mut dyn Write) -> Result<(), CliError> {
    let r = horizon_report(&a.order, spy)?;
    writeln!(
        out,
        "L = {} per lot ({} price-units over {} lots)",
        r.premium_per_lot, r.premium_sum, r.qty
    )?;
    writeln!(out, "cost = {:.2}", r.total_cost)?;
    writeln!(
        out,
        "T* = {:.3} s ({:.3} min){}",
        r.t_star_seconds,
        r.t_star_seconds / 60.0,
        if r.clamped { " [clamped]" } else { "" }
    )?;
    writeln!(out, "{}", serde_json::to_string(&r)?)?;
    Ok(())
}

fn cmd_schedule(a: &ScheduleArgs, spy: f64, out: &mut dyn Write) -> Result<(), CliError> {
    let r = horizon_report(&a.order, spy)?;
    let t_star = r.t_star_years;
    if !(t_star > 0.0) {
        return Err(CliError::numerical("horizon is zero: execute immediately"));
    }
    let bias = if a.upsilon != 0.0 {
        Some(BiasSpec::resolve(
            a.upsilon,
            a.order.sigma,
            r.premium_per_lot,
            t_star,
        )?)
    } else {
        None
    };
    let points = horizon::static_schedule(a.order.qty as f64, t_star, bias.as_ref(), a.steps)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let io = |e: csv::Error| CliError::validation(e.to_string());
        w.write_record(["t", "position"]).map_err(io)?;
        for (t, x) in points {
            w.write_record([(t * spy).to_string(), x.to_string()])
                .map_err(io)?;
        }
        w.flush()?;
    }
    match &a.out {
        Some(path) => fs::write(path, &buf)?,
        None => out.write_all(&buf)?,
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs, spy: Option<f64>, out: &mut dyn Write) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.scenario)
        .map_err(|e| CliError::validation(format!("{}: {e}", a.scenario.display())))?;
    let mut cfg: ScenarioConfig = serde_json::from_str(&text)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(s) = spy {
        cfg.seconds_per_year = s;
    }
    if let Some(m) = a.max_child_size {
        cfg.max_child_size = Some(m);
    }
    if let Some(extension) = a.extension_factor {
        cfg.passive = PassivePolicy::ImbalanceExtend {
            threshold: a.imbalance_threshold,
            extension,
            depth_levels: 5,
        };
    }
    if cfg.name.is_empty() {
        cfg.name = scenario_stem(&a.scenario);
    }
    let result = simulator::run_scenario(&cfg)?;
    fs::create_dir_all(&a.out)?;
    let csv_path = a.out.join("run.csv");
    let json_path = a.out.join("summary.json");
    simulator::write_run_csv(&result, fs::File::create(&csv_path)?)?;
    let summary = simulator::summarize(&result);
    let mut body = serde_json::to_string_pretty(&summary)?;
    body.push('\n');
    fs::write(&json_path, body)?;
    for name in &summary.completion_order {
        let m = &summary.models[name];
        match m.completion_time {
            Some(t) => writeln!(out, "{name}: completed at {t} s ({:.1} min)", t / 60.0)?,
            None => writeln!(out, "{name}: incomplete, residual {}", m.residual)?,
        }
    }
    writeln!(
        out,
        "wrote {} and {}",
        csv_path.display(),
        json_path.display()
    )?;
    Ok(())
}

fn scenario_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn cmd_estimate_vol(a: &EstimateVolArgs, spy: f64, out: &mut dyn Write) -> Result<(), CliError> {
    let bars = volatility::read_bars_csv(&a.bars)?;
    let realized = volatility::realized_vol(&bars, a.estimator, spy)?;
    let mut report = json!({ "realized": realized });
    let mut chosen: VolEstimate = realized;
    if let (Some(term), Some(tenor)) = (&a.term, a.tenor) {
        let points = volatility::read_term_csv(term)?;
        let implied = volatility::implied_forward_vol(&points, tenor / spy, spy)?;
        chosen = volatility::blend_sigma(&realized, &implied, a.blend_weight)?;
        report["implied"] = json!(implied);
        report["blended"] = json!(chosen);
    }
    writeln!(out, "sigma = {}", chosen.sigma)?;
    report["sigma"] = json!(chosen.sigma);
    writeln!(out, "{}", serde_json::to_string(&report)?)?;
    Ok(())
}

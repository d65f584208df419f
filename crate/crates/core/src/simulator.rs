//! Seeded market simulation comparing the horizon engine with Almgren-Chriss.
//!
//! A scenario drives one arithmetic Brownian price path and one synthetic
//! order book per time step. Every model trades against the same books with
//! the same displayed-depth sweep fill, and nothing one model does affects
//! what another sees.
//!
//! Random numbers come from `ChaCha8Rng::seed_from_u64(seed)`. Each normal
//! deviate pair is Box-Muller over two uniforms `u = (k + 1)·2⁻⁵³`, where `k` is
//! the top 53 bits of `next_u64()`. The first value of each pair is
//! `√(−2 ln u₁)·cos(2πu₂)` and the second is the matching `sin`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clob::{OrderBook, PriceLevel, Side};
use crate::engine::{
    Engine, EngineConfig, MarketSnapshot, PassivePolicy, PremiumBenchmark, ScheduleMode,
};
use crate::horizon::sinh_ratio;
use crate::volatility::{VolEstimate, DEFAULT_SECONDS_PER_YEAR};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("engine: {0}")]
    Engine(#[from] crate::engine::EngineError),
    #[error("book: {0}")]
    Book(#[from] crate::clob::ClobError),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Deterministic standard normal stream.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Volatility over the scenario, price-units per √year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SigmaPath {
    Constant {
        sigma: f64,
    },
    /// Linear from `start` to `end` over the scenario duration.
    RampUp {
        start: f64,
        end: f64,
    },
    RampDown {
        start: f64,
        end: f64,
    },
}

impl SigmaPath {
    pub fn sigma_at(&self, t: f64, duration: f64) -> f64 {
        match *self {
            SigmaPath::Constant { sigma } => sigma,
            SigmaPath::RampUp { start, end } | SigmaPath::RampDown { start, end } => {
                let u = (t / duration).clamp(0.0, 1.0);
                start + (end - start) * u
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        let ok = |s: f64| s.is_finite() && s >= 0.0;
        match *self {
            SigmaPath::Constant { sigma } if !ok(sigma) => Err("sigma must be >= 0".into()),
            SigmaPath::RampUp { start, end } if !(ok(start) && ok(end) && end >= start) => {
                Err("ramp_up needs 0 <= start <= end".into())
            }
            SigmaPath::RampDown { start, end } if !(ok(start) && ok(end) && end <= start) => {
                Err("ramp_down needs start >= end >= 0".into())
            }
            _ => Ok(()),
        }
    }
}

/// A symmetric ladder: `levels` price levels per side, `depth` contracts each,
/// best bid and ask `spread` ticks apart, one tick between levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderShape {
    pub depth: u64,
    /// Ticks.
    pub spread: u32,
    #[serde(default = "default_levels")]
    pub levels: u32,
}

fn default_levels() -> u32 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LiquidityPath {
    Regular(LadderShape),
    /// During `[time, time + spike_duration)` every distance from the midpoint
    /// (spread and level gaps) is multiplied by `magnitude`, which multiplies
    /// the per-lot premium of any quantity by exactly `magnitude`.
    Spikes {
        base: LadderShape,
        magnitude: u32,
        times: Vec<f64>,
        #[serde(default = "default_spike_duration")]
        spike_duration: f64,
    },
    /// During `[burst_time, burst_time + burst_duration)` the best level on
    /// each side holds `burst_depth` contracts.
    Burst {
        base: LadderShape,
        burst_time: f64,
        burst_depth: u64,
        #[serde(default = "default_burst_duration")]
        burst_duration: f64,
    },
}

fn default_spike_duration() -> f64 {
    60.0
}

fn default_burst_duration() -> f64 {
    30.0
}

impl LiquidityPath {
    fn validate(&self) -> Result<(), String> {
        let shape_ok = |s: &LadderShape| s.depth > 0 && s.spread > 0 && s.levels > 0;
        match self {
            LiquidityPath::Regular(s) if !shape_ok(s) => {
                Err("ladder needs depth, spread, levels > 0".into())
            }
            LiquidityPath::Spikes {
                base,
                magnitude,
                spike_duration,
                ..
            } if !shape_ok(base) || *magnitude == 0 || !(*spike_duration > 0.0) => {
                Err("spikes need a valid base, magnitude >= 1 and duration > 0".into())
            }
            LiquidityPath::Burst {
                base,
                burst_depth,
                burst_duration,
                ..
            } if !shape_ok(base) || *burst_depth == 0 || !(*burst_duration > 0.0) => {
                Err("burst needs a valid base, depth > 0 and duration > 0".into())
            }
            _ => Ok(()),
        }
    }
}

/// Build the synthetic book at time `t` around `price` (rounded to the tick grid).
pub fn synth_book(
    price: f64,
    liquidity: &LiquidityPath,
    t: f64,
    tick_size: f64,
    multiplier: f64,
) -> Result<OrderBook, ScenarioError> {
    let (shape, scale, best_depth) = match liquidity {
        LiquidityPath::Regular(s) => (*s, 1u32, s.depth),
        LiquidityPath::Spikes {
            base,
            magnitude,
            times,
            spike_duration,
        } => {
            let spiking = times.iter().any(|&s| t >= s && t < s + spike_duration);
            (*base, if spiking { *magnitude } else { 1 }, base.depth)
        }
        LiquidityPath::Burst {
            base,
            burst_time,
            burst_depth,
            burst_duration,
        } => {
            let bursting = t >= *burst_time && t < burst_time + burst_duration;
            (*base, 1, if bursting { *burst_depth } else { base.depth })
        }
    };
    let center = (price / tick_size).round() as i64;
    let spread = (shape.spread * scale) as i64;
    let gap = scale as i64;
    let best_bid = center - spread / 2;
    let best_ask = best_bid + spread;
    let level = |i: u32, best: i64, dir: i64| PriceLevel {
        price_ticks: best + dir * gap * i as i64,
        quantity: if i == 0 { best_depth } else { shape.depth },
    };
    let bids = (0..shape.levels).map(|i| level(i, best_bid, -1)).collect();
    let asks = (0..shape.levels).map(|i| level(i, best_ask, 1)).collect();
    Ok(OrderBook::from_ticks(tick_size, multiplier, bids, asks)?)
}

/// Euler path `S_{n+1} = S_n + μS_n·Δ + σ_n√Δ·ξ_n` with Δ = `dt / seconds_per_year`.
/// Returns `⌈duration/dt⌉ + 1` prices starting at `s0`.
pub fn abm_path(
    seed: u64,
    s0: f64,
    sigma_path: &SigmaPath,
    drift_mu: f64,
    duration: f64,
    dt: f64,
    seconds_per_year: f64,
) -> Vec<f64> {
    let steps = (duration / dt).ceil() as usize;
    let dt_yr = dt / seconds_per_year;
    let sqrt_dt = dt_yr.sqrt();
    let mut normals = NormalStream::new(seed);
    let mut path = Vec::with_capacity(steps + 1);
    let mut s = s0;
    path.push(s);
    for n in 0..steps {
        let sigma = sigma_path.sigma_at(n as f64 * dt, duration);
        s += drift_mu * s * dt_yr + sigma * sqrt_dt * normals.next_normal();
        path.push(s);
    }
    path
}

/// Almgren-Chriss urgency `κ = √(λσ²/η)`, 1/years.
pub fn ac_kappa(risk_aversion: f64, sigma: f64, eta: f64) -> f64 {
    (risk_aversion * sigma * sigma / eta).sqrt()
}

/// Remaining position at `t` of the AC program that holds `x_anchor` at
/// `t_anchor` and finishes at `horizon` (all in years).
pub fn ac_position(x_anchor: f64, kappa: f64, t_anchor: f64, horizon: f64, t: f64) -> f64 {
    if t >= horizon {
        return 0.0;
    }
    let total = horizon - t_anchor;
    let left = horizon - t;
    if kappa * total < 1e-9 {
        x_anchor * left / total
    } else {
        x_anchor * sinh_ratio(kappa * left, kappa * total)
    }
}

/// Static AC trajectory `x_j = x0·sinh(κ(T − t_j))/sinh(κT)` on a grid of step
/// `dt`, times in seconds. `risk_aversion = 0` is the linear (TWAP) program.
pub fn ac2000_static(
    x0: f64,
    duration: f64,
    risk_aversion: f64,
    sigma: f64,
    eta: f64,
    dt: f64,
    seconds_per_year: f64,
) -> Vec<(f64, f64)> {
    let kappa = ac_kappa(risk_aversion, sigma, eta);
    let horizon = duration / seconds_per_year;
    grid(duration, dt)
        .map(|t| {
            (
                t,
                ac_position(x0, kappa, 0.0, horizon, t / seconds_per_year),
            )
        })
        .collect()
}

/// Piecewise AC: every `reoptimize_interval` seconds the static program is
/// re-solved for the remaining quantity and time using `sigma_at(t)`.
#[allow(clippy::too_many_arguments)]
pub fn ac2000_piecewise(
    x0: f64,
    duration: f64,
    risk_aversion: f64,
    sigma_at: impl Fn(f64) -> f64,
    eta: f64,
    dt: f64,
    reoptimize_interval: f64,
    seconds_per_year: f64,
) -> Vec<(f64, f64)> {
    let mut planner = AcPlanner::new(
        x0,
        duration,
        risk_aversion,
        eta,
        reoptimize_interval,
        seconds_per_year,
    );
    grid(duration, dt)
        .map(|t| {
            let x = planner.target(t, None, sigma_at(t));
            (t, x)
        })
        .collect()
}

fn grid(duration: f64, dt: f64) -> impl Iterator<Item = f64> {
    let steps = (duration / dt).ceil() as usize;
    (0..=steps).map(move |i| (i as f64 * dt).min(duration))
}

/// Stateful AC planner shared by the pure trajectory functions and the
/// simulator. Without re-optimization it is the static program.
#[derive(Debug, Clone)]
pub struct AcPlanner {
    duration: f64,
    risk_aversion: f64,
    eta: f64,
    interval: Option<f64>,
    seconds_per_year: f64,
    anchor: Option<(f64, f64, f64)>,
    last_target: f64,
}

impl AcPlanner {
    pub fn new(
        x0: f64,
        duration: f64,
        risk_aversion: f64,
        eta: f64,
        reoptimize_interval: f64,
        seconds_per_year: f64,
    ) -> Self {
        Self {
            duration,
            risk_aversion,
            eta,
            interval: (reoptimize_interval < duration).then_some(reoptimize_interval),
            seconds_per_year,
            anchor: None,
            last_target: x0,
        }
    }

    pub fn static_plan(
        x0: f64,
        duration: f64,
        risk_aversion: f64,
        eta: f64,
        seconds_per_year: f64,
    ) -> Self {
        Self::new(
            x0,
            duration,
            risk_aversion,
            eta,
            f64::INFINITY,
            seconds_per_year,
        )
    }

    /// Continuous target at `t` seconds. `position` is the actually held
    /// quantity used when re-anchoring (defaults to the last target).
    pub fn target(&mut self, t: f64, position: Option<f64>, sigma: f64) -> f64 {
        let resolve = match (self.anchor, self.interval) {
            (None, _) => true,
            (Some((t0, _, _)), Some(iv)) => t - t0 >= iv - 1e-9,
            (Some(_), None) => false,
        };
        let spy = self.seconds_per_year;
        if resolve {
            let x = position.unwrap_or_else(|| match self.anchor {
                Some((t0, xa, k)) => ac_position(xa, k, t0 / spy, self.duration / spy, t / spy),
                None => self.last_target,
            });
            let kappa = ac_kappa(self.risk_aversion, sigma, self.eta);
            self.anchor = Some((t, x, kappa));
        }
        let (t0, x_anchor, kappa) = self.anchor.expect("anchored above");
        let x = ac_position(x_anchor, kappa, t0 / spy, self.duration / spy, t / spy);
        self.last_target = x;
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Baseline {
    Ac2000Static {
        risk_aversion: f64,
    },
    Ac2000Piecewise {
        risk_aversion: f64,
        reoptimize_interval: f64,
    },
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Ac2000Static { .. } => "ac2000_static",
            Baseline::Ac2000Piecewise { .. } => "ac2000_piecewise",
        }
    }
}

fn default_dt() -> f64 {
    1.0
}

fn default_spy() -> f64 {
    DEFAULT_SECONDS_PER_YEAR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    /// Seconds.
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub x0: u64,
    pub side: Side,
    /// Initial mid price.
    pub s0: f64,
    pub tick_size: f64,
    pub multiplier: f64,
    #[serde(default = "default_spy")]
    pub seconds_per_year: f64,
    pub sigma_path: SigmaPath,
    pub liquidity_path: LiquidityPath,
    #[serde(default)]
    pub drift_mu: f64,
    pub schedule: ScheduleMode,
    /// Seconds.
    pub max_horizon: f64,
    #[serde(default)]
    pub benchmark: PremiumBenchmark,
    #[serde(default)]
    pub passive: PassivePolicy,
    #[serde(default)]
    pub max_child_size: Option<u64>,
    #[serde(default)]
    pub baselines: Vec<Baseline>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return bad("duration must be positive".into());
        }
        if !(self.dt > 0.0) || self.dt > self.duration {
            return bad("dt must be positive and at most the duration".into());
        }
        if self.x0 == 0 {
            return bad("x0 must be positive".into());
        }
        if !(self.tick_size > 0.0) || !(self.multiplier > 0.0) {
            return bad("tick_size and multiplier must be positive".into());
        }
        if !(self.seconds_per_year > 0.0) {
            return bad("seconds_per_year must be positive".into());
        }
        if !(self.s0 > 0.0) || !self.s0.is_finite() {
            return bad("s0 must be positive".into());
        }
        if !(self.max_horizon > 0.0) {
            return bad("max_horizon must be positive".into());
        }
        if !self.drift_mu.is_finite() {
            return bad("drift_mu must be finite".into());
        }
        self.sigma_path.validate().or_else(bad)?;
        self.liquidity_path.validate().or_else(bad)?;
        for b in &self.baselines {
            match *b {
                Baseline::Ac2000Static { risk_aversion } if !(risk_aversion >= 0.0) => {
                    return bad("risk_aversion must be >= 0".into())
                }
                Baseline::Ac2000Piecewise {
                    risk_aversion,
                    reoptimize_interval,
                } if !(risk_aversion >= 0.0) || !(reoptimize_interval > 0.0) => {
                    return bad("piecewise needs risk_aversion >= 0 and interval > 0".into())
                }
                _ => {}
            }
        }
        self.engine_config().validate()?;
        Ok(())
    }

    pub fn engine_config(&self) -> EngineConfig {
        let mut cfg = EngineConfig::new(self.side, self.x0, self.max_horizon, self.schedule);
        cfg.benchmark = self.benchmark;
        cfg.drift_mu = self.drift_mu;
        cfg.passive = self.passive;
        cfg.max_child_size = self.max_child_size;
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    /// Seconds.
    pub t: f64,
    pub price: f64,
    pub l: f64,
    pub sigma: f64,
    /// Seconds.
    pub t_star: f64,
    pub position: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRun {
    pub model: String,
    pub trajectory: Vec<TrajectoryPoint>,
    /// Seconds; `None` if the position never reached zero.
    pub completion_time: Option<f64>,
    pub residual: u64,
    pub executed: u64,
    /// Currency; positive is a cost versus arrival.
    pub implementation_shortfall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub scenario: String,
    pub seed: u64,
    pub arrival: f64,
    pub eta: f64,
    pub models: Vec<ModelRun>,
}

impl RunResult {
    pub fn model(&self, name: &str) -> Option<&ModelRun> {
        self.models.iter().find(|m| m.model == name)
    }

    pub fn completion(&self, name: &str) -> Option<f64> {
        self.model(name).and_then(|m| m.completion_time)
    }
}

struct Account {
    run: ModelRun,
    position: u64,
}

impl Account {
    fn new(model: &str, x0: u64) -> Self {
        Self {
            run: ModelRun {
                model: model.to_string(),
                trajectory: Vec::new(),
                completion_time: None,
                residual: x0,
                executed: 0,
                implementation_shortfall: 0.0,
            },
            position: x0,
        }
    }

    fn fill(
        &mut self,
        book: &OrderBook,
        side: Side,
        qty: u64,
        arrival: f64,
        t: f64,
    ) -> Result<(), ScenarioError> {
        if qty > 0 {
            let fill = book.sweep_to_fill(side, qty)?;
            self.position -= qty;
            self.run.executed += qty;
            self.run.implementation_shortfall +=
                fill.cost_vs(arrival) * qty as f64 * book.multiplier();
        }
        if self.position == 0 && self.run.completion_time.is_none() {
            self.run.completion_time = Some(t);
        }
        Ok(())
    }

    fn finish(mut self) -> ModelRun {
        self.run.residual = self.position;
        self.run
    }
}

/// Premium per contract against arrival (floored at zero) for `qty` on `book`,
/// over displayed depth when `qty` exceeds it.
fn premium_for(
    book: &OrderBook,
    side: Side,
    qty: u64,
    arrival: f64,
    benchmark: PremiumBenchmark,
) -> f64 {
    if qty == 0 {
        return 0.0;
    }
    match book.sweep_available(side, qty) {
        Ok(f) => match benchmark {
            PremiumBenchmark::Mid => f.premium,
            PremiumBenchmark::Arrival => f.cost_vs(arrival).max(0.0),
        },
        Err(_) => f64::NAN,
    }
}

/// Run the horizon engine and every configured baseline over one seeded market.
///
/// The baselines plan over `max_horizon`, the same deadline the engine is
/// clamped to; `duration` is only the length of the simulated market.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunResult, ScenarioError> {
    config.validate()?;
    let spy = config.seconds_per_year;
    let side = config.side;
    let prices = abm_path(
        config.seed,
        config.s0,
        &config.sigma_path,
        config.drift_mu,
        config.duration,
        config.dt,
        spy,
    );
    let times: Vec<f64> = grid(config.duration, config.dt).collect();
    let books = prices
        .iter()
        .zip(&times)
        .map(|(&p, &t)| {
            synth_book(
                p,
                &config.liquidity_path,
                t,
                config.tick_size,
                config.multiplier,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let arrival = books[0].arrival_price()?;
    let x0 = config.x0;

    // temporary impact calibrated so that trading x0 in one step costs the t=0 sweep
    let l0 = books[0].sweep_available(side, x0)?.premium;
    let eta = (l0 * config.dt / spy / x0 as f64).max(f64::MIN_POSITIVE);

    let mut engine = Engine::with_arrival(config.engine_config(), arrival)?;
    let mut eth = Account::new("eth", x0);
    let mut baselines: Vec<(AcPlanner, Account)> = config
        .baselines
        .iter()
        .map(|b| {
            let planner = match *b {
                Baseline::Ac2000Static { risk_aversion } => {
                    AcPlanner::static_plan(x0 as f64, config.max_horizon, risk_aversion, eta, spy)
                }
                Baseline::Ac2000Piecewise {
                    risk_aversion,
                    reoptimize_interval,
                } => AcPlanner::new(
                    x0 as f64,
                    config.max_horizon,
                    risk_aversion,
                    eta,
                    reoptimize_interval,
                    spy,
                ),
            };
            (planner, Account::new(b.name(), x0))
        })
        .collect();

    for (&t, book) in times.iter().zip(&books) {
        let sigma = config.sigma_path.sigma_at(t, config.duration);
        let mid = book.arrival_price()?;

        let (mut t_star, mut l) = (0.0, 0.0);
        if eth.position > 0 {
            let snap = MarketSnapshot {
                timestamp: t,
                book: book.clone(),
                sigma: VolEstimate::given(sigma, spy),
            };
            let d = engine.on_snapshot(&snap)?;
            eth.fill(book, side, d.delta_to_execute, arrival, t)?;
            t_star = d.t_star_now * spy;
            l = d.l_now;
        }
        eth.run.trajectory.push(TrajectoryPoint {
            t,
            price: mid,
            l,
            sigma,
            t_star,
            position: eth.position,
        });

        for (planner, acct) in baselines.iter_mut() {
            if acct.position > 0 {
                let x = planner.target(t, Some(acct.position as f64), sigma);
                let target = (x.round() as u64).min(acct.position);
                let delta = (acct.position - target).min(book.displayed_depth(side));
                acct.fill(book, side, delta, arrival, t)?;
            }
            acct.run.trajectory.push(TrajectoryPoint {
                t,
                price: mid,
                l: premium_for(book, side, acct.position, arrival, config.benchmark),
                sigma,
                t_star: (config.max_horizon - t).max(0.0),
                position: acct.position,
            });
        }
    }

    let mut models = vec![eth.finish()];
    models.extend(baselines.into_iter().map(|(_, a)| a.finish()));
    Ok(RunResult {
        scenario: config.name.clone(),
        seed: config.seed,
        arrival,
        eta,
        models,
    })
}

/// One row per step per model: `model,t,price,L,sigma,t_star,position`.
/// `t` and `t_star` are seconds.
pub fn write_run_csv<W: Write>(result: &RunResult, out: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "t", "price", "L", "sigma", "t_star", "position"])
        .map_err(csv_io)?;
    for m in &result.models {
        for p in &m.trajectory {
            w.write_record([
                m.model.clone(),
                p.t.to_string(),
                p.price.to_string(),
                p.l.to_string(),
                p.sigma.to_string(),
                p.t_star.to_string(),
                p.position.to_string(),
            ])
            .map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> ScenarioError {
    ScenarioError::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub completion_time: Option<f64>,
    pub residual: u64,
    pub executed: u64,
    pub implementation_shortfall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub arrival: f64,
    pub eta: f64,
    pub models: BTreeMap<String, ModelSummary>,
    /// Model names ordered by completion time; incomplete models last.
    pub completion_order: Vec<String>,
}

pub fn summarize(result: &RunResult) -> RunSummary {
    let models: BTreeMap<String, ModelSummary> = result
        .models
        .iter()
        .map(|m| {
            (
                m.model.clone(),
                ModelSummary {
                    completion_time: m.completion_time,
                    residual: m.residual,
                    executed: m.executed,
                    implementation_shortfall: m.implementation_shortfall,
                },
            )
        })
        .collect();
    let mut order: Vec<&ModelRun> = result.models.iter().collect();
    order.sort_by(|a, b| {
        let key = |m: &ModelRun| m.completion_time.unwrap_or(f64::INFINITY);
        key(a).total_cmp(&key(b))
    });
    RunSummary {
        schema_version: SCHEMA_VERSION,
        scenario: result.scenario.clone(),
        seed: result.seed,
        arrival: result.arrival,
        eta: result.eta,
        models,
        completion_order: order.into_iter().map(|m| m.model.clone()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clob::Side;

    fn regular(depth: u64, spread: u32) -> LiquidityPath {
        LiquidityPath::Regular(LadderShape {
            depth,
            spread,
            levels: 10,
        })
    }

    #[test]
    fn normal_stream_is_reproducible() {
        let mut a = NormalStream::new(7);
        let mut b = NormalStream::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_normal().to_bits(), b.next_normal().to_bits());
        }
        let mut c = NormalStream::new(8);
        assert_ne!(NormalStream::new(7).next_normal(), c.next_normal());
    }

    #[test]
    fn flat_and_drifting_paths() {
        let flat = abm_path(
            1,
            100.0,
            &SigmaPath::Constant { sigma: 0.0 },
            0.0,
            10.0,
            1.0,
            100.0,
        );
        assert_eq!(flat.len(), 11);
        assert!(flat.iter().all(|&p| p == 100.0));
        let drift = abm_path(
            1,
            100.0,
            &SigmaPath::Constant { sigma: 0.0 },
            0.5,
            10.0,
            1.0,
            100.0,
        );
        for (n, p) in drift.iter().enumerate() {
            assert!((p - 100.0 * 1.005f64.powi(n as i32)).abs() < 1e-9);
        }
    }

    #[test]
    fn sigma_ramps() {
        let up = SigmaPath::RampUp {
            start: 1.0,
            end: 3.0,
        };
        assert_eq!(up.sigma_at(0.0, 10.0), 1.0);
        assert_eq!(up.sigma_at(5.0, 10.0), 2.0);
        assert_eq!(up.sigma_at(20.0, 10.0), 3.0);
        assert!(SigmaPath::RampDown {
            start: 1.0,
            end: 3.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn regular_book_pays_half_spread() {
        let book = synth_book(3952.3, &regular(50, 1), 0.0, 0.25, 50.0).unwrap();
        for q in [1, 25, 50] {
            assert_eq!(book.liquidity_premium(Side::Sell, q).unwrap(), 0.125);
            assert_eq!(book.liquidity_premium(Side::Buy, q).unwrap(), 0.125);
        }
        assert_eq!(book.bids().len(), 10);
    }

    #[test]
    fn spikes_scale_premium() {
        let base = LadderShape {
            depth: 7,
            spread: 1,
            levels: 10,
        };
        let path = LiquidityPath::Spikes {
            base,
            magnitude: 3,
            times: vec![100.0],
            spike_duration: 10.0,
        };
        let calm = synth_book(4000.0, &path, 50.0, 0.25, 50.0).unwrap();
        let spiked = synth_book(4000.0, &path, 105.0, 0.25, 50.0).unwrap();
        for q in [1, 10, 33, 70] {
            let s = spiked.sweep_to_fill(Side::Sell, q).unwrap();
            let c = calm.sweep_to_fill(Side::Sell, q).unwrap();
            assert_eq!(s.premium_half_ticks, 3 * c.premium_half_ticks, "q = {q}");
            assert!((s.premium / c.premium - 3.0).abs() < 1e-12);
        }
        let after = synth_book(4000.0, &path, 110.0, 0.25, 50.0).unwrap();
        assert_eq!(after, calm);
    }

    #[test]
    fn burst_cheapens_liquidity() {
        let base = LadderShape {
            depth: 10,
            spread: 2,
            levels: 10,
        };
        let path = LiquidityPath::Burst {
            base,
            burst_time: 60.0,
            burst_depth: 200,
            burst_duration: 30.0,
        };
        let before = synth_book(4000.0, &path, 0.0, 0.25, 50.0).unwrap();
        let during = synth_book(4000.0, &path, 75.0, 0.25, 50.0).unwrap();
        let q = 80;
        assert!(
            during.liquidity_premium(Side::Sell, q).unwrap()
                < before.liquidity_premium(Side::Sell, q).unwrap()
        );
    }

    #[test]
    fn ac_static_shapes() {
        let lin = ac2000_static(100.0, 60.0, 0.0, 50.0, 1e-6, 1.0, 3600.0);
        for &(t, x) in &lin {
            assert!((x - 100.0 * (1.0 - t / 60.0)).abs() < 1e-12);
        }
        // κT = 2 at the midpoint: sinh(1)/sinh(2)
        let spy = 3600.0;
        let horizon = 60.0 / spy;
        let kappa = 2.0 / horizon;
        let (sigma, eta) = (10.0, 1e-3);
        let lambda = kappa * kappa * eta / (sigma * sigma);
        let traj = ac2000_static(1.0, 60.0, lambda, sigma, eta, 1.0, spy);
        assert!((traj[30].1 - 0.324_027_136_831_942_7).abs() < 1e-12);
        assert_eq!(traj[0].1, 1.0);
        assert_eq!(traj.last().unwrap().1, 0.0);
        assert!(traj.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn ac_piecewise_matches_static_when_sigma_constant() {
        let spy = 3600.0;
        let st = ac2000_static(100.0, 600.0, 5e-4, 20.0, 1e-5, 1.0, spy);
        let pw = ac2000_piecewise(100.0, 600.0, 5e-4, |_| 20.0, 1e-5, 1.0, 60.0, spy);
        for (a, b) in st.iter().zip(&pw) {
            assert!(
                (a.1 - b.1).abs() < 1e-12 * 100.0,
                "t {}: {} vs {}",
                a.0,
                a.1,
                b.1
            );
        }
        let long = ac2000_piecewise(100.0, 600.0, 5e-4, |_| 20.0, 1e-5, 1.0, 600.0, spy);
        assert_eq!(long, st);
    }

    #[test]
    fn ac_piecewise_steepens_when_sigma_doubles() {
        let spy = 3600.0;
        let sigma = |t: f64| if t < 300.0 { 20.0 } else { 40.0 };
        let st = ac2000_static(100.0, 600.0, 5e-4, 20.0, 1e-5, 1.0, spy);
        let pw = ac2000_piecewise(100.0, 600.0, 5e-4, sigma, 1e-5, 1.0, 60.0, spy);
        assert_eq!(st[300].1, pw[300].1);
        let slope = |v: &[(f64, f64)]| v[300].1 - v[301].1;
        assert!(slope(&pw) > slope(&st));
        assert!(pw[400].1 < st[400].1);
    }

    #[test]
    fn config_validation() {
        let cfg = ScenarioConfig {
            schema_version: 1,
            name: "t".into(),
            seed: 1,
            duration: 60.0,
            dt: 1.0,
            x0: 10,
            side: Side::Sell,
            s0: 100.0,
            tick_size: 0.25,
            multiplier: 50.0,
            seconds_per_year: DEFAULT_SECONDS_PER_YEAR,
            sigma_path: SigmaPath::Constant { sigma: 10.0 },
            liquidity_path: regular(10, 1),
            drift_mu: 0.0,
            schedule: ScheduleMode::Linear,
            max_horizon: 60.0,
            benchmark: PremiumBenchmark::Arrival,
            passive: PassivePolicy::Disabled,
            max_child_size: None,
            baselines: vec![],
        };
        assert!(cfg.validate().is_ok());
        let mut bad = cfg.clone();
        bad.schema_version = 2;
        assert!(bad.validate().is_err());
        let mut bad = cfg.clone();
        bad.x0 = 0;
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        bad.baselines = vec![Baseline::Ac2000Piecewise {
            risk_aversion: 1.0,
            reoptimize_interval: 0.0,
        }];
        assert!(bad.validate().is_err());
    }
}

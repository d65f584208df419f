//! Per-order execution loop.
//!
//! Each [`MarketSnapshot`] re-prices the liquidity premium for the remaining
//! quantity, recomputes the horizon, evaluates the configured schedule and
//! emits a [`Decision`]. Positions are whole contracts; the schedule target is
//! rounded to the nearest contract and never rises above the current position.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clob::{ClobError, OrderBook, Side};
use crate::horizon::{self, BiasSpec, HorizonError, HorizonState};
use crate::volatility::VolEstimate;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("order is already complete")]
    OrderComplete,
    #[error("snapshot timestamp {got} s is not after previous {previous} s")]
    NonMonotoneTimestamp { previous: f64, got: f64 },
    #[error("invalid engine config: {0}")]
    InvalidConfig(String),
    #[error("arrival book: {0}")]
    ArrivalBook(#[from] ClobError),
}

#[derive(Debug, Clone)]
pub struct MarketSnapshot {
    /// Seconds since the order started.
    pub timestamp: f64,
    pub book: OrderBook,
    pub sigma: VolEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggression {
    Aggressive,
    Passive,
}

impl Aggression {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggression::Aggressive => "aggressive",
            Aggression::Passive => "passive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    /// Seconds since order start.
    pub timestamp: f64,
    pub side: Side,
    /// Position (remaining to trade) after this decision.
    pub target_position: u64,
    pub delta_to_execute: u64,
    pub aggression: Aggression,
    /// Years.
    pub t_star_now: f64,
    pub l_now: f64,
    pub sigma: f64,
    pub reason: String,
}

/// Which schedule turns the horizon into a target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScheduleMode {
    /// Ratcheted linear program.
    Linear,
    /// Gamma-biased hyperbolic program; `upsilon` in units of ATM gamma.
    /// `upsilon = 0` falls back to the linear program.
    Hyperbolic { upsilon: f64 },
    /// Linear program over the horizon implied by an OTM option struck
    /// `cap` price-units beyond arrival.
    SlippageCapped { cap: f64 },
}

/// Reference price the per-contract premium is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PremiumBenchmark {
    /// Signed sweep cost versus the order's arrival price, floored at zero.
    /// A favorable drift cheapens liquidity and shortens the horizon.
    #[default]
    Arrival,
    /// Premium versus the snapshot's own midpoint.
    Mid,
}

/// Microstructure hook. `ImbalanceExtend` is a placeholder rule: when the
/// book leans toward our passive side by more than `threshold`, the decision is
/// marked passive and the horizon is stretched by `extension`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PassivePolicy {
    #[default]
    Disabled,
    ImbalanceExtend {
        threshold: f64,
        extension: f64,
        #[serde(default = "default_imbalance_levels")]
        depth_levels: usize,
    },
}

fn default_imbalance_levels() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub side: Side,
    pub x0: u64,
    /// Seconds.
    pub max_horizon: f64,
    pub schedule: ScheduleMode,
    #[serde(default)]
    pub benchmark: PremiumBenchmark,
    /// Per-year drift used by the slippage-capped horizon.
    #[serde(default)]
    pub drift_mu: f64,
    /// Upper bound on a single decision's quantity.
    #[serde(default)]
    pub max_child_size: Option<u64>,
    /// Minimum seconds between horizon re-evaluations; 0 re-evaluates every snapshot.
    #[serde(default)]
    pub reeval_floor: f64,
    #[serde(default)]
    pub passive: PassivePolicy,
}

impl EngineConfig {
    pub fn new(side: Side, x0: u64, max_horizon: f64, schedule: ScheduleMode) -> Self {
        Self {
            side,
            x0,
            max_horizon,
            schedule,
            benchmark: PremiumBenchmark::default(),
            drift_mu: 0.0,
            max_child_size: None,
            reeval_floor: 0.0,
            passive: PassivePolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::InvalidConfig(m));
        if self.x0 == 0 {
            return bad("x0 must be positive".into());
        }
        if !(self.max_horizon > 0.0) || !self.max_horizon.is_finite() {
            return bad(format!(
                "max_horizon must be positive, got {}",
                self.max_horizon
            ));
        }
        if self.max_child_size == Some(0) {
            return bad("max_child_size must be positive".into());
        }
        if !(self.reeval_floor >= 0.0) {
            return bad("reeval_floor must be >= 0".into());
        }
        match self.schedule {
            ScheduleMode::Hyperbolic { upsilon } if !upsilon.is_finite() => {
                return bad("upsilon must be finite".into())
            }
            ScheduleMode::SlippageCapped { cap } if !(cap > 0.0) => {
                return bad(format!("slippage cap must be positive, got {cap}"))
            }
            _ => {}
        }
        if let PassivePolicy::ImbalanceExtend {
            threshold,
            extension,
            depth_levels,
        } = self.passive
        {
            if !(0.0..=1.0).contains(&threshold) {
                return bad(format!(
                    "imbalance threshold must lie in [0, 1], got {threshold}"
                ));
            }
            if !(extension >= 1.0) {
                return bad(format!("extension factor must be >= 1, got {extension}"));
            }
            if depth_levels == 0 {
                return bad("imbalance depth_levels must be >= 1".into());
            }
        }
        Ok(())
    }
}

/// Apply the microstructure hook to a decision. `Disabled` is the identity.
pub fn passive_hook(snap: &MarketSnapshot, decision: Decision, policy: &PassivePolicy) -> Decision {
    let PassivePolicy::ImbalanceExtend {
        threshold,
        extension,
        depth_levels,
    } = *policy
    else {
        return decision;
    };
    let Ok(imbalance) = snap.book.book_imbalance(depth_levels) else {
        return decision;
    };
    // A seller rests on the offer, which a bid-heavy book tends to lift.
    let lean = match decision.side {
        Side::Sell => imbalance,
        Side::Buy => -imbalance,
    };
    if lean > threshold {
        let mut d = decision;
        d.aggression = Aggression::Passive;
        d.t_star_now *= extension;
        d.reason = format!("{}; passive: imbalance {imbalance:.3}", d.reason);
        d
    } else {
        decision
    }
}

#[derive(Debug, Clone, Copy)]
struct Evaluation {
    timestamp: f64,
    premium: f64,
    t_star: f64,
    partial_depth: bool,
}

/// The loop state for one parent order.
#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    state: HorizonState,
    position: u64,
    last_timestamp: Option<f64>,
    last_eval: Option<Evaluation>,
}

impl Engine {
    /// Start an order; the arrival price is the midpoint of `arrival_book`.
    pub fn new(config: EngineConfig, arrival_book: &OrderBook) -> Result<Self, EngineError> {
        let arrival = arrival_book.arrival_price()?;
        Self::with_arrival(config, arrival)
    }

    pub fn with_arrival(config: EngineConfig, arrival: f64) -> Result<Self, EngineError> {
        config.validate()?;
        let x0 = config.x0 as f64;
        Ok(Self {
            state: HorizonState::new(x0, arrival, 0.0),
            position: config.x0,
            config,
            last_timestamp: None,
            last_eval: None,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn state(&self) -> &HorizonState {
        &self.state
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn arrival(&self) -> f64 {
        self.state.arrival
    }

    pub fn is_complete(&self) -> bool {
        self.position == 0
    }

    fn hold(&self, snap: &MarketSnapshot, reason: String) -> Decision {
        Decision {
            timestamp: snap.timestamp,
            side: self.config.side,
            target_position: self.position,
            delta_to_execute: 0,
            aggression: Aggression::Aggressive,
            t_star_now: self.state.t_star,
            l_now: self.last_eval.map_or(f64::NAN, |e| e.premium),
            sigma: snap.sigma.sigma,
            reason: format!("hold: {reason}"),
        }
    }

    fn evaluate(&self, snap: &MarketSnapshot, max_horizon: f64) -> Result<Evaluation, String> {
        let side = self.config.side;
        let fill = snap
            .book
            .sweep_available(side, self.position)
            .map_err(|e| e.to_string())?;
        let premium = match self.config.benchmark {
            PremiumBenchmark::Mid => fill.premium,
            PremiumBenchmark::Arrival => fill.cost_vs(self.state.arrival).max(0.0),
        };
        let sigma = snap.sigma.sigma;
        let t_star = match self.config.schedule {
            ScheduleMode::SlippageCapped { cap } if premium > 0.0 => {
                if !(sigma > 0.0) {
                    return Err(HorizonError::ZeroVolatility.to_string());
                }
                horizon::slippage_capped_horizon(
                    premium,
                    sigma,
                    self.state.arrival,
                    cap,
                    side,
                    self.config.drift_mu,
                )
                .map_err(|e| e.to_string())?
                .t_star
                .min(max_horizon)
            }
            _ => horizon::equilibrium_horizon(premium, sigma, max_horizon)
                .map_err(|e| e.to_string())?,
        };
        Ok(Evaluation {
            timestamp: snap.timestamp,
            premium,
            t_star,
            partial_depth: fill.filled < self.position,
        })
    }

    /// Process one snapshot. Numerical and book failures produce a hold
    /// decision rather than an error.
    pub fn on_snapshot(&mut self, snap: &MarketSnapshot) -> Result<Decision, EngineError> {
        if self.is_complete() {
            return Err(EngineError::OrderComplete);
        }
        if let Some(prev) = self.last_timestamp {
            if !(snap.timestamp > prev) {
                return Err(EngineError::NonMonotoneTimestamp {
                    previous: prev,
                    got: snap.timestamp,
                });
            }
        }
        self.last_timestamp = Some(snap.timestamp);

        let t = snap.sigma.years(snap.timestamp);
        let max_horizon = snap.sigma.years(self.config.max_horizon);
        self.state.t = t;
        self.state.max_horizon = max_horizon;

        let due = self
            .last_eval
            .is_none_or(|e| snap.timestamp - e.timestamp >= self.config.reeval_floor);
        let eval = if due {
            match self.evaluate(snap, max_horizon) {
                Ok(e) => {
                    self.last_eval = Some(e);
                    e
                }
                Err(reason) => return Ok(self.hold(snap, reason)),
            }
        } else {
            self.last_eval.expect("evaluation exists when not due")
        };

        let mut reason = if eval.partial_depth {
            "premium over displayed depth only".to_string()
        } else {
            String::from("ok")
        };
        if !due {
            reason.push_str("; horizon reused");
        }
        let provisional = Decision {
            timestamp: snap.timestamp,
            side: self.config.side,
            target_position: self.position,
            delta_to_execute: 0,
            aggression: Aggression::Aggressive,
            t_star_now: eval.t_star,
            l_now: eval.premium,
            sigma: snap.sigma.sigma,
            reason,
        };
        let mut decision = passive_hook(snap, provisional, &self.config.passive);
        self.state.t_star = decision.t_star_now;
        self.state.prev_target = self.position as f64;

        let continuous = match self.config.schedule {
            ScheduleMode::Hyperbolic { upsilon } if upsilon != 0.0 && eval.premium > 0.0 => {
                let bias = match BiasSpec::resolve(
                    upsilon,
                    snap.sigma.sigma,
                    eval.premium,
                    self.state.t_star,
                ) {
                    Ok(b) => b,
                    Err(e) => return Ok(self.hold(snap, e.to_string())),
                };
                match horizon::hyperbolic_target(&self.state, &bias) {
                    Ok(x) => x,
                    Err(e) => return Ok(self.hold(snap, e.to_string())),
                }
            }
            _ => horizon::linear_target(&self.state),
        };
        let target = (continuous.round() as u64).min(self.position);

        let mut delta = self.position - target;
        let depth = snap.book.displayed_depth(self.config.side);
        if delta > depth {
            delta = depth;
            decision.reason.push_str("; capped by displayed depth");
        }
        if let Some(max_child) = self.config.max_child_size {
            if delta > max_child {
                delta = max_child;
                decision.reason.push_str("; capped by max child size");
            }
        }
        self.position -= delta;
        self.state.prev_target = self.position as f64;
        decision.target_position = self.position;
        decision.delta_to_execute = delta;
        Ok(decision)
    }
}

/// Write decisions as CSV: `timestamp,L,sigma,t_star,target,executed_delta,aggression`.
/// `t_star` is in seconds on each decision's clock (`seconds_per_year`).
pub fn write_decision_log<W: Write>(
    decisions: &[Decision],
    seconds_per_year: f64,
    out: W,
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "timestamp",
        "L",
        "sigma",
        "t_star",
        "target",
        "executed_delta",
        "aggression",
    ])?;
    for d in decisions {
        w.write_record([
            d.timestamp.to_string(),
            d.l_now.to_string(),
            d.sigma.to_string(),
            (d.t_star_now * seconds_per_year).to_string(),
            d.target_position.to_string(),
            d.delta_to_execute.to_string(),
            d.aggression.as_str().to_string(),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volatility::DEFAULT_SECONDS_PER_YEAR;

    const SPY: f64 = DEFAULT_SECONDS_PER_YEAR;

    /// Bids 10 deep per tick below 100.00, asks mirrored, tick 0.25.
    fn ladder(best_bid: f64, depth_at_best: u64, depth: u64) -> OrderBook {
        let bids: Vec<(f64, u64)> = (0..10)
            .map(|i| {
                (
                    best_bid - 0.25 * i as f64,
                    if i == 0 { depth_at_best } else { depth },
                )
            })
            .collect();
        let asks: Vec<(f64, u64)> = (0..10)
            .map(|i| (best_bid + 0.25 + 0.25 * i as f64, depth))
            .collect();
        OrderBook::new(0.25, 50.0, &bids, &asks).unwrap()
    }

    fn snap(t: f64, book: OrderBook, sigma: f64) -> MarketSnapshot {
        MarketSnapshot {
            timestamp: t,
            book,
            sigma: VolEstimate::given(sigma, SPY),
        }
    }

    fn engine(x0: u64) -> Engine {
        let cfg = EngineConfig::new(Side::Sell, x0, 3600.0, ScheduleMode::Linear);
        Engine::new(cfg, &ladder(100.0, 10, 10)).unwrap()
    }

    #[test]
    fn favorable_move_speeds_up() {
        let mut e = engine(100);
        let first = e
            .on_snapshot(&snap(60.0, ladder(100.0, 10, 10), 150.0))
            .unwrap();
        // market lifts one tick: selling is now cheaper relative to arrival
        let mut control = e.clone();
        let up = e
            .on_snapshot(&snap(120.0, ladder(100.25, 10, 10), 150.0))
            .unwrap();
        let flat = control
            .on_snapshot(&snap(120.0, ladder(100.0, 10, 10), 150.0))
            .unwrap();
        assert!(up.l_now < flat.l_now);
        assert!(up.t_star_now < first.t_star_now);
        assert!(up.delta_to_execute > flat.delta_to_execute);
        assert!(up.delta_to_execute > first.delta_to_execute);
    }

    #[test]
    fn liquidity_block_speeds_up() {
        let mut e = engine(100);
        let before = e
            .on_snapshot(&snap(60.0, ladder(100.0, 10, 10), 150.0))
            .unwrap();
        let after = e
            .on_snapshot(&snap(61.0, ladder(100.0, 30, 10), 150.0))
            .unwrap();
        assert!(after.l_now < before.l_now);
        assert!(after.t_star_now < before.t_star_now);
    }

    #[test]
    fn vol_halving_holds() {
        let mut e = engine(100);
        let book = ladder(100.0, 10, 10);
        let first = e.on_snapshot(&snap(60.0, book.clone(), 150.0)).unwrap();
        assert!(first.delta_to_execute > 0);
        let mut same_vol = e.clone();
        let mut half_vol = e.clone();
        same_vol.config.max_horizon = 1e9;
        half_vol.config.max_horizon = 1e9;
        let second = e.on_snapshot(&snap(61.0, book.clone(), 75.0)).unwrap();
        assert_eq!(second.delta_to_execute, 0);
        assert_eq!(second.target_position, first.target_position);
        // same remaining quantity and book: the horizon scales exactly by 4
        let a = same_vol
            .on_snapshot(&snap(61.0, book.clone(), 150.0))
            .unwrap();
        let b = half_vol.on_snapshot(&snap(61.0, book, 75.0)).unwrap();
        assert_eq!(a.l_now, b.l_now);
        let ratio = b.t_star_now / a.t_star_now;
        assert!((ratio / 4.0 - 1.0).abs() < 1e-12, "ratio {ratio}");
    }

    #[test]
    fn empty_book_holds() {
        let mut e = engine(10);
        let empty = OrderBook::new(0.25, 50.0, &[], &[(100.25, 5)]).unwrap();
        let d = e.on_snapshot(&snap(1.0, empty, 150.0)).unwrap();
        assert_eq!(d.delta_to_execute, 0);
        assert!(d.reason.starts_with("hold"));
        let d = e
            .on_snapshot(&snap(2.0, ladder(100.0, 10, 10), 0.0))
            .unwrap();
        assert!(d.reason.contains("zero volatility"), "{}", d.reason);
    }

    #[test]
    fn timestamps_must_increase_and_complete_orders_reject() {
        let mut e = engine(1);
        e.on_snapshot(&snap(5.0, ladder(100.0, 10, 10), 150.0))
            .unwrap();
        assert!(matches!(
            e.on_snapshot(&snap(5.0, ladder(100.0, 10, 10), 150.0)),
            Err(EngineError::NonMonotoneTimestamp { .. })
        ));
        // a zero-premium book (one lot, favorable) finishes instantly
        let d = e
            .on_snapshot(&snap(6.0, ladder(100.25, 10, 10), 150.0))
            .unwrap();
        assert_eq!(d.target_position, 0);
        assert_eq!(
            e.on_snapshot(&snap(7.0, ladder(100.0, 10, 10), 150.0)),
            Err(EngineError::OrderComplete)
        );
    }

    #[test]
    fn depth_and_child_caps() {
        let mut cfg = EngineConfig::new(Side::Sell, 500, 3600.0, ScheduleMode::Linear);
        cfg.max_child_size = Some(7);
        let mut e = Engine::new(cfg, &ladder(100.0, 10, 10)).unwrap();
        // a big favorable jump zeroes the premium; the child cap binds
        let d = e
            .on_snapshot(&snap(1.0, ladder(105.0, 10, 10), 150.0))
            .unwrap();
        assert_eq!(d.delta_to_execute, 7);
        assert!(d.reason.contains("max child"));

        let cfg = EngineConfig::new(Side::Sell, 500, 3600.0, ScheduleMode::Linear);
        let mut e = Engine::new(cfg, &ladder(100.0, 10, 10)).unwrap();
        let d = e
            .on_snapshot(&snap(1.0, ladder(105.0, 10, 10), 150.0))
            .unwrap();
        assert_eq!(d.delta_to_execute, 100);
        assert_eq!(d.target_position, 400);
        assert!(d.reason.contains("displayed depth"));
    }

    #[test]
    fn reeval_floor_reuses_horizon() {
        let mut cfg = EngineConfig::new(Side::Sell, 100, 3600.0, ScheduleMode::Linear);
        cfg.reeval_floor = 30.0;
        let mut e = Engine::new(cfg, &ladder(100.0, 10, 10)).unwrap();
        let a = e
            .on_snapshot(&snap(1.0, ladder(100.0, 10, 10), 150.0))
            .unwrap();
        let b = e
            .on_snapshot(&snap(2.0, ladder(100.0, 10, 10), 75.0))
            .unwrap();
        assert_eq!(a.t_star_now, b.t_star_now);
        assert!(b.reason.contains("reused"));
        let c = e
            .on_snapshot(&snap(31.0, ladder(100.0, 10, 10), 75.0))
            .unwrap();
        assert_ne!(c.t_star_now, a.t_star_now);
    }

    fn decision(side: Side) -> Decision {
        Decision {
            timestamp: 0.0,
            side,
            target_position: 10,
            delta_to_execute: 1,
            aggression: Aggression::Aggressive,
            t_star_now: 0.001,
            l_now: 0.2,
            sigma: 100.0,
            reason: "ok".into(),
        }
    }

    #[test]
    fn hook_disabled_is_identity() {
        let s = snap(0.0, ladder(100.0, 10, 10), 100.0);
        let d = decision(Side::Sell);
        assert_eq!(passive_hook(&s, d.clone(), &PassivePolicy::Disabled), d);
    }

    #[test]
    fn hook_extends_on_imbalance() {
        // bids 80 vs asks 20 over the top level: imbalance +0.6
        let book = OrderBook::new(0.25, 50.0, &[(100.0, 80)], &[(100.25, 20)]).unwrap();
        let s = snap(0.0, book, 100.0);
        let policy = PassivePolicy::ImbalanceExtend {
            threshold: 0.5,
            extension: 1.25,
            depth_levels: 5,
        };
        let out = passive_hook(&s, decision(Side::Sell), &policy);
        assert_eq!(out.aggression, Aggression::Passive);
        assert!((out.t_star_now - 0.001 * 1.25).abs() < 1e-18);
        // a buyer gains nothing from a bid-heavy book
        let buy = passive_hook(&s, decision(Side::Buy), &policy);
        assert_eq!(buy, decision(Side::Buy));
        let high = PassivePolicy::ImbalanceExtend {
            threshold: 0.7,
            extension: 1.25,
            depth_levels: 5,
        };
        assert_eq!(
            passive_hook(&s, decision(Side::Sell), &high),
            decision(Side::Sell)
        );
    }

    #[test]
    fn config_validation() {
        let mut cfg = EngineConfig::new(Side::Buy, 0, 60.0, ScheduleMode::Linear);
        assert!(cfg.validate().is_err());
        cfg.x0 = 5;
        assert!(cfg.validate().is_ok());
        cfg.schedule = ScheduleMode::SlippageCapped { cap: 0.0 };
        assert!(cfg.validate().is_err());
        cfg.schedule = ScheduleMode::Linear;
        cfg.passive = PassivePolicy::ImbalanceExtend {
            threshold: 0.5,
            extension: 0.9,
            depth_levels: 5,
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn decision_log_columns() {
        let mut buf = Vec::new();
        write_decision_log(&[decision(Side::Sell)], 1000.0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "timestamp,L,sigma,t_star,target,executed_delta,aggression"
        );
        assert_eq!(lines.next().unwrap(), "0,0.2,100,1,10,1,aggressive");
    }
}

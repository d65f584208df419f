//! Equilibrium trading horizon and the schedule families built on it.
//!
//! The horizon is the tenor at which an at-the-money half-straddle is worth
//! the liquidity premium: `T* = 2π(L/σ)²`. Schedules map elapsed time onto a
//! target remaining position and are ratcheted so a liquidation never buys
//! back: `X_t = min(Z_t, X_{t-1})`.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bachelier::{self, OptionKind, PricingError, SpreadSpec};
use crate::clob::Side;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HorizonError {
    #[error("zero volatility: the horizon is unbounded")]
    ZeroVolatility,
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error("liquidity premium must be positive")]
    ZeroLiquidityPremium,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("slippage-capped horizon did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error(transparent)]
    Pricing(#[from] PricingError),
}

/// Per-order schedule state. Times are year fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonState {
    pub x0: f64,
    pub arrival: f64,
    pub t: f64,
    pub t_star: f64,
    pub prev_target: f64,
    pub max_horizon: f64,
}

impl HorizonState {
    pub fn new(x0: f64, arrival: f64, max_horizon: f64) -> Self {
        Self {
            x0,
            arrival,
            t: 0.0,
            t_star: 0.0,
            prev_target: x0,
            max_horizon,
        }
    }
}

/// Gamma bias for the hyperbolic schedule, resolved for the current tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSpec {
    /// Exogenous position in units of ATM gamma (signed).
    pub upsilon: f64,
    /// `P_g / L`.
    pub a_g: f64,
    /// Decay rate, 1/years.
    pub k_t: f64,
}

impl BiasSpec {
    /// Resolve the bias for premium `l` and volatility `sigma_eff` at horizon `t_star`.
    /// The gamma profit is taken over the full horizon, so `a_g = upsilon/π`
    /// whenever `l` is the half-straddle value at `t_star`.
    pub fn resolve(
        upsilon: f64,
        sigma_eff: f64,
        l: f64,
        t_star: f64,
    ) -> Result<Self, HorizonError> {
        let p_g = gamma_profit(upsilon, sigma_eff, t_star);
        let a_g = bias_coefficient(p_g, l)?;
        let k_t = decay_rate(a_g, t_star)?;
        Ok(Self { upsilon, a_g, k_t })
    }
}

/// `min(2π(L/σ)², max_horizon)`.
pub fn equilibrium_horizon(
    premium: f64,
    sigma_eff: f64,
    max_horizon: f64,
) -> Result<f64, HorizonError> {
    if !(max_horizon > 0.0) {
        return Err(HorizonError::InvalidInput(format!(
            "max_horizon must be positive, got {max_horizon}"
        )));
    }
    match bachelier::implied_time_atm(premium, sigma_eff) {
        Ok(t) => Ok(t.min(max_horizon)),
        Err(PricingError::ZeroVolatility) => Err(HorizonError::ZeroVolatility),
        Err(e) => Err(e.into()),
    }
}

/// Spread horizon `2π(L/m)²` with `m` from the leg vols and correlation.
pub fn spread_equilibrium_horizon(
    premium: f64,
    spec: &SpreadSpec,
    max_horizon: f64,
) -> Result<f64, HorizonError> {
    equilibrium_horizon(premium, bachelier::spread_sigma(spec), max_horizon)
}

fn ratchet(z: f64, state: &HorizonState) -> f64 {
    z.min(state.prev_target).clamp(0.0, state.x0)
}

/// Linear target `min(x0·(1 − t/T*), prev_target)` with the current `T*`.
pub fn linear_target(state: &HorizonState) -> f64 {
    if state.t_star <= 0.0 || state.t >= state.t_star {
        return 0.0;
    }
    ratchet(state.x0 * (1.0 - state.t / state.t_star), state)
}

/// Expected gamma profit over `tau`: `Υσ√τ/(√2·π^{3/2})`, i.e. `½ΥΓ·E[dS]²`
/// with ATM gamma.
pub fn gamma_profit(upsilon: f64, sigma_eff: f64, tau: f64) -> f64 {
    upsilon * sigma_eff * tau.sqrt() / (2f64.sqrt() * PI.powf(1.5))
}

/// Spread gamma profit; same closed form with the spread vol `m`.
pub fn spread_gamma_profit(upsilon: f64, spec: &SpreadSpec, tau: f64) -> f64 {
    gamma_profit(upsilon, bachelier::spread_sigma(spec), tau)
}

/// `A_g = P_g / L`. Negative means exogenous gamma cost (trade sooner).
pub fn bias_coefficient(p_g: f64, premium: f64) -> Result<f64, HorizonError> {
    if !(premium > 0.0) {
        return Err(HorizonError::ZeroLiquidityPremium);
    }
    Ok(p_g / premium)
}

/// `k_t = (1 + |A_g|)^{1/ln 2} / T*`.
pub fn decay_rate(a_g: f64, t_star: f64) -> Result<f64, HorizonError> {
    if !(t_star > 0.0) {
        return Err(HorizonError::ZeroHorizon);
    }
    Ok((1.0 + a_g.abs()).powf(1.0 / LN_2) / t_star)
}

/// `sinh(a)/sinh(b)` for 0 ≤ a ≤ b without overflow.
pub(crate) fn sinh_ratio(a: f64, b: f64) -> f64 {
    if b < 20.0 {
        a.sinh() / b.sinh()
    } else {
        (a - b).exp() * (-(-2.0 * a).exp_m1()) / (-(-2.0 * b).exp_m1())
    }
}

/// Un-ratcheted hyperbolic profile as a fraction of x0, `u = t/T*` in [0, 1].
/// `k_t_star` is `k_t·T*`. Sinh for `a_g ≤ 0`, tanh for `a_g > 0`.
pub fn hyperbolic_fraction(a_g: f64, k_t_star: f64, u: f64) -> f64 {
    if u >= 1.0 {
        return 0.0;
    }
    let rem = k_t_star * (1.0 - u.max(0.0));
    if a_g <= 0.0 {
        sinh_ratio(rem, k_t_star)
    } else {
        rem.tanh() / k_t_star.tanh()
    }
}

/// Gamma-biased target. Front-loaded (sinh) when `a_g ≤ 0`, back-loaded (tanh)
/// when `a_g > 0`; always ratcheted against `prev_target`.
pub fn hyperbolic_target(state: &HorizonState, bias: &BiasSpec) -> Result<f64, HorizonError> {
    if state.t_star <= 0.0 {
        return Ok(0.0);
    }
    if !(bias.k_t > 0.0) {
        return Err(HorizonError::ZeroHorizon);
    }
    if state.t >= state.t_star {
        return Ok(0.0);
    }
    let z = hyperbolic_fraction(bias.a_g, bias.k_t * state.t_star, state.t / state.t_star);
    Ok(ratchet(state.x0 * z, state))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlippageHorizon {
    /// Years.
    pub t_star: f64,
    pub forward: f64,
    pub strike: f64,
    pub iterations: usize,
}

const FIXED_POINT_MAX_ITER: usize = 50;

/// Horizon at which an out-of-the-money option struck `slippage_cap` beyond
/// arrival (a put below it for sells, a call above it for buys) is worth `L`.
/// With drift the forward `arrival·e^{μτ}` and `τ` are iterated to a fixed point.
pub fn slippage_capped_horizon(
    premium: f64,
    sigma: f64,
    arrival: f64,
    slippage_cap: f64,
    side: Side,
    drift_mu: f64,
) -> Result<SlippageHorizon, HorizonError> {
    if !(slippage_cap > 0.0) || !slippage_cap.is_finite() {
        return Err(HorizonError::InvalidInput(format!(
            "slippage cap must be positive, got {slippage_cap}"
        )));
    }
    if !(premium > 0.0) {
        return Err(HorizonError::ZeroLiquidityPremium);
    }
    if !(sigma > 0.0) {
        return Err(HorizonError::ZeroVolatility);
    }
    let (strike, kind) = match side {
        Side::Sell => (arrival - slippage_cap, OptionKind::Put),
        Side::Buy => (arrival + slippage_cap, OptionKind::Call),
    };
    let solve = |forward: f64| bachelier::implied_time_otm(premium, forward, strike, sigma, kind);
    let mut tau = solve(arrival)?;
    if drift_mu == 0.0 {
        return Ok(SlippageHorizon {
            t_star: tau,
            forward: arrival,
            strike,
            iterations: 0,
        });
    }
    for i in 1..=FIXED_POINT_MAX_ITER {
        let forward = arrival * (drift_mu * tau).exp();
        if !forward.is_finite() {
            // the forward runs away from the strike faster than τ can settle
            return Err(HorizonError::NoConvergence(i));
        }
        let next = solve(forward)?;
        let step = (next - tau).abs();
        tau = next;
        if step <= 1e-14 + 1e-13 * tau {
            return Ok(SlippageHorizon {
                t_star: tau,
                forward,
                strike,
                iterations: i,
            });
        }
    }
    Err(HorizonError::NoConvergence(FIXED_POINT_MAX_ITER))
}

/// Sample a static schedule at `steps + 1` evenly spaced points over `[0, t_star]`.
/// `bias = None` gives the linear program.
pub fn static_schedule(
    x0: f64,
    t_star: f64,
    bias: Option<&BiasSpec>,
    steps: usize,
) -> Result<Vec<(f64, f64)>, HorizonError> {
    let mut state = HorizonState::new(x0, 0.0, t_star.max(f64::MIN_POSITIVE));
    state.t_star = t_star;
    let steps = steps.max(1);
    let mut out = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        state.t = t_star * i as f64 / steps as f64;
        let x = match bias {
            None => linear_target(&state),
            Some(b) => hyperbolic_target(&state, b)?,
        };
        state.prev_target = x;
        out.push((state.t, x));
    }
    Ok(out)
}

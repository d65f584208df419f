//! Normal-model (Bachelier) pricing kernel.
//!
//! Volatilities are in price-units per √year and tenors in year fractions.
//! `d1 = (F - k) / (σ√τ)` throughout; the implied-time inversion works with
//! `z = |F - k| / (σ√τ) = -x`, where `x = (k - F)/(σ√τ)` for an out-of-the-money put.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal::{self, INV_SQRT_2PI};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate inputs: sigma * sqrt(tau) is zero")]
    DegenerateInputs,
    #[error("zero volatility with a positive premium: horizon is unbounded")]
    ZeroVolatility,
    #[error("no implied time: {0}")]
    NoSolution(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingInputs {
    pub forward: f64,
    pub strike: f64,
    pub sigma: f64,
    pub tau: f64,
    pub rate: f64,
}

impl PricingInputs {
    pub fn new(forward: f64, strike: f64, sigma: f64, tau: f64) -> Self {
        Self {
            forward,
            strike,
            sigma,
            tau,
            rate: 0.0,
        }
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }

    fn validate(&self) -> Result<(), PricingError> {
        if !self.forward.is_finite() || !self.strike.is_finite() || !self.rate.is_finite() {
            return Err(PricingError::InvalidInput(
                "forward, strike and rate must be finite".into(),
            ));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(PricingError::InvalidInput(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(PricingError::InvalidInput(format!(
                "tau must be finite and >= 0, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    /// `σ√τ`, the standard deviation of the terminal price.
    pub fn stdev(&self) -> f64 {
        self.sigma * self.tau.sqrt()
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.tau).exp()
    }

    pub fn d1(&self) -> f64 {
        (self.forward - self.strike) / self.stdev()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Greeks {
    pub delta: f64,
    pub gamma: f64,
}

/// Exercise probability and conditional forward of a call, such that
/// `exercise_prob * (conditional_value - k)` is the undiscounted call value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalClaim {
    pub exercise_prob: f64,
    pub conditional_value: f64,
}

/// Volatility inputs of a two-leg spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadSpec {
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
}

impl SpreadSpec {
    pub fn new(sigma1: f64, sigma2: f64, rho: f64) -> Result<Self, PricingError> {
        if !(sigma1 >= 0.0 && sigma2 >= 0.0) || !sigma1.is_finite() || !sigma2.is_finite() {
            return Err(PricingError::InvalidInput(
                "spread leg sigmas must be finite and >= 0".into(),
            ));
        }
        if !(rho.abs() <= 1.0) {
            return Err(PricingError::InvalidInput(format!(
                "correlation must lie in [-1, 1], got {rho}"
            )));
        }
        Ok(Self {
            sigma1,
            sigma2,
            rho,
        })
    }
}

/// Expected absolute move over `tau`: `2σ√τ/√(2π)`, the ATM straddle value.
pub fn expected_move(sigma: f64, tau: f64) -> f64 {
    2.0 * sigma * tau.sqrt() * INV_SQRT_2PI
}

/// ATM half-straddle value `σ√τ/√(2π)`. Works for outright σ and spread m alike.
pub fn half_straddle_value(sigma_eff: f64, tau: f64) -> f64 {
    sigma_eff * tau.sqrt() * INV_SQRT_2PI
}

fn intrinsic(kind: OptionKind, forward: f64, strike: f64) -> f64 {
    match kind {
        OptionKind::Call => (forward - strike).max(0.0),
        OptionKind::Put => (strike - forward).max(0.0),
    }
}

/// European call or put under the normal model.
///
/// When `σ√τ = 0` the discounted intrinsic value is returned.
pub fn vanilla_price(inputs: &PricingInputs, kind: OptionKind) -> Result<f64, PricingError> {
    inputs.validate()?;
    let df = inputs.discount();
    let s = inputs.stdev();
    if s == 0.0 {
        return Ok(df * intrinsic(kind, inputs.forward, inputs.strike));
    }
    let gap = inputs.forward - inputs.strike;
    let d1 = gap / s;
    let g = normal::pdf(d1) * s;
    let undiscounted = match kind {
        OptionKind::Call => gap * normal::cdf(d1) + g,
        OptionKind::Put => -gap * normal::cdf(-d1) + g,
    };
    Ok(df * undiscounted)
}

/// Call delta and gamma.
pub fn greeks(inputs: &PricingInputs) -> Result<Greeks, PricingError> {
    inputs.validate()?;
    let s = inputs.stdev();
    if s == 0.0 {
        return Err(PricingError::DegenerateInputs);
    }
    let df = inputs.discount();
    let d1 = inputs.d1();
    Ok(Greeks {
        delta: df * normal::cdf(d1),
        gamma: df * normal::pdf(d1) / s,
    })
}

/// Spread volatility `m = √(σ₁² + σ₂² − 2ρσ₁σ₂)`.
pub fn spread_sigma(spec: &SpreadSpec) -> f64 {
    let var = spec.sigma1 * spec.sigma1 + spec.sigma2 * spec.sigma2
        - 2.0 * spec.rho * spec.sigma1 * spec.sigma2;
    var.max(0.0).sqrt()
}

/// Spread option on `S_T1 - S_T2` struck at `strike`. Written as
/// `(S_T1 − S_T2 − k)Φ(d) + g`, identical to `m√τ·d·Φ(d) + g`.
pub fn spread_option_price(
    spec: &SpreadSpec,
    spread_forward: f64,
    strike: f64,
    tau: f64,
    rate: f64,
    kind: OptionKind,
) -> Result<f64, PricingError> {
    let inputs =
        PricingInputs::new(spread_forward, strike, spread_sigma(spec), tau).with_rate(rate);
    vanilla_price(&inputs, kind)
}

/// ATM spread half-straddle `e^{−rτ}φ(0)m√τ`.
pub fn spread_option_atm(spec: &SpreadSpec, tau: f64, rate: f64) -> f64 {
    (-rate * tau).exp() * half_straddle_value(spread_sigma(spec), tau)
}

/// Spread gamma `e^{−rτ}φ(d)/(m√τ)`.
pub fn spread_gamma(
    spec: &SpreadSpec,
    spread_forward: f64,
    strike: f64,
    tau: f64,
    rate: f64,
) -> Result<f64, PricingError> {
    let inputs =
        PricingInputs::new(spread_forward, strike, spread_sigma(spec), tau).with_rate(rate);
    Ok(greeks(&inputs)?.gamma)
}

/// Tenor of the ATM half-straddle worth `premium`: `2π(L/σ)²`.
pub fn implied_time_atm(premium: f64, sigma_eff: f64) -> Result<f64, PricingError> {
    if !(premium >= 0.0) || !premium.is_finite() {
        return Err(PricingError::InvalidInput(format!(
            "premium must be finite and >= 0, got {premium}"
        )));
    }
    if !(sigma_eff >= 0.0) || !sigma_eff.is_finite() {
        return Err(PricingError::InvalidInput(format!(
            "sigma must be finite and >= 0, got {sigma_eff}"
        )));
    }
    if premium == 0.0 {
        return Ok(0.0);
    }
    if sigma_eff == 0.0 {
        return Err(PricingError::ZeroVolatility);
    }
    let ratio = premium / sigma_eff;
    Ok(2.0 * std::f64::consts::PI * ratio * ratio)
}

const MAX_ITER: usize = 100;
const RESIDUAL_TOL: f64 = 1e-14;

/// Tenor at which a non-ATM option (r = 0) is worth `option_price`.
///
/// Solves `Φ̃(x) = P/(k − F)` for the out-of-the-money leg on `x < 0`, where
/// `Φ̃(x) = Φ(x) + φ(x)/x` is strictly monotone, then `τ = ((k − F)/(xσ))²`.
/// In-the-money prices are reduced to the OTM counterpart by parity.
/// The root is found with Newton steps on `ln ψ(z)` (`ψ(z) = −Φ̃(−z)`)
/// inside a shrinking bracket, falling back to bisection whenever a step
/// leaves it.
pub fn implied_time_otm(
    option_price: f64,
    forward: f64,
    strike: f64,
    sigma: f64,
    kind: OptionKind,
) -> Result<f64, PricingError> {
    if !forward.is_finite() || !strike.is_finite() || !option_price.is_finite() {
        return Err(PricingError::InvalidInput("inputs must be finite".into()));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(PricingError::InvalidInput(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    let gap = (forward - strike).abs();
    if gap == 0.0 {
        return Err(PricingError::InvalidInput(
            "forward equals strike; use implied_time_atm".into(),
        ));
    }
    let otm_value = option_price - intrinsic(kind, forward, strike);
    if !(otm_value > 0.0) {
        return Err(PricingError::NoSolution(format!(
            "price {option_price} does not exceed intrinsic value {}",
            intrinsic(kind, forward, strike)
        )));
    }
    if sigma == 0.0 {
        return Err(PricingError::ZeroVolatility);
    }
    let z = solve_otm_ratio(otm_value / gap)?;
    let root_stdev = gap / (z * sigma);
    Ok(root_stdev * root_stdev)
}

/// Find z > 0 with ψ(z) = target.
fn solve_otm_ratio(target: f64) -> Result<f64, PricingError> {
    let ln_target = target.ln();
    let h = |z: f64| normal::ln_otm_ratio(z) - ln_target;

    // ψ(0+) = ∞, so h > 0 left of the root and h < 0 right of it.
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while h(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Err(PricingError::NoSolution("price too small to invert".into()));
        }
    }

    let mut z = initial_guess(target).clamp(lo, hi);
    if !(z > lo && z < hi) {
        z = 0.5 * (lo + hi);
    }
    for _ in 0..MAX_ITER {
        let resid = h(z);
        if resid.abs() < RESIDUAL_TOL {
            return Ok(z);
        }
        if resid > 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        // d ln ψ / dz = -φ(z) / (z² ψ(z))
        let psi = normal::otm_ratio(z);
        let slope = if psi > 0.0 {
            -normal::pdf(z) / (z * z * psi)
        } else {
            // ψ underflowed; in the far tail ln ψ ≈ -z²/2 - 3 ln z
            -(z + 3.0 / z)
        };
        let newton = z - resid / slope;
        z = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(z);
        }
    }
    Err(PricingError::NoSolution(format!(
        "no convergence in {MAX_ITER} iterations"
    )))
}

/// Starting point from the two asymptotes of ψ: `φ(0)/z − ½` near zero and
/// `φ(z)/z³` in the tail.
fn initial_guess(target: f64) -> f64 {
    if target > 0.1 {
        INV_SQRT_2PI / (target + 0.5)
    } else {
        let mut z = 2.0_f64;
        for _ in 0..4 {
            let arg = -2.0 * (target * z * z * z / INV_SQRT_2PI).ln();
            z = arg.max(1e-6).sqrt();
        }
        z
    }
}

/// Split a call into exercise probability `Φ(d1)` and conditional forward
/// `F + σ√τ·φ(d1)/Φ(d1)`.
pub fn conditional_claim(inputs: &PricingInputs) -> Result<ConditionalClaim, PricingError> {
    inputs.validate()?;
    let s = inputs.stdev();
    if s == 0.0 {
        return Err(PricingError::DegenerateInputs);
    }
    let d1 = inputs.d1();
    Ok(ConditionalClaim {
        exercise_prob: normal::cdf(d1),
        conditional_value: inputs.forward + s * normal::inverse_mills(d1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn expected_move_values() {
        assert_eq!(expected_move(0.0, 1.0), 0.0);
        assert!((expected_move((2.0 * PI).sqrt(), 1.0) - 2.0).abs() < 1e-15);
        assert!(rel(expected_move(100.0, 0.01), 7.978_845_608_028_654) < 1e-14);
    }

    #[test]
    fn half_straddle_values() {
        assert!((half_straddle_value((2.0 * PI).sqrt(), 1.0) - 1.0).abs() < 1e-15);
        assert!(rel(half_straddle_value(100.0, 0.01), 3.989_422_804_014_327) < 1e-14);
        assert_eq!(
            half_straddle_value(37.0, 0.3),
            0.5 * expected_move(37.0, 0.3)
        );
    }

    #[test]
    fn atm_call_equals_put_equals_half_straddle() {
        let inputs = PricingInputs::new(100.0, 100.0, 20.0, 0.25);
        let c = vanilla_price(&inputs, OptionKind::Call).unwrap();
        let p = vanilla_price(&inputs, OptionKind::Put).unwrap();
        assert_eq!(c, p);
        assert!(rel(c, half_straddle_value(20.0, 0.25)) < 1e-15);
    }

    #[test]
    fn deep_itm_call_tends_to_intrinsic() {
        let inputs = PricingInputs::new(200.0, 100.0, 5.0, 0.04).with_rate(0.05);
        let c = vanilla_price(&inputs, OptionKind::Call).unwrap();
        assert!((c - 100.0 * (-0.05 * 0.04_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn zero_vol_returns_intrinsic() {
        let inputs = PricingInputs::new(100.0, 100.0, 0.0, 0.0);
        assert_eq!(vanilla_price(&inputs, OptionKind::Call).unwrap(), 0.0);
        let inputs = PricingInputs::new(100.0, 98.0, 0.0, 1.0);
        assert_eq!(vanilla_price(&inputs, OptionKind::Call).unwrap(), 2.0);
        assert_eq!(vanilla_price(&inputs, OptionKind::Put).unwrap(), 0.0);
        assert_eq!(greeks(&inputs), Err(PricingError::DegenerateInputs));
    }

    #[test]
    fn negative_inputs_rejected() {
        let inputs = PricingInputs::new(100.0, 100.0, -1.0, 1.0);
        assert!(matches!(
            vanilla_price(&inputs, OptionKind::Call),
            Err(PricingError::InvalidInput(_))
        ));
    }

    #[test]
    fn atm_greeks() {
        let g = greeks(&PricingInputs::new(50.0, 50.0, 8.0, 0.5)).unwrap();
        assert_eq!(g.delta, 0.5);
        assert!(rel(g.gamma, 1.0 / ((2.0 * PI).sqrt() * 8.0 * 0.5_f64.sqrt())) < 1e-15);
    }

    #[test]
    fn spread_sigma_cases() {
        assert_eq!(spread_sigma(&SpreadSpec::new(7.0, 0.0, 0.3).unwrap()), 7.0);
        assert_eq!(spread_sigma(&SpreadSpec::new(4.0, 4.0, 1.0).unwrap()), 0.0);
        assert_eq!(spread_sigma(&SpreadSpec::new(3.0, 4.0, 0.0).unwrap()), 5.0);
        assert!(SpreadSpec::new(1.0, 1.0, 1.5).is_err());
        assert!(SpreadSpec::new(-1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn spread_atm_values() {
        let outright = SpreadSpec::new(12.0, 0.0, 0.4).unwrap();
        assert_eq!(
            spread_option_atm(&outright, 0.1, 0.0),
            half_straddle_value(12.0, 0.1)
        );
        let locked = SpreadSpec::new(3.0, 3.0, 1.0).unwrap();
        assert_eq!(spread_option_atm(&locked, 0.1, 0.0), 0.0);
        let spec = SpreadSpec::new(2.0, 1.0, 0.5).unwrap();
        assert!(rel(spread_option_atm(&spec, 0.25, 0.0), 0.345_494_149_471_335_5) < 1e-14);
        let priced = spread_option_price(&spec, 1.5, 1.5, 0.25, 0.0, OptionKind::Call).unwrap();
        assert!(rel(priced, 0.345_494_149_471_335_5) < 1e-14);
    }

    #[test]
    fn implied_time_atm_cases() {
        assert_eq!(implied_time_atm(0.0, 5.0).unwrap(), 0.0);
        let sigma = 13.0;
        assert!(
            rel(
                implied_time_atm(sigma / (2.0 * PI).sqrt(), sigma).unwrap(),
                1.0
            ) < 1e-15
        );
        let h = half_straddle_value(100.0, 0.01);
        assert!(rel(implied_time_atm(h, 100.0).unwrap(), 0.01) < 1e-12);
        assert_eq!(
            implied_time_atm(1.0, 0.0),
            Err(PricingError::ZeroVolatility)
        );
        assert_eq!(implied_time_atm(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn implied_time_otm_put_round_trip() {
        let put = vanilla_price(
            &PricingInputs::new(100.0, 101.0, 5.0, 0.04),
            OptionKind::Put,
        )
        .unwrap();
        // that put is in the money: k > F
        let tau = implied_time_otm(put, 100.0, 101.0, 5.0, OptionKind::Put).unwrap();
        assert!(rel(tau, 0.04) < 1e-8);
        let otm_put = vanilla_price(
            &PricingInputs::new(101.0, 100.0, 5.0, 0.04),
            OptionKind::Put,
        )
        .unwrap();
        let tau = implied_time_otm(otm_put, 101.0, 100.0, 5.0, OptionKind::Put).unwrap();
        assert!(rel(tau, 0.04) < 1e-12);
    }

    #[test]
    fn implied_time_otm_small_price_gives_small_tau() {
        let mut prev = f64::INFINITY;
        for p in [1e-2, 1e-4, 1e-8, 1e-16, 1e-64, 1e-300] {
            let tau = implied_time_otm(p, 100.0, 99.0, 5.0, OptionKind::Put).unwrap();
            assert!(tau < prev);
            prev = tau;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn implied_time_otm_errors() {
        assert!(matches!(
            implied_time_otm(0.0, 100.0, 99.0, 5.0, OptionKind::Put),
            Err(PricingError::NoSolution(_))
        ));
        // ITM put: below intrinsic
        assert!(matches!(
            implied_time_otm(0.5, 100.0, 101.0, 5.0, OptionKind::Put),
            Err(PricingError::NoSolution(_))
        ));
        assert_eq!(
            implied_time_otm(0.5, 100.0, 99.0, 0.0, OptionKind::Put),
            Err(PricingError::ZeroVolatility)
        );
        assert!(matches!(
            implied_time_otm(0.5, 100.0, 100.0, 1.0, OptionKind::Put),
            Err(PricingError::InvalidInput(_))
        ));
    }

    #[test]
    fn conditional_claim_atm_and_deep_itm() {
        let inputs = PricingInputs::new(100.0, 100.0, 10.0, 0.25);
        let claim = conditional_claim(&inputs).unwrap();
        assert_eq!(claim.exercise_prob, 0.5);
        assert!(rel(claim.conditional_value, 100.0 + 5.0 * INV_SQRT_2PI / 0.5) < 1e-15);

        let deep = conditional_claim(&PricingInputs::new(150.0, 100.0, 10.0, 0.25)).unwrap();
        assert!((deep.exercise_prob - 1.0).abs() < 1e-15);
        assert!((deep.conditional_value - 150.0).abs() < 1e-12);

        // far OTM stays finite
        let far = conditional_claim(&PricingInputs::new(100.0, 300.0, 10.0, 0.25)).unwrap();
        assert!(far.conditional_value.is_finite() && far.conditional_value > 300.0);
    }
}

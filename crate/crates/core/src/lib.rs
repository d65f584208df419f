//! Equilibrium trading horizon for arrival-price execution.
//!
//! An aggressive order pays a liquidity premium `L` to trade now; working it
//! over time exposes it to variance instead. Pricing that variance as an
//! at-the-money half-straddle under the normal (Bachelier) model and solving
//! for the tenor where the two are equal gives the horizon `T* = 2π(L/σ)²`.
//!
//! Modules, bottom-up:
//!
//! - [`clob`]: order book snapshots, sweep-to-fill, liquidity premium.
//! - [`normal`] and [`bachelier`]: normal-model pricing, greeks, spread
//!   volatility and implied-time inversions.
//! - [`volatility`]: dollar volatility from bars and option term structures.
//! - [`horizon`]: the horizon itself and the linear / hyperbolic schedules.
//! - [`engine`]: the per-order loop that turns market snapshots into decisions.
//! - [`simulator`]: seeded scenarios comparing the engine with Almgren-Chriss.
//! - [`cli`]: the command implementations behind the `ethos` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bachelier;
pub mod cli;
pub mod clob;
pub mod engine;
pub mod horizon;
pub mod normal;
pub mod simulator;
pub mod volatility;

pub use bachelier::{OptionKind, PricingError, PricingInputs, SpreadSpec};
pub use clob::{ClobError, OrderBook, PriceLevel, Side, SweepFill};
pub use horizon::{BiasSpec, HorizonError, HorizonState};
pub use volatility::{Bar, Estimator, VolError, VolEstimate, DEFAULT_SECONDS_PER_YEAR};

//! Central limit order book snapshots and the cost of immediacy.
//!
//! Prices are held as integer tick counts so that sweep arithmetic is exact:
//! every distance from the arrival midpoint is an integer number of
//! half-ticks, and premiums are accumulated in that unit before being scaled
//! back to price-units.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClobError {
    #[error("order book has no levels on the required side")]
    EmptyBook,
    #[error("insufficient displayed depth: requested {requested}, fillable {fillable}")]
    InsufficientDepth { requested: u64, fillable: u64 },
    #[error("quantity must be positive")]
    ZeroQuantity,
    #[error("depth_levels must be at least 1")]
    ZeroDepthLevels,
    #[error("tick size must be positive and finite, got {0}")]
    InvalidTickSize(f64),
    #[error("multiplier must be positive and finite, got {0}")]
    InvalidMultiplier(f64),
    #[error("price {price} is not a multiple of tick size {tick_size}")]
    OffTick { price: f64, tick_size: f64 },
    #[error("{side} ladder is not strictly monotone at price {price}")]
    NonMonotone { side: &'static str, price: f64 },
    #[error("crossed book: best bid {bid} >= best ask {ask}")]
    CrossedBook { bid: f64, ask: f64 },
    #[error("level at price {price} has zero quantity")]
    ZeroLevelQuantity { price: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Direction of the parent order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    /// +1 for buys, -1 for sells.
    pub fn sign(self) -> f64 {
        match self {
            Side::Buy => 1.0,
            Side::Sell => -1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Buy => f.write_str("buy"),
            Side::Sell => f.write_str("sell"),
        }
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "buy" | "b" => Ok(Side::Buy),
            "sell" | "s" => Ok(Side::Sell),
            other => Err(format!("unknown side '{other}' (expected buy or sell)")),
        }
    }
}

/// One aggregated price level. `price_ticks` is the price divided by the
/// book's tick size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PriceLevel {
    pub price_ticks: i64,
    pub quantity: u64,
}

/// An immutable two-sided ladder snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderBook {
    bids: Vec<PriceLevel>,
    asks: Vec<PriceLevel>,
    tick_size: f64,
    multiplier: f64,
}

/// Result of walking the opposing ladder for a given quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFill {
    pub side: Side,
    pub filled: u64,
    /// Quantity-weighted fill price.
    pub avg_price: f64,
    /// Midpoint the premium is measured from.
    pub arrival_price: f64,
    /// Sum over consumed contracts of the distance from the midpoint, in half-ticks.
    pub premium_half_ticks: i64,
    /// `premium_half_ticks` in price-units (contracts x price distance).
    pub premium_sum: f64,
    /// Average premium per contract, price-units.
    pub premium: f64,
    /// Premium in currency: `premium_sum * multiplier`.
    pub total_cost: f64,
    pub levels_consumed: usize,
}

impl SweepFill {
    /// Signed per-contract cost of this fill relative to `benchmark`.
    /// Positive means the fill is worse than the benchmark for the order's side.
    pub fn cost_vs(&self, benchmark: f64) -> f64 {
        self.side.sign() * (self.avg_price - benchmark)
    }
}

fn to_ticks(price: f64, tick_size: f64) -> Result<i64, ClobError> {
    let ticks = (price / tick_size).round();
    let tol = 1e-9 * price.abs().max(1.0);
    if !price.is_finite() || (ticks * tick_size - price).abs() > tol {
        return Err(ClobError::OffTick { price, tick_size });
    }
    Ok(ticks as i64)
}

impl OrderBook {
    /// Build a book from decimal prices. Bids must be strictly descending and
    /// asks strictly ascending; either side may be empty.
    pub fn new(
        tick_size: f64,
        multiplier: f64,
        bids: &[(f64, u64)],
        asks: &[(f64, u64)],
    ) -> Result<Self, ClobError> {
        if !(tick_size.is_finite() && tick_size > 0.0) {
            return Err(ClobError::InvalidTickSize(tick_size));
        }
        let convert = |levels: &[(f64, u64)]| -> Result<Vec<PriceLevel>, ClobError> {
            levels
                .iter()
                .map(|&(price, quantity)| {
                    Ok(PriceLevel {
                        price_ticks: to_ticks(price, tick_size)?,
                        quantity,
                    })
                })
                .collect()
        };
        Self::from_ticks(tick_size, multiplier, convert(bids)?, convert(asks)?)
    }

    pub fn from_ticks(
        tick_size: f64,
        multiplier: f64,
        bids: Vec<PriceLevel>,
        asks: Vec<PriceLevel>,
    ) -> Result<Self, ClobError> {
        if !(tick_size.is_finite() && tick_size > 0.0) {
            return Err(ClobError::InvalidTickSize(tick_size));
        }
        if !(multiplier.is_finite() && multiplier > 0.0) {
            return Err(ClobError::InvalidMultiplier(multiplier));
        }
        for lvl in bids.iter().chain(asks.iter()) {
            if lvl.quantity == 0 {
                return Err(ClobError::ZeroLevelQuantity {
                    price: lvl.price_ticks as f64 * tick_size,
                });
            }
        }
        for w in bids.windows(2) {
            if w[1].price_ticks >= w[0].price_ticks {
                return Err(ClobError::NonMonotone {
                    side: "bid",
                    price: w[1].price_ticks as f64 * tick_size,
                });
            }
        }
        for w in asks.windows(2) {
            if w[1].price_ticks <= w[0].price_ticks {
                return Err(ClobError::NonMonotone {
                    side: "ask",
                    price: w[1].price_ticks as f64 * tick_size,
                });
            }
        }
        if let (Some(b), Some(a)) = (bids.first(), asks.first()) {
            if b.price_ticks >= a.price_ticks {
                return Err(ClobError::CrossedBook {
                    bid: b.price_ticks as f64 * tick_size,
                    ask: a.price_ticks as f64 * tick_size,
                });
            }
        }
        Ok(Self {
            bids,
            asks,
            tick_size,
            multiplier,
        })
    }

    pub fn bids(&self) -> &[PriceLevel] {
        &self.bids
    }

    pub fn asks(&self) -> &[PriceLevel] {
        &self.asks
    }

    pub fn tick_size(&self) -> f64 {
        self.tick_size
    }

    pub fn multiplier(&self) -> f64 {
        self.multiplier
    }

    pub fn price_of(&self, ticks: i64) -> f64 {
        ticks as f64 * self.tick_size
    }

    pub fn best_bid(&self) -> Option<f64> {
        self.bids.first().map(|l| self.price_of(l.price_ticks))
    }

    pub fn best_ask(&self) -> Option<f64> {
        self.asks.first().map(|l| self.price_of(l.price_ticks))
    }

    /// Levels an order on `side` trades against.
    pub fn opposing(&self, side: Side) -> &[PriceLevel] {
        match side {
            Side::Sell => &self.bids,
            Side::Buy => &self.asks,
        }
    }

    /// Total displayed quantity available to an aggressive order on `side`.
    pub fn displayed_depth(&self, side: Side) -> u64 {
        self.opposing(side).iter().map(|l| l.quantity).sum()
    }

    /// Best bid plus best ask, in ticks; twice the midpoint.
    fn mid_half_ticks(&self) -> Result<i64, ClobError> {
        match (self.bids.first(), self.asks.first()) {
            (Some(b), Some(a)) => Ok(b.price_ticks + a.price_ticks),
            _ => Err(ClobError::EmptyBook),
        }
    }

    /// Midpoint of best bid and best ask.
    pub fn arrival_price(&self) -> Result<f64, ClobError> {
        Ok(self.mid_half_ticks()? as f64 * self.tick_size / 2.0)
    }

    pub fn spread_ticks(&self) -> Result<i64, ClobError> {
        match (self.bids.first(), self.asks.first()) {
            (Some(b), Some(a)) => Ok(a.price_ticks - b.price_ticks),
            _ => Err(ClobError::EmptyBook),
        }
    }

    pub fn half_spread(&self) -> Result<f64, ClobError> {
        Ok(self.spread_ticks()? as f64 * self.tick_size / 2.0)
    }

    /// Walk the opposing ladder in price priority for exactly `qty` contracts.
    pub fn sweep_to_fill(&self, side: Side, qty: u64) -> Result<SweepFill, ClobError> {
        if qty == 0 {
            return Err(ClobError::ZeroQuantity);
        }
        let fillable = self.displayed_depth(side);
        let fill = self.sweep_available(side, qty)?;
        if fill.filled < qty {
            return Err(ClobError::InsufficientDepth {
                requested: qty,
                fillable,
            });
        }
        Ok(fill)
    }

    /// Like [`sweep_to_fill`](Self::sweep_to_fill) but stops at the displayed
    /// depth instead of failing. `filled` may be less than `qty`.
    pub fn sweep_available(&self, side: Side, qty: u64) -> Result<SweepFill, ClobError> {
        if qty == 0 {
            return Err(ClobError::ZeroQuantity);
        }
        let mid2 = self.mid_half_ticks()?;
        let mut remaining = qty;
        let mut notional_ticks: i128 = 0;
        let mut premium_half_ticks: i64 = 0;
        let mut levels_consumed = 0;
        for lvl in self.opposing(side) {
            if remaining == 0 {
                break;
            }
            let take = remaining.min(lvl.quantity);
            notional_ticks += take as i128 * lvl.price_ticks as i128;
            premium_half_ticks += take as i64 * (2 * lvl.price_ticks - mid2).abs();
            remaining -= take;
            levels_consumed += 1;
        }
        let filled = qty - remaining;
        if filled == 0 {
            return Err(ClobError::EmptyBook);
        }
        let half_tick = self.tick_size / 2.0;
        let premium_sum = premium_half_ticks as f64 * half_tick;
        Ok(SweepFill {
            side,
            filled,
            avg_price: notional_ticks as f64 * self.tick_size / filled as f64,
            arrival_price: mid2 as f64 * half_tick,
            premium_half_ticks,
            premium_sum,
            premium: premium_sum / filled as f64,
            total_cost: premium_sum * self.multiplier,
            levels_consumed,
        })
    }

    /// Per-contract premium `|SweepToFill - ArrivalPrice|` for `qty` contracts.
    pub fn liquidity_premium(&self, side: Side, qty: u64) -> Result<f64, ClobError> {
        Ok(self.sweep_to_fill(side, qty)?.premium)
    }

    /// `(bid qty - ask qty) / (bid qty + ask qty)` over the top `depth_levels` per side.
    pub fn book_imbalance(&self, depth_levels: usize) -> Result<f64, ClobError> {
        if depth_levels == 0 {
            return Err(ClobError::ZeroDepthLevels);
        }
        let sum = |levels: &[PriceLevel]| -> f64 {
            levels
                .iter()
                .take(depth_levels)
                .map(|l| l.quantity as f64)
                .sum()
        };
        let (b, a) = (sum(&self.bids), sum(&self.asks));
        if b + a == 0.0 {
            return Err(ClobError::EmptyBook);
        }
        Ok((b - a) / (b + a))
    }

    /// Parse the line-oriented snapshot format: `side,price,qty` per line where
    /// side is `bid` or `ask`. Blank lines, `#` comments and a `side,price,qty`
    /// header are skipped. Level order in the file does not matter.
    pub fn parse(text: &str, tick_size: f64, multiplier: f64) -> Result<Self, ClobError> {
        let mut bids = Vec::new();
        let mut asks = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| ClobError::Parse {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(parse_err(format!(
                    "expected 3 fields, found {}",
                    fields.len()
                )));
            }
            if fields[0].eq_ignore_ascii_case("side") {
                continue;
            }
            let price: f64 = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad price '{}'", fields[1])))?;
            let qty: u64 = fields[2]
                .parse()
                .map_err(|_| parse_err(format!("bad quantity '{}'", fields[2])))?;
            match fields[0].to_ascii_lowercase().as_str() {
                "bid" | "b" => bids.push((price, qty)),
                "ask" | "a" | "offer" => asks.push((price, qty)),
                other => return Err(parse_err(format!("unknown side '{other}'"))),
            }
        }
        bids.sort_by(|a, b| b.0.total_cmp(&a.0));
        asks.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::new(tick_size, multiplier, &bids, &asks)
    }

    /// Render in the same format [`parse`](Self::parse) accepts, asks from the
    /// top of the ladder down, then bids.
    pub fn to_text(&self) -> String {
        let decimals = tick_decimals(self.tick_size);
        let mut out = String::from("side,price,qty\n");
        for lvl in self.asks.iter().rev() {
            out.push_str(&format!(
                "ask,{:.*},{}\n",
                decimals,
                self.price_of(lvl.price_ticks),
                lvl.quantity
            ));
        }
        for lvl in &self.bids {
            out.push_str(&format!(
                "bid,{:.*},{}\n",
                decimals,
                self.price_of(lvl.price_ticks),
                lvl.quantity
            ));
        }
        out
    }
}

fn tick_decimals(tick: f64) -> usize {
    (0..10)
        .find(|&d| {
            let scaled = tick * 10f64.powi(d as i32);
            (scaled - scaled.round()).abs() < 1e-9
        })
        .unwrap_or(10)
}

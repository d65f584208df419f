//! Annualized normal (dollar) volatility from OHLC bars and option term structures.
//!
//! All range estimators work on raw price differences rather than log prices,
//! so the result is in price-units per √year and feeds the arithmetic model
//! directly.

use std::f64::consts::LN_2;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 252 days x 6.5 hours x 3600 seconds of trading time.
pub const DEFAULT_SECONDS_PER_YEAR: f64 = 5_896_800.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VolError {
    #[error("insufficient data: need at least {needed} bars, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("bar {index} is invalid: {reason}")]
    InvalidBar { index: usize, reason: String },
    #[error("bar durations are inconsistent ({first} s vs {other} s)")]
    InconsistentDurations { first: f64, other: f64 },
    #[error("term structure is empty")]
    EmptyTermStructure,
    #[error("term structure taus must be positive and strictly increasing")]
    UnorderedTermStructure,
    #[error("query tenor must be positive, got {0}")]
    InvalidTenor(f64),
    #[error("estimates use different clocks: {0} vs {1} seconds per year")]
    ConventionMismatch(f64, f64),
    #[error("blend weight must lie in [0, 1], got {0}")]
    InvalidWeight(f64),
    #[error("seconds per year must be positive, got {0}")]
    InvalidClock(f64),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    /// Seconds.
    pub duration: f64,
}

impl Bar {
    pub fn new(open: f64, high: f64, low: f64, close: f64, duration: f64) -> Self {
        Self {
            open,
            high,
            low,
            close,
            duration,
        }
    }

    fn validate(&self, index: usize) -> Result<(), VolError> {
        let bad = |reason: &str| VolError::InvalidBar {
            index,
            reason: reason.to_string(),
        };
        if ![self.open, self.high, self.low, self.close, self.duration]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(bad("non-finite field"));
        }
        if self.low > self.open.min(self.close) {
            return Err(bad("low above open/close"));
        }
        if self.high < self.open.max(self.close) {
            return Err(bad("high below open/close"));
        }
        if self.duration <= 0.0 {
            return Err(bad("duration must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    CloseToClose,
    Parkinson,
    GarmanKlass,
    RogersSatchell,
    YangZhang,
}

impl std::str::FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "closetoclose" | "cc" => Ok(Estimator::CloseToClose),
            "parkinson" => Ok(Estimator::Parkinson),
            "garmanklass" | "gk" => Ok(Estimator::GarmanKlass),
            "rogerssatchell" | "rs" => Ok(Estimator::RogersSatchell),
            "yangzhang" | "yz" => Ok(Estimator::YangZhang),
            other => Err(format!("unknown estimator '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolSource {
    Realized(Estimator),
    Implied,
    Blended,
    /// Supplied directly by the caller.
    Given,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolEstimate {
    /// Price-units per √year.
    pub sigma: f64,
    pub source: VolSource,
    pub seconds_per_year: f64,
}

impl VolEstimate {
    pub fn given(sigma: f64, seconds_per_year: f64) -> Self {
        Self {
            sigma,
            source: VolSource::Given,
            seconds_per_year,
        }
    }

    /// Converts a duration in seconds to a year fraction on this estimate's clock.
    pub fn years(&self, seconds: f64) -> f64 {
        seconds / self.seconds_per_year
    }

    pub fn seconds(&self, years: f64) -> f64 {
        years * self.seconds_per_year
    }
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// Per-bar variance of the chosen estimator, in price-units squared.
fn per_bar_variance(bars: &[Bar], estimator: Estimator) -> Result<f64, VolError> {
    let need = match estimator {
        Estimator::CloseToClose | Estimator::YangZhang => 3,
        _ => 2,
    };
    if bars.len() < need {
        return Err(VolError::InsufficientData {
            needed: need,
            got: bars.len(),
        });
    }
    let var = match estimator {
        Estimator::CloseToClose => {
            let diffs: Vec<f64> = bars.windows(2).map(|w| w[1].close - w[0].close).collect();
            sample_variance(&diffs)
        }
        Estimator::Parkinson => mean(bars.iter().map(|b| (b.high - b.low).powi(2))) / (4.0 * LN_2),
        Estimator::GarmanKlass => mean(bars.iter().map(|b| {
            0.5 * (b.high - b.low).powi(2) - (2.0 * LN_2 - 1.0) * (b.close - b.open).powi(2)
        })),
        Estimator::RogersSatchell => mean(bars.iter().map(rogers_satchell_term)),
        Estimator::YangZhang => {
            // the first bar only supplies the previous close
            let periods = &bars[1..];
            let n = periods.len() as f64;
            let overnight: Vec<f64> = bars.windows(2).map(|w| w[1].open - w[0].close).collect();
            let intraday: Vec<f64> = periods.iter().map(|b| b.close - b.open).collect();
            let rs = mean(periods.iter().map(rogers_satchell_term));
            let k = 0.34 / (1.34 + (n + 1.0) / (n - 1.0));
            sample_variance(&overnight) + k * sample_variance(&intraday) + (1.0 - k) * rs
        }
    };
    Ok(var.max(0.0))
}

fn rogers_satchell_term(b: &Bar) -> f64 {
    (b.high - b.close) * (b.high - b.open) + (b.low - b.close) * (b.low - b.open)
}

/// Realized dollar volatility from equally spaced bars.
pub fn realized_vol(
    bars: &[Bar],
    estimator: Estimator,
    seconds_per_year: f64,
) -> Result<VolEstimate, VolError> {
    if !(seconds_per_year > 0.0) || !seconds_per_year.is_finite() {
        return Err(VolError::InvalidClock(seconds_per_year));
    }
    for (i, b) in bars.iter().enumerate() {
        b.validate(i)?;
    }
    if let Some(first) = bars.first() {
        for b in bars {
            if (b.duration - first.duration).abs() > 1e-9 * first.duration {
                return Err(VolError::InconsistentDurations {
                    first: first.duration,
                    other: b.duration,
                });
            }
        }
    }
    let var = per_bar_variance(bars, estimator)?;
    let annualized = var * seconds_per_year / bars[0].duration;
    Ok(VolEstimate {
        sigma: annualized.sqrt(),
        source: VolSource::Realized(estimator),
        seconds_per_year,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermPoint {
    /// Years.
    pub tau: f64,
    pub sigma: f64,
}

/// Term vol at `tau_query` by linear interpolation in total variance `σ²τ`,
/// flat in σ outside the quoted range.
pub fn implied_forward_vol(
    points: &[TermPoint],
    tau_query: f64,
    seconds_per_year: f64,
) -> Result<VolEstimate, VolError> {
    if points.is_empty() {
        return Err(VolError::EmptyTermStructure);
    }
    if !(tau_query > 0.0) || !tau_query.is_finite() {
        return Err(VolError::InvalidTenor(tau_query));
    }
    if points[0].tau <= 0.0 || points.windows(2).any(|w| w[1].tau <= w[0].tau) {
        return Err(VolError::UnorderedTermStructure);
    }
    let first = points[0];
    let last = points[points.len() - 1];
    let sigma = if tau_query <= first.tau {
        first.sigma
    } else if tau_query >= last.tau {
        last.sigma
    } else {
        let i = points.partition_point(|p| p.tau <= tau_query);
        let (a, b) = (points[i - 1], points[i]);
        if a.tau == tau_query {
            a.sigma
        } else {
            let wa = a.sigma * a.sigma * a.tau;
            let wb = b.sigma * b.sigma * b.tau;
            let frac = (tau_query - a.tau) / (b.tau - a.tau);
            ((wa + (wb - wa) * frac) / tau_query).max(0.0).sqrt()
        }
    };
    Ok(VolEstimate {
        sigma,
        source: VolSource::Implied,
        seconds_per_year,
    })
}

/// Variance-weighted blend `σ² = (1 − w)σ_spot² + w·σ_impl²`.
pub fn blend_sigma(
    spot: &VolEstimate,
    implied: &VolEstimate,
    weight_implied: f64,
) -> Result<VolEstimate, VolError> {
    if spot.seconds_per_year != implied.seconds_per_year {
        return Err(VolError::ConventionMismatch(
            spot.seconds_per_year,
            implied.seconds_per_year,
        ));
    }
    if !(0.0..=1.0).contains(&weight_implied) {
        return Err(VolError::InvalidWeight(weight_implied));
    }
    let (source, sigma) = if weight_implied == 0.0 {
        (spot.source, spot.sigma)
    } else if weight_implied == 1.0 {
        (implied.source, implied.sigma)
    } else {
        let var = (1.0 - weight_implied) * spot.sigma * spot.sigma
            + weight_implied * implied.sigma * implied.sigma;
        (VolSource::Blended, var.sqrt())
    };
    Ok(VolEstimate {
        sigma,
        source,
        seconds_per_year: spot.seconds_per_year,
    })
}

#[derive(Debug, Deserialize)]
struct BarRow {
    timestamp: f64,
    open: f64,
    high: f64,
    low: f64,
    close: f64,
}

/// Read bars from CSV with header `timestamp,open,high,low,close` (timestamps
/// in seconds). Each bar's duration is the spacing to the next timestamp; the
/// last bar reuses the previous spacing.
pub fn read_bars_csv(path: &Path) -> Result<Vec<Bar>, VolError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| VolError::Csv(e.to_string()))?;
    let rows: Vec<BarRow> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| VolError::Csv(e.to_string()))?;
    if rows.len() < 2 {
        return Err(VolError::InsufficientData {
            needed: 2,
            got: rows.len(),
        });
    }
    let mut bars = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let duration = if i + 1 < rows.len() {
            rows[i + 1].timestamp - row.timestamp
        } else {
            row.timestamp - rows[i - 1].timestamp
        };
        bars.push(Bar::new(row.open, row.high, row.low, row.close, duration));
    }
    Ok(bars)
}

/// Read a term structure from CSV with header `tau,sigma`.
pub fn read_term_csv(path: &Path) -> Result<Vec<TermPoint>, VolError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| VolError::Csv(e.to_string()))?;
    reader
        .deserialize()
        .collect::<Result<Vec<TermPoint>, _>>()
        .map_err(|e| VolError::Csv(e.to_string()))
}

//! Drive the execution engine over a synthetic snapshot stream and print the
//! decision log as CSV.
//!
//! cargo run --example engine_replay

use ethos::clob::Side;
use ethos::engine::{write_decision_log, Engine, EngineConfig, MarketSnapshot, ScheduleMode};
use ethos::simulator::{abm_path, synth_book, LadderShape, LiquidityPath, SigmaPath};
use ethos::volatility::{VolEstimate, DEFAULT_SECONDS_PER_YEAR as SPY};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sigma = SigmaPath::Constant { sigma: 150.0 };
    let liquidity = LiquidityPath::Regular(LadderShape {
        depth: 15,
        spread: 1,
        levels: 20,
    });
    let prices = abm_path(3, 3952.0, &sigma, 0.0, 600.0, 10.0, SPY);

    let first = synth_book(prices[0], &liquidity, 0.0, 0.25, 50.0)?;
    let config = EngineConfig::new(Side::Sell, 120, 1800.0, ScheduleMode::Linear);
    let mut engine = Engine::new(config, &first)?;
    let mut log = Vec::new();
    for (i, &p) in prices.iter().enumerate() {
        if engine.is_complete() {
            break;
        }
        let t = i as f64 * 10.0;
        let snap = MarketSnapshot {
            timestamp: t,
            book: synth_book(p, &liquidity, t, 0.25, 50.0)?,
            sigma: VolEstimate::given(150.0, SPY),
        };
        log.push(engine.on_snapshot(&snap)?);
    }
    write_decision_log(&log, SPY, std::io::stdout().lock())?;
    Ok(())
}

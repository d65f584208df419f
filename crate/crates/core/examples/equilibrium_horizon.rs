//! Equilibrium horizon for the ladder order, with and without a slippage cap,
//! and for a calendar spread.
//!
//! cargo run --example equilibrium_horizon

use ethos::bachelier::SpreadSpec;
use ethos::clob::{OrderBook, Side};
use ethos::horizon;
use ethos::volatility::DEFAULT_SECONDS_PER_YEAR as SPY;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/es_ladder.csv"))?;
    let book = OrderBook::parse(&text, 0.25, 50.0)?;
    let fill = book.sweep_to_fill(Side::Sell, 100)?;
    let l = fill.premium;

    for sigma in [100.0, 200.0, 400.0] {
        let t = horizon::equilibrium_horizon(l, sigma, f64::INFINITY)?;
        print!("sigma {sigma:>5}: T* {:>8.1} s", t * SPY);
        for cap in [0.5, 2.0, 8.0] {
            let sc = horizon::slippage_capped_horizon(
                l,
                sigma,
                fill.arrival_price,
                cap,
                Side::Sell,
                0.0,
            )?;
            print!("  cap {cap}: {:>8.1} s", sc.t_star * SPY);
        }
        println!();
    }

    // correlated legs: the spread trades against the spread vol
    for rho in [0.0, 0.5, 0.9] {
        let spec = SpreadSpec::new(200.0, 180.0, rho)?;
        let t = horizon::spread_equilibrium_horizon(0.3, &spec, f64::INFINITY)?;
        println!("spread rho {rho}: T* {:.1} s", t * SPY);
    }
    Ok(())
}

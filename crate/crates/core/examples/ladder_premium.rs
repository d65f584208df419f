//! Sweep a sell order through an ES ladder and report the liquidity premium.
//!
//! cargo run --example ladder_premium

use ethos::clob::{OrderBook, Side};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/es_ladder.csv"))?;
    let book = OrderBook::parse(&text, 0.25, 50.0)?;
    println!("arrival (mid) {}", book.arrival_price()?);
    for qty in [1, 18, 50, 100, 250, 563] {
        let fill = book.sweep_to_fill(Side::Sell, qty)?;
        println!(
            "sell {qty:>3}: avg {:.4}  L {:.4}/lot  sum {:>6.2}  cost ${:>9.2}  levels {}",
            fill.avg_price, fill.premium, fill.premium_sum, fill.total_cost, fill.levels_consumed
        );
    }
    if let Err(e) = book.sweep_to_fill(Side::Sell, 1000) {
        println!("sell 1000: {e}");
    }
    println!("imbalance (5 levels) {:+.3}", book.book_imbalance(5)?);
    Ok(())
}

//! Realized volatility from one-minute bars, blended with a term structure.
//!
//! cargo run --example volatility_estimate

use std::path::Path;

use ethos::volatility::{self, Estimator, DEFAULT_SECONDS_PER_YEAR};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let bars = volatility::read_bars_csv(&data.join("es_bars_1m.csv"))?;
    let spy = DEFAULT_SECONDS_PER_YEAR;
    for est in [
        Estimator::CloseToClose,
        Estimator::Parkinson,
        Estimator::GarmanKlass,
        Estimator::RogersSatchell,
        Estimator::YangZhang,
    ] {
        let v = volatility::realized_vol(&bars, est, spy)?;
        println!("{est:?}: {:.2}", v.sigma);
    }
    let term = volatility::read_term_csv(&data.join("es_term.csv"))?;
    let implied = volatility::implied_forward_vol(&term, 2.0 * 3600.0 / spy, spy)?;
    let spot = volatility::realized_vol(&bars, Estimator::YangZhang, spy)?;
    let blended = volatility::blend_sigma(&spot, &implied, 0.5)?;
    println!(
        "implied (2h) {:.2}, blended {:.2}",
        implied.sigma, blended.sigma
    );
    Ok(())
}

//! Normal-model prices, greeks and implied time.
//!
//! cargo run --example bachelier_pricing

use ethos::bachelier::{self, OptionKind, PricingInputs, SpreadSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (sigma, tau) = (100.0, 0.01);
    let hs = bachelier::half_straddle_value(sigma, tau);
    println!("expected move {:.6}", bachelier::expected_move(sigma, tau));
    println!("half straddle {hs:.6}");
    println!(
        "implied time of that premium {:.12}",
        bachelier::implied_time_atm(hs, sigma)?
    );

    let put = PricingInputs::new(101.0, 100.0, 5.0, 0.04);
    let price = bachelier::vanilla_price(&put, OptionKind::Put)?;
    let tau_back = bachelier::implied_time_otm(price, 101.0, 100.0, 5.0, OptionKind::Put)?;
    println!("OTM put {price:.10} -> implied time {tau_back:.12}");

    let g = bachelier::greeks(&PricingInputs::new(3952.0, 3950.0, 200.0, 1e-4))?;
    println!("call delta {:.6} gamma {:.6}", g.delta, g.gamma);

    let claim = bachelier::conditional_claim(&PricingInputs::new(100.0, 100.0, 10.0, 0.25))?;
    println!(
        "exercise prob {:.4}, conditional value {:.4}",
        claim.exercise_prob, claim.conditional_value
    );

    let spec = SpreadSpec::new(0.5, 0.5, 0.5)?;
    println!(
        "calendar spread vol {:.4}, ATM spread option {:.6}",
        bachelier::spread_sigma(&spec),
        bachelier::spread_option_atm(&spec, 1.0, 0.0)
    );
    Ok(())
}

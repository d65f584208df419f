//! Linear versus gamma-biased schedules over one horizon.
//!
//! cargo run --example gamma_schedule

use ethos::horizon::{self, BiasSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (x0, sigma, l) = (100.0, 200.0, 0.445);
    let t_star = horizon::equilibrium_horizon(l, sigma, f64::INFINITY)?;
    let steps = 10;
    let linear = horizon::static_schedule(x0, t_star, None, steps)?;
    let short = BiasSpec::resolve(-std::f64::consts::PI, sigma, l, t_star)?;
    let long = BiasSpec::resolve(std::f64::consts::PI, sigma, l, t_star)?;
    let sinh = horizon::static_schedule(x0, t_star, Some(&short), steps)?;
    let tanh = horizon::static_schedule(x0, t_star, Some(&long), steps)?;
    println!("A_g short {:+.3}, long {:+.3}", short.a_g, long.a_g);
    println!("   u   linear    sinh    tanh");
    for i in 0..=steps {
        println!(
            "{:>4.1} {:>8.2} {:>7.2} {:>7.2}",
            linear[i].0 / t_star,
            linear[i].1,
            sinh[i].1,
            tanh[i].1
        );
    }
    Ok(())
}

//! Run every bundled scenario and print completion times per model.
//!
//! cargo run --example scenario_comparison [seed]

use std::path::Path;

use ethos::simulator::{run_scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: Option<u64> = std::env::args().nth(1).map(|s| s.parse()).transpose()?;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut files: Vec<_> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    for path in files {
        let mut cfg = ScenarioConfig::from_json(&std::fs::read_to_string(&path)?)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let run = run_scenario(&cfg)?;
        println!(
            "{} (seed {}, max horizon {} s)",
            cfg.name, cfg.seed, cfg.max_horizon
        );
        for m in &run.models {
            let done = m.completion_time.map_or("incomplete".to_string(), |t| {
                format!("{:7.0} s ({:5.1} min)", t, t / 60.0)
            });
            println!(
                "  {:<18} {}  residual {:>4}  shortfall {:>12.2}",
                m.model, done, m.residual, m.implementation_shortfall
            );
        }
    }
    Ok(())
}

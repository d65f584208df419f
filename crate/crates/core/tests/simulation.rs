use ethos::clob::Side;
use ethos::engine::{PremiumBenchmark, ScheduleMode};
use ethos::simulator::{
    abm_path, run_scenario, Baseline, LadderShape, LiquidityPath, ScenarioConfig, SigmaPath,
};

const SPY: f64 = 5_896_800.0;

fn base_config() -> ScenarioConfig {
    ScenarioConfig {
        schema_version: 1,
        name: "test".into(),
        seed: 42,
        duration: 1200.0,
        dt: 1.0,
        x0: 60,
        side: Side::Buy,
        s0: 4000.0,
        tick_size: 0.25,
        multiplier: 50.0,
        seconds_per_year: SPY,
        sigma_path: SigmaPath::Constant { sigma: 120.0 },
        liquidity_path: LiquidityPath::Regular(LadderShape {
            depth: 8,
            spread: 2,
            levels: 20,
        }),
        drift_mu: 0.0,
        schedule: ScheduleMode::Linear,
        max_horizon: 900.0,
        benchmark: PremiumBenchmark::Arrival,
        passive: Default::default(),
        max_child_size: None,
        baselines: vec![
            Baseline::Ac2000Static {
                risk_aversion: 1e-6,
            },
            Baseline::Ac2000Piecewise {
                risk_aversion: 1e-6,
                reoptimize_interval: 120.0,
            },
        ],
    }
}

#[test]
fn abm_increment_stdev_matches_sigma() {
    let (sigma, dt, n) = (250.0, 1.0, 100_000);
    let path = abm_path(
        2024,
        4000.0,
        &SigmaPath::Constant { sigma },
        0.0,
        n as f64 * dt,
        dt,
        SPY,
    );
    let dt_yr = dt / SPY;
    let incs: Vec<f64> = path
        .windows(2)
        .map(|w| (w[1] - w[0]) / dt_yr.sqrt())
        .collect();
    let mean = incs.iter().sum::<f64>() / n as f64;
    let var = incs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let sd = var.sqrt();
    // standard error of a sample stdev of normals is σ/√(2(n−1))
    let se = sigma / (2.0 * (n as f64 - 1.0)).sqrt();
    assert!(
        (sd - sigma).abs() < 3.0 * se,
        "sd {sd} vs {sigma} (se {se})"
    );
}

#[test]
fn identical_configs_give_identical_results() {
    let a = run_scenario(&base_config()).unwrap();
    let b = run_scenario(&base_config()).unwrap();
    assert_eq!(a, b);
    for (x, y) in a.models.iter().zip(&b.models) {
        assert_eq!(
            x.implementation_shortfall.to_bits(),
            y.implementation_shortfall.to_bits()
        );
    }
}

#[test]
fn every_model_conserves_quantity() {
    for seed in [1, 2, 3] {
        let mut cfg = base_config();
        cfg.seed = seed;
        let run = run_scenario(&cfg).unwrap();
        assert_eq!(run.models.len(), 3);
        for m in &run.models {
            assert_eq!(m.executed + m.residual, cfg.x0, "{}", m.model);
            assert!(m
                .trajectory
                .windows(2)
                .all(|w| w[1].position <= w[0].position));
            match m.completion_time {
                Some(t) => {
                    assert_eq!(m.residual, 0);
                    assert!(t <= cfg.max_horizon, "{} finished at {t}", m.model);
                }
                None => assert!(m.residual > 0),
            }
        }
    }
}

#[test]
fn short_market_reports_residual() {
    let mut cfg = base_config();
    cfg.duration = 100.0;
    cfg.sigma_path = SigmaPath::Constant { sigma: 5.0 };
    let run = run_scenario(&cfg).unwrap();
    let eth = run.model("eth").unwrap();
    assert!(eth.completion_time.is_none());
    assert!(eth.residual > 0);
}

#[test]
fn flat_market_shortfall_is_spread_cost() {
    // flat market: every fill pays exactly its distance from the arrival mid
    let mut cfg = base_config();
    cfg.sigma_path = SigmaPath::Constant { sigma: 0.0 };
    cfg.liquidity_path = LiquidityPath::Regular(LadderShape {
        depth: 1000,
        spread: 2,
        levels: 5,
    });
    cfg.baselines = vec![Baseline::Ac2000Static { risk_aversion: 0.0 }];
    let run = run_scenario(&cfg).unwrap();
    let ac = run.model("ac2000_static").unwrap();
    // half-spread 0.25 × 60 contracts × 50
    assert_eq!(ac.implementation_shortfall, 750.0);
    // zero volatility means an unbounded horizon, so the engine holds
    assert_eq!(run.model("eth").unwrap().executed, 0);
}

#[test]
fn eth_trajectory_respects_horizon_bounds() {
    let run = run_scenario(&base_config()).unwrap();
    let eth = run.model("eth").unwrap();
    let active: Vec<_> = eth.trajectory.iter().filter(|p| p.position > 0).collect();
    assert!(active.len() > 2);
    for p in &active {
        assert!(p.t_star <= base_config().max_horizon + 1e-9);
        assert!(p.l >= 0.0);
    }
}

//! Run the bundled scenario, replay its log and recompute the metrics from
//! the log alone.

use hybrid_market::replay::replay_bytes;
use hybrid_market::sim::{metrics_from_log, run_scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ScenarioConfig::from_json(include_str!("../scenarios/default.json"))?;
    if let Some(seed) = std::env::args().nth(1) {
        cfg.seed = seed.parse()?;
    }
    let out = run_scenario(&cfg)?;
    print!("{}", out.metrics.to_csv());
    println!("report passed: {} ({:?})", out.report.passed(), out.report);

    let report = replay_bytes(&out.log_bytes());
    println!("{report}");
    let derived = metrics_from_log(&out.log, &cfg.utility_params);
    println!("metrics from log match: {}", derived == out.metrics);
    Ok(())
}

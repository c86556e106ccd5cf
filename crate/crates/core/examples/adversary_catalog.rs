//! Every catalog scenario at n = 4, m = 32 with 100 trials each.

use eprqdba::harness::{catalog, run_experiment, ExperimentSpec};
use eprqdba::registers::ProtocolConfig;

fn main() -> eprqdba::Result<()> {
    let config = ProtocolConfig::new(4, 32, 0)?;
    println!(
        "{:<44} {:>11} {:>8} {:>8} {:>7}",
        "scenario", "consistency", "validity", "forgery", "aborts"
    );
    for scenario in catalog(4) {
        let spec = ExperimentSpec::new(config, scenario, 100, 0);
        let s = run_experiment(&spec)?.summary;
        let c = &s.counts;
        println!(
            "{:<44} {:>11} {:>8} {:>8} {:>7}",
            s.scenario,
            c.consistency,
            c.validity,
            c.forgery_trials,
            c.finals.get("abort").copied().unwrap_or(0)
        );
    }
    Ok(())
}

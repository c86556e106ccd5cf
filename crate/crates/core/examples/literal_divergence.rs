//! An equivocating commander at n = 3 under both cross-vector rules.
//!
//! Two genuine vectors from the same register agree on every tuple they
//! both reveal, so their symmetric difference is empty. The default rule
//! (`△ ≤ sd_max`) accepts that and both lieutenants abort; the literal rule
//! wants `△ ≈ m/4`, rejects it, and each lieutenant keeps a different order.

use eprqdba::checks::TolerancePolicy;
use eprqdba::harness::{scenario_by_name, simulate};
use eprqdba::registers::ProtocolConfig;

fn main() -> eprqdba::Result<()> {
    let scenario = scenario_by_name("equivocation", 3)?;
    for m in [32, 64, 128] {
        for literal in [false, true] {
            let policy = TolerancePolicy {
                paper_literal: literal,
                ..TolerancePolicy::default()
            };
            let config = ProtocolConfig::new(3, m, 1)?.with_tolerance(policy)?;
            let o = simulate(&config, &scenario, 0)?;
            let finals: Vec<_> = o.finals().into_values().map(|d| d.to_string()).collect();
            println!("m={m:<4} literal={literal:<5} finals {finals:?}");
        }
    }
    Ok(())
}

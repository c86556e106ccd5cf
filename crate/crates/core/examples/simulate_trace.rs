//! One run of the protocol with four generals, printed as a JSON-lines trace
//! followed by each lieutenant's decisions.
//!
//! cargo run --example simulate_trace -- [seed]

use eprqdba::harness::{simulate, Scenario};
use eprqdba::registers::ProtocolConfig;

fn main() -> eprqdba::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let config = ProtocolConfig::new(4, 16, seed)?;
    let outcome = simulate(&config, &Scenario::all_loyal(4, true), 0)?;
    outcome.trace.write_jsonl(std::io::stdout().lock())?;
    for lt in &outcome.lieutenants {
        eprintln!(
            "LT{}: prelim {:?}, final {:?}",
            lt.index, lt.prelim, lt.final_decision
        );
    }
    Ok(())
}

//! Writes a trace to JSON-lines, reads it back, replays it, and shows that a
//! tampered trace is caught.

use std::io::BufReader;

use eprqdba::harness::{replay, scenario_by_name, simulate};
use eprqdba::registers::ProtocolConfig;
use eprqdba::trace::TraceLog;

fn main() -> eprqdba::Result<()> {
    let scenario = scenario_by_name("mixed_commander+forger@LT3", 5)?;
    let outcome = simulate(&ProtocolConfig::new(5, 32, 42)?, &scenario, 9)?;
    let text = outcome.trace.to_jsonl();
    println!("{} records, {} bytes", outcome.trace.len(), text.len());

    let parsed = TraceLog::read_jsonl(BufReader::new(text.as_bytes()))?;
    let again = replay(&parsed)?;
    println!("replay matches: {}", again == outcome);

    let tampered = text.replacen("\"LT0\"", "\"LT1\"", 1);
    let parsed = TraceLog::read_jsonl(BufReader::new(tampered.as_bytes()))?;
    match replay(&parsed) {
        Ok(_) => println!("tampered trace replayed cleanly"),
        Err(e) => println!("tampered trace rejected: {e}"),
    }
    Ok(())
}

//! Messages, symbols and qubits per round for an honest run, as CSV.

use eprqdba::harness::{message_accounting, simulate, write_report, Format, Scenario};
use eprqdba::registers::ProtocolConfig;

fn main() -> eprqdba::Result<()> {
    let mut rows = Vec::new();
    for n in [3, 4, 5, 8] {
        for m in [4, 32] {
            let outcome = simulate(
                &ProtocolConfig::new(n, m, 0)?,
                &Scenario::all_loyal(n, false),
                0,
            )?;
            rows.push(message_accounting(&outcome));
        }
    }
    write_report(&rows, Format::Csv, std::io::stdout().lock())
}

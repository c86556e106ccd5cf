//! Compares the classical register sampler with full statevector sampling at
//! n = 3, m = 4, then runs the register property suite at m = 32.

use eprqdba::harness::{oracle_equivalence, register_properties};
use eprqdba::registers::ProtocolConfig;

fn main() -> eprqdba::Result<()> {
    let r = oracle_equivalence(&ProtocolConfig::new(3, 4, 0)?, 50_000, 0.001)?;
    println!(
        "oracle: chi2 {:.1} on {} dof, p = {:.4}, rejected: {}",
        r.chi_square.statistic, r.chi_square.dof, r.chi_square.p_value, r.rejected
    );
    for n in [3, 5] {
        let l = register_properties(&ProtocolConfig::new(n, 32, 0)?, 2_000, 5.0)?;
        println!(
            "n={n}: {} anti-correlation and {} tuple violations over {} positions; {:.4} of vectors within 5 sd",
            l.anti_correlation_violations,
            l.tuple_differentiation_violations,
            l.positions_checked,
            l.fraction_within()
        );
    }
    Ok(())
}

//! Exact forgery probabilities `1/C(m/2, m/4)` next to Monte Carlo estimates.

use eprqdba::harness::{forgery_probability_exact, forgery_probability_monte_carlo};

fn main() -> eprqdba::Result<()> {
    println!(
        "{:>4} {:>14} {:>10} {:>22} {:>12}",
        "m", "exact", "controlled", "95% interval", "unconditioned"
    );
    for m in [4, 8, 16, 32, 64] {
        let exact = forgery_probability_exact(m)?;
        if m > 16 {
            println!("{m:>4} {exact:>14}");
            continue;
        }
        let est = forgery_probability_monte_carlo(m, 200_000, 1)?;
        let c = &est.controlled;
        println!(
            "{m:>4} {exact:>14} {:>10.5} {:>22} {:>12.5}",
            c.point,
            format!("[{:.5}, {:.5}]", c.lower, c.upper),
            est.unconditioned.point
        );
    }
    Ok(())
}

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

/// z for a two-sided 95% interval.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// A proportion with its Wilson interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub successes: u64,
    pub trials: u64,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
}

impl Estimate {
    pub fn new(name: impl Into<String>, successes: u64, trials: u64, exact: Option<f64>) -> Self {
        let (lower, upper) = wilson_interval(successes, trials);
        let point = if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        };
        Estimate {
            name: name.into(),
            successes,
            trials,
            point,
            lower,
            upper,
            exact,
        }
    }

    /// Binomial standard error at probability `p`.
    pub fn standard_error(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Two-sample chi-square homogeneity test over shared categories.
/// Categories empty in both samples are skipped.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<ChiSquare> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(Error::Usage(
            "chi-square needs two non-empty samples".into(),
        ));
    }
    let ka = (nb as f64 / na as f64).sqrt();
    let kb = (na as f64 / nb as f64).sqrt();
    let mut statistic = 0.0;
    let mut used = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        used += 1;
        let d = ka * x as f64 - kb * y as f64;
        statistic += d * d / (x + y) as f64;
    }
    if used < 2 {
        return Err(Error::Usage(
            "chi-square needs at least two occupied categories".into(),
        ));
    }
    let dof = used - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Usage(e.to_string()))?;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // 10 of 100: centre (0.1 + 1.92/100)/1.0384 and the usual half width
        let (lo, hi) = wilson_interval(10, 100);
        assert!((lo - 0.05523).abs() < 1e-4, "{lo}");
        assert!((hi - 0.17437).abs() < 1e-4, "{hi}");
        let (lo, hi) = wilson_interval(0, 50);
        assert!(lo.abs() < 1e-12);
        assert!((hi - 0.07135).abs() < 1e-4, "{hi}");
        assert_eq!(wilson_interval(5, 5).1, 1.0);
    }

    #[test]
    fn estimate_fields() {
        let e = Estimate::new("x", 25, 100, Some(0.25));
        assert_eq!(e.point, 0.25);
        assert!(e.lower < 0.25 && 0.25 < e.upper);
        assert!((e.standard_error(0.25) - 0.0433).abs() < 1e-4);
    }

    #[test]
    fn chi_square_identical_samples() {
        let c = chi_square_two_sample(&[10, 20, 30, 0], &[10, 20, 30, 0]).unwrap();
        assert_eq!(c.statistic, 0.0);
        assert_eq!(c.dof, 2);
        assert!((c.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_hand_computed() {
        // equal sizes: sum (x - y)^2 / (x + y) = 100/90 + 100/110, one dof
        let c = chi_square_two_sample(&[40, 60], &[50, 50]).unwrap();
        let expected = 100.0 / 90.0 + 100.0 / 110.0;
        assert!((c.statistic - expected).abs() < 1e-12);
        // P(chi2_1 > x) = erfc(√(x/2)) = 0.155218...
        assert!((c.p_value - 0.155218).abs() < 1e-5, "{}", c.p_value);
    }

    #[test]
    fn chi_square_errors() {
        assert!(chi_square_two_sample(&[1, 2], &[1]).is_err());
        assert!(chi_square_two_sample(&[0, 0], &[1, 2]).is_err());
        assert!(chi_square_two_sample(&[5, 0], &[3, 0]).is_err());
    }
}

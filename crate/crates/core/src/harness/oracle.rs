use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checks::binomial_sd;
use crate::commandvec::{build_command_vector, positions_pair, positions_single};
use crate::harness::stats::{chi_square_two_sample, ChiSquare};
use crate::registers::{sample_registers, ProtocolConfig, RegisterSet};
use crate::statevector::sample_distribution_quantum;
use crate::{Error, Result};

const MAX_CATEGORY_BITS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n: usize,
    pub m: usize,
    pub draws: u64,
    /// Joint bits of all generals over a pair of adjacent tuples.
    pub category_bits: usize,
    pub occupied_categories: usize,
    pub chi_square: ChiSquare,
    pub alpha: f64,
    pub rejected: bool,
}

/// Category index of tuples `2t` and `2t+1`: the commander's bits, then each
/// lieutenant's, lowest position first.
fn categories(set: &RegisterSet, out: &mut [u64]) {
    let w = set.shape.width();
    for t in 0..set.shape.m / 2 {
        let range = 2 * t * w..2 * (t + 1) * w;
        let mut code = 0usize;
        let mut shift = 0;
        for reg in std::iter::once(&set.alice).chain(&set.lieutenants) {
            for &b in &reg.bits()[range.clone()] {
                code |= usize::from(b) << shift;
                shift += 1;
            }
        }
        out[code] += 1;
    }
}

fn histogram(config: &ProtocolConfig, draws: u64, stream: u64, quantum: bool) -> Result<Vec<u64>> {
    let bits = 2 * config.n * (config.n - 1);
    let chunks = draws.div_ceil(10_000);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(stream + c);
            let mut hist = vec![0u64; 1 << bits];
            for _ in 0..10_000.min(draws - c * 10_000) {
                let set = if quantum {
                    sample_distribution_quantum(config, &mut rng)?
                } else {
                    sample_registers(config, &mut rng)?
                };
                categories(&set, &mut hist);
            }
            Ok(hist)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = vec![0u64; 1 << bits];
    for p in parts {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    Ok(total)
}

/// Two-sample chi-square between the classical sampler and the statevector
/// sampler, over joint outcomes of adjacent tuple pairs.
pub fn oracle_equivalence(config: &ProtocolConfig, draws: u64, alpha: f64) -> Result<OracleReport> {
    config.validate()?;
    let category_bits = 2 * config.n * (config.n - 1);
    if category_bits > MAX_CATEGORY_BITS {
        return Err(Error::Usage(format!(
            "{category_bits} joint bits per category is too many; use n = 3"
        )));
    }
    if draws == 0 {
        return Err(Error::Config("draws must be at least 1".into()));
    }
    let classical = histogram(config, draws, 0, false)?;
    let quantum = histogram(config, draws, 1 << 32, true)?;
    let chi = chi_square_two_sample(&classical, &quantum)?;
    Ok(OracleReport {
        n: config.n,
        m: config.m,
        draws,
        category_bits,
        occupied_categories: chi.dof + 1,
        rejected: chi.p_value < alpha,
        chi_square: chi,
        alpha,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub n: usize,
    pub m: usize,
    pub samples: u64,
    pub positions_checked: u64,
    pub anti_correlation_violations: u64,
    pub tuple_differentiation_violations: u64,
    pub vectors: u64,
    /// Vectors whose single and pair counts all lie within `sigmas` standard deviations.
    pub vectors_within: u64,
    pub sigmas: f64,
}

impl PropertyReport {
    pub fn fraction_within(&self) -> f64 {
        self.vectors_within as f64 / self.vectors as f64
    }
}

fn property_sample(set: &RegisterSet, sigmas: f64) -> Result<PropertyReport> {
    let shape = set.shape;
    let (w, m) = (shape.width(), shape.m);
    let mut r = PropertyReport {
        n: shape.n,
        m,
        samples: 1,
        positions_checked: 0,
        anti_correlation_violations: 0,
        tuple_differentiation_violations: 0,
        vectors: 0,
        vectors_within: 0,
        sigmas,
    };
    for (i, l) in set.lieutenants.iter().enumerate() {
        for k in (i..shape.len()).step_by(w) {
            r.positions_checked += 1;
            r.anti_correlation_violations += u64::from(l.bit(k) == set.alice.bit(k));
        }
        for k in 0..m {
            r.tuple_differentiation_violations += u64::from(l.tuple(k) == set.alice.tuple(k));
        }
    }
    let (half, quarter) = (binomial_sd(m, 0.5), binomial_sd(m, 0.25));
    let near =
        |count: usize, expected: f64, sd: f64| (count as f64 - expected).abs() <= sigmas * sd;
    for i in 0..w {
        for c in [false, true] {
            let v = build_command_vector(&set.alice, i, c)?;
            let mut ok = near(positions_single(&v, i, c)?.len(), m as f64 / 2.0, half);
            for j in (0..w).filter(|&j| j != i) {
                for y in [false, true] {
                    ok &= near(
                        positions_pair(&v, i, c, j, y)?.len(),
                        m as f64 / 4.0,
                        quarter,
                    );
                }
            }
            r.vectors += 1;
            r.vectors_within += u64::from(ok);
        }
    }
    Ok(r)
}

/// Checks the anti-correlation, tuple differentiation and loyal-vector
/// cardinality properties over `samples` register sets (seeds
/// `config.seed + s`).
pub fn register_properties(
    config: &ProtocolConfig,
    samples: u64,
    sigmas: f64,
) -> Result<PropertyReport> {
    config.validate()?;
    let parts = (0..samples)
        .into_par_iter()
        .map(|s| {
            let c = config.with_seed(config.seed.wrapping_add(s));
            property_sample(&sample_registers(&c, &mut c.rng())?, sigmas)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = PropertyReport {
        n: config.n,
        m: config.m,
        samples: 0,
        positions_checked: 0,
        anti_correlation_violations: 0,
        tuple_differentiation_violations: 0,
        vectors: 0,
        vectors_within: 0,
        sigmas,
    };
    for p in parts {
        total.samples += p.samples;
        total.positions_checked += p.positions_checked;
        total.anti_correlation_violations += p.anti_correlation_violations;
        total.tuple_differentiation_violations += p.tuple_differentiation_violations;
        total.vectors += p.vectors;
        total.vectors_within += p.vectors_within;
    }
    Ok(total)
}

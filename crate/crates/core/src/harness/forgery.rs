//! How often a lieutenant can pass off a vector for the order it did not get.
//!
//! The controlled experiment fixes the commander's register so that every
//! tuple type occurs exactly `m/4` times. The forger (LT0) received order 0,
//! so it knows which `m/2` tuples carry 1 at its own place but not which
//! `m/4` of those carry 0 at the victim's place (LT1). It picks a uniform
//! `m/4`-subset, and the victim's cross-vector check passes only when the
//! guess is exactly right.
//!
//! The unconditioned experiment samples registers normally and lets the
//! forger fill every unknown bit uniformly.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{forge_opposite_vector, forge_with, FillStrategy, Knowledge};
use crate::checks::{check_lt_with_cv, TolerancePolicy};
use crate::commandvec::build_command_vector;
use crate::harness::stats::Estimate;
use crate::protocol::OrderMsg;
use crate::registers::{sample_registers, ProtocolConfig, Register};
use crate::{Error, General, Result, Shape};

const VICTIM: usize = 1;
const FORGER: usize = 0;
const CHUNK: u64 = 10_000;
pub const MIN_TRIALS: u64 = 1_000;

/// `C(n, k)` in exact arithmetic.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for t in 0..k {
        acc = acc * (n - t) / (t + 1);
    }
    acc
}

/// `1 / C(m/2, m/4)`.
pub fn forgery_probability_exact(m: usize) -> Result<BigRational> {
    if m < 4 || !m.is_multiple_of(4) {
        return Err(Error::Config(format!(
            "m must be a positive multiple of 4, got {m}"
        )));
    }
    let c = binomial(m as u64 / 2, m as u64 / 4);
    Ok(BigRational::new(BigUint::one().into(), c.into()))
}

/// A three-player commander register with exactly `m/4` tuples of each type.
fn balanced_register<R: RngCore + ?Sized>(shape: Shape, rng: &mut R) -> Register {
    let mut types: Vec<u8> = (0..shape.m).map(|k| (k % 4) as u8).collect();
    types.shuffle(rng);
    let bits = types
        .iter()
        .flat_map(|&t| [t & 1 == 1, t & 2 == 2])
        .collect();
    Register::from_bits(General::Commander, shape, bits)
        .expect("balanced register has the right length")
}

fn lieutenant_register<R: RngCore + ?Sized>(a: &Register, i: usize, rng: &mut R) -> Register {
    let shape = a.shape();
    let bits = (0..shape.len())
        .map(|k| {
            if k % shape.width() == i {
                !a.bit(k)
            } else {
                rng.random()
            }
        })
        .collect();
    Register::from_bits(General::Lieutenant(i), shape, bits).expect("same shape as the commander")
}

/// One controlled attempt; true when the victim's check accepts.
pub fn controlled_forgery_trial<R: RngCore + ?Sized>(m: usize, rng: &mut R) -> Result<bool> {
    let shape = Shape::new(3, m)?;
    let a = balanced_register(shape, rng);
    let forger = lieutenant_register(&a, FORGER, rng);
    let own = OrderMsg {
        order: false,
        vector: build_command_vector(&a, FORGER, false)?,
    };
    let victim_vector = build_command_vector(&a, VICTIM, false)?;
    let mut knowledge = Knowledge::new(shape);
    knowledge.learn_register(&forger, FORGER);
    let fill = FillStrategy::ExactZeros {
        place: VICTIM,
        zeros: m / 4,
    };
    let forged = forge_with(&own, &knowledge, FORGER, true, fill, rng)?;
    Ok(check_lt_with_cv(
        VICTIM,
        FORGER,
        true,
        &forged,
        &victim_vector,
        &TolerancePolicy::default(),
    )?
    .passed())
}

/// One attempt on normally sampled registers with uniform fill.
pub fn unconditioned_forgery_trial<R: RngCore + ?Sized>(m: usize, rng: &mut R) -> Result<bool> {
    let config = ProtocolConfig::new(3, m, rng.next_u64())?;
    let set = sample_registers(&config, rng)?;
    let own = OrderMsg {
        order: false,
        vector: build_command_vector(&set.alice, FORGER, false)?,
    };
    let victim_vector = build_command_vector(&set.alice, VICTIM, false)?;
    let forged = forge_opposite_vector(&own, set.lieutenant(FORGER), FORGER, true, rng)?;
    Ok(check_lt_with_cv(
        VICTIM,
        FORGER,
        true,
        &forged,
        &victim_vector,
        &TolerancePolicy::default(),
    )?
    .passed())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgeryEstimate {
    pub m: usize,
    /// `1/C(m/2, m/4)` as text, e.g. `1/6`.
    pub exact: String,
    pub controlled: Estimate,
    pub unconditioned: Estimate,
}

fn count_passes(
    m: usize,
    trials: u64,
    seed: u64,
    stream_base: u64,
    unconditioned: bool,
) -> Result<u64> {
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_base + c);
            let len = CHUNK.min(trials - c * CHUNK);
            let mut passes = 0u64;
            for _ in 0..len {
                let ok = if unconditioned {
                    unconditioned_forgery_trial(m, &mut rng)?
                } else {
                    controlled_forgery_trial(m, &mut rng)?
                };
                passes += u64::from(ok);
            }
            Ok(passes)
        })
        .collect::<Result<Vec<u64>>>()
        .map(|v| v.into_iter().sum())
}

/// Runs `trials` controlled and `trials` unconditioned attempts. Chunks of
/// 10⁴ trials use their own ChaCha streams, so the result does not depend on
/// the thread count.
pub fn forgery_probability_monte_carlo(
    m: usize,
    trials: u64,
    seed: u64,
) -> Result<ForgeryEstimate> {
    if trials < MIN_TRIALS {
        return Err(Error::Config(format!(
            "at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let exact = forgery_probability_exact(m)?;
    let exact_f = 1.0
        / exact
            .denom()
            .to_string()
            .parse::<f64>()
            .unwrap_or(f64::INFINITY);
    let controlled = count_passes(m, trials, seed, 0, false)?;
    let unconditioned = count_passes(m, trials, seed, 1 << 32, true)?;
    Ok(ForgeryEstimate {
        m,
        exact: exact.to_string(),
        controlled: Estimate::new("controlled", controlled, trials, Some(exact_f)),
        unconditioned: Estimate::new("unconditioned", unconditioned, trials, None),
    })
}

#[cfg(test)]
mod tests {
    use num_bigint::BigInt;

    use super::*;

    /// Row `n` of Pascal's triangle by repeated addition.
    fn pascal_row(n: usize) -> Vec<BigUint> {
        let mut row = vec![BigUint::one()];
        for _ in 0..n {
            let mut next = vec![BigUint::one()];
            next.extend(row.windows(2).map(|w| &w[0] + &w[1]));
            next.push(BigUint::one());
            row = next;
        }
        row
    }

    #[test]
    fn binomial_matches_pascal() {
        for n in 0..70usize {
            let row = pascal_row(n);
            for (k, v) in row.iter().enumerate() {
                assert_eq!(&binomial(n as u64, k as u64), v, "C({n}, {k})");
            }
        }
        assert_eq!(binomial(3, 5), BigUint::ZERO);
    }

    #[test]
    fn exact_table_values() {
        let expect = [(4, 2u64), (8, 6), (16, 70), (32, 12_870), (64, 601_080_390)];
        for (m, d) in expect {
            assert_eq!(
                forgery_probability_exact(m).unwrap(),
                BigRational::new(BigInt::one(), BigInt::from(d))
            );
        }
        assert!(forgery_probability_exact(6).is_err());
        assert!(forgery_probability_exact(0).is_err());
        assert_eq!(forgery_probability_exact(8).unwrap().to_string(), "1/6");
    }

    #[test]
    fn balanced_register_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let shape = Shape::new(3, 16).unwrap();
        let a = balanced_register(shape, &mut rng);
        let mut counts = [0; 4];
        for k in 0..16 {
            let t = a.tuple(k);
            counts[usize::from(t[0]) + 2 * usize::from(t[1])] += 1;
        }
        assert_eq!(counts, [4; 4]);
    }

    #[test]
    fn m4_enumeration() {
        // with m = 4 the forger picks 1 of 2 revealed tuples: half the attempts pass
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let passes = (0..20_000)
            .filter(|_| controlled_forgery_trial(4, &mut rng).unwrap())
            .count();
        assert!((passes as f64 / 20_000.0 - 0.5).abs() < 0.02, "{passes}");
    }

    #[test]
    fn monte_carlo_is_thread_independent() {
        let a = forgery_probability_monte_carlo(8, 25_000, 3).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| forgery_probability_monte_carlo(8, 25_000, 3).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.exact, "1/6");
        assert!(forgery_probability_monte_carlo(8, 10, 3).is_err());
    }

    #[test]
    fn unconditioned_rate_is_lower() {
        let e = forgery_probability_monte_carlo(8, 20_000, 4).unwrap();
        assert!(e.unconditioned.point < e.controlled.point);
    }
}

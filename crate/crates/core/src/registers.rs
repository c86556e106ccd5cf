//! Classical simulation of the entanglement distribution phase.
//!
//! The source hands out `(n - 1)m` `|Ψ⁺⟩` pairs and `(n - 2)(n - 1)m` `|+⟩`
//! qubits. Position `k` of the commander's register is entangled with
//! position `k` of lieutenant `k mod (n - 1)`; every other lieutenant holds a
//! `|+⟩` qubit there. Measuring in the computational basis yields the joint
//! distribution sampled here directly:
//!
//! - commander bits are i.i.d. uniform,
//! - `l_i[k] = ¬a[k]` when `k ≡ i (mod n - 1)`,
//! - every other lieutenant bit is an independent uniform bit.
//!
//! # Draw order
//!
//! Bits come from [`draw_bit`], one `next_u32` per bit. The commander's
//! positions are drawn first in ascending order, then for each lieutenant in
//! ascending index its non-entangled positions in ascending order. Seeded with
//! [`ProtocolConfig::rng`] this pins every register to `(n, m, seed)`.
//!
//! # Text form
//!
//! Registers print most significant position first, so the string reads
//! `a_{N-1} … a_1 a_0` and tuple `k` sits at characters
//! `N - (n-1)(k+1) .. N - (n-1)k`.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checks::TolerancePolicy;
use crate::{Error, General, Result, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    #[serde(default)]
    pub tolerance: TolerancePolicy,
}

impl ProtocolConfig {
    pub fn new(n: usize, m: usize, seed: u64) -> Result<Self> {
        let config = ProtocolConfig {
            n,
            m,
            seed,
            tolerance: TolerancePolicy::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_tolerance(mut self, tolerance: TolerancePolicy) -> Result<Self> {
        tolerance.validate()?;
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        Shape::new(self.n, self.m)?;
        self.tolerance.validate()
    }

    pub fn shape(&self) -> Shape {
        Shape {
            n: self.n,
            m: self.m,
        }
    }

    /// The register stream. Adversaries and experiment machinery use other
    /// ChaCha streams of the same seed.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// One uniformly random bit: the low bit of the next `u32`.
#[inline]
pub fn draw_bit<R: RngCore + ?Sized>(rng: &mut R) -> bool {
    rng.next_u32() & 1 == 1
}

/// A general's measured bits, indexed `0 .. (n - 1)m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Register {
    owner: General,
    shape: Shape,
    bits: Vec<bool>,
}

impl Register {
    pub fn from_bits(owner: General, shape: Shape, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != shape.len() {
            return Err(Error::ShapeMismatch {
                expected: shape.len(),
                found: bits.len(),
            });
        }
        Ok(Register { owner, shape, bits })
    }

    /// Parses the most-significant-first text form.
    pub fn from_text(owner: General, shape: Shape, text: &str) -> Result<Self> {
        let bits = text
            .chars()
            .rev()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!(
                    "unexpected register symbol {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(owner, shape, bits)
    }

    pub fn owner(&self) -> General {
        self.owner
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn bit(&self, index: usize) -> bool {
        self.bits[index]
    }

    #[inline]
    pub fn place(&self, tuple: usize, place: usize) -> bool {
        self.bits[self.shape.index(tuple, place)]
    }

    pub fn tuple(&self, k: usize) -> &[bool] {
        let w = self.shape.width();
        &self.bits[w * k..w * (k + 1)]
    }

    pub fn to_text(&self) -> String {
        bits_to_text(&self.bits)
    }
}

pub(crate) fn bits_to_text(bits: &[bool]) -> String {
    bits.iter()
        .rev()
        .map(|&b| if b { '1' } else { '0' })
        .collect()
}

/// Everyone's registers after measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterSet {
    pub shape: Shape,
    pub seed: u64,
    pub alice: Register,
    pub lieutenants: Vec<Register>,
}

impl RegisterSet {
    pub fn lieutenant(&self, i: usize) -> &Register {
        &self.lieutenants[i]
    }

    /// Canonical JSON object used in trace files.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(RegisterSetRecord::from(self)).expect("register record serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let record: RegisterSetRecord = serde_json::from_value(value.clone())?;
        record.try_into()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RegisterSetRecord {
    n: usize,
    m: usize,
    seed: u64,
    alice: String,
    lieutenants: Vec<String>,
}

impl From<&RegisterSet> for RegisterSetRecord {
    fn from(set: &RegisterSet) -> Self {
        RegisterSetRecord {
            n: set.shape.n,
            m: set.shape.m,
            seed: set.seed,
            alice: set.alice.to_text(),
            lieutenants: set.lieutenants.iter().map(Register::to_text).collect(),
        }
    }
}

impl TryFrom<RegisterSetRecord> for RegisterSet {
    type Error = Error;

    fn try_from(record: RegisterSetRecord) -> Result<Self> {
        let shape = Shape::new(record.n, record.m)?;
        if record.lieutenants.len() != shape.width() {
            return Err(Error::Parse(format!(
                "expected {} lieutenant registers, found {}",
                shape.width(),
                record.lieutenants.len()
            )));
        }
        let alice = Register::from_text(General::Commander, shape, &record.alice)?;
        let lieutenants = record
            .lieutenants
            .iter()
            .enumerate()
            .map(|(i, text)| Register::from_text(General::Lieutenant(i), shape, text))
            .collect::<Result<Vec<_>>>()?;
        Ok(RegisterSet {
            shape,
            seed: record.seed,
            alice,
            lieutenants,
        })
    }
}

/// Samples the post-measurement registers following the fixed draw order.
pub fn sample_registers<R: RngCore + ?Sized>(
    config: &ProtocolConfig,
    rng: &mut R,
) -> Result<RegisterSet> {
    config.validate()?;
    let shape = config.shape();
    let width = shape.width();
    let alice_bits: Vec<bool> = (0..shape.len()).map(|_| draw_bit(rng)).collect();
    let lieutenants = (0..width)
        .map(|i| {
            let bits = (0..shape.len())
                .map(|k| {
                    if k % width == i {
                        !alice_bits[k]
                    } else {
                        draw_bit(rng)
                    }
                })
                .collect();
            Register {
                owner: General::Lieutenant(i),
                shape,
                bits,
            }
        })
        .collect();
    Ok(RegisterSet {
        shape,
        seed: config.seed,
        alice: Register {
            owner: General::Commander,
            shape,
            bits: alice_bits,
        },
        lieutenants,
    })
}

/// Hook for the entanglement verification phase, which this crate does not
/// model. A verifier returning `false` makes every loyal lieutenant abort.
pub trait DistributionVerifier {
    fn verify(&self, registers: &RegisterSet) -> bool;
}

/// Treats every distribution as verified.
#[derive(Debug, Default, Clone, Copy)]
pub struct AssumeVerified;

impl DistributionVerifier for AssumeVerified {
    fn verify(&self, _registers: &RegisterSet) -> bool {
        true
    }
}

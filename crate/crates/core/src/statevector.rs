//! Minimal pure-state simulator, used only to cross-check [`crate::registers`].
//!
//! Basis index bits are big-endian: for two qubits the amplitudes are ordered
//! `|00⟩, |01⟩, |10⟩, |11⟩`, and a measured outcome `[q0, q1]` is the index
//! `2·q0 + q1`. Pairs are simulated one at a time; the distribution scheme
//! never entangles across pairs.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, RngCore};

use crate::registers::{ProtocolConfig, Register, RegisterSet};
use crate::{Error, General, Result};

pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() || !amplitudes.len().is_power_of_two() {
            return Err(Error::Usage(format!(
                "amplitude count {} is not a power of two",
                amplitudes.len()
            )));
        }
        Ok(StateVector { amplitudes })
    }

    pub fn basis(qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        StateVector { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn qubits(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// Born probability of each basis index.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }
}

/// `(|01⟩ + |10⟩)/√2`.
pub fn prepare_psi_plus() -> StateVector {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let z = Complex64::new(0.0, 0.0);
    StateVector {
        amplitudes: vec![z, h, h, z],
    }
}

/// `H|0⟩ = (|0⟩ + |1⟩)/√2`.
pub fn prepare_plus() -> StateVector {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    StateVector {
        amplitudes: vec![h, h],
    }
}

/// Measures every qubit in the computational basis.
///
/// Returns the outcome bits (qubit 0 first) and the collapsed basis state.
pub fn measure_computational<R: RngCore + ?Sized>(
    state: &StateVector,
    rng: &mut R,
) -> Result<(Vec<bool>, StateVector)> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized(norm));
    }
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut index = None;
    let mut last_nonzero = 0;
    for (idx, amp) in state.amplitudes.iter().enumerate() {
        let p = amp.norm_sqr();
        if p > 0.0 {
            last_nonzero = idx;
        }
        cumulative += p;
        if u < cumulative {
            index = Some(idx);
            break;
        }
    }
    // rounding can leave u just above the final cumulative sum
    let index = index.unwrap_or(last_nonzero);
    let q = state.qubits();
    let outcome = (0..q)
        .map(|bit| (index >> (q - 1 - bit)) & 1 == 1)
        .collect();
    Ok((outcome, StateVector::basis(q, index)))
}

/// Draws a register set by measuring each `|Ψ⁺⟩` pair and `|+⟩` qubit of the
/// distribution scheme.
pub fn sample_distribution_quantum<R: RngCore + ?Sized>(
    config: &ProtocolConfig,
    rng: &mut R,
) -> Result<RegisterSet> {
    config.validate()?;
    let shape = config.shape();
    let width = shape.width();
    let len = shape.len();
    let mut alice = vec![false; len];
    let mut lieutenants = vec![vec![false; len]; width];
    let pair = prepare_psi_plus();
    let plus = prepare_plus();
    for k in 0..len {
        let (outcome, _) = measure_computational(&pair, rng)?;
        alice[k] = outcome[0];
        lieutenants[k % width][k] = outcome[1];
        for (i, reg) in lieutenants.iter_mut().enumerate() {
            if i != k % width {
                reg[k] = measure_computational(&plus, rng)?.0[0];
            }
        }
    }
    Ok(RegisterSet {
        shape,
        seed: config.seed,
        alice: Register::from_bits(General::Commander, shape, alice)?,
        lieutenants: lieutenants
            .into_iter()
            .enumerate()
            .map(|(i, bits)| Register::from_bits(General::Lieutenant(i), shape, bits))
            .collect::<Result<_>>()?,
    })
}

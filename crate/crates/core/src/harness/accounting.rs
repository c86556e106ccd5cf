use serde::{Deserialize, Serialize};

use crate::netsim::FINAL_ROUND;
use crate::protocol::Outcome;
use crate::registers::ProtocolConfig;
use crate::trace::EventKind;
use crate::Result;

/// Each ternary symbol costs two bits on the wire (`00`, `01`, `10`).
pub const WIRE_BITS_PER_SYMBOL: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundAccount {
    pub round: u8,
    pub messages: usize,
    pub symbols: usize,
    pub wire_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageAccounting {
    pub n: usize,
    pub m: usize,
    pub rounds: Vec<RoundAccount>,
    /// Symbols per message when every message carries the same count.
    pub symbols_per_message: Option<usize>,
    pub qubits: QubitAccounting,
}

impl MessageAccounting {
    pub fn round(&self, r: u8) -> &RoundAccount {
        &self.rounds[usize::from(r) - 1]
    }

    pub fn total_messages(&self) -> usize {
        self.rounds.iter().map(|r| r.messages).sum()
    }
}

/// Per-round counts of sent messages and symbols, read off the trace.
pub fn message_accounting(outcome: &Outcome) -> MessageAccounting {
    let mut rounds: Vec<RoundAccount> = (1..=FINAL_ROUND)
        .map(|round| RoundAccount {
            round,
            messages: 0,
            symbols: 0,
            wire_bits: 0,
        })
        .collect();
    let mut sizes = Vec::new();
    for r in outcome.trace.of_kind(EventKind::Send) {
        let symbols = r.symbols.unwrap_or(0);
        sizes.push(symbols);
        if let Some(acc) = rounds.get_mut(usize::from(r.round).wrapping_sub(1)) {
            acc.messages += 1;
            acc.symbols += symbols;
            acc.wire_bits += symbols * WIRE_BITS_PER_SYMBOL;
        }
    }
    let symbols_per_message = match sizes.split_first() {
        Some((first, rest)) if rest.iter().all(|s| s == first) => Some(*first),
        _ => None,
    };
    let (n, m) = (outcome.config.n, outcome.config.m);
    MessageAccounting {
        n,
        m,
        rounds,
        symbols_per_message,
        qubits: qubits(n, m),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitAccounting {
    pub epr_pairs: usize,
    pub plus_qubits: usize,
}

/// `(n-1)m` EPR pairs and `(n-2)(n-1)m` `|+⟩` qubits.
pub fn qubit_accounting(config: &ProtocolConfig) -> Result<QubitAccounting> {
    config.validate()?;
    Ok(qubits(config.n, config.m))
}

fn qubits(n: usize, m: usize) -> QubitAccounting {
    QubitAccounting {
        epr_pairs: (n - 1) * m,
        plus_qubits: (n - 2) * (n - 1) * m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{simulate, Scenario};
    use crate::registers::sample_registers;

    #[test]
    fn qubit_examples() {
        let q = qubit_accounting(&ProtocolConfig::new(3, 8, 0).unwrap()).unwrap();
        assert_eq!((q.epr_pairs, q.plus_qubits), (16, 16));
        let q = qubit_accounting(&ProtocolConfig::new(5, 4, 0).unwrap()).unwrap();
        assert_eq!((q.epr_pairs, q.plus_qubits), (16, 48));
    }

    #[test]
    fn qubits_match_sampled_registers() {
        // entangled positions are the commander's bits; every other
        // lieutenant bit is a |+> qubit
        for (n, m) in [(3, 4), (4, 8), (6, 4)] {
            let config = ProtocolConfig::new(n, m, 1).unwrap();
            let set = sample_registers(&config, &mut config.rng()).unwrap();
            let q = qubit_accounting(&config).unwrap();
            assert_eq!(q.epr_pairs, set.alice.bits().len());
            let free: usize = set.lieutenants.iter().map(|l| l.bits().len() - m).sum();
            assert_eq!(q.plus_qubits, free);
        }
    }

    #[test]
    fn honest_run_counts() {
        let o = simulate(
            &ProtocolConfig::new(5, 4, 0).unwrap(),
            &Scenario::all_loyal(5, false),
            0,
        )
        .unwrap();
        let acc = message_accounting(&o);
        assert_eq!(acc.round(1).messages, 4);
        assert_eq!(acc.round(2).messages, 12);
        assert_eq!(acc.round(2).symbols, 48 * 4);
        assert_eq!(acc.round(3).messages, 0);
        assert_eq!(acc.symbols_per_message, Some(16));
        assert_eq!(acc.round(1).wire_bits, 2 * acc.round(1).symbols);
        assert_eq!(acc.qubits, qubit_accounting(&o.config).unwrap());
    }
}

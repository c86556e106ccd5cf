//! Deterministic simulator for the EPR-pair based detectable Byzantine
//! agreement protocol.
//!
//! One commander and `n - 1` lieutenants share measured EPR pairs
//! (`|Ψ⁺⟩`) and `|+⟩` qubits prepared by a trusted source. The commander
//! backs her order with a *command vector*: her own register with every
//! tuple that does not carry the order at the addressee's place masked out.
//! Lieutenants check these vectors against the anti-correlations they share
//! with the commander, relay them to each other, and settle on a final
//! decision in a fixed three rounds.
//!
//! Module map:
//!
//! - [`registers`]: classical sampling of the post-measurement registers.
//! - [`statevector`]: a tiny pure-state simulator used as an oracle for
//!   [`registers`].
//! - [`commandvec`]: command vectors, trits and the position-set algebra.
//! - [`checks`]: the three consistency checks plus their tolerance policy.
//! - [`protocol`]: commander and lieutenant state machines and the verdict
//!   evaluator.
//! - [`adversary`]: traitor strategies, including the opposite-order forger.
//! - [`netsim`]: the synchronous round fabric.
//! - [`trace`]: JSON-lines trace records.
//! - [`harness`]: single runs, Monte Carlo experiments, accounting.
//!
//! ```
//! use eprqdba::harness::{simulate, Scenario};
//! use eprqdba::registers::ProtocolConfig;
//!
//! let config = ProtocolConfig::new(4, 32, 7).unwrap();
//! let outcome = simulate(&config, &Scenario::all_loyal(4, true), 0).unwrap();
//! assert!(outcome.lieutenants.iter().all(|l| l.final_decision == Some(eprqdba::protocol::Decision::One)));
//! ```

pub mod adversary;
pub mod checks;
pub mod commandvec;
mod error;
mod general;
pub mod harness;
pub mod netsim;
pub mod protocol;
pub mod registers;
pub mod statevector;
pub mod trace;

pub use error::{Error, Result};
pub use general::{General, Shape};

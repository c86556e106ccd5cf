//! A traitorous commander splits two loyal lieutenants at n = 3.
//!
//! LT0 gets its genuine vector with one bit flipped at LT1's place; LT1 gets
//! a vector CheckAlice rejects. LT0 keeps the order, LT1 finds the flipped
//! bit in LT0's relay and aborts.

use eprqdba::checks::TolerancePolicy;
use eprqdba::commandvec::{build_command_vector, CommandVector, Trit};
use eprqdba::protocol::{lieutenant_round2, lieutenant_round3, LieutenantState, OrderMsg, Payload};
use eprqdba::registers::{sample_registers, ProtocolConfig};
use eprqdba::General;

fn main() -> eprqdba::Result<()> {
    let config = ProtocolConfig::new(3, 32, 3)?;
    let policy = TolerancePolicy::default();
    let set = sample_registers(&config, &mut config.rng())?;
    let shape = config.shape();

    let genuine = build_command_vector(&set.alice, 0, true)?;
    let mut symbols = genuine.symbols().to_vec();
    let k = genuine.definite_tuples().next().expect("a revealed tuple");
    let at = shape.index(k, 1);
    symbols[at] = if symbols[at] == Trit::One {
        Trit::Zero
    } else {
        Trit::One
    };
    let orders = [
        OrderMsg {
            order: true,
            vector: CommandVector::from_symbols(shape, symbols)?,
        },
        OrderMsg {
            order: true,
            vector: CommandVector::all_uncertain(shape),
        },
    ];

    let mut lts = vec![
        LieutenantState::new(0, set.lieutenant(0).clone())?,
        LieutenantState::new(1, set.lieutenant(1).clone())?,
    ];
    let mut relays = Vec::new();
    for (lt, msg) in lts.iter_mut().zip(&orders) {
        let (prelim, out) = lieutenant_round2(lt, Some(msg), &policy)?;
        println!("LT{} round 2: {prelim}", lt.index());
        relays.extend(out);
    }
    for r in relays {
        if let (General::Lieutenant(from), General::Lieutenant(to), Payload::Relay(msg)) =
            (r.sender, r.recipient, r.payload)
        {
            lts[to].receive_relay(from, msg)?;
        }
    }
    for lt in &mut lts {
        let d = lieutenant_round3(lt, &policy)?;
        println!("LT{} final: {d}", lt.index());
    }
    Ok(())
}

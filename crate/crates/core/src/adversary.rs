//! Traitor behaviors.
//!
//! A strategy sees only what its general legitimately holds: its register and
//! the messages it received ([`RoleContext`]). With collusion switched on the
//! harness also hands it the registers and received messages of the other
//! traitors; nothing else is reachable from here.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::checks::TolerancePolicy;
use crate::commandvec::{
    build_command_vector, is_structurally_valid, CommandVector, Trit, VectorMeta,
};
use crate::protocol::{
    commander_round1, lieutenant_round2, Decision, LieutenantState, OrderMsg, RelayMsg,
    RoundMessage,
};
use crate::registers::Register;
use crate::{Error, General, Result, Shape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    Honest,
    /// Genuine vectors, but order `orders[i]` to lieutenant `i`. Lieutenants
    /// missing from the map get the scenario order.
    EquivocatingCommander {
        #[serde(with = "index_map")]
        orders: BTreeMap<usize, bool>,
    },
    /// Genuine vectors for the scenario order with every symbol replaced,
    /// with probability `corruption_rate`, by one of the two other symbols.
    GarbageVectorCommander {
        corruption_rate: f64,
    },
    /// Genuine vectors to `consistent`, corrupted ones to the rest.
    MixedCommander {
        consistent: BTreeSet<usize>,
        corruption_rate: f64,
    },
    /// Relays a forged vector for `target_order`; `None` means the opposite
    /// of the order received.
    RandomFillForger {
        #[serde(default)]
        target_order: Option<bool>,
    },
    /// Relays the vector it received but claims `claimed`.
    DecisionLiar {
        claimed: Decision,
    },
    SilentTraitor,
}

/// Lieutenant-indexed maps with string keys, which internally tagged enums
/// cannot parse back into integers on their own.
mod index_map {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<usize, bool>, s: S) -> Result<S::Ok, S::Error> {
        map.iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect::<BTreeMap<String, bool>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, bool>, D::Error> {
        BTreeMap::<String, bool>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| k.parse().map(|k| (k, v)).map_err(D::Error::custom))
            .collect()
    }
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Honest => "honest",
            Strategy::EquivocatingCommander { .. } => "equivocating_commander",
            Strategy::GarbageVectorCommander { .. } => "garbage_vector_commander",
            Strategy::MixedCommander { .. } => "mixed_commander",
            Strategy::RandomFillForger { .. } => "random_fill_forger",
            Strategy::DecisionLiar { .. } => "decision_liar",
            Strategy::SilentTraitor => "silent_traitor",
        }
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, Strategy::Honest)
    }

    pub fn fits_commander(&self) -> bool {
        matches!(
            self,
            Strategy::Honest
                | Strategy::EquivocatingCommander { .. }
                | Strategy::GarbageVectorCommander { .. }
                | Strategy::MixedCommander { .. }
                | Strategy::SilentTraitor
        )
    }

    pub fn fits_lieutenant(&self) -> bool {
        matches!(
            self,
            Strategy::Honest
                | Strategy::RandomFillForger { .. }
                | Strategy::DecisionLiar { .. }
                | Strategy::SilentTraitor
        )
    }

    /// Checks indices and rates against `width` lieutenants.
    pub fn validate(&self, width: usize) -> Result<()> {
        let rate_ok = |r: f64| {
            if (0.0..=1.0).contains(&r) {
                Ok(())
            } else {
                Err(Error::Config(format!("corruption rate {r} outside [0, 1]")))
            }
        };
        let index_ok = |i: usize| {
            if i < width {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "strategy names LT{i}, but there are {width} lieutenants"
                )))
            }
        };
        match self {
            Strategy::EquivocatingCommander { orders } => {
                orders.keys().try_for_each(|&i| index_ok(i))
            }
            Strategy::GarbageVectorCommander { corruption_rate } => rate_ok(*corruption_rate),
            Strategy::MixedCommander {
                consistent,
                corruption_rate,
            } => {
                consistent.iter().try_for_each(|&i| index_ok(i))?;
                rate_ok(*corruption_rate)
            }
            _ => Ok(()),
        }
    }
}

/// What another traitor shares under collusion.
#[derive(Debug, Clone, PartialEq)]
pub struct AllyView {
    pub general: General,
    pub register: Register,
    pub received: Option<OrderMsg>,
}

/// A traitorous lieutenant's knowledge.
#[derive(Debug, Clone, PartialEq)]
pub struct TraitorView {
    pub index: usize,
    pub register: Register,
    pub received: Option<OrderMsg>,
    /// Empty unless collusion is on.
    pub allies: Vec<AllyView>,
}

#[derive(Debug, Clone)]
pub enum RoleContext {
    Commander {
        register: Register,
        order: bool,
    },
    Lieutenant {
        view: TraitorView,
        policy: TolerancePolicy,
    },
}

/// Commander bits a traitor can deduce, by flat position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Knowledge {
    shape: Shape,
    bits: Vec<Option<bool>>,
}

impl Knowledge {
    pub fn new(shape: Shape) -> Self {
        Knowledge {
            shape,
            bits: vec![None; shape.len()],
        }
    }

    /// Lieutenant `i` holds `¬a` at place `i` of every tuple.
    pub fn learn_register(&mut self, reg: &Register, i: usize) {
        for k in 0..self.shape.m {
            let idx = self.shape.index(k, i);
            self.bits[idx] = Some(!reg.bit(idx));
        }
    }

    pub fn learn_vector(&mut self, v: &CommandVector) {
        if !v.is_well_sized() {
            return;
        }
        for (idx, t) in v.symbols().iter().enumerate() {
            if let Some(b) = t.bit() {
                self.bits[idx] = Some(b);
            }
        }
    }

    pub fn from_view(view: &TraitorView) -> Self {
        let mut k = Knowledge::new(view.register.shape());
        k.learn_register(&view.register, view.index);
        if let Some(m) = &view.received {
            k.learn_vector(&m.vector);
        }
        for ally in &view.allies {
            match ally.general.lieutenant_index() {
                Some(i) => k.learn_register(&ally.register, i),
                None => k.bits = ally.register.bits().iter().map(|&b| Some(b)).collect(),
            }
            if let Some(m) = &ally.received {
                k.learn_vector(&m.vector);
            }
        }
        k
    }

    pub fn bit(&self, tuple: usize, place: usize) -> Option<bool> {
        self.bits[self.shape.index(tuple, place)]
    }

    pub fn known(&self) -> usize {
        self.bits.iter().filter(|b| b.is_some()).count()
    }
}

/// How a forger fills the bits it does not know.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillStrategy {
    Uniform,
    /// Exactly `zeros` of the revealed tuples get 0 at `place`, chosen
    /// uniformly; every other unknown bit is uniform.
    ExactZeros {
        place: usize,
        zeros: usize,
    },
}

/// Replaces each symbol, with probability `rate`, by one of the other two.
pub fn corrupt<R: RngCore + ?Sized>(v: &CommandVector, rate: f64, rng: &mut R) -> CommandVector {
    let mut out = v.clone();
    for t in out.symbols_mut() {
        if rng.random::<f64>() < rate {
            let flip = rng.random::<bool>();
            *t = match (*t, flip) {
                (Trit::Zero, false) | (Trit::Blank, false) => Trit::One,
                (Trit::One, false) | (Trit::Blank, true) => Trit::Zero,
                (Trit::Zero, true) | (Trit::One, true) => Trit::Blank,
            };
        }
    }
    out
}

/// A fully definite random vector; what a forger sends when it has nothing
/// valid to work from.
fn garbage<R: RngCore + ?Sized>(shape: Shape, rng: &mut R) -> CommandVector {
    corrupt(&CommandVector::all_uncertain(shape), 1.0, rng)
}

/// Best-effort vector for `(i_self, target)` built from a genuine vector for
/// the opposite order: the tuples masked there are revealed, the ones
/// revealed there are masked, known bits are copied and the rest filled per
/// `fill`.
pub fn forge_with<R: RngCore + ?Sized>(
    own_msg: &OrderMsg,
    knowledge: &Knowledge,
    i_self: usize,
    target: bool,
    fill: FillStrategy,
    rng: &mut R,
) -> Result<CommandVector> {
    let shape = knowledge.shape;
    shape.check_place(i_self)?;
    if own_msg.order == target || !is_structurally_valid(&own_msg.vector, i_self, own_msg.order) {
        return Ok(garbage(shape, rng).with_meta(Some(VectorMeta {
            addressee: i_self,
            order: target,
        })));
    }
    let revealed: Vec<usize> = (0..shape.m)
        .filter(|&k| own_msg.vector.is_uncertain(k))
        .collect();
    let zeros_at = match fill {
        FillStrategy::Uniform => None,
        FillStrategy::ExactZeros { place, zeros } => {
            shape.check_place(place)?;
            if place == i_self || zeros > revealed.len() {
                return Err(Error::Usage(format!(
                    "cannot place {zeros} zeros at place {place} over {} revealed tuples",
                    revealed.len()
                )));
            }
            let chosen: BTreeSet<usize> = sample(rng, revealed.len(), zeros)
                .into_iter()
                .map(|x| revealed[x])
                .collect();
            Some((place, chosen))
        }
    };
    let mut symbols = vec![Trit::Blank; shape.len()];
    for &k in &revealed {
        for p in 0..shape.width() {
            let bit = if p == i_self {
                target
            } else {
                match &zeros_at {
                    Some((place, chosen)) if *place == p => !chosen.contains(&k),
                    _ => knowledge.bit(k, p).unwrap_or_else(|| rng.random()),
                }
            };
            symbols[shape.index(k, p)] = Trit::from(bit);
        }
    }
    Ok(
        CommandVector::from_symbols(shape, symbols)?.with_meta(Some(VectorMeta {
            addressee: i_self,
            order: target,
        })),
    )
}

/// The forger's default: own knowledge only, uniform fill.
pub fn forge_opposite_vector<R: RngCore + ?Sized>(
    own_msg: &OrderMsg,
    own_register: &Register,
    i_self: usize,
    target: bool,
    rng: &mut R,
) -> Result<CommandVector> {
    let mut knowledge = Knowledge::new(own_register.shape());
    knowledge.learn_register(own_register, i_self);
    forge_with(
        own_msg,
        &knowledge,
        i_self,
        target,
        FillStrategy::Uniform,
        rng,
    )
}

/// Messages the general emits in `round` under `strategy`.
pub fn apply_strategy<R: RngCore + ?Sized>(
    strategy: &Strategy,
    ctx: &RoleContext,
    round: u8,
    rng: &mut R,
) -> Result<Vec<RoundMessage>> {
    match ctx {
        RoleContext::Commander { register, order } => {
            if !strategy.fits_commander() {
                return Err(Error::Config(format!(
                    "{} cannot play the commander",
                    strategy.name()
                )));
            }
            if round != 1 {
                return Ok(Vec::new());
            }
            commander_messages(strategy, register, *order, rng)
        }
        RoleContext::Lieutenant { view, policy } => {
            if !strategy.fits_lieutenant() {
                return Err(Error::Config(format!(
                    "{} cannot play a lieutenant",
                    strategy.name()
                )));
            }
            if round != 2 {
                return Ok(Vec::new());
            }
            lieutenant_messages(strategy, view, policy, rng)
        }
    }
}

fn commander_messages<R: RngCore + ?Sized>(
    strategy: &Strategy,
    a: &Register,
    order: bool,
    rng: &mut R,
) -> Result<Vec<RoundMessage>> {
    let width = a.shape().width();
    let genuine = |i: usize, c: bool| -> Result<RoundMessage> {
        Ok(RoundMessage::order(
            i,
            OrderMsg {
                order: c,
                vector: build_command_vector(a, i, c)?,
            },
        ))
    };
    match strategy {
        Strategy::Honest => commander_round1(a, order),
        Strategy::EquivocatingCommander { orders } => (0..width)
            .map(|i| genuine(i, orders.get(&i).copied().unwrap_or(order)))
            .collect(),
        Strategy::GarbageVectorCommander { corruption_rate } => (0..width)
            .map(|i| {
                let v = build_command_vector(a, i, order)?;
                Ok(RoundMessage::order(
                    i,
                    OrderMsg {
                        order,
                        vector: corrupt(&v, *corruption_rate, rng),
                    },
                ))
            })
            .collect(),
        Strategy::MixedCommander {
            consistent,
            corruption_rate,
        } => (0..width)
            .map(|i| {
                let v = build_command_vector(a, i, order)?;
                let vector = if consistent.contains(&i) {
                    v
                } else {
                    corrupt(&v, *corruption_rate, rng)
                };
                Ok(RoundMessage::order(i, OrderMsg { order, vector }))
            })
            .collect(),
        Strategy::SilentTraitor => Ok(Vec::new()),
        _ => unreachable!("checked by fits_commander"),
    }
}

fn lieutenant_messages<R: RngCore + ?Sized>(
    strategy: &Strategy,
    view: &TraitorView,
    policy: &TolerancePolicy,
    rng: &mut R,
) -> Result<Vec<RoundMessage>> {
    let shape = view.register.shape();
    let i = view.index;
    let broadcast = |msg: RelayMsg| -> Vec<RoundMessage> {
        (0..shape.width())
            .filter(|&j| j != i)
            .map(|j| RoundMessage::relay(i, j, msg.clone()))
            .collect()
    };
    match strategy {
        Strategy::Honest => {
            let mut state = LieutenantState::new(i, view.register.clone())?;
            Ok(lieutenant_round2(&mut state, view.received.as_ref(), policy)?.1)
        }
        Strategy::RandomFillForger { target_order } => {
            let target = match (target_order, &view.received) {
                (Some(t), _) => *t,
                (None, Some(m)) => !m.order,
                (None, None) => true,
            };
            let vector = match &view.received {
                Some(m) if m.order == target => m.vector.clone(),
                Some(m) => forge_with(
                    m,
                    &Knowledge::from_view(view),
                    i,
                    target,
                    FillStrategy::Uniform,
                    rng,
                )?,
                None => garbage(shape, rng).with_meta(Some(VectorMeta {
                    addressee: i,
                    order: target,
                })),
            };
            Ok(broadcast(RelayMsg {
                prelim: Decision::from_order(target),
                vector,
            }))
        }
        Strategy::DecisionLiar { claimed } => {
            let vector = view
                .received
                .as_ref()
                .map_or_else(|| CommandVector::empty(shape), |m| m.vector.clone());
            Ok(broadcast(RelayMsg {
                prelim: *claimed,
                vector,
            }))
        }
        Strategy::SilentTraitor => Ok(Vec::new()),
        _ => unreachable!("checked by fits_lieutenant"),
    }
}

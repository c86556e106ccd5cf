//! The three-round agreement phase.
//!
//! Round 1: the commander sends each lieutenant her order and its command
//! vector. Round 2: each lieutenant runs [`check_alice`], fixes a preliminary
//! decision and relays it, together with the vector it received, to every
//! other lieutenant. Round 3: each lieutenant compares its preliminary
//! decision with the relayed ones and applies rules 3.1 to 3.8. No messages
//! are sent in round 3.
//!
//! Decision sets are computed per observer from the relays it actually
//! received plus its own preliminary decision. A missing or wrongly sized
//! relay counts as the sender claiming abort with an empty vector.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::checks::{
    check_alice, check_lt_with_bv, check_lt_with_cv, CheckVerdict, TolerancePolicy,
};
use crate::commandvec::{build_command_vector, CommandVector};
use crate::registers::{ProtocolConfig, Register};
use crate::trace::{payload_digest, TraceLog};
use crate::{Error, General, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    /// `⊥`
    #[serde(rename = "abort")]
    Abort,
}

impl Decision {
    pub fn from_order(order: bool) -> Self {
        if order {
            Decision::One
        } else {
            Decision::Zero
        }
    }

    pub fn order(self) -> Option<bool> {
        match self {
            Decision::Zero => Some(false),
            Decision::One => Some(true),
            Decision::Abort => None,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Zero => "0",
            Decision::One => "1",
            Decision::Abort => "abort",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderMsg {
    pub order: bool,
    pub vector: CommandVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayMsg {
    pub prelim: Decision,
    pub vector: CommandVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Order(OrderMsg),
    Relay(RelayMsg),
}

impl Payload {
    /// The only round in which this payload may be sent.
    pub fn round(&self) -> u8 {
        match self {
            Payload::Order(_) => 1,
            Payload::Relay(_) => 2,
        }
    }

    pub fn vector(&self) -> &CommandVector {
        match self {
            Payload::Order(m) => &m.vector,
            Payload::Relay(m) => &m.vector,
        }
    }

    pub fn vector_mut(&mut self) -> &mut CommandVector {
        match self {
            Payload::Order(m) => &mut m.vector,
            Payload::Relay(m) => &mut m.vector,
        }
    }

    pub fn symbols(&self) -> usize {
        self.vector().len()
    }

    pub fn canonical(&self) -> String {
        match self {
            Payload::Order(m) => format!("order={};vector={}", u8::from(m.order), m.vector),
            Payload::Relay(m) => format!("prelim={};vector={}", m.prelim, m.vector),
        }
    }

    pub fn digest(&self) -> String {
        payload_digest(&self.canonical())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundMessage {
    pub round: u8,
    pub sender: General,
    pub recipient: General,
    pub payload: Payload,
}

impl RoundMessage {
    pub fn order(recipient: usize, msg: OrderMsg) -> Self {
        RoundMessage {
            round: 1,
            sender: General::Commander,
            recipient: General::Lieutenant(recipient),
            payload: Payload::Order(msg),
        }
    }

    pub fn relay(sender: usize, recipient: usize, msg: RelayMsg) -> Self {
        RoundMessage {
            round: 2,
            sender: General::Lieutenant(sender),
            recipient: General::Lieutenant(recipient),
            payload: Payload::Relay(msg),
        }
    }

    /// Orders flow commander to lieutenant in round 1, relays lieutenant to
    /// a different lieutenant in round 2.
    pub fn validate(&self) -> Result<()> {
        let ok = match (&self.payload, self.sender, self.recipient) {
            (Payload::Order(_), General::Commander, General::Lieutenant(_)) => self.round == 1,
            (Payload::Relay(_), General::Lieutenant(a), General::Lieutenant(b)) => {
                self.round == 2 && a != b
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ProtocolViolation(format!(
                "{} message from {} to {} in round {}",
                if matches!(self.payload, Payload::Order(_)) {
                    "order"
                } else {
                    "relay"
                },
                self.sender,
                self.recipient,
                self.round
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// Round 2: the commander's vector checked out.
    PrelimAccept,
    /// Round 2: inconsistent or missing vector.
    PrelimAbort,
    R3_1,
    R3_2,
    R3_3,
    R3_4,
    R3_5,
    R3_6,
    R3_7,
    R3_8,
    /// The distribution phase failed verification.
    Unverified,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::PrelimAccept => "R2.accept",
            Rule::PrelimAbort => "R2.abort",
            Rule::R3_1 => "Rule3.1",
            Rule::R3_2 => "Rule3.2",
            Rule::R3_3 => "Rule3.3",
            Rule::R3_4 => "Rule3.4",
            Rule::R3_5 => "Rule3.5",
            Rule::R3_6 => "Rule3.6",
            Rule::R3_7 => "Rule3.7",
            Rule::R3_8 => "Rule3.8",
            Rule::Unverified => "unverified",
        }
    }
}

/// Something a lieutenant did that belongs in the trace.
#[derive(Debug, Clone, PartialEq)]
pub enum StateEvent {
    Check {
        round: u8,
        subject: General,
        claimed: Decision,
        verdict: CheckVerdict,
    },
    Rule {
        round: u8,
        rule: Rule,
        decision: Decision,
    },
    Violation {
        round: u8,
        message: String,
    },
}

/// `G_0`, `G_1`, `G_⊥` over lieutenant indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecisionSets {
    pub zero: BTreeSet<usize>,
    pub one: BTreeSet<usize>,
    pub abort: BTreeSet<usize>,
}

impl DecisionSets {
    pub fn for_order(&self, order: bool) -> &BTreeSet<usize> {
        if order {
            &self.one
        } else {
            &self.zero
        }
    }
}

pub fn classify_decisions(decisions: &BTreeMap<usize, Decision>) -> DecisionSets {
    let mut sets = DecisionSets::default();
    for (&i, d) in decisions {
        match d {
            Decision::Zero => sets.zero.insert(i),
            Decision::One => sets.one.insert(i),
            Decision::Abort => sets.abort.insert(i),
        };
    }
    sets
}

/// Round 1 for a loyal commander.
pub fn commander_round1(a: &Register, order: bool) -> Result<Vec<RoundMessage>> {
    (0..a.shape().width())
        .map(|i| {
            let vector = build_command_vector(a, i, order)?;
            Ok(RoundMessage::order(i, OrderMsg { order, vector }))
        })
        .collect()
}

/// A claim seen by an observer in round 3.
#[derive(Debug, Clone)]
struct Claim {
    decision: Decision,
    vector: CommandVector,
}

#[derive(Debug, Clone)]
pub struct LieutenantState {
    index: usize,
    register: Register,
    received: Option<OrderMsg>,
    prelim: Option<Decision>,
    relays: BTreeMap<usize, RelayMsg>,
    round2_sets: Option<DecisionSets>,
    final_decision: Option<Decision>,
    events: Vec<StateEvent>,
}

impl LieutenantState {
    pub fn new(index: usize, register: Register) -> Result<Self> {
        register.shape().check_place(index)?;
        if register.owner() != General::Lieutenant(index) {
            return Err(Error::Usage(format!(
                "register of {} handed to LT{index}",
                register.owner()
            )));
        }
        Ok(LieutenantState {
            index,
            register,
            received: None,
            prelim: None,
            relays: BTreeMap::new(),
            round2_sets: None,
            final_decision: None,
            events: Vec::new(),
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn received(&self) -> Option<&OrderMsg> {
        self.received.as_ref()
    }

    pub fn prelim(&self) -> Option<Decision> {
        self.prelim
    }

    pub fn final_decision(&self) -> Option<Decision> {
        self.final_decision
    }

    pub fn relays(&self) -> &BTreeMap<usize, RelayMsg> {
        &self.relays
    }

    /// Decision sets as this lieutenant saw them at the end of round 2.
    pub fn round2_sets(&self) -> Option<&DecisionSets> {
        self.round2_sets.as_ref()
    }

    pub fn take_events(&mut self) -> Vec<StateEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn receive_relay(&mut self, from: usize, msg: RelayMsg) -> Result<()> {
        if from == self.index || from >= self.register.shape().width() {
            return Err(Error::ProtocolViolation(format!(
                "LT{} got a relay from LT{from}",
                self.index
            )));
        }
        if self.relays.insert(from, msg).is_some() {
            self.events.push(StateEvent::Violation {
                round: 3,
                message: format!("duplicate relay from LT{from}; keeping the last"),
            });
        }
        Ok(())
    }

    /// Forces an abort without running the checks.
    pub fn abort_unverified(&mut self) {
        self.prelim = Some(Decision::Abort);
        self.final_decision = Some(Decision::Abort);
        self.events.push(StateEvent::Rule {
            round: 2,
            rule: Rule::Unverified,
            decision: Decision::Abort,
        });
    }

    fn rule(&mut self, round: u8, rule: Rule, decision: Decision) -> Decision {
        self.events.push(StateEvent::Rule {
            round,
            rule,
            decision,
        });
        decision
    }

    fn claims(&mut self) -> BTreeMap<usize, Claim> {
        let shape = self.register.shape();
        let mut claims = BTreeMap::new();
        for j in (0..shape.width()).filter(|&j| j != self.index) {
            let claim = match self.relays.get(&j) {
                Some(r) if r.vector.is_well_sized() && r.vector.shape() == shape => Claim {
                    decision: r.prelim,
                    vector: r.vector.clone(),
                },
                Some(_) => {
                    self.events.push(StateEvent::Violation {
                        round: 3,
                        message: format!("malformed relay from LT{j}"),
                    });
                    Claim {
                        decision: Decision::Abort,
                        vector: CommandVector::empty(shape),
                    }
                }
                None => {
                    self.events.push(StateEvent::Violation {
                        round: 3,
                        message: format!("no relay from LT{j}"),
                    });
                    Claim {
                        decision: Decision::Abort,
                        vector: CommandVector::empty(shape),
                    }
                }
            };
            claims.insert(j, claim);
        }
        claims
    }
}

/// Round 2: check the commander's vector, fix the preliminary decision and
/// build the relays to every other lieutenant.
pub fn lieutenant_round2(
    state: &mut LieutenantState,
    msg: Option<&OrderMsg>,
    policy: &TolerancePolicy,
) -> Result<(Decision, Vec<RoundMessage>)> {
    if state.prelim.is_some() {
        return Err(Error::ProtocolViolation(format!(
            "LT{} already decided in round 2",
            state.index
        )));
    }
    let shape = state.register.shape();
    let i = state.index;
    let prelim = match msg {
        None => {
            state.events.push(StateEvent::Violation {
                round: 2,
                message: "no order from the commander".into(),
            });
            state.rule(2, Rule::PrelimAbort, Decision::Abort)
        }
        Some(m) => match check_alice(i, m.order, &m.vector, &state.register, policy) {
            Ok(verdict) => {
                let passed = verdict.passed();
                state.events.push(StateEvent::Check {
                    round: 2,
                    subject: General::Commander,
                    claimed: Decision::from_order(m.order),
                    verdict,
                });
                if passed {
                    state.rule(2, Rule::PrelimAccept, Decision::from_order(m.order))
                } else {
                    state.rule(2, Rule::PrelimAbort, Decision::Abort)
                }
            }
            Err(Error::ShapeMismatch { expected, found }) => {
                state.events.push(StateEvent::Violation {
                    round: 2,
                    message: format!("order vector has {found} symbols, expected {expected}"),
                });
                state.rule(2, Rule::PrelimAbort, Decision::Abort)
            }
            Err(e) => return Err(e),
        },
    };
    state.received = msg.cloned();
    state.prelim = Some(prelim);
    let vector = msg.map_or_else(|| CommandVector::empty(shape), |m| m.vector.clone());
    let relays = (0..shape.width())
        .filter(|&j| j != i)
        .map(|j| {
            RoundMessage::relay(
                i,
                j,
                RelayMsg {
                    prelim,
                    vector: vector.clone(),
                },
            )
        })
        .collect();
    Ok((prelim, relays))
}

/// Round 3: rules 3.1 to 3.8 over the relays this lieutenant received.
pub fn lieutenant_round3(
    state: &mut LieutenantState,
    policy: &TolerancePolicy,
) -> Result<Decision> {
    let own = state.prelim.ok_or_else(|| {
        Error::ProtocolViolation(format!("LT{} reached round 3 without round 2", state.index))
    })?;
    if state.final_decision.is_some() {
        return Err(Error::ProtocolViolation(format!(
            "LT{} already decided",
            state.index
        )));
    }
    let i = state.index;
    let claims = state.claims();
    let mut decisions: BTreeMap<usize, Decision> =
        claims.iter().map(|(&j, c)| (j, c.decision)).collect();
    decisions.insert(i, own);
    let sets = classify_decisions(&decisions);
    state.round2_sets = Some(sets.clone());

    let decision = if claims.values().all(|c| c.decision == own) {
        state.rule(3, Rule::R3_1, own)
    } else {
        match own.order() {
            Some(c) => {
                let opposing = sets.for_order(!c);
                if opposing.is_empty() {
                    state.rule(3, Rule::R3_2, own)
                } else {
                    let own_vector = state
                        .received
                        .as_ref()
                        .map(|m| m.vector.clone())
                        .expect("an order-holding lieutenant kept its vector");
                    let mut any_valid = false;
                    for &j in opposing {
                        let verdict =
                            check_lt_with_cv(i, j, !c, &claims[&j].vector, &own_vector, policy)?;
                        any_valid |= verdict.passed();
                        state.events.push(StateEvent::Check {
                            round: 3,
                            subject: General::Lieutenant(j),
                            claimed: Decision::from_order(!c),
                            verdict,
                        });
                    }
                    if any_valid {
                        state.rule(3, Rule::R3_3, Decision::Abort)
                    } else {
                        state.rule(3, Rule::R3_4, own)
                    }
                }
            }
            None => {
                let mut valid = [false; 2];
                for order in [false, true] {
                    for &j in sets.for_order(order) {
                        let verdict = check_lt_with_bv(
                            i,
                            j,
                            order,
                            &claims[&j].vector,
                            &state.register,
                            policy,
                        )?;
                        valid[usize::from(order)] |= verdict.passed();
                        state.events.push(StateEvent::Check {
                            round: 3,
                            subject: General::Lieutenant(j),
                            claimed: Decision::from_order(order),
                            verdict,
                        });
                    }
                }
                let both_claimed = !sets.zero.is_empty() && !sets.one.is_empty();
                match (valid[0], valid[1], both_claimed) {
                    (true, false, false) => state.rule(3, Rule::R3_5, Decision::Zero),
                    (false, true, false) => state.rule(3, Rule::R3_5, Decision::One),
                    (false, false, false) => state.rule(3, Rule::R3_6, Decision::Abort),
                    (true, false, true) => state.rule(3, Rule::R3_7, Decision::Zero),
                    (false, true, true) => state.rule(3, Rule::R3_7, Decision::One),
                    (_, _, true) => state.rule(3, Rule::R3_8, Decision::Abort),
                    (true, true, false) => {
                        unreachable!("valid vectors on both sides imply both sides claimed")
                    }
                }
            }
        }
    };
    state.final_decision = Some(decision);
    Ok(decision)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LieutenantOutcome {
    pub index: usize,
    pub loyal: bool,
    pub prelim: Option<Decision>,
    pub final_decision: Option<Decision>,
}

/// Result of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub run_id: u64,
    pub config: ProtocolConfig,
    pub order: bool,
    pub commander_loyal: bool,
    pub lieutenants: Vec<LieutenantOutcome>,
    /// Checks by loyal lieutenants that accepted a vector a traitor made up
    /// or relabelled.
    pub forgery_passes: usize,
    pub trace: TraceLog,
}

impl Outcome {
    pub fn loyal_lieutenants(&self) -> BTreeSet<usize> {
        self.lieutenants
            .iter()
            .filter(|l| l.loyal)
            .map(|l| l.index)
            .collect()
    }

    pub fn finals(&self) -> BTreeMap<usize, Decision> {
        self.lieutenants
            .iter()
            .filter_map(|l| l.final_decision.map(|d| (l.index, d)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbaVerdict {
    /// All loyal lieutenants share one final decision.
    pub consistency: bool,
    /// With a loyal commander, every loyal lieutenant follows her order or aborts.
    pub validity: bool,
    /// With a loyal commander, every loyal lieutenant follows her order.
    pub order_followed: bool,
    /// Set when everyone is loyal: every lieutenant decided the order.
    pub all_loyal_agreement: Option<bool>,
}

pub fn evaluate_dba(
    outcome: &Outcome,
    loyal_set: &BTreeSet<usize>,
    commander_loyal: bool,
    order: bool,
) -> Result<DbaVerdict> {
    if loyal_set.is_empty() {
        return Err(Error::UndefinedVerdict("no loyal lieutenant".into()));
    }
    let finals = outcome.finals();
    let decided = loyal_set
        .iter()
        .map(|i| {
            finals.get(i).copied().ok_or_else(|| {
                Error::UndefinedVerdict(format!("loyal LT{i} has no final decision"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let first = decided[0];
    let consistency = decided.iter().all(|&d| d == first);
    let wanted = Decision::from_order(order);
    let validity = !commander_loyal || decided.iter().all(|&d| d == wanted || d == Decision::Abort);
    let order_followed = !commander_loyal || decided.iter().all(|&d| d == wanted);
    let everyone_loyal = commander_loyal && loyal_set.len() == outcome.lieutenants.len();
    Ok(DbaVerdict {
        consistency,
        validity,
        order_followed,
        all_loyal_agreement: everyone_loyal.then(|| decided.iter().all(|&d| d == wanted)),
    })
}

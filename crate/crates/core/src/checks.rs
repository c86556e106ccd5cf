//! Consistency checks run by lieutenants.
//!
//! - [`check_alice`]: a lieutenant checks the commander's vector against its
//!   own register.
//! - [`check_lt_with_cv`]: a lieutenant holding a consistent vector of its
//!   own checks another lieutenant's vector claiming the opposite order.
//! - [`check_lt_with_bv`]: a lieutenant without a consistent vector checks
//!   another lieutenant's vector against its own register.
//!
//! Every "approximately `m/4`" is a two-sided band of `z` binomial standard
//! deviations around the expected count (see [`approx`]).
//!
//! The cross-vector check passes when the two revealed sets agree up to
//! `sd_max` positions. Genuine vectors from one register reveal identical
//! sets, and a forger has to guess which masked tuples belong in the set. The
//! opposite reading, passing only when the difference is itself close to
//! `m/4`, is available through [`TolerancePolicy::paper_literal`] and lets
//! genuine equivocation go undetected for `m ≥ 64` at `z = 4`.

use serde::{Deserialize, Serialize};

use crate::commandvec::{
    is_structurally_valid, positions_pair, positions_single, symmetric_difference, CommandVector,
};
use crate::registers::Register;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    /// Allowed deviation in binomial standard deviations.
    pub z: f64,
    /// Largest symmetric difference the cross-vector check accepts.
    pub sd_max: usize,
    /// Pass the cross-vector check iff the symmetric difference is near `m/4`.
    #[serde(default)]
    pub paper_literal: bool,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            z: 4.0,
            sd_max: 0,
            paper_literal: false,
        }
    }
}

impl TolerancePolicy {
    pub fn validate(&self) -> Result<()> {
        if self.z.is_finite() && self.z > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "z must be positive and finite, got {}",
                self.z
            )))
        }
    }
}

/// Binomial standard deviation `√(m·p(1-p))`.
pub fn binomial_sd(m: usize, p: f64) -> f64 {
    (m as f64 * p * (1.0 - p)).sqrt()
}

/// `|count - expected| ≤ z·spread`.
pub fn approx(count: usize, expected: f64, spread: f64, policy: &TolerancePolicy) -> bool {
    (count as f64 - expected).abs() <= policy.z * spread
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CheckKind {
    CheckAlice,
    CheckLtWithCv,
    CheckLtWithBv,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::CheckAlice => "CheckAlice",
            CheckKind::CheckLtWithCv => "CheckLTwCV",
            CheckKind::CheckLtWithBv => "CheckLTwBV",
        }
    }
}

/// Which set a cardinality condition counted, e.g. `T[1->0][0->1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SetLabel(pub String);

impl SetLabel {
    fn single(i: usize, x: bool) -> Self {
        SetLabel(format!("T[{i}->{}]", u8::from(x)))
    }

    fn pair(i: usize, x: bool, j: usize, y: bool) -> Self {
        SetLabel(format!("T[{i}->{}][{j}->{}]", u8::from(x), u8::from(y)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum Failure {
    Structure,
    Cardinality {
        set: SetLabel,
        observed: usize,
        expected: f64,
        bound: f64,
    },
    /// The vector agrees with the checker's entangled bit in this tuple.
    BitAgreement {
        tuple: usize,
    },
    SymmetricDifference {
        observed: usize,
        limit: String,
    },
}

impl Failure {
    pub fn label(&self) -> &'static str {
        match self {
            Failure::Structure => "structure",
            Failure::Cardinality { .. } => "cardinality",
            Failure::BitAgreement { .. } => "bit_agreement",
            Failure::SymmetricDifference { .. } => "symmetric_difference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub check: CheckKind,
    pub failure: Option<Failure>,
}

impl CheckVerdict {
    fn pass(check: CheckKind) -> Self {
        CheckVerdict {
            check,
            failure: None,
        }
    }

    fn fail(check: CheckKind, failure: Failure) -> Self {
        CheckVerdict {
            check,
            failure: Some(failure),
        }
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn summary(&self) -> String {
        match &self.failure {
            None => "pass".to_owned(),
            Some(f) => format!("fail:{}", f.label()),
        }
    }
}

struct Cards {
    m: usize,
    quarter_sd: f64,
    half_sd: f64,
}

impl Cards {
    fn new(m: usize) -> Self {
        Cards {
            m,
            quarter_sd: binomial_sd(m, 0.25),
            half_sd: binomial_sd(m, 0.5),
        }
    }

    fn quarter(&self, set: SetLabel, observed: usize, policy: &TolerancePolicy) -> Option<Failure> {
        let expected = self.m as f64 / 4.0;
        (!approx(observed, expected, self.quarter_sd, policy)).then_some(Failure::Cardinality {
            set,
            observed,
            expected,
            bound: policy.z * self.quarter_sd,
        })
    }

    fn half(&self, set: SetLabel, observed: usize, policy: &TolerancePolicy) -> Option<Failure> {
        let expected = self.m as f64 / 2.0;
        (!approx(observed, expected, self.half_sd, policy)).then_some(Failure::Cardinality {
            set,
            observed,
            expected,
            bound: policy.z * self.half_sd,
        })
    }
}

fn first_bit_agreement(v: &CommandVector, l: &Register, i: usize) -> Option<Failure> {
    // a blank never equals a bit
    (0..v.shape().m)
        .find(|&k| v.place(k, i).bit() == Some(l.place(k, i)))
        .map(|tuple| Failure::BitAgreement { tuple })
}

fn ensure_distinct(i: usize, j: usize) -> Result<()> {
    if i == j {
        Err(Error::Usage(format!(
            "checker and sender are both lieutenant {i}"
        )))
    } else {
        Ok(())
    }
}

/// Lieutenant `i` checks the commander's vector `v_a` for order `c` against
/// its own register `l`.
pub fn check_alice(
    i: usize,
    c: bool,
    v_a: &CommandVector,
    l: &Register,
    policy: &TolerancePolicy,
) -> Result<CheckVerdict> {
    let shape = l.shape();
    shape.check_place(i)?;
    v_a.ensure_same_shape(l.bits().len())?;
    let kind = CheckKind::CheckAlice;
    if !is_structurally_valid(v_a, i, c) {
        return Ok(CheckVerdict::fail(kind, Failure::Structure));
    }
    let cards = Cards::new(shape.m);
    let revealed = positions_single(v_a, i, c)?.len();
    if let Some(f) = cards.half(SetLabel::single(i, c), revealed, policy) {
        return Ok(CheckVerdict::fail(kind, f));
    }
    for j in (0..shape.width()).filter(|&j| j != i) {
        for y in [false, true] {
            let count = positions_pair(v_a, i, c, j, y)?.len();
            if let Some(f) = cards.quarter(SetLabel::pair(i, c, j, y), count, policy) {
                return Ok(CheckVerdict::fail(kind, f));
            }
        }
    }
    Ok(first_bit_agreement(v_a, l, i)
        .map_or(CheckVerdict::pass(kind), |f| CheckVerdict::fail(kind, f)))
}

/// Shared structure and cardinality conditions of the two lieutenant checks.
fn sender_conditions(
    kind: CheckKind,
    i: usize,
    j: usize,
    c: bool,
    v: &CommandVector,
    policy: &TolerancePolicy,
) -> Result<Option<CheckVerdict>> {
    if !is_structurally_valid(v, j, c) {
        return Ok(Some(CheckVerdict::fail(kind, Failure::Structure)));
    }
    let cards = Cards::new(v.shape().m);
    for x in [c, !c] {
        let count = positions_pair(v, i, x, j, c)?.len();
        if let Some(f) = cards.quarter(SetLabel::pair(i, x, j, c), count, policy) {
            return Ok(Some(CheckVerdict::fail(kind, f)));
        }
    }
    Ok(None)
}

/// Lieutenant `i`, holding a consistent vector `v_a` for order `¬c`, checks
/// lieutenant `j`'s vector `v` claiming order `c`.
pub fn check_lt_with_cv(
    i: usize,
    j: usize,
    c: bool,
    v: &CommandVector,
    v_a: &CommandVector,
    policy: &TolerancePolicy,
) -> Result<CheckVerdict> {
    let shape = v_a.shape();
    shape.check_place(i)?;
    shape.check_place(j)?;
    ensure_distinct(i, j)?;
    v_a.ensure_same_shape(v.len())?;
    let kind = CheckKind::CheckLtWithCv;
    if let Some(verdict) = sender_conditions(kind, i, j, c, v, policy)? {
        return Ok(verdict);
    }
    let own = positions_pair(v_a, i, !c, j, c)?;
    let theirs = positions_pair(v, i, !c, j, c)?;
    let diff = symmetric_difference(&own, &theirs).len();
    let ok = if policy.paper_literal {
        approx(
            diff,
            shape.m as f64 / 4.0,
            binomial_sd(shape.m, 0.25),
            policy,
        )
    } else {
        diff <= policy.sd_max
    };
    if ok {
        Ok(CheckVerdict::pass(kind))
    } else {
        let limit = if policy.paper_literal {
            format!("~{}", shape.m / 4)
        } else {
            format!("<={}", policy.sd_max)
        };
        Ok(CheckVerdict::fail(
            kind,
            Failure::SymmetricDifference {
                observed: diff,
                limit,
            },
        ))
    }
}

/// Lieutenant `i`, without a consistent vector, checks lieutenant `j`'s
/// vector `v` claiming order `c` against its own register `l`.
pub fn check_lt_with_bv(
    i: usize,
    j: usize,
    c: bool,
    v: &CommandVector,
    l: &Register,
    policy: &TolerancePolicy,
) -> Result<CheckVerdict> {
    let shape = l.shape();
    shape.check_place(i)?;
    shape.check_place(j)?;
    ensure_distinct(i, j)?;
    v.ensure_same_shape(l.bits().len())?;
    let kind = CheckKind::CheckLtWithBv;
    if let Some(verdict) = sender_conditions(kind, i, j, c, v, policy)? {
        return Ok(verdict);
    }
    Ok(first_bit_agreement(v, l, i)
        .map_or(CheckVerdict::pass(kind), |f| CheckVerdict::fail(kind, f)))
}

/// The three-player checks written with the pair sets `ℙ_{x,y}`, where `x`
/// is the bit at Bob's place (1) and `y` the bit at Charlie's place (0).
///
/// Index expressions follow the original three-player formulation verbatim
/// (`ℙ_{c,c}` and `ℙ_{c̄⊕i, c⊕i}`). Structural validation and the
/// cross-vector tolerance rule are shared with the generic checks. These
/// exist to pin the generic checks against the literal formulas.
pub mod three_player {
    use super::*;
    use crate::commandvec::PositionSet;

    pub const BOB: usize = 1;
    pub const CHARLIE: usize = 0;

    /// `ℙ_{x,y}(v)`.
    pub fn pair_positions(v: &CommandVector, x: bool, y: bool) -> Result<PositionSet> {
        positions_pair(v, BOB, x, CHARLIE, y)
    }

    fn ensure_three(v: &CommandVector) -> Result<()> {
        if v.shape().n == 3 {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "three-player check on n = {}",
                v.shape().n
            )))
        }
    }

    /// `(c̄ ⊕ t, c ⊕ t)` for index `t ∈ {0, 1}`.
    fn skew(c: bool, t: usize) -> (bool, bool) {
        let t = t == 1;
        (!c ^ t, c ^ t)
    }

    fn quarter_ok(count: usize, m: usize, policy: &TolerancePolicy) -> bool {
        approx(count, m as f64 / 4.0, binomial_sd(m, 0.25), policy)
    }

    fn bits_differ(v: &CommandVector, l: &Register, i: usize) -> bool {
        (0..v.shape().m).all(|k| v.symbol(2 * k + i).bit() != Some(l.bit(2 * k + i)))
    }

    pub fn check_alice(
        i: usize,
        c: bool,
        v_a: &CommandVector,
        l: &Register,
        policy: &TolerancePolicy,
    ) -> Result<bool> {
        ensure_three(v_a)?;
        v_a.ensure_same_shape(l.bits().len())?;
        if !is_structurally_valid(v_a, i, c) {
            return Ok(false);
        }
        let m = v_a.shape().m;
        let (x, y) = skew(c, i);
        Ok(quarter_ok(pair_positions(v_a, c, c)?.len(), m, policy)
            && quarter_ok(pair_positions(v_a, x, y)?.len(), m, policy)
            && bits_differ(v_a, l, i))
    }

    pub fn check_wcv(
        _i: usize,
        j: usize,
        c: bool,
        v: &CommandVector,
        v_a: &CommandVector,
        policy: &TolerancePolicy,
    ) -> Result<bool> {
        ensure_three(v)?;
        v_a.ensure_same_shape(v.len())?;
        if !is_structurally_valid(v, j, c) {
            return Ok(false);
        }
        let m = v.shape().m;
        let (x, y) = skew(c, j);
        if !(quarter_ok(pair_positions(v, c, c)?.len(), m, policy)
            && quarter_ok(pair_positions(v, x, y)?.len(), m, policy))
        {
            return Ok(false);
        }
        let diff =
            symmetric_difference(&pair_positions(v_a, x, y)?, &pair_positions(v, x, y)?).len();
        Ok(if policy.paper_literal {
            quarter_ok(diff, m, policy)
        } else {
            diff <= policy.sd_max
        })
    }

    pub fn check_wbv(
        i: usize,
        j: usize,
        c: bool,
        v: &CommandVector,
        l: &Register,
        policy: &TolerancePolicy,
    ) -> Result<bool> {
        ensure_three(v)?;
        v.ensure_same_shape(l.bits().len())?;
        if !is_structurally_valid(v, j, c) {
            return Ok(false);
        }
        let m = v.shape().m;
        let (x, y) = skew(c, j);
        Ok(quarter_ok(pair_positions(v, c, c)?.len(), m, policy)
            && quarter_ok(pair_positions(v, x, y)?.len(), m, policy)
            && bits_differ(v, l, i))
    }
}

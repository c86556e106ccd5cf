//! Command vectors and the position-set algebra the checks are built on.
//!
//! A command vector for lieutenant `i` and order `c` is the commander's
//! register with every tuple whose place `i` does not hold `c` replaced by
//! the uncertain tuple `⊔…⊔`. Revealed ("definite") tuples are copied whole.
//!
//! Text encoding uses `'0'`, `'1'` and `'u'`, most significant position
//! first, exactly like [`Register::to_text`](crate::registers::Register::to_text).

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::registers::Register;
use crate::{Error, General, Result, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trit {
    Zero,
    One,
    /// The uncertain symbol `⊔`.
    Blank,
}

impl Trit {
    pub fn bit(self) -> Option<bool> {
        match self {
            Trit::Zero => Some(false),
            Trit::One => Some(true),
            Trit::Blank => None,
        }
    }

    pub fn is_blank(self) -> bool {
        self == Trit::Blank
    }

    pub fn to_char(self) -> char {
        match self {
            Trit::Zero => '0',
            Trit::One => '1',
            Trit::Blank => 'u',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            '0' => Ok(Trit::Zero),
            '1' => Ok(Trit::One),
            'u' => Ok(Trit::Blank),
            other => Err(Error::Parse(format!(
                "unexpected command vector symbol {other:?}"
            ))),
        }
    }
}

impl From<bool> for Trit {
    fn from(b: bool) -> Self {
        if b {
            Trit::One
        } else {
            Trit::Zero
        }
    }
}

/// Claimed addressee and order carried alongside a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VectorMeta {
    pub addressee: usize,
    pub order: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CommandVector {
    shape: Shape,
    symbols: Vec<Trit>,
    meta: Option<VectorMeta>,
}

impl CommandVector {
    pub fn from_symbols(shape: Shape, symbols: Vec<Trit>) -> Result<Self> {
        if symbols.len() != shape.len() {
            return Err(Error::ShapeMismatch {
                expected: shape.len(),
                found: symbols.len(),
            });
        }
        Ok(CommandVector {
            shape,
            symbols,
            meta: None,
        })
    }

    /// A vector with no tuples at all; what a lieutenant relays when it never
    /// heard from the commander. It matches no real shape.
    pub fn empty(shape: Shape) -> Self {
        CommandVector {
            shape,
            symbols: Vec::new(),
            meta: None,
        }
    }

    pub fn all_uncertain(shape: Shape) -> Self {
        CommandVector {
            shape,
            symbols: vec![Trit::Blank; shape.len()],
            meta: None,
        }
    }

    pub fn from_text(shape: Shape, text: &str) -> Result<Self> {
        let symbols = text
            .chars()
            .rev()
            .map(Trit::from_char)
            .collect::<Result<Vec<_>>>()?;
        Self::from_symbols(shape, symbols)
    }

    pub fn with_meta(mut self, meta: Option<VectorMeta>) -> Self {
        self.meta = meta;
        self
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn meta(&self) -> Option<VectorMeta> {
        self.meta
    }

    pub fn symbols(&self) -> &[Trit] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// True when the symbol count matches the `(n - 1)m` layout.
    pub fn is_well_sized(&self) -> bool {
        self.symbols.len() == self.shape.len()
    }

    pub fn symbol(&self, index: usize) -> Trit {
        self.symbols[index]
    }

    pub fn place(&self, tuple: usize, place: usize) -> Trit {
        self.symbols[self.shape.index(tuple, place)]
    }

    pub fn tuple(&self, k: usize) -> &[Trit] {
        let w = self.shape.width();
        &self.symbols[w * k..w * (k + 1)]
    }

    pub fn is_definite(&self, k: usize) -> bool {
        self.tuple(k).iter().all(|t| !t.is_blank())
    }

    pub fn is_uncertain(&self, k: usize) -> bool {
        self.tuple(k).iter().all(|t| t.is_blank())
    }

    pub fn definite_tuples(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.shape.m).filter(move |&k| self.is_definite(k))
    }

    pub fn to_text(&self) -> String {
        self.symbols.iter().rev().map(|t| t.to_char()).collect()
    }

    /// Keeps only the first `len` symbols; models a message cut short in transit.
    pub fn truncated(&self, len: usize) -> Self {
        let mut out = self.clone();
        out.symbols.truncate(len);
        out
    }

    pub(crate) fn symbols_mut(&mut self) -> &mut [Trit] {
        &mut self.symbols
    }

    pub(crate) fn ensure_same_shape(&self, other_len: usize) -> Result<()> {
        if !self.is_well_sized() {
            return Err(Error::ShapeMismatch {
                expected: self.shape.len(),
                found: self.len(),
            });
        }
        if other_len != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                found: other_len,
            });
        }
        Ok(())
    }
}

impl fmt::Display for CommandVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// A set of tuple positions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PositionSet(BTreeSet<usize>);

impl PositionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.contains(&k)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &PositionSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &PositionSet) -> PositionSet {
        PositionSet(self.0.union(&other.0).copied().collect())
    }
}

impl FromIterator<usize> for PositionSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        PositionSet(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[usize; N]> for PositionSet {
    fn from(items: [usize; N]) -> Self {
        items.into_iter().collect()
    }
}

/// Builds the vector lieutenant `i` receives with order `c`.
pub fn build_command_vector(a: &Register, i: usize, c: bool) -> Result<CommandVector> {
    if a.owner() != General::Commander {
        return Err(Error::Usage(format!(
            "command vectors are built from the commander's register, not {}",
            a.owner()
        )));
    }
    let shape = a.shape();
    shape.check_place(i)?;
    let mut symbols = Vec::with_capacity(shape.len());
    for k in 0..shape.m {
        let tuple = a.tuple(k);
        if tuple[i] == c {
            symbols.extend(tuple.iter().map(|&b| Trit::from(b)));
        } else {
            symbols.extend(std::iter::repeat_n(Trit::Blank, tuple.len()));
        }
    }
    Ok(CommandVector {
        shape,
        symbols,
        meta: Some(VectorMeta {
            addressee: i,
            order: c,
        }),
    })
}

/// `𝕋^{i→x}`: definite tuples carrying `x` at place `i`.
pub fn positions_single(v: &CommandVector, i: usize, x: bool) -> Result<PositionSet> {
    v.shape.check_place(i)?;
    v.ensure_same_shape(v.shape.len())?;
    Ok(v.definite_tuples()
        .filter(|&k| v.place(k, i).bit() == Some(x))
        .collect())
}

/// `𝕋^{i→x}_{j→y}`: definite tuples carrying `x` at place `i` and `y` at `j`.
pub fn positions_pair(
    v: &CommandVector,
    i: usize,
    x: bool,
    j: usize,
    y: bool,
) -> Result<PositionSet> {
    v.shape.check_place(i)?;
    v.shape.check_place(j)?;
    if i == j {
        return Err(Error::Usage(format!(
            "pair positions need distinct places, got {i} twice"
        )));
    }
    v.ensure_same_shape(v.shape.len())?;
    Ok(v.definite_tuples()
        .filter(|&k| v.place(k, i).bit() == Some(x) && v.place(k, j).bit() == Some(y))
        .collect())
}

pub fn symmetric_difference(s1: &PositionSet, s2: &PositionSet) -> PositionSet {
    PositionSet(s1.0.symmetric_difference(&s2.0).copied().collect())
}

/// Every tuple is wholly definite or wholly uncertain, and every definite
/// tuple carries `c` at place `i`.
pub fn is_structurally_valid(v: &CommandVector, i: usize, c: bool) -> bool {
    if !v.is_well_sized() || i >= v.shape.width() {
        return false;
    }
    (0..v.shape.m).all(|k| {
        if v.is_uncertain(k) {
            true
        } else if v.is_definite(k) {
            v.place(k, i).bit() == Some(c)
        } else {
            false
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOB: usize = 1;
    const CHARLIE: usize = 0;

    fn shape3() -> Shape {
        Shape::new(3, 4).unwrap()
    }

    // pairs written k = 3..0: 11 01 00 10
    fn worked_register() -> Register {
        Register::from_text(General::Commander, shape3(), "11010010").unwrap()
    }

    #[test]
    fn worked_example_for_bob() {
        let v = build_command_vector(&worked_register(), BOB, false).unwrap();
        assert_eq!(v.to_text(), "uu0100uu");
        assert_eq!(
            v.meta(),
            Some(VectorMeta {
                addressee: BOB,
                order: false
            })
        );
        // ℙ_{x,y} = 𝕋^{Bob→x}_{Charlie→y}
        assert_eq!(
            positions_pair(&v, BOB, false, CHARLIE, false).unwrap(),
            PositionSet::from([1])
        );
        assert_eq!(
            positions_pair(&v, BOB, false, CHARLIE, true).unwrap(),
            PositionSet::from([2])
        );
        assert_eq!(
            positions_single(&v, BOB, false).unwrap(),
            PositionSet::from([1, 2])
        );
    }

    #[test]
    fn text_round_trip() {
        let v = CommandVector::from_text(shape3(), "uu0100uu").unwrap();
        assert_eq!(v.to_text(), "uu0100uu");
        assert!(v.is_uncertain(0) && v.is_definite(1) && v.is_uncertain(3));
        assert!(CommandVector::from_text(shape3(), "uu01x0uu").is_err());
        assert!(matches!(
            CommandVector::from_text(shape3(), "uu01"),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn degenerate_register_reveals_everything() {
        let a = Register::from_text(General::Commander, shape3(), "01010101").unwrap();
        let v = build_command_vector(&a, CHARLIE, true).unwrap();
        assert_eq!(v.to_text(), a.to_text());
    }

    #[test]
    fn builder_rejects_bad_inputs() {
        let a = worked_register();
        assert!(matches!(
            build_command_vector(&a, 2, true),
            Err(Error::IndexOutOfRange { .. })
        ));
        let l = Register::from_text(General::Lieutenant(0), shape3(), "11010010").unwrap();
        assert!(matches!(
            build_command_vector(&l, 0, true),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn all_uncertain_has_no_positions() {
        let v = CommandVector::all_uncertain(shape3());
        assert!(positions_single(&v, 0, false).unwrap().is_empty());
        assert!(positions_single(&v, 1, true).unwrap().is_empty());
    }

    #[test]
    fn pair_with_same_place_is_usage_error() {
        let v = CommandVector::all_uncertain(shape3());
        assert!(matches!(
            positions_pair(&v, 1, true, 1, false),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn symmetric_difference_basics() {
        let s = PositionSet::from([1, 2]);
        assert!(symmetric_difference(&s, &s).is_empty());
        assert_eq!(
            symmetric_difference(&s, &PositionSet::from([2, 3])),
            PositionSet::from([1, 3])
        );
    }

    #[test]
    fn structural_validity() {
        let a = worked_register();
        for i in 0..2 {
            for c in [false, true] {
                assert!(is_structurally_valid(
                    &build_command_vector(&a, i, c).unwrap(),
                    i,
                    c
                ));
            }
        }
        let mixed = CommandVector::from_text(shape3(), "u10100uu").unwrap();
        assert!(!is_structurally_valid(&mixed, BOB, false));
        // tuple 2 carries 1 at Bob's place while claiming order 0
        let wrong = CommandVector::from_text(shape3(), "uu1100uu").unwrap();
        assert!(!is_structurally_valid(&wrong, BOB, false));
        assert!(!is_structurally_valid(
            &CommandVector::empty(shape3()),
            BOB,
            false
        ));
    }

    /// Every register at n = 3, m = 4, by brute force.
    fn all_registers() -> impl Iterator<Item = Register> {
        (0u32..256).map(|word| {
            let bits = (0..8).map(|b| (word >> b) & 1 == 1).collect();
            Register::from_bits(General::Commander, shape3(), bits).unwrap()
        })
    }

    #[test]
    fn genuine_cross_vectors_reveal_identical_sets() {
        for a in all_registers() {
            let zero_b = build_command_vector(&a, BOB, false).unwrap();
            let one_c = build_command_vector(&a, CHARLIE, true).unwrap();
            let p01_b = positions_pair(&zero_b, BOB, false, CHARLIE, true).unwrap();
            let p01_c = positions_pair(&one_c, BOB, false, CHARLIE, true).unwrap();
            assert!(symmetric_difference(&p01_b, &p01_c).is_empty());
            // and the set is exactly the 01 pairs of a
            let direct: PositionSet = (0..4)
                .filter(|&k| !a.place(k, BOB) && a.place(k, CHARLIE))
                .collect();
            assert_eq!(p01_b, direct);
        }
    }

    #[test]
    fn brute_force_matches_hand_definition() {
        // independent of build_command_vector: decide revealed tuples straight from a
        for a in all_registers() {
            for i in 0..2 {
                for c in [false, true] {
                    let v = build_command_vector(&a, i, c).unwrap();
                    for k in 0..4 {
                        let revealed = a.place(k, i) == c;
                        assert_eq!(v.is_definite(k), revealed);
                        assert_eq!(v.is_uncertain(k), !revealed);
                        if revealed {
                            assert_eq!(v.place(k, 0).bit(), Some(a.place(k, 0)));
                            assert_eq!(v.place(k, 1).bit(), Some(a.place(k, 1)));
                        }
                    }
                }
            }
        }
    }

    mod props {
        use proptest::prelude::*;

        use super::*;

        fn register(n: usize, m: usize) -> impl Strategy<Value = Register> {
            proptest::collection::vec(any::<bool>(), (n - 1) * m).prop_map(move |bits| {
                Register::from_bits(General::Commander, Shape::new(n, m).unwrap(), bits).unwrap()
            })
        }

        proptest! {
            #[test]
            fn revealed_tuples_round_trip(a in (3usize..7).prop_flat_map(|n| register(n, 8)), c in any::<bool>()) {
                let width = a.shape().width();
                for i in 0..width {
                    let v = build_command_vector(&a, i, c).unwrap();
                    prop_assert!(is_structurally_valid(&v, i, c));
                    for k in v.definite_tuples() {
                        let bits: Vec<bool> = v.tuple(k).iter().map(|t| t.bit().unwrap()).collect();
                        prop_assert_eq!(&bits[..], a.tuple(k));
                    }
                    let t0 = positions_single(&v, i, c).unwrap();
                    prop_assert!(positions_single(&v, i, !c).unwrap().is_empty());
                    for j in (0..width).filter(|&j| j != i) {
                        let y0 = positions_pair(&v, i, c, j, false).unwrap();
                        let y1 = positions_pair(&v, i, c, j, true).unwrap();
                        prop_assert!(y0.is_subset(&t0));
                        prop_assert!(symmetric_difference(&y0, &y1).len() == y0.len() + y1.len());
                        prop_assert_eq!(y0.union(&y1), t0.clone());
                    }
                }
            }

            #[test]
            fn genuine_pairs_have_empty_difference(a in (3usize..7).prop_flat_map(|n| register(n, 8)), c in any::<bool>()) {
                let width = a.shape().width();
                for i in 0..width {
                    for j in (0..width).filter(|&j| j != i) {
                        let own = build_command_vector(&a, i, !c).unwrap();
                        let other = build_command_vector(&a, j, c).unwrap();
                        let s_own = positions_pair(&own, i, !c, j, c).unwrap();
                        let s_other = positions_pair(&other, i, !c, j, c).unwrap();
                        prop_assert!(symmetric_difference(&s_own, &s_other).is_empty());
                    }
                }
            }

            #[test]
            fn text_encoding_round_trips(symbols in proptest::collection::vec(0u8..3, 12)) {
                let shape = Shape::new(4, 4).unwrap();
                let trits = symbols.iter().map(|s| match s { 0 => Trit::Zero, 1 => Trit::One, _ => Trit::Blank }).collect();
                let v = CommandVector::from_symbols(shape, trits).unwrap();
                prop_assert_eq!(CommandVector::from_text(shape, &v.to_text()).unwrap(), v);
            }
        }
    }
}

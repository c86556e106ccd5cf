use std::fmt;

use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Identity of a party. Lieutenants are numbered `0 ..= n - 2`.
///
/// Serialized as `"A"` for the commander and `"LT<i>"` for lieutenants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum General {
    Commander,
    Lieutenant(usize),
}

impl General {
    pub fn lieutenant_index(self) -> Option<usize> {
        match self {
            General::Commander => None,
            General::Lieutenant(i) => Some(i),
        }
    }
}

impl fmt::Display for General {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            General::Commander => f.write_str("A"),
            General::Lieutenant(i) => write!(f, "LT{i}"),
        }
    }
}

impl FromStr for General {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "A" {
            return Ok(General::Commander);
        }
        s.strip_prefix("LT")
            .and_then(|rest| rest.parse().ok())
            .map(General::Lieutenant)
            .ok_or_else(|| Error::Parse(format!("unknown general {s:?}")))
    }
}

impl Serialize for General {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for General {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Tuple layout shared by registers and command vectors: `m` tuples of
/// `n - 1` places, with place `p` of tuple `k` at flat index `(n - 1)k + p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub n: usize,
    pub m: usize,
}

impl Shape {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!(
                "need at least 3 generals, got n = {n}"
            )));
        }
        if m < 4 || !m.is_multiple_of(4) {
            return Err(Error::Config(format!(
                "m must be a positive multiple of 4, got m = {m}"
            )));
        }
        Ok(Shape { n, m })
    }

    /// Places per tuple, which is also the number of lieutenants.
    #[inline]
    pub fn width(&self) -> usize {
        self.n - 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width() * self.m
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, tuple: usize, place: usize) -> usize {
        self.width() * tuple + place
    }

    pub fn check_place(&self, place: usize) -> Result<()> {
        if place < self.width() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: place,
                limit: self.width(),
            })
        }
    }
}

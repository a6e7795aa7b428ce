//! Travel alternatives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The seven travel alternatives. Discriminants are the serialized indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeId {
    Walk = 0,
    Bike = 1,
    Car = 2,
    Transit = 3,
    Taxi = 4,
    #[serde(rename = "ab")]
    AB = 5,
    #[serde(rename = "abpt")]
    ABPT = 6,
}

pub const N_MODES: usize = 7;

/// Modes a reference trip can originate from (everything except the autonomous options).
pub const ORIGIN_MODES: [ModeId; 5] = [
    ModeId::Walk,
    ModeId::Bike,
    ModeId::Car,
    ModeId::Transit,
    ModeId::Taxi,
];

impl ModeId {
    pub const ALL: [ModeId; N_MODES] = [
        ModeId::Walk,
        ModeId::Bike,
        ModeId::Car,
        ModeId::Transit,
        ModeId::Taxi,
        ModeId::AB,
        ModeId::ABPT,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<ModeId> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeId::Walk => "walk",
            ModeId::Bike => "bike",
            ModeId::Car => "car",
            ModeId::Transit => "transit",
            ModeId::Taxi => "taxi",
            ModeId::AB => "ab",
            ModeId::ABPT => "abpt",
        }
    }

    /// True for the two autonomous-bicycle alternatives.
    pub fn is_autonomous(self) -> bool {
        matches!(self, ModeId::AB | ModeId::ABPT)
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModeId {
    type Err = Error;

    /// Accepts either the lowercase name or the numeric index.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Ok(i) = t.parse::<usize>() {
            return ModeId::from_index(i).ok_or_else(|| Error::domain(format!("unknown mode index {i}")));
        }
        match t.to_ascii_lowercase().as_str() {
            "walk" => Ok(ModeId::Walk),
            "bike" => Ok(ModeId::Bike),
            "car" => Ok(ModeId::Car),
            "transit" | "pt" => Ok(ModeId::Transit),
            "taxi" => Ok(ModeId::Taxi),
            "ab" => Ok(ModeId::AB),
            "abpt" => Ok(ModeId::ABPT),
            other => Err(Error::domain(format!("unknown mode `{other}`"))),
        }
    }
}

/// Bitmask over the seven modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Availability(u8);

impl Availability {
    pub const NONE: Availability = Availability(0);

    pub fn from_modes(modes: &[ModeId]) -> Self {
        Availability(modes.iter().fold(0u8, |acc, m| acc | (1 << m.index())))
    }

    /// The stated-preference layout: the respondent's own mode plus both autonomous options.
    pub fn sp_task(original: ModeId) -> Self {
        Self::from_modes(&[original, ModeId::AB, ModeId::ABPT])
    }

    pub fn all() -> Self {
        Availability(0x7f)
    }

    #[inline]
    pub fn contains(self, m: ModeId) -> bool {
        self.0 & (1 << m.index()) != 0
    }

    #[inline]
    pub fn contains_index(self, i: usize) -> bool {
        i < N_MODES && self.0 & (1 << i) != 0
    }

    pub fn insert(&mut self, m: ModeId) {
        self.0 |= 1 << m.index();
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = ModeId> {
        ModeId::ALL.into_iter().filter(move |m| self.contains(*m))
    }

    pub fn bits(self) -> u8 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_are_stable() {
        for (i, m) in ModeId::ALL.iter().enumerate() {
            assert_eq!(m.index(), i);
            assert_eq!(ModeId::from_index(i), Some(*m));
            assert_eq!(m.name().parse::<ModeId>().unwrap(), *m);
            assert_eq!(i.to_string().parse::<ModeId>().unwrap(), *m);
        }
        assert!(ModeId::from_index(7).is_none());
    }

    #[test]
    fn sp_availability() {
        let a = Availability::sp_task(ModeId::Car);
        assert_eq!(a.len(), 3);
        assert!(a.contains(ModeId::AB) && a.contains(ModeId::ABPT) && a.contains(ModeId::Car));
        assert!(!a.contains(ModeId::Walk));
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![ModeId::Car, ModeId::AB, ModeId::ABPT]);
    }
}

//! Leg identifiers and the fixed leg ordering used by every per-leg array.

use serde::{Deserialize, Serialize};

/// The four legs in the fixed order used throughout the crate:
/// right front, left front, right hind, left hind.
///
/// Every `[T; 4]` that is indexed per leg follows this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Leg {
    RightFront,
    LeftFront,
    RightHind,
    LeftHind,
}

impl Leg {
    /// All legs, in canonical order (RF, LF, RH, LH).
    pub const ALL: [Leg; 4] = [
        Leg::RightFront,
        Leg::LeftFront,
        Leg::RightHind,
        Leg::LeftHind,
    ];

    /// Index into per-leg arrays.
    pub const fn index(self) -> usize {
        match self {
            Leg::RightFront => 0,
            Leg::LeftFront => 1,
            Leg::RightHind => 2,
            Leg::LeftHind => 3,
        }
    }

    /// Short label used in CSV headers and reports.
    pub const fn label(self) -> &'static str {
        match self {
            Leg::RightFront => "RF",
            Leg::LeftFront => "LF",
            Leg::RightHind => "RH",
            Leg::LeftHind => "LH",
        }
    }

    /// Parse a short label (case-insensitive).
    pub fn from_label(s: &str) -> Option<Leg> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RF" => Some(Leg::RightFront),
            "LF" => Some(Leg::LeftFront),
            "RH" => Some(Leg::RightHind),
            "LH" => Some(Leg::LeftHind),
            _ => None,
        }
    }

    /// The leg diagonally opposite this one.
    pub const fn diagonal(self) -> Leg {
        match self {
            Leg::RightFront => Leg::LeftHind,
            Leg::LeftFront => Leg::RightHind,
            Leg::RightHind => Leg::LeftFront,
            Leg::LeftHind => Leg::RightFront,
        }
    }
}

/// Whether a foot is airborne or load-bearing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LegMode {
    Swing,
    Stance,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_labels_round_trip() {
        for (i, leg) in Leg::ALL.iter().enumerate() {
            assert_eq!(leg.index(), i);
            assert_eq!(Leg::from_label(leg.label()), Some(*leg));
        }
        assert_eq!(Leg::from_label("xx"), None);
    }

    #[test]
    fn diagonals_pair_up() {
        for leg in Leg::ALL {
            assert_eq!(leg.diagonal().diagonal(), leg);
            assert_ne!(leg.diagonal(), leg);
        }
    }
}

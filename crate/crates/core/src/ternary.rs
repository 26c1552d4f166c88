//! The three-valued truth domain.

use core::fmt;
use core::ops::{BitAnd, BitOr, Not};

/// A truth value of the three-valued logic, ordered
/// `False < Unknown < True`.
///
/// `Unknown` marks a value that cannot be decided on a finite truncation.
/// The connectives are the lattice meet, join and complement; the truth
/// tables are spelled out explicitly rather than derived from `Option<bool>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ternary {
    False,
    Unknown,
    True,
}

impl Ternary {
    pub const ALL: [Ternary; 3] = [Ternary::False, Ternary::Unknown, Ternary::True];

    /// Lattice meet.
    pub fn and(self, other: Ternary) -> Ternary {
        use Ternary::*;
        match (self, other) {
            (False, _) | (_, False) => False,
            (Unknown, _) | (_, Unknown) => Unknown,
            (True, True) => True,
        }
    }

    /// Lattice join.
    pub fn or(self, other: Ternary) -> Ternary {
        use Ternary::*;
        match (self, other) {
            (True, _) | (_, True) => True,
            (Unknown, _) | (_, Unknown) => Unknown,
            (False, False) => False,
        }
    }

    /// Complement; fixes `Unknown`.
    pub fn complement(self) -> Ternary {
        match self {
            Ternary::True => Ternary::False,
            Ternary::False => Ternary::True,
            Ternary::Unknown => Ternary::Unknown,
        }
    }

    pub fn is_decided(self) -> bool {
        self != Ternary::Unknown
    }

    /// `true` for `True` and `Unknown`, i.e. "not definitely false".
    pub fn possibly(self) -> bool {
        self != Ternary::False
    }

    /// `true` only for `True`.
    pub fn definitely(self) -> bool {
        self == Ternary::True
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Ternary::True => "true",
            Ternary::False => "false",
            Ternary::Unknown => "unknown",
        }
    }
}

impl From<bool> for Ternary {
    fn from(b: bool) -> Self {
        if b {
            Ternary::True
        } else {
            Ternary::False
        }
    }
}

impl BitAnd for Ternary {
    type Output = Ternary;
    fn bitand(self, rhs: Ternary) -> Ternary {
        self.and(rhs)
    }
}

impl BitOr for Ternary {
    type Output = Ternary;
    fn bitor(self, rhs: Ternary) -> Ternary {
        self.or(rhs)
    }
}

impl Not for Ternary {
    type Output = Ternary;
    fn not(self) -> Ternary {
        self.complement()
    }
}

impl fmt::Display for Ternary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn t_and(a: Ternary, b: Ternary) -> Ternary {
    a.and(b)
}

pub fn t_or(a: Ternary, b: Ternary) -> Ternary {
    a.or(b)
}

pub fn t_not(a: Ternary) -> Ternary {
    a.complement()
}

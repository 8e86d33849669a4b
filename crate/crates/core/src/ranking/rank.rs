use std::fmt;

use thiserror::Error;

/// Degree of surprise: a natural number below 2^63, or infinity.
///
/// The derived ordering places every finite rank below [`Rank::Infinite`],
/// so `min`/`max` behave as expected on the extended naturals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rank {
    Finite(u64),
    Infinite,
}

/// Largest representable finite rank.
pub const MAX_FINITE: u64 = (1 << 63) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum RankError {
    #[error("rank arithmetic overflow")]
    Overflow,
    #[error("undefined rank arithmetic: {0}")]
    Undefined(&'static str),
}

impl Rank {
    pub const ZERO: Rank = Rank::Finite(0);
    pub const INF: Rank = Rank::Infinite;

    /// Builds a finite rank, rejecting values at or above 2^63.
    pub fn new(value: u64) -> Result<Rank, RankError> {
        if value > MAX_FINITE {
            Err(RankError::Overflow)
        } else {
            Ok(Rank::Finite(value))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Rank::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        !self.is_finite()
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Rank::Finite(n) => Some(n),
            Rank::Infinite => None,
        }
    }

    pub fn checked_add(self, other: Rank) -> Result<Rank, RankError> {
        match (self, other) {
            (Rank::Finite(a), Rank::Finite(b)) => {
                a.checked_add(b).ok_or(RankError::Overflow).and_then(Rank::new)
            }
            _ => Ok(Rank::Infinite),
        }
    }

    pub fn checked_sub(self, other: Rank) -> Result<Rank, RankError> {
        match (self, other) {
            (Rank::Finite(a), Rank::Finite(b)) => a
                .checked_sub(b)
                .map(Rank::Finite)
                .ok_or(RankError::Undefined("negative rank")),
            (Rank::Infinite, Rank::Finite(_)) => Ok(Rank::Infinite),
            (Rank::Finite(_), Rank::Infinite) => {
                Err(RankError::Undefined("finite minus infinity"))
            }
            (Rank::Infinite, Rank::Infinite) => {
                Err(RankError::Undefined("infinity minus infinity"))
            }
        }
    }
}

impl From<u32> for Rank {
    fn from(value: u32) -> Self {
        Rank::Finite(u64::from(value))
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank::Finite(n) => write!(f, "{n}"),
            Rank::Infinite => f.write_str("inf"),
        }
    }
}

use std::fmt;

use crate::ranking::Rank;

/// Runtime value of a numerical expression: an integer or infinity.
///
/// Infinity only arises from literals and `rank` expressions. Ordering puts
/// every integer below infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Inf,
}

impl Value {
    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(n),
            Value::Inf => None,
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

impl From<Rank> for Value {
    fn from(r: Rank) -> Self {
        match r {
            // finite ranks are below 2^63
            Rank::Finite(n) => Value::Int(n as i64),
            Rank::Infinite => Value::Inf,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Inf => f.write_str("inf"),
        }
    }
}

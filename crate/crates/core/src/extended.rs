use std::cmp::Ordering;
use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::Scalar;

/// A point of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal<T> {
    NegInf,
    Finite(T),
    PosInf,
}

impl<T: Scalar> ExtendedReal<T> {
    pub fn zero() -> Self {
        ExtendedReal::Finite(T::zero())
    }

    /// Wraps a float, mapping IEEE infinities onto the matching tag.
    pub fn from_float(x: T) -> Self {
        if x == T::infinity() {
            ExtendedReal::PosInf
        } else if x == T::neg_infinity() {
            ExtendedReal::NegInf
        } else {
            ExtendedReal::Finite(x)
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(&self) -> Option<T> {
        match self {
            ExtendedReal::Finite(x) => Some(*x),
            _ => None,
        }
    }

    /// IEEE view; infinities become `±inf`.
    pub fn to_float(&self) -> T {
        match self {
            ExtendedReal::NegInf => T::neg_infinity(),
            ExtendedReal::Finite(x) => *x,
            ExtendedReal::PosInf => T::infinity(),
        }
    }

    pub fn neg(self) -> Self {
        match self {
            ExtendedReal::NegInf => ExtendedReal::PosInf,
            ExtendedReal::Finite(x) => ExtendedReal::Finite(-x),
            ExtendedReal::PosInf => ExtendedReal::NegInf,
        }
    }

    /// Sum of two nonnegative extended values.
    pub fn add_nonneg(self, other: Self) -> Self {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            (ExtendedReal::PosInf, _) | (_, ExtendedReal::PosInf) => ExtendedReal::PosInf,
            _ => panic!("add_nonneg called with a negative infinity"),
        }
    }

    /// `weight * self` for a weight in `[0, 1]`, with `0 * inf = 0`.
    pub fn weighted(self, weight: T) -> Self {
        if weight == T::zero() {
            return ExtendedReal::zero();
        }
        match self {
            ExtendedReal::Finite(x) => ExtendedReal::Finite(weight * x),
            other => other,
        }
    }
}

impl<T: Scalar> PartialOrd for ExtendedReal<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtendedReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Some(Ordering::Equal),
            (NegInf, _) | (_, PosInf) => Some(Ordering::Less),
            (_, NegInf) | (PosInf, _) => Some(Ordering::Greater),
            (Finite(a), Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl<T: Scalar> fmt::Display for ExtendedReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInf => write!(f, "-inf"),
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::PosInf => write!(f, "+inf"),
        }
    }
}

// Finite values serialize as plain JSON numbers, infinities as "+inf"/"-inf".
impl<T: Serialize> Serialize for ExtendedReal<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::NegInf => serializer.serialize_str("-inf"),
            ExtendedReal::PosInf => serializer.serialize_str("+inf"),
            ExtendedReal::Finite(x) => x.serialize(serializer),
        }
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for ExtendedReal<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<T> {
            Num(T),
            Text(String),
        }
        match Raw::<T>::deserialize(deserializer)? {
            Raw::Num(x) => Ok(ExtendedReal::Finite(x)),
            Raw::Text(s) => match s.as_str() {
                "+inf" | "inf" => Ok(ExtendedReal::PosInf),
                "-inf" => Ok(ExtendedReal::NegInf),
                other => Err(de::Error::custom(format!("not an extended real: {other:?}"))),
            },
        }
    }
}

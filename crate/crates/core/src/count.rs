//! Constituent counts that may be far larger than `u64`.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountError {
    #[error("count {0:?} is not a nonnegative integer")]
    Malformed(String),
    #[error("count {0:?} is not integral")]
    Fractional(String),
    #[error("count {0:?} exceeds the supported range (about 3.4e38)")]
    Overflow(String),
}

/// A nonnegative integer count of micro-absorbers, accepted as plain
/// digits or decimal scientific notation (`"1e23"`, `"6.02E23"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Count(pub u128);

impl Count {
    pub const ZERO: Count = Count(0);

    pub fn get(self) -> u128 {
        self.0
    }

    /// Nearest `f64`; exact up to 2^53.
    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl From<u64> for Count {
    fn from(n: u64) -> Self {
        Count(n as u128)
    }
}

impl FromStr for Count {
    type Err = CountError;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let s = raw.trim();
        let malformed = || CountError::Malformed(raw.to_string());
        let (mantissa, exponent) = match s.find(['e', 'E']) {
            Some(pos) => {
                let exp: i32 = s[pos + 1..].trim_start_matches('+').parse().map_err(|_| malformed())?;
                (&s[..pos], exp)
            }
            None => (s, 0),
        };
        let (int_part, frac_part) = match mantissa.split_once('.') {
            Some((i, f)) => (i, f),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(malformed());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        // value = digits * 10^(exponent - frac_len)
        let digits = format!("{int_part}{frac_part}");
        let shift = exponent - frac_part.len() as i32;
        let digits = digits.trim_start_matches('0');
        if digits.is_empty() {
            return Ok(Count(0));
        }
        let (digits, shift) = if shift < 0 {
            let drop = (-shift) as usize;
            if drop > digits.len() {
                return Err(CountError::Fractional(raw.to_string()));
            }
            let (keep, tail) = digits.split_at(digits.len() - drop);
            if tail.bytes().any(|b| b != b'0') {
                return Err(CountError::Fractional(raw.to_string()));
            }
            (keep, 0)
        } else {
            (digits, shift as u32)
        };
        let overflow = || CountError::Overflow(raw.to_string());
        let mut value: u128 = 0;
        for b in digits.bytes() {
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as u128))
                .ok_or_else(overflow)?;
        }
        let factor = 10u128.checked_pow(shift).ok_or_else(overflow)?;
        value.checked_mul(factor).map(Count).ok_or_else(overflow)
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

// Serialized as a JSON number while it fits in u64, as a digit string after.
impl Serialize for Count {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match u64::try_from(self.0) {
            Ok(v) => serializer.serialize_u64(v),
            Err(_) => serializer.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl de::Visitor<'_> for Visitor {
            type Value = Count;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative integer or a decimal string such as \"1e23\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Count, E> {
                Ok(Count(v as u128))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Count, E> {
                u64::try_from(v).map(Count::from).map_err(|_| E::custom("count must be nonnegative"))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Count, E> {
                if v >= 0.0 && v.fract() == 0.0 && v < u128::MAX as f64 {
                    Ok(Count(v as u128))
                } else {
                    Err(E::custom(format!("{v} is not a representable nonnegative integer")))
                }
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Count, E> {
                v.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

//! Exact rational scalars and their text encoding.
//!
//! Every distance in the crate is an exact rational. Values are rendered as
//! `"p/q"` strings (or `"p"` for integers) in JSON and CSV, and parsed back from
//! either a string or a bare JSON integer.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};
use thiserror::Error;

/// The exact scalar used for all distances and constants.
pub type Q = Ratio<i128>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("cannot parse {0:?} as a rational (expected \"p\" or \"p/q\")")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

pub fn int(n: i64) -> Q {
    Q::from_integer(n as i128)
}

pub fn frac(num: i64, den: i64) -> Q {
    Q::new(num as i128, den as i128)
}

/// Parses `"p"`, `"p/q"` or a finite decimal such as `"0.25"`.
pub fn parse(text: &str) -> Result<Q, ParseRationalError> {
    let s = text.trim();
    let bad = || ParseRationalError::Malformed(text.to_string());
    if let Some((p, q)) = s.split_once('/') {
        let p: i128 = p.trim().parse().map_err(|_| bad())?;
        let q: i128 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(ParseRationalError::ZeroDenominator(text.to_string()));
        }
        return Ok(Q::new(p, q));
    }
    if let Some((whole, fraction)) = s.split_once('.') {
        if fraction.is_empty() || !fraction.bytes().all(|b| b.is_ascii_digit()) || fraction.len() > 30 {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole: i128 = if whole.is_empty() || whole == "-" { 0 } else { whole.parse().map_err(|_| bad())? };
        let den = 10i128.pow(fraction.len() as u32);
        let frac_part: i128 = fraction.parse().map_err(|_| bad())?;
        let magnitude = whole.abs() * den + frac_part;
        return Ok(Q::new(if negative { -magnitude } else { magnitude }, den));
    }
    s.parse::<i128>().map(Q::from_integer).map_err(|_| bad())
}

pub fn format(value: &Q) -> String {
    value.to_string()
}

pub fn to_f64(value: &Q) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Least common multiple of the denominators of `values`.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Q>) -> i128 {
    values.into_iter().fold(1i128, |acc, v| acc.lcm(v.denom()))
}

pub fn min_nonzero<'a>(values: impl IntoIterator<Item = &'a Q>) -> Option<Q> {
    values.into_iter().filter(|v| !v.is_zero()).min().cloned()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Raw {
    Int(i64),
    Text(String),
}

impl Raw {
    fn into_q<E: serde::de::Error>(self) -> Result<Q, E> {
        match self {
            Raw::Int(n) => Ok(int(n)),
            Raw::Text(s) => parse(&s).map_err(E::custom),
        }
    }
}

/// `#[serde(with = "rational::serde_q")]` for a single value.
pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        Raw::deserialize(d)?.into_q()
    }
}

pub mod serde_q_opt {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => s.serialize_some(&format(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Q>, D::Error> {
        Option::<Raw>::deserialize(d)?.map(Raw::into_q).transpose()
    }
}

pub mod serde_q_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(values: &[Q], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&format(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        Vec::<Raw>::deserialize(d)?.into_iter().map(Raw::into_q).collect()
    }
}

pub mod serde_q_matrix {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(rows: &[Vec<Q>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for row in rows {
            let row: Vec<String> = row.iter().map(format).collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Q>>, D::Error> {
        Vec::<Vec<Raw>>::deserialize(d)?
            .into_iter()
            .map(|row| row.into_iter().map(Raw::into_q).collect())
            .collect()
    }
}

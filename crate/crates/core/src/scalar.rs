//! Exact scalar backends.
//!
//! Every coordinate in the toolkit is an exact rational. The math is written
//! against [`Scalar`] so the same code runs on the fixed-width
//! `Ratio<i64>` backend (fast, bounded denominators) and on `BigRational`
//! (unbounded, used for anything parsed from user input).

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed};

use crate::error::{Error, Result};

/// An exact ordered field element with floor and a canonical `"p/q"` form.
pub trait Scalar:
    Clone + Ord + Hash + Debug + Display + Num + Signed + FromStr + Send + Sync + 'static
{
    /// Largest integer not exceeding `self`.
    fn floor(&self) -> Self;

    fn from_int(n: i64) -> Self;

    /// `numer / denom`; panics when `denom == 0`.
    fn ratio(numer: i64, denom: i64) -> Self;

    /// Canonical `"p/q"` with `q > 0` and `gcd(|p|, q) = 1`; integers keep the `/1`.
    fn to_fraction_string(&self) -> String;

    /// Lossy conversion, only used for human-readable summaries.
    fn approx_f64(&self) -> f64;

    fn two() -> Self {
        Self::from_int(2)
    }

    fn half() -> Self {
        Self::ratio(1, 2)
    }
}

impl<T> Scalar for Ratio<T>
where
    T: Clone
        + Integer
        + Signed
        + Hash
        + Debug
        + Display
        + FromPrimitive
        + num_traits::ToPrimitive
        + FromStr
        + Send
        + Sync
        + 'static,
{
    fn floor(&self) -> Self {
        Ratio::floor(self)
    }

    fn from_int(n: i64) -> Self {
        Ratio::from_integer(T::from_i64(n).expect("integer fits backend"))
    }

    fn ratio(numer: i64, denom: i64) -> Self {
        Ratio::new(
            T::from_i64(numer).expect("integer fits backend"),
            T::from_i64(denom).expect("integer fits backend"),
        )
    }

    fn to_fraction_string(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn approx_f64(&self) -> f64 {
        let n = self.numer().to_f64().unwrap_or(f64::NAN);
        let d = self.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    }
}

/// Parses `"p/q"` or `"p"`; rejects zero denominators and junk.
pub fn parse_rational<S: Scalar>(text: &str) -> Result<S> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((_, d)) = trimmed.split_once('/') {
        if d.trim().trim_start_matches(['-', '+']).chars().all(|c| c == '0') {
            return Err(Error::Parse(format!("zero denominator in {trimmed:?}")));
        }
    }
    trimmed
        .parse::<S>()
        .map_err(|_| Error::Parse(format!("not a rational: {trimmed:?}")))
}

/// Serde adapter writing a scalar as its `"p/q"` string.
pub mod serde_q {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{parse_rational, Scalar};

    pub fn serialize<S: Scalar, Z: Serializer>(value: &S, ser: Z) -> Result<Z::Ok, Z::Error> {
        ser.serialize_str(&value.to_fraction_string())
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(de: D) -> Result<S, D::Error> {
        let text = String::deserialize(de)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// Same as [`serde_q`] for `Option<S>`, with `None` written as `"+inf"`.
pub mod serde_q_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{parse_rational, Scalar};

    pub fn serialize<S: Scalar, Z: Serializer>(value: &Option<S>, ser: Z) -> Result<Z::Ok, Z::Error> {
        match value {
            Some(v) => ser.serialize_str(&v.to_fraction_string()),
            None => ser.serialize_str("+inf"),
        }
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(de: D) -> Result<Option<S>, D::Error> {
        let text = String::deserialize(de)?;
        if matches!(text.trim(), "+inf" | "inf") {
            return Ok(None);
        }
        parse_rational(&text).map(Some).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Rational, Rational64};

    #[test]
    fn fraction_string_is_canonical() {
        assert_eq!(Rational::ratio(6, -4).to_fraction_string(), "-3/2");
        assert_eq!(Rational64::from_int(3).to_fraction_string(), "3/1");
        assert_eq!(Rational::from_int(0).to_fraction_string(), "0/1");
    }

    #[test]
    fn parse_accepts_integers_and_fractions() {
        assert_eq!(parse_rational::<Rational>("2/4").unwrap(), Rational::half());
        assert_eq!(parse_rational::<Rational64>(" 3 ").unwrap(), Rational64::from_int(3));
        assert!(parse_rational::<Rational>("1/0").is_err());
        assert!(parse_rational::<Rational>("x").is_err());
    }

    #[test]
    fn floor_rounds_toward_negative_infinity() {
        assert_eq!(Rational::ratio(-1, 2).floor(), Rational::from_int(-1));
        assert_eq!(Rational64::ratio(7, 3).floor(), Rational64::from_int(2));
    }
}

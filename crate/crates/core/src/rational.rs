//! Exact rationals and the circle-group maps `{v}` and `‖v‖`.
//!
//! [`Rational`] is `num_rational::BigRational`, which is always kept in
//! lowest terms with a positive denominator.

use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: impl Into<BigInt>) -> Rational {
    Rational::from_integer(n.into())
}

pub fn rat_big(num: &BigUint, den: &BigUint) -> Rational {
    Rational::new(
        BigInt::from_biguint(Sign::Plus, num.clone()),
        BigInt::from_biguint(Sign::Plus, den.clone()),
    )
}

/// Fractional part `{v} = v - ⌊v⌋`, always in `[0, 1)`.
pub fn frac(v: &Rational) -> Rational {
    v - v.floor()
}

/// Distance to the nearest integer, `‖v‖ = min({v}, 1 - {v})`.
pub fn norm_int(v: &Rational) -> Rational {
    let f = frac(v);
    let g = Rational::one() - &f;
    if f <= g {
        f
    } else {
        g
    }
}

/// Numerator of `‖v/den‖` over `den`, for a residue `v < den`.
pub(crate) fn residue_norm(residue: &BigUint, den: &BigUint) -> BigUint {
    let other = den - residue;
    if residue <= &other {
        residue.clone()
    } else {
        other
    }
}

/// Parses `p/q`, `p`, or a plain decimal literal such as `0.001`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: `{s}`"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int, fracpart)) = s.split_once('.') {
        if fracpart.is_empty() || !fracpart.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        let digits: BigInt = fracpart.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10u32), fracpart.len());
        let mag = int.abs() * &scale + digits;
        let mag = if neg { -mag } else { mag };
        return Ok(Rational::new(mag, scale));
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(p))
}

/// Renders `v` in decimal without going through floating point. Exact when
/// the expansion terminates within `max_digits` fractional digits, truncated
/// toward zero otherwise.
pub fn to_decimal_string(v: &Rational, max_digits: usize) -> String {
    let mut out = String::new();
    if v.is_negative() {
        out.push('-');
    }
    let v = v.abs();
    let int = v.floor().to_integer();
    let _ = write!(out, "{int}");
    let den = v.denom().clone();
    let mut rem = v.numer().mod_floor(&den);
    if rem.is_zero() {
        return out;
    }
    out.push('.');
    let ten = BigInt::from(10u32);
    for _ in 0..max_digits {
        rem *= &ten;
        let (d, r) = rem.div_mod_floor(&den);
        let _ = write!(out, "{d}");
        rem = r;
        if rem.is_zero() {
            break;
        }
    }
    out
}

/// Wire form of a rational: decimal strings for both parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalRecord {
    pub num: String,
    pub den: String,
}

impl From<&Rational> for RationalRecord {
    fn from(v: &Rational) -> Self {
        RationalRecord {
            num: v.numer().to_string(),
            den: v.denom().to_string(),
        }
    }
}

impl TryFrom<&RationalRecord> for Rational {
    type Error = Error;

    fn try_from(r: &RationalRecord) -> Result<Self> {
        let num: BigInt = r
            .num
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator `{}`", r.num)))?;
        let den: BigInt = r
            .den
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator `{}`", r.den)))?;
        if !den.is_positive() {
            return Err(Error::Parse("denominator must be positive".into()));
        }
        Ok(Rational::new(num, den))
    }
}

/// `#[serde(with = "exact")]` for `Rational` fields.
pub mod exact {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
        RationalRecord::from(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let rec = RationalRecord::deserialize(d)?;
        Rational::try_from(&rec).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "exact_vec")]` for `Vec<Rational>` fields.
pub mod exact_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let recs: Vec<RationalRecord> = v.iter().map(RationalRecord::from).collect();
        recs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let recs = Vec::<RationalRecord>::deserialize(d)?;
        recs.iter()
            .map(|r| Rational::try_from(r).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_examples() {
        assert_eq!(norm_int(&rat(5, 4)), rat(1, 4));
        assert_eq!(norm_int(&rat(0, 1)), rat(0, 1));
        assert_eq!(norm_int(&rat(7, 2)), rat(1, 2));
        assert_eq!(norm_int(&rat(-1, 3)), rat(1, 3));
        assert_eq!(frac(&rat(-1, 3)), rat(2, 3));
    }

    #[test]
    fn parses_forms() {
        assert_eq!(parse_rational("3/12").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("0.001").unwrap(), rat(1, 1000));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational("7").unwrap(), rat(7, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(to_decimal_string(&rat(1, 2), 20), "0.5");
        assert_eq!(to_decimal_string(&rat(1, 100), 20), "0.01");
        assert_eq!(to_decimal_string(&rat(1, 3), 5), "0.33333");
        assert_eq!(to_decimal_string(&rat(7, 1), 5), "7");
        assert_eq!(to_decimal_string(&rat(-5, 4), 5), "-1.25");
    }

    #[test]
    fn record_roundtrip() {
        let v = rat(-22, 7);
        let json = serde_json::to_string(&RationalRecord::from(&v)).unwrap();
        assert_eq!(json, r#"{"num":"-22","den":"7"}"#);
        let back: RationalRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(Rational::try_from(&back).unwrap(), v);
    }
}

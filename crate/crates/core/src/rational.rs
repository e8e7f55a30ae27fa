//! Exact rational helpers: parsing, formatting and serde adapters.
//!
//! Rationals are written as `"3/7"`, integers or decimals (`"0.25"`,
//! `"1e-3"`). JSON numbers are accepted on input and converted through their
//! decimal text, so `0.1` means exactly one tenth.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::Serializer;
use std::fmt;

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::InvalidArgument(format!("cannot parse {text:?} as a rational"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole
        .chars()
        .chain(frac.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    if exponent.abs() > 10_000 {
        return Err(bad());
    }
    let all = format!("{whole}{frac}");
    let numer: BigInt = if all.is_empty() {
        BigInt::zero()
    } else {
        all.parse().map_err(|_| bad())?
    };
    let scale = exponent - frac.len() as i64;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(if negative { -value } else { value })
}

/// `"n"` for integers, `"n/d"` otherwise.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact binary value of a finite float.
pub fn from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("{x} is not finite")))
}

/// Nearest multiple of `1/n`, ties rounded up.
pub fn round_to_grid(x: &BigRational, n: &BigInt) -> BigInt {
    let scaled = x * BigRational::from_integer(n.clone()) + ratio(1, 2);
    scaled.floor().to_integer()
}

/// Smallest `t >= 0` with `2^t >= x`, i.e. `ceil(log2 x)` for `x >= 1`.
pub fn ceil_log2(x: &BigRational) -> u32 {
    let mut t = 0u32;
    let mut pow = BigRational::one();
    while &pow < x {
        pow *= int(2);
        t += 1;
    }
    t
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

struct RationalVisitor;

impl<'de> Visitor<'de> for RationalVisitor {
    type Value = BigRational;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a rational as a string (\"3/7\", \"0.25\") or a JSON number")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<BigRational, E> {
        parse_rational(v).map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<BigRational, E> {
        Ok(int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<BigRational, E> {
        Ok(BigRational::from_integer(BigInt::from(v)))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<BigRational, E> {
        // Shortest round-trip text of the float is the intended decimal.
        if !v.is_finite() {
            return Err(E::custom("non-finite number"));
        }
        parse_rational(&format!("{v:e}")).map_err(E::custom)
    }
}

/// `#[serde(with = "rational::serde_rational")]`
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BigRational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }
}

/// Same as [`serde_rational`] for `Vec<BigRational>`.
pub mod serde_rational_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(
        v: &[BigRational],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format_rational(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<BigRational>, D::Error> {
        struct Wrapped(BigRational);
        impl<'de> serde::Deserialize<'de> for Wrapped {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                d.deserialize_any(RationalVisitor).map(Wrapped)
            }
        }
        let items: Vec<Wrapped> = serde::Deserialize::deserialize(d)?;
        Ok(items.into_iter().map(|w| w.0).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/7").unwrap(), ratio(3, 7));
        assert_eq!(parse_rational("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse_rational("-2.50").unwrap(), ratio(-5, 2));
        assert_eq!(parse_rational("1e-3").unwrap(), ratio(1, 1000));
        assert_eq!(parse_rational("2.5E2").unwrap(), int(250));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        for bad in ["", "1/0", "abc", "1.2.3", "-", "e5"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn json_numbers_are_read_as_their_decimal_text() {
        #[derive(serde::Deserialize)]
        struct W {
            #[serde(with = "serde_rational")]
            x: BigRational,
        }
        let w: W = serde_json::from_str(r#"{"x": 0.1}"#).unwrap();
        assert_eq!(w.x, ratio(1, 10));
        let w: W = serde_json::from_str(r#"{"x": 1e-7}"#).unwrap();
        assert_eq!(w.x, ratio(1, 10_000_000));
        let w: W = serde_json::from_str(r#"{"x": "22/7"}"#).unwrap();
        assert_eq!(w.x, ratio(22, 7));
    }

    #[test]
    fn grid_rounding_breaks_ties_upward() {
        let n = BigInt::from(4);
        assert_eq!(round_to_grid(&ratio(1, 8), &n), BigInt::from(1));
        assert_eq!(round_to_grid(&ratio(1, 9), &n), BigInt::from(0));
        assert_eq!(round_to_grid(&ratio(3, 8), &n), BigInt::from(2));
    }

    #[test]
    fn ceil_log2_matches_powers() {
        assert_eq!(ceil_log2(&int(1)), 0);
        assert_eq!(ceil_log2(&int(2)), 1);
        assert_eq!(ceil_log2(&int(3)), 2);
        assert_eq!(ceil_log2(&int(4096)), 12);
        assert_eq!(ceil_log2(&int(4097)), 13);
        assert_eq!(ceil_log2(&ratio(1, 2)), 0);
    }

    proptest! {
        #[test]
        fn format_then_parse_round_trips(n in -10_000i64..10_000, d in 1i64..10_000) {
            let r = ratio(n, d);
            prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
        }
    }
}

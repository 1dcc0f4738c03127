//! Exact rational numbers for utility math and fee rates.
//!
//! Config files may write a rational as an integer, a decimal literal
//! (`0.05`, parsed exactly as 5/100) or a fraction string (`"1/20"`).

use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

pub type Rational = Ratio<i128>;

pub fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

pub fn ratio(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {0:?} as an exact rational")]
pub struct ParseRationalError(pub String);

/// Parses `"3"`, `"-0.125"` or `"7/20"`.
pub fn parse(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| err())?;
        let d: i128 = d.trim().parse().map_err(|_| err())?;
        if d == 0 {
            return Err(err());
        }
        return Ok(ratio(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) || frac.len() > 30 {
        return Err(err());
    }
    let digits: i128 = format!("{whole}{frac}").parse().map_err(|_| err())?;
    let denom = 10i128.checked_pow(frac.len() as u32).ok_or_else(err)?;
    let r = ratio(digits, denom);
    Ok(if neg { -r } else { r })
}

/// Renders integers plainly, terminating decimals as decimals, and anything
/// else as `n/d`.
pub fn display(r: &Rational) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let mut d = *r.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    let scaled = r * int(10i128.pow(places));
    let n = scaled.to_integer();
    let sign = if n < 0 { "-" } else { "" };
    let n = n.abs();
    let p = 10i128.pow(places);
    format!("{sign}{}.{:0width$}", n / p, n % p, width = places as usize)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Largest integer not above `r`, clamped at zero.
pub fn floor_u64(r: &Rational) -> u64 {
    if *r <= Rational::zero() {
        0
    } else {
        r.floor().to_integer().try_into().unwrap_or(u64::MAX)
    }
}

pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&display(r))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
    struct V;
    impl Visitor<'_> for V {
        type Value = Rational;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an integer, decimal or \"n/d\" fraction")
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
            Ok(int(v as i128))
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
            Ok(int(v as i128))
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
            // Shortest round-trip rendering, then exact decimal parse.
            parse(&v.to_string()).map_err(E::custom)
        }
        fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
            parse(v).map_err(E::custom)
        }
    }
    d.deserialize_any(V)
}

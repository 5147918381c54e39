//! Exact rational helpers and the `p/q` text syntax.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `p/q` or a bare integer `p`. Decimals are rejected.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("malformed rational {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let valid = |t: &str, signed: bool| {
        let t = if signed {
            t.strip_prefix('-').or_else(|| t.strip_prefix('+')).unwrap_or(t)
        } else {
            t
        };
        !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid(num, true) || !valid(den, false) {
        return Err(bad());
    }
    let n: BigInt = num.parse().map_err(|_| bad())?;
    let d: BigInt = den.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(n, d))
}

/// Always `p/q`, with `q = 1` written out so the syntax is uniform.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Greatest common divisor of two positive rationals: the largest rational
/// of which both are integer multiples.
pub fn rational_gcd(a: &Rational, b: &Rational) -> Rational {
    let num = (a.numer() * b.denom()).gcd(&(b.numer() * a.denom()));
    Rational::new(num, a.denom() * b.denom())
}

pub fn gcd_all<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Option<Rational> {
    values
        .into_iter()
        .filter(|v| !v.is_zero())
        .map(|v| v.abs())
        .reduce(|acc, v| rational_gcd(&acc, &v))
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// `value / unit` when it is an integer.
pub fn exact_quotient(value: &Rational, unit: &Rational) -> Option<BigInt> {
    let q = value / unit;
    q.is_integer().then(|| q.to_integer())
}

pub fn to_usize(n: &BigInt) -> Option<usize> {
    n.try_into().ok()
}

pub fn to_i64(n: &BigInt) -> Option<i64> {
    n.try_into().ok()
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

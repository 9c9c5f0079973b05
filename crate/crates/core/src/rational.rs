//! Exact rational helpers and string serialisation for big numbers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Result};

/// Parses `"a/b"` or `"a"` into an exact rational. Decimal and exponent forms are
/// rejected so that exact claims never start from a rounded input.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = |why: &str| invalid(format!("expected an exact rational like 1/8, got {text:?}: {why}"));
    if t.is_empty() {
        return bad("empty");
    }
    if t.contains(['.', 'e', 'E']) {
        return bad("floating-point literals are not accepted here");
    }
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (t, "1"),
    };
    let num: BigInt = match num.parse() {
        Ok(v) => v,
        Err(_) => return bad("numerator is not an integer"),
    };
    let den: BigInt = match den.parse() {
        Ok(v) => v,
        Err(_) => return bad("denominator is not an integer"),
    };
    if den.is_zero() {
        return bad("zero denominator");
    }
    Ok(BigRational::new(num, den))
}

/// Nearest `f64`, falling back to a ratio of rounded parts for very large terms.
pub fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        let n = value.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = value.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// `base^exp` for a rational base.
pub fn pow(base: &BigRational, exp: usize) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

pub fn is_nonnegative(value: &BigRational) -> bool {
    !value.is_negative()
}

/// Serialises any `Display + FromStr` value as a JSON string.
pub mod as_string {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};
    use std::fmt::Display;
    use std::str::FromStr;

    pub fn serialize<T: Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(value)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let text = String::deserialize(d)?;
        text.parse().map_err(D::Error::custom)
    }
}

/// Like [`as_string`], element-wise over a `Vec`.
pub mod vec_as_string {
    use serde::{de::Error, ser::SerializeSeq, Deserialize, Deserializer, Serializer};
    use std::fmt::Display;
    use std::str::FromStr;

    pub fn serialize<T: Display, S: Serializer>(values: &[T], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&v.to_string())?;
        }
        seq.end()
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<Vec<T>, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let texts = Vec::<String>::deserialize(d)?;
        texts.iter().map(|t| t.parse().map_err(D::Error::custom)).collect()
    }
}

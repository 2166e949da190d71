//! Rational helpers and the `"num/den"` text form used in files and traces.

use num::{BigInt, BigRational, One, Signed, Zero};
use std::str::FromStr;
use thiserror::Error;

/// Arbitrary-precision rational. `BigRational` normalises on construction.
pub type Q = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed rational {text:?}")]
pub struct ParseRationalError {
    pub text: String,
}

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

/// Formats as `num/den` with a positive denominator, including `n/1` for integers.
pub fn format(q: &Q) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `num/den` or a bare integer. Rejects zero denominators and non-canonical forms are
/// normalised.
pub fn parse(text: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError { text: text.to_string() };
    let (n, d) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
    let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
    if d.is_zero() {
        return Err(err());
    }
    Ok(Q::new(n, d))
}

/// Parses and additionally requires the text to already be in lowest terms with a positive
/// denominator, so that serialised traces stay canonical.
pub fn parse_canonical(text: &str) -> Result<Q, ParseRationalError> {
    let q = parse(text)?;
    if format(&q) != text {
        return Err(ParseRationalError { text: text.to_string() });
    }
    Ok(q)
}

/// Floating-point view for layout only; never used in simulation.
pub fn to_f64(q: &Q) -> f64 {
    use num::ToPrimitive;
    q.to_f64().unwrap_or_else(|| {
        if q.is_positive() {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    })
}

pub mod serde_q {
    //! Serde adapter writing a rational as its `num/den` string.
    use super::{format, parse_canonical, Q};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let text = String::deserialize(d)?;
        parse_canonical(&text).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for q in [frac(3, 2), int(0), frac(-7, 21), int(5)] {
            assert_eq!(parse_canonical(&format(&q)).unwrap(), q);
        }
        assert_eq!(format(&frac(2, 4)), "1/2");
        assert_eq!(format(&int(0)), "0/1");
    }

    #[test]
    fn rejects_bad_text() {
        assert!(parse("1/0").is_err());
        assert!(parse("a/2").is_err());
        assert!(parse_canonical("2/4").is_err());
        assert_eq!(parse("3").unwrap(), int(3));
    }
}

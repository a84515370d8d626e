//! Number types shared by the exact (rational) and floating-point code paths.
//!
//! Geometry in this crate is written once over [`Scalar`]. [`Rational`]
//! gives exact predicates; `f64` treats quantities below a scale-relative
//! tolerance as zero.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::Value;

use crate::error::{Error, Result};

/// Exact rational numbers.
pub type Rational = BigRational;

/// Relative tolerance used by floating-point predicates.
pub const FLOAT_TOL: f64 = 1e-10;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;
    fn from_rational(q: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact rational value (floats convert exactly; non-finite values map to zero).
    fn to_rational(&self) -> Rational;
    fn abs_val(&self) -> Self;

    /// Sign of `self`; for inexact types magnitudes up to `FLOAT_TOL * scale`
    /// count as zero.
    fn sign_tol(&self, scale: f64) -> Ordering;

    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Option<Self>;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn is_zero_tol(&self, scale: f64) -> bool {
        self.sign_tol(scale) == Ordering::Equal
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn sign_tol(&self, _scale: f64) -> Ordering {
        if self.is_zero() {
            Ordering::Equal
        } else if self.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }

    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }

    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::String(s) => parse_rational(s).ok(),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Some(Self::from_i64(i))
                } else {
                    n.as_f64().and_then(Rational::from_float)
                }
            }
            _ => None,
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_rational(q: &Rational) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Rational {
        Rational::from_float(*self).unwrap_or_else(Rational::zero)
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn sign_tol(&self, scale: f64) -> Ordering {
        if self.abs() <= FLOAT_TOL * scale.max(f64::MIN_POSITIVE) {
            Ordering::Equal
        } else if *self > 0.0 {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }

    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => parse_rational(s).ok().map(|q| Self::from_rational(&q)),
            _ => None,
        }
    }
}

/// Parses `"p/q"`, `"p"`, or a decimal such as `"0.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Ok(q) = Rational::from_str(s) {
        if !q.denom().is_zero() {
            return Ok(q);
        }
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        if let Ok(n) = BigInt::from_str(&digits) {
            let den = num_traits::pow(BigInt::from(10), frac.len());
            let q = Rational::new(n, den);
            return Ok(if neg { -q } else { q });
        }
    }
    Err(Error::Parse(format!("not a rational number: {s:?}")))
}

/// Formats as `"p/q"`, or `"p"` for integers.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn json_vec<S: Scalar>(v: &[S]) -> Value {
    Value::Array(v.iter().map(Scalar::to_json).collect())
}

pub(crate) fn vec_from_json<S: Scalar>(v: &Value, what: &str) -> Result<Vec<S>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Parse(format!("{what}: expected an array")))?;
    arr.iter()
        .map(|x| S::from_json(x).ok_or_else(|| Error::Parse(format!("{what}: bad number {x}"))))
        .collect()
}

/// Converts a vector between scalar types (exactly when the target is exact).
pub fn convert<S: Scalar, T: Scalar>(v: &[S]) -> Vec<T> {
    v.iter().map(|x| T::from_rational(&x.to_rational())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip_through_strings() {
        for s in ["1/6", "-2/45", "7", "0"] {
            let q = parse_rational(s).unwrap();
            assert_eq!(format_rational(&q), s);
        }
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn float_sign_respects_scale() {
        assert_eq!(1e-12f64.sign_tol(1.0), Ordering::Equal);
        assert_eq!(1e-12f64.sign_tol(1e-6), Ordering::Greater);
        assert_eq!(rat(1, 1_000_000_000).sign_tol(1e30), Ordering::Greater);
    }
}

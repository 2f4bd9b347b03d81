//! Numeric backends.
//!
//! Every solver in this crate is generic over [`Scalar`], which is implemented
//! for `f64` and for exact rationals ([`Rational`]). Tolerances are expressed
//! as `f64` and collapse to zero for exact backends, so the same code path
//! gives tolerance-free answers when run over rationals.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// True when arithmetic never rounds.
    const EXACT: bool;

    /// Short backend name used in reports ("float" or "rational").
    const MODE: &'static str;

    /// Converts an `f64` tolerance into this backend; zero for exact backends.
    fn tolerance(eps: f64) -> Self {
        if Self::EXACT {
            Self::zero()
        } else {
            Self::from_f64(eps).expect("finite tolerance")
        }
    }

    /// Error-free transformation `a + b = s + e`; exact backends return `e = 0`.
    fn two_sum(a: &Self, b: &Self) -> (Self, Self) {
        (a.clone() + b.clone(), Self::zero())
    }

    /// Parses `"p/q"`, plain decimals and scientific notation.
    fn parse_text(text: &str) -> Result<Self>;

    fn is_finite_value(&self) -> bool {
        true
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const MODE: &'static str = "float";

    fn two_sum(a: &Self, b: &Self) -> (Self, Self) {
        let s = a + b;
        let bb = s - a;
        let e = (a - (s - bb)) + (b - bb);
        (s, e)
    }

    fn parse_text(text: &str) -> Result<Self> {
        let text = text.trim();
        let value = match text.split_once('/') {
            Some((p, q)) => {
                let p: f64 = p.trim().parse().map_err(|_| bad_number(text))?;
                let q: f64 = q.trim().parse().map_err(|_| bad_number(text))?;
                if q == 0.0 {
                    return Err(bad_number(text));
                }
                p / q
            }
            None => text.parse().map_err(|_| bad_number(text))?,
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(bad_number(text))
        }
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const MODE: &'static str = "rational";

    fn parse_text(text: &str) -> Result<Self> {
        let text = text.trim();
        match text.split_once('/') {
            Some((p, q)) => {
                let p = parse_decimal(p.trim()).ok_or_else(|| bad_number(text))?;
                let q = parse_decimal(q.trim()).ok_or_else(|| bad_number(text))?;
                if q.is_zero() {
                    return Err(bad_number(text));
                }
                Ok(p / q)
            }
            None => parse_decimal(text).ok_or_else(|| bad_number(text)),
        }
    }
}

fn bad_number(text: &str) -> Error {
    Error::Parse(format!("not a number: {text:?}"))
}

/// Exact value of a decimal literal such as `-12.5e-3`.
fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], i64::from_str(&text[pos + 1..]).ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(&digits).ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i64;
    if scale.unsigned_abs() > 4096 {
        return None;
    }
    let ten = BigInt::from(10u32);
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    Some(if scale >= 0 {
        Rational::from_integer(numer * pow)
    } else {
        Rational::new(numer, pow)
    })
}

/// Converts a finite `f64` into the target backend (exact binary value for rationals).
pub fn from_f64<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite value")
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Sup-norm of `a - b`.
pub fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| T::max_of(acc, (x.clone() - y.clone()).abs()))
}

pub fn max_abs<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, x| T::max_of(acc, x.abs()))
}

pub fn sum<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc + x.clone())
}

/// Converts a vector between backends through `f64` (lossy towards floats).
pub fn to_f64_vec<T: Scalar>(a: &[T]) -> Vec<f64> {
    a.iter().map(Scalar::to_f64_lossy).collect()
}

pub fn one<T: Scalar>() -> T {
    T::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(p), BigInt::from(d))
    }

    #[test]
    fn rational_parsing_is_exact() {
        assert_eq!(Rational::parse_text("1/3").unwrap(), q(1, 3));
        assert_eq!(Rational::parse_text("0.1").unwrap(), q(1, 10));
        assert_eq!(Rational::parse_text("-12.5e-3").unwrap(), q(-1, 80));
        assert_eq!(Rational::parse_text("2e3").unwrap(), q(2000, 1));
        assert_eq!(Rational::parse_text(" 3 / 6 ").unwrap(), q(1, 2));
        assert!(Rational::parse_text("1/0").is_err());
        assert!(Rational::parse_text("abc").is_err());
        assert!(Rational::parse_text(".").is_err());
    }

    #[test]
    fn float_parsing_accepts_fractions() {
        assert_eq!(f64::parse_text("1/4").unwrap(), 0.25);
        assert_eq!(f64::parse_text("0.5").unwrap(), 0.5);
        assert!(f64::parse_text("inf").is_err());
        assert!(f64::parse_text("1/0").is_err());
    }

    #[test]
    fn two_sum_recovers_rounding_error() {
        let (s, e) = f64::two_sum(&1.0, &1e-17);
        assert_eq!(s, 1.0);
        assert_eq!(e, 1e-17);
    }

    #[test]
    fn exact_tolerance_is_zero() {
        assert!(Rational::tolerance(1e-9).is_zero());
        assert_eq!(f64::tolerance(1e-9), 1e-9);
    }
}

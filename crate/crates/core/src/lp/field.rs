use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Ordered field the simplex tableau runs over.
///
/// `f64` compares against a tolerance; `BigRational` is exact and ignores it.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    /// Exact conversion; `None` for non-finite input.
    fn from_f64(x: f64) -> Option<Self>;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Nearest representable value of an exact rational.
    fn from_rational(q: &BigRational) -> Self;
    fn is_pos(&self, tol: f64) -> bool;
    fn is_neg(&self, tol: f64) -> bool;

    fn is_zero_tol(&self, tol: f64) -> bool {
        !self.is_pos(tol) && !self.is_neg(tol)
    }

    fn abs_val(&self) -> Self {
        if self.is_neg(0.0) {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_rational(q: &BigRational) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }

    fn is_pos(&self, tol: f64) -> bool {
        *self > tol
    }

    fn is_neg(&self, tol: f64) -> bool {
        *self < -tol
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }

    fn is_pos(&self, _tol: f64) -> bool {
        self.is_positive()
    }

    fn is_neg(&self, _tol: f64) -> bool {
        self.is_negative()
    }
}

/// Parses `"p/q"`, `"p"`, or a plain decimal such as `"0.375"` exactly.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    if let Some((int_part, frac_part)) = text.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['-', '+']);
        if !int_digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("{int_digits}{frac_part}").parse().ok()?;
        let den = num_traits::pow(BigInt::from(10), frac_part.len());
        let value = BigRational::new(digits, den);
        return Some(if negative { -value } else { value });
    }
    text.parse::<BigInt>().ok().map(BigRational::from_integer)
}

/// Renders a rational as `"p/q"` (or `"p"` for integers).
pub fn format_rational(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_exact_forms() {
        assert_eq!(parse_rational("3/8"), Some(BigRational::from_ratio(3, 8)));
        assert_eq!(parse_rational(" 1 "), Some(BigRational::from_ratio(1, 1)));
        assert_eq!(parse_rational("0.375"), Some(BigRational::from_ratio(3, 8)));
        assert_eq!(parse_rational("-0.5"), Some(BigRational::from_ratio(-1, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1."), None);
    }

    #[test]
    fn formats_round_trip() {
        for s in ["3/8", "1", "0", "-5/7"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
    }

    #[test]
    fn float_to_rational_is_exact() {
        let r = <BigRational as Scalar>::from_f64(0.1).unwrap();
        assert_eq!(Scalar::to_f64(&r), 0.1);
        assert_ne!(r, BigRational::from_ratio(1, 10));
    }
}

//! Coordinate scalars: exact rationals and totally ordered floats behind one trait.

use std::fmt::{Debug, Display};
use std::ops::{Add, Mul, Sub};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use ordered_float::NotNan;

use crate::error::{Error, Result};

/// Exact fraction of arbitrary-precision integers, stored in lowest terms
/// with a positive denominator. `BigRational` normalizes eagerly, which is
/// what we rely on when rationals are used as map keys.
pub type Rational = BigRational;

/// Totally ordered float coordinate.
pub type F64 = NotNan<f64>;

/// Scalar type usable as a box/point coordinate.
pub trait Coord:
    Clone
    + Ord
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Zero
    + One
{
    fn to_f64(&self) -> f64;
    fn from_int_ratio(num: i64, den: i64) -> Self;
}

impl Coord for Rational {
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_int_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
}

impl Coord for F64 {
    fn to_f64(&self) -> f64 {
        self.into_inner()
    }

    fn from_int_ratio(num: i64, den: i64) -> Self {
        NotNan::new(num as f64 / den as f64).expect("finite ratio")
    }
}

pub fn f64_coord(x: f64) -> F64 {
    NotNan::new(x).expect("NaN coordinate")
}

/// Parse `num/den`, an integer, or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .parse()
            .map_err(|_| Error::Format(format!("bad numerator {num:?}")))?;
        let d: BigInt = den
            .parse()
            .map_err(|_| Error::Format(format!("bad denominator {den:?}")))?;
        if d.is_zero() {
            return Err(Error::Format("zero denominator".into()));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse()
                .map_err(|_| Error::Format(format!("bad decimal {s:?}")))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Format(format!("bad decimal {s:?}")));
        }
        let frac_num: BigInt = frac
            .parse()
            .map_err(|_| Error::Format(format!("bad decimal {s:?}")))?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let negative = s.starts_with('-');
        let mut value = Rational::from(int_part.clone());
        let frac_part = Rational::new(frac_num, scale);
        if negative {
            value -= frac_part;
        } else {
            value += frac_part;
        }
        return Ok(value);
    }
    let n: BigInt = s
        .parse()
        .map_err(|_| Error::Format(format!("bad rational {s:?}")))?;
    Ok(Rational::from(n))
}

/// Exact rational equal to the given finite float.
pub fn rational_from_f64(x: f64) -> Rational {
    BigRational::from_float(x).expect("finite float")
}

pub fn rational_abs(x: &Rational) -> Rational {
    x.abs()
}

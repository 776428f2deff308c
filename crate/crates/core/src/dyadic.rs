//! Exact dyadic rationals `a · 2^-q` and the rational string helpers shared by
//! the instance and certificate formats.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact scalar `numerator · 2^-exponent`.
///
/// Always stored in canonical form: the numerator is odd, or the value is zero
/// with exponent 0. Two equal values therefore have identical representations,
/// which is what makes the text formats round-trip bit-exactly.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigInt,
    exponent: u32,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseDyadicError {
    #[error("empty number")]
    Empty,
    #[error("malformed number `{0}`")]
    Malformed(String),
    #[error("`{0}` is not a dyadic rational (denominator is not a power of two)")]
    NotDyadic(String),
}

impl Dyadic {
    pub fn new(numerator: impl Into<BigInt>, exponent: u32) -> Self {
        let mut numerator = numerator.into();
        let mut exponent = exponent;
        if numerator.is_zero() {
            return Self::zero();
        }
        let tz = numerator.trailing_zeros().unwrap_or(0);
        let shift = tz.min(u64::from(exponent)) as u32;
        if shift > 0 {
            numerator >>= shift as usize;
            exponent -= shift;
        }
        Self {
            numerator,
            exponent,
        }
    }

    pub fn zero() -> Self {
        Self {
            numerator: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(value: impl Into<BigInt>) -> Self {
        Self::new(value, 0)
    }

    /// `2^-bits`, the grid spacing used throughout rounding.
    pub fn pow2_neg(bits: u32) -> Self {
        Self::new(1, bits)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.numerator.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.numerator.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.exponent == 0
    }

    pub fn abs(&self) -> Self {
        Self {
            numerator: self.numerator.abs(),
            exponent: self.exponent,
        }
    }

    /// Exact conversion of a finite `f64`; every finite double is dyadic.
    pub fn from_f64(value: f64) -> Option<Self> {
        if !value.is_finite() {
            return None;
        }
        if value == 0.0 {
            return Some(Self::zero());
        }
        let bits = value.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp2) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        let m = BigInt::from(mantissa) * sign;
        Some(if exp2 >= 0 {
            Self::new(m << (exp2 as usize), 0)
        } else {
            Self::new(m, (-exp2) as u32)
        })
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64().unwrap_or(f64::NAN)
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(
            self.numerator.clone(),
            BigInt::one() << (self.exponent as usize),
        )
    }

    /// Exact conversion from a rational whose reduced denominator is a power of two.
    pub fn from_rational(value: &BigRational) -> Option<Self> {
        let den = value.denom();
        if den.is_negative() {
            return Self::from_rational(&BigRational::new(-value.numer().clone(), -den.clone()));
        }
        let tz = den.trailing_zeros().unwrap_or(0);
        if (den >> tz as usize) != BigInt::one() {
            return None;
        }
        Some(Self::new(value.numer().clone(), tz as u32))
    }

    /// Multiply by `2^shift` (shift may be negative).
    pub fn mul_pow2(&self, shift: i64) -> Self {
        if shift >= 0 {
            let shift = shift as u64;
            if shift <= u64::from(self.exponent) {
                Self::new(self.numerator.clone(), self.exponent - shift as u32)
            } else {
                Self::new(
                    &self.numerator << (shift - u64::from(self.exponent)) as usize,
                    0,
                )
            }
        } else {
            Self::new(self.numerator.clone(), self.exponent + (-shift) as u32)
        }
    }

    /// Numerator scaled to the common exponent `exp` (requires `exp >= self.exponent`).
    fn scaled_numerator(&self, exp: u32) -> BigInt {
        &self.numerator << (exp - self.exponent) as usize
    }

    /// The integer `k` with `self = k · 2^-bits`, if `self` lies on that grid.
    pub fn grid_index(&self, bits: u32) -> Option<BigInt> {
        (self.exponent <= bits).then(|| self.scaled_numerator(bits))
    }

    /// Nearest multiple of `2^-bits`, ties to even.
    pub fn round_to_grid(&self, bits: u32) -> Self {
        if self.exponent <= bits {
            return self.clone();
        }
        let drop = (self.exponent - bits) as usize;
        let divisor = BigInt::one() << drop;
        let (q, r): (BigInt, BigInt) = self.numerator.div_mod_floor(&divisor);
        let twice: BigInt = &r << 1usize;
        let q = match twice.cmp(&divisor) {
            Ordering::Less => q,
            Ordering::Greater => q + 1,
            Ordering::Equal => {
                if q.is_even() {
                    q
                } else {
                    q + 1
                }
            }
        };
        Self::new(q, bits)
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Default for Dyadic {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for Dyadic {
    fn from(value: i64) -> Self {
        Self::from_int(value)
    }
}

impl From<BigInt> for Dyadic {
    fn from(value: BigInt) -> Self {
        Self::from_int(value)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let exp = self.exponent.max(other.exponent);
        self.scaled_numerator(exp).cmp(&other.scaled_numerator(exp))
    }
}

impl Add<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let exp = self.exponent.max(rhs.exponent);
        Dyadic::new(self.scaled_numerator(exp) + rhs.scaled_numerator(exp), exp)
    }
}

impl Sub<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let exp = self.exponent.max(rhs.exponent);
        Dyadic::new(self.scaled_numerator(exp) - rhs.scaled_numerator(exp), exp)
    }
}

impl Mul<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.numerator * &rhs.numerator, self.exponent + rhs.exponent)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            numerator: -&self.numerator,
            exponent: self.exponent,
        }
    }
}

macro_rules! forward_owned {
    ($($tr:ident $method:ident),*) => {$(
        impl $tr<Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $method(self, rhs: Dyadic) -> Dyadic { (&self).$method(&rhs) }
        }
        impl $tr<&Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $method(self, rhs: &Dyadic) -> Dyadic { (&self).$method(rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Self {
        iter.fold(Dyadic::zero(), |acc, x| acc + x)
    }
}

impl<'a> std::iter::Sum<&'a Dyadic> for Dyadic {
    fn sum<I: Iterator<Item = &'a Dyadic>>(iter: I) -> Self {
        iter.fold(Dyadic::zero(), |acc, x| acc + x)
    }
}

/// Canonical text: `a` for integers, `a*2^-q` otherwise.
impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}*2^-{}", self.numerator, self.exponent)
        }
    }
}

/// Accepts `a`, `a*2^-q`, and exact decimals such as `-0.375`.
impl FromStr for Dyadic {
    type Err = ParseDyadicError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let s = text.trim();
        if s.is_empty() {
            return Err(ParseDyadicError::Empty);
        }
        let malformed = || ParseDyadicError::Malformed(s.to_string());
        if let Some((num, exp)) = s.split_once("*2^-") {
            let numerator = parse_integer(num).ok_or_else(malformed)?;
            let exponent: u32 = exp.trim().parse().map_err(|_| malformed())?;
            return Ok(Dyadic::new(numerator, exponent));
        }
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(malformed());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(malformed());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut numerator: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| malformed())?
        };
        if negative {
            numerator = -numerator;
        }
        let denominator = num_traits::pow(BigInt::from(10), frac_part.len());
        let value = BigRational::new(numerator, denominator);
        Dyadic::from_rational(&value).ok_or_else(|| ParseDyadicError::NotDyadic(s.to_string()))
    }
}

fn parse_integer(text: &str) -> Option<BigInt> {
    let t = text.trim();
    let body = t.strip_prefix(['-', '+']).unwrap_or(t);
    if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    t.parse().ok()
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl de::Visitor<'_> for Visitor {
            type Value = Dyadic;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or a dyadic string like \"3*2^-4\" or \"0.25\"")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Dyadic, E> {
                Ok(Dyadic::from_int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Dyadic, E> {
                Ok(Dyadic::from_int(v))
            }
            fn visit_f64<E: de::Error>(self, _: f64) -> Result<Dyadic, E> {
                Err(E::custom(
                    "floating-point literals are not accepted; quote the value as a string",
                ))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Dyadic, E> {
                v.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

/// Serialize an exact rational as `a/2^q` when dyadic, `a` when integral, else `a/b`.
pub fn rational_to_string(value: &BigRational) -> String {
    if value.is_integer() {
        return value.numer().to_string();
    }
    match Dyadic::from_rational(value) {
        Some(d) => format!("{}/2^{}", d.numerator(), d.exponent()),
        None => format!("{}/{}", value.numer(), value.denom()),
    }
}

pub fn parse_rational(text: &str) -> Result<BigRational, ParseDyadicError> {
    let s = text.trim();
    let malformed = || ParseDyadicError::Malformed(s.to_string());
    match s.split_once('/') {
        None => Ok(BigRational::from_integer(parse_integer(s).ok_or_else(malformed)?)),
        Some((num, den)) => {
            let numer = parse_integer(num).ok_or_else(malformed)?;
            let denom = match den.trim().strip_prefix("2^") {
                Some(exp) => {
                    let q: u32 = exp.parse().map_err(|_| malformed())?;
                    BigInt::one() << q as usize
                }
                None => parse_integer(den).ok_or_else(malformed)?,
            };
            if denom.sign() == Sign::NoSign {
                return Err(malformed());
            }
            Ok(BigRational::new(numer, denom))
        }
    }
}

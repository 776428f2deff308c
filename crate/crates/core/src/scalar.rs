use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::dyadic::Dyadic;

/// Field operations shared by the float (solver) and exact (certificate) paths.
pub trait Scalar:
    Clone
    + Debug
    + Zero
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(value: i64) -> Self;
    fn from_dyadic(value: &Dyadic) -> Self;
    fn magnitude(&self) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact zero test for rationals, `|x| <= tol` for floats.
    fn is_negligible(&self, tol: f64) -> bool;
}

impl Scalar for f64 {
    fn from_i64(value: i64) -> Self {
        value as f64
    }
    fn from_dyadic(value: &Dyadic) -> Self {
        value.to_f64()
    }
    fn magnitude(&self) -> Self {
        f64::abs(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_negligible(&self, tol: f64) -> bool {
        f64::abs(*self) <= tol
    }
}

impl Scalar for BigRational {
    fn from_i64(value: i64) -> Self {
        BigRational::from_integer(value.into())
    }
    fn from_dyadic(value: &Dyadic) -> Self {
        value.to_rational()
    }
    fn magnitude(&self) -> Self {
        Signed::abs(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }
}

pub(crate) fn sum<T: Scalar>(items: impl IntoIterator<Item = T>) -> T {
    items.into_iter().fold(T::zero(), |acc, x| acc + x)
}


//! The numeric abstraction the integrator is written against.
//!
//! Operations are in-place and round to the precision of the destination, so
//! accumulators and scratch values can be reused across the hot loops without
//! reallocating. Hardware floats (via `num-traits`), exact rationals and
//! [`MpFloat`] all implement it.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, ToPrimitive, Zero};

use crate::apfloat::{MpFloat, PrecisionContext};
use crate::decimal::Decimal;
use crate::error::{ArithError, Error, Result};

pub trait Scalar: Clone + Debug + Send + Sync + 'static {
    /// Everything needed to create a value, e.g. the working precision.
    type Context: Clone + Debug + PartialEq + Send + Sync;

    fn zero(ctx: &Self::Context) -> Self;
    fn from_i64(value: i64, ctx: &Self::Context) -> Self;
    /// `num / den` with a single rounding.
    fn from_ratio(num: i64, den: i64, ctx: &Self::Context) -> Result<Self, ArithError>;
    fn parse_decimal(text: &str, ctx: &Self::Context) -> Result<Self>;

    fn is_zero(&self) -> bool;
    fn set_zero(&mut self);
    fn negate(&mut self);
    fn add_from(&mut self, rhs: &Self) -> Result<(), ArithError>;
    fn sub_from(&mut self, rhs: &Self) -> Result<(), ArithError>;
    fn mul_by(&mut self, rhs: &Self) -> Result<(), ArithError>;
    fn div_by(&mut self, rhs: &Self) -> Result<(), ArithError>;
    /// `self = a * b`, rounded to the precision of `self`.
    fn set_product(&mut self, a: &Self, b: &Self) -> Result<(), ArithError>;

    /// Identical representation, not just equal value.
    fn bit_eq(&self, other: &Self) -> bool;
    /// Significand bits, `None` for exact types.
    fn precision_bits(&self) -> Option<u32>;
    fn to_exact(&self) -> BigRational;
    fn to_f64(&self) -> f64;
}

fn finite<T: Float>(v: T) -> Result<T, ArithError> {
    if v.is_nan() {
        Err(ArithError::Invalid)
    } else if v.is_infinite() {
        Err(ArithError::Overflow)
    } else {
        Ok(v)
    }
}

macro_rules! hardware_float_scalar {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            type Context = ();

            fn zero(_: &()) -> Self {
                <$t as Zero>::zero()
            }

            fn from_i64(value: i64, _: &()) -> Self {
                <$t as FromPrimitive>::from_i64(value).expect("every i64 is in range")
            }

            fn from_ratio(num: i64, den: i64, ctx: &()) -> Result<Self, ArithError> {
                if den == 0 {
                    return Err(ArithError::DivisionByZero);
                }
                finite(<Self as Scalar>::from_i64(num, ctx) / <Self as Scalar>::from_i64(den, ctx))
            }

            fn parse_decimal(text: &str, _: &()) -> Result<Self> {
                Decimal::parse(text)?;
                let v: $t = text.parse().map_err(|_| Error::Parse(text.to_string()))?;
                finite(v).map_err(|_| Error::Range(text.to_string()))
            }

            fn is_zero(&self) -> bool {
                Zero::is_zero(self)
            }

            fn set_zero(&mut self) {
                *self = <$t as Zero>::zero();
            }

            fn negate(&mut self) {
                *self = -*self;
            }

            fn add_from(&mut self, rhs: &Self) -> Result<(), ArithError> {
                *self = finite(*self + *rhs)?;
                Ok(())
            }

            fn sub_from(&mut self, rhs: &Self) -> Result<(), ArithError> {
                *self = finite(*self - *rhs)?;
                Ok(())
            }

            fn mul_by(&mut self, rhs: &Self) -> Result<(), ArithError> {
                *self = finite(*self * *rhs)?;
                Ok(())
            }

            fn div_by(&mut self, rhs: &Self) -> Result<(), ArithError> {
                if Zero::is_zero(rhs) {
                    return Err(ArithError::DivisionByZero);
                }
                *self = finite(*self / *rhs)?;
                Ok(())
            }

            fn set_product(&mut self, a: &Self, b: &Self) -> Result<(), ArithError> {
                *self = finite(*a * *b)?;
                Ok(())
            }

            fn bit_eq(&self, other: &Self) -> bool {
                self.to_bits() == other.to_bits()
            }

            fn precision_bits(&self) -> Option<u32> {
                Some(<$t>::MANTISSA_DIGITS)
            }

            fn to_exact(&self) -> BigRational {
                BigRational::from_float(*self).expect("values are finite")
            }

            fn to_f64(&self) -> f64 {
                ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
            }
        }
    )*};
}

hardware_float_scalar!(f32, f64);

impl Scalar for BigRational {
    type Context = ();

    fn zero(_: &()) -> Self {
        <BigRational as Zero>::zero()
    }

    fn from_i64(value: i64, _: &()) -> Self {
        BigRational::from_integer(BigInt::from(value))
    }

    fn from_ratio(num: i64, den: i64, _: &()) -> Result<Self, ArithError> {
        if den == 0 {
            return Err(ArithError::DivisionByZero);
        }
        Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn parse_decimal(text: &str, _: &()) -> Result<Self> {
        Ok(Decimal::parse(text)?.to_rational())
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn set_zero(&mut self) {
        *self = <BigRational as Zero>::zero();
    }

    fn negate(&mut self) {
        *self = -std::mem::take(self);
    }

    fn add_from(&mut self, rhs: &Self) -> Result<(), ArithError> {
        *self += rhs;
        Ok(())
    }

    fn sub_from(&mut self, rhs: &Self) -> Result<(), ArithError> {
        *self -= rhs;
        Ok(())
    }

    fn mul_by(&mut self, rhs: &Self) -> Result<(), ArithError> {
        *self *= rhs;
        Ok(())
    }

    fn div_by(&mut self, rhs: &Self) -> Result<(), ArithError> {
        if Zero::is_zero(rhs) {
            return Err(ArithError::DivisionByZero);
        }
        *self /= rhs;
        Ok(())
    }

    fn set_product(&mut self, a: &Self, b: &Self) -> Result<(), ArithError> {
        *self = a * b;
        Ok(())
    }

    fn bit_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn precision_bits(&self) -> Option<u32> {
        None
    }

    fn to_exact(&self) -> BigRational {
        self.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for MpFloat {
    type Context = PrecisionContext;

    fn zero(ctx: &PrecisionContext) -> Self {
        MpFloat::zero(ctx)
    }

    fn from_i64(value: i64, ctx: &PrecisionContext) -> Self {
        MpFloat::from_i64(value, ctx)
    }

    fn from_ratio(num: i64, den: i64, ctx: &PrecisionContext) -> Result<Self, ArithError> {
        let mut q = MpFloat::from_i64(num, ctx);
        q.div_assign(&MpFloat::from_i64(den, ctx))?;
        Ok(q)
    }

    fn parse_decimal(text: &str, ctx: &PrecisionContext) -> Result<Self> {
        MpFloat::parse(text, ctx)
    }

    fn is_zero(&self) -> bool {
        MpFloat::is_zero(self)
    }

    fn set_zero(&mut self) {
        MpFloat::set_zero(self)
    }

    fn negate(&mut self) {
        MpFloat::negate(self)
    }

    #[inline]
    fn add_from(&mut self, rhs: &Self) -> Result<(), ArithError> {
        self.add_assign(rhs)
    }

    fn sub_from(&mut self, rhs: &Self) -> Result<(), ArithError> {
        self.sub_assign(rhs)
    }

    fn mul_by(&mut self, rhs: &Self) -> Result<(), ArithError> {
        self.mul_assign(rhs)
    }

    fn div_by(&mut self, rhs: &Self) -> Result<(), ArithError> {
        self.div_assign(rhs)
    }

    #[inline]
    fn set_product(&mut self, a: &Self, b: &Self) -> Result<(), ArithError> {
        self.assign_product(a, b)
    }

    fn bit_eq(&self, other: &Self) -> bool {
        MpFloat::bit_eq(self, other)
    }

    fn precision_bits(&self) -> Option<u32> {
        Some(self.precision())
    }

    fn to_exact(&self) -> BigRational {
        MpFloat::to_exact(self)
    }

    fn to_f64(&self) -> f64 {
        MpFloat::to_f64(self)
    }
}

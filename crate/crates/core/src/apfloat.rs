//! Arbitrary-precision binary floating point with a fixed working precision.
//!
//! Every value is a sign, a significand of exactly `precision_bits` bits and a
//! binary exponent. All operations round once, to nearest with ties to even.
//! Results outside the exponent range are reported as errors instead of
//! producing infinities or flushing to zero.
//!
//! The arithmetic itself is delegated to MPFR.

use std::cmp::Ordering;
use std::fmt;

use gmp_mpfr_sys::mpfr;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rug::ops::NegAssign;
use rug::{Assign, Float, Integer};

use crate::decimal::Decimal;
use crate::error::{ArithError, Error, Result};

pub const MIN_PRECISION_BITS: u32 = 64;
pub const MAX_PRECISION_BITS: u32 = 1 << 24;

/// Working precision shared by every value of one computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrecisionContext {
    bits: u32,
}

impl PrecisionContext {
    pub fn new(bits: u32) -> Result<Self> {
        if !(MIN_PRECISION_BITS..=MAX_PRECISION_BITS).contains(&bits) {
            return Err(Error::Precision(format!(
                "{bits} bits is outside [{MIN_PRECISION_BITS}, {MAX_PRECISION_BITS}]"
            )));
        }
        Ok(PrecisionContext { bits })
    }

    /// Smallest precision that carries `digits` reliable decimal digits.
    pub fn from_decimal_digits(digits: u32) -> Result<Self> {
        PrecisionContext::new(bits_for_decimal_digits(digits))
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn decimal_digits(&self) -> u32 {
        decimal_digits(self.bits)
    }
}

/// `floor(bits * log10(2))`: the number of decimal digits a `bits`-bit
/// significand always resolves. Equivalently the largest `k` with `10^k <= 2^bits`.
pub fn decimal_digits(bits: u32) -> u32 {
    let estimate = (f64::from(bits) * std::f64::consts::LOG10_2).floor() as u32;
    let two_pow = Integer::from(Integer::u_pow_u(2, bits));
    let mut k = estimate;
    while k > 0 && Integer::from(Integer::u_pow_u(10, k)) > two_pow {
        k -= 1;
    }
    while Integer::from(Integer::u_pow_u(10, k + 1)) <= two_pow {
        k += 1;
    }
    k
}

/// `ceil(digits / log10(2))`: the smallest `p` with `2^p >= 10^digits`.
pub fn bits_for_decimal_digits(digits: u32) -> u32 {
    if digits == 0 {
        return 0;
    }
    let target = Integer::from(Integer::u_pow_u(10, digits)) - 1u32;
    target.significant_bits()
}

/// Runs one MPFR operation and converts its sticky exception flags into errors.
#[inline]
fn guarded<T>(op: impl FnOnce() -> T) -> std::result::Result<T, ArithError> {
    // SAFETY: the flag functions only touch MPFR's (thread-local) flag word.
    unsafe { mpfr::clear_flags() };
    let out = op();
    unsafe {
        if mpfr::nanflag_p() != 0 {
            Err(ArithError::Invalid)
        } else if mpfr::overflow_p() != 0 {
            Err(ArithError::Overflow)
        } else if mpfr::underflow_p() != 0 {
            Err(ArithError::Underflow)
        } else {
            Ok(out)
        }
    }
}

/// Exact layout of a value: `(-1)^negative * significand * 2^exponent`, with
/// the significand written in lowercase hexadecimal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawParts {
    pub negative: bool,
    pub significand: String,
    pub exponent: i64,
}

#[derive(Clone)]
pub struct MpFloat(Float);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// `a op b` rounded once to the precision of `ctx`.
pub fn arith(op: ArithOp, a: &MpFloat, b: &MpFloat, ctx: &PrecisionContext) -> std::result::Result<MpFloat, ArithError> {
    let mut out = MpFloat::zero(ctx);
    match op {
        ArithOp::Add => guarded(|| out.0.assign(&a.0 + &b.0))?,
        ArithOp::Sub => guarded(|| out.0.assign(&a.0 - &b.0))?,
        ArithOp::Mul => guarded(|| out.0.assign(&a.0 * &b.0))?,
        ArithOp::Div => {
            if b.0.is_zero() {
                return Err(ArithError::DivisionByZero);
            }
            guarded(|| out.0.assign(&a.0 / &b.0))?
        }
    }
    Ok(out)
}

impl MpFloat {
    pub fn zero(ctx: &PrecisionContext) -> Self {
        MpFloat(Float::new(ctx.bits))
    }

    /// Exact, since every context has at least 64 bits.
    pub fn from_i64(value: i64, ctx: &PrecisionContext) -> Self {
        MpFloat(Float::with_val(ctx.bits, value))
    }

    /// Correctly rounded conversion of a decimal literal such as `-15.8` or `1e-3`.
    pub fn parse(text: &str, ctx: &PrecisionContext) -> Result<Self> {
        let exact = Decimal::parse(text)?;
        let parsed = Float::parse(text).map_err(|_| Error::Parse(text.to_string()))?;
        let mut out = MpFloat::zero(ctx);
        guarded(|| out.0.assign(parsed)).map_err(|_| Error::Range(text.to_string()))?;
        if out.0.is_zero() && !exact.is_zero() {
            return Err(Error::Range(text.to_string()));
        }
        if out.0.is_zero() {
            // "-0" parses to an unsigned zero
            out.0.assign(0);
        }
        Ok(out)
    }

    /// Decimal string with exactly `digits` significant digits, correctly rounded.
    ///
    /// Positional notation is used for decimal exponents in `[-5, digits)`,
    /// scientific (`1.25e-7`) otherwise.
    pub fn to_decimal(&self, digits: usize) -> Result<String> {
        if digits == 0 {
            return Err(Error::Invalid("at least one significant digit is required".into()));
        }
        if self.0.is_zero() {
            return Ok(if digits == 1 {
                "0".to_string()
            } else {
                format!("0.{}", "0".repeat(digits - 1))
            });
        }
        let (negative, s, exp) = self.0.to_sign_string_exp(10, Some(digits));
        let exp = i64::from(exp.expect("finite nonzero value has an exponent")) - 1;
        let mut out = String::with_capacity(digits + 12);
        if negative {
            out.push('-');
        }
        if exp >= 0 && exp < digits as i64 {
            let (int, frac) = s.split_at(exp as usize + 1);
            out.push_str(int);
            if !frac.is_empty() {
                out.push('.');
                out.push_str(frac);
            }
        } else if (-5..0).contains(&exp) {
            out.push_str("0.");
            out.push_str(&"0".repeat((-exp - 1) as usize));
            out.push_str(&s);
        } else {
            out.push_str(&s[..1]);
            if s.len() > 1 {
                out.push('.');
                out.push_str(&s[1..]);
            }
            out.push('e');
            out.push_str(&exp.to_string());
        }
        Ok(out)
    }

    pub fn precision(&self) -> u32 {
        self.0.prec()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative()
    }

    /// Same precision, same value and same sign of zero.
    pub fn bit_eq(&self, other: &MpFloat) -> bool {
        self.0.prec() == other.0.prec()
            && self.0.is_sign_negative() == other.0.is_sign_negative()
            && self.0 == other.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn to_raw_parts(&self) -> RawParts {
        let negative = self.0.is_sign_negative();
        if self.0.is_zero() {
            return RawParts {
                negative,
                significand: "0".into(),
                exponent: 0,
            };
        }
        let (m, e) = self.0.to_integer_exp().expect("values are finite");
        RawParts {
            negative,
            significand: m.abs().to_string_radix(16),
            exponent: i64::from(e),
        }
    }

    /// Inverse of [`MpFloat::to_raw_parts`]; fails when the significand does not
    /// fit the context precision exactly.
    pub fn from_raw_parts(parts: &RawParts, ctx: &PrecisionContext) -> Result<Self> {
        let bad = |why: &str| Error::Invalid(format!("raw value {parts:?}: {why}"));
        let m = Integer::from_str_radix(&parts.significand, 16).map_err(|_| bad("significand is not hexadecimal"))?;
        if m < 0 {
            return Err(bad("significand must be unsigned"));
        }
        if m.significant_bits() > ctx.bits {
            return Err(bad("significand is wider than the precision"));
        }
        let exponent = i32::try_from(parts.exponent).map_err(|_| bad("exponent out of range"))?;
        let mut out = MpFloat(Float::with_val(ctx.bits, m));
        if !out.0.is_zero() {
            guarded(|| out.0 <<= exponent).map_err(|_| bad("exponent out of range"))?;
        }
        if parts.negative {
            out.0 = -out.0;
        }
        Ok(out)
    }

    /// The exact rational value.
    pub fn to_exact(&self) -> BigRational {
        if self.0.is_zero() {
            return BigRational::zero();
        }
        let (m, e) = self.0.to_integer_exp().expect("values are finite");
        let m = BigInt::parse_bytes(m.to_string_radix(16).as_bytes(), 16).expect("hex from GMP");
        let scale = BigInt::one() << e.unsigned_abs();
        if e >= 0 {
            BigRational::from_integer(m * scale)
        } else {
            BigRational::new(m, scale)
        }
    }

    pub fn as_rug(&self) -> &Float {
        &self.0
    }

    pub(crate) fn add_assign(&mut self, rhs: &MpFloat) -> std::result::Result<(), ArithError> {
        guarded(|| self.0 += &rhs.0)
    }

    pub(crate) fn sub_assign(&mut self, rhs: &MpFloat) -> std::result::Result<(), ArithError> {
        guarded(|| self.0 -= &rhs.0)
    }

    pub(crate) fn mul_assign(&mut self, rhs: &MpFloat) -> std::result::Result<(), ArithError> {
        guarded(|| self.0 *= &rhs.0)
    }

    pub(crate) fn div_assign(&mut self, rhs: &MpFloat) -> std::result::Result<(), ArithError> {
        if rhs.0.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        guarded(|| self.0 /= &rhs.0)
    }

    pub(crate) fn assign_product(&mut self, a: &MpFloat, b: &MpFloat) -> std::result::Result<(), ArithError> {
        guarded(|| self.0.assign(&a.0 * &b.0))
    }

    pub(crate) fn negate(&mut self) {
        self.0.neg_assign();
    }

    pub(crate) fn set_zero(&mut self) {
        self.0.assign(0);
    }
}

impl PartialEq for MpFloat {
    /// Numeric equality; see [`MpFloat::bit_eq`] for representation equality.
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for MpFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl fmt::Debug for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = (decimal_digits(self.precision()) as usize + 2).min(40);
        write!(f, "MpFloat({}, {} bits)", self.to_decimal(digits).unwrap_or_default(), self.precision())
    }
}

impl fmt::Display for MpFloat {
    /// Enough digits to read the value back unchanged.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = decimal_digits(self.precision()) as usize + 2;
        f.write_str(&self.to_decimal(digits).map_err(|_| fmt::Error)?)
    }
}

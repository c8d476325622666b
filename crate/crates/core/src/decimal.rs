//! Exact signed decimal literals: `[+-]? digits [. digits] [(e|E) [+-]? digits]`.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Decimal exponents beyond this cannot be represented at any supported precision.
const MAX_DECIMAL_EXPONENT: i64 = 1_000_000_000;

/// `(-1)^negative * digits * 10^exponent`, held exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decimal {
    negative: bool,
    digits: BigUint,
    exponent: i64,
}

impl Decimal {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Parse(text.to_string());
        let bytes = text.as_bytes();
        let mut pos = 0;
        let mut negative = false;
        if let Some(&c) = bytes.first() {
            if c == b'+' || c == b'-' {
                negative = c == b'-';
                pos = 1;
            }
        }
        let int_start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        let int_part = &text[int_start..pos];
        let mut frac_part = "";
        if pos < bytes.len() && bytes[pos] == b'.' {
            pos += 1;
            let frac_start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            frac_part = &text[frac_start..pos];
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let mut exponent: i64 = 0;
        if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
            pos += 1;
            let exp_start = pos;
            if pos < bytes.len() && (bytes[pos] == b'+' || bytes[pos] == b'-') {
                pos += 1;
            }
            let digits_start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            if digits_start == pos {
                return Err(bad());
            }
            exponent = text[exp_start..pos]
                .parse::<i64>()
                .map_err(|_| Error::Range(text.to_string()))?;
        }
        if pos != bytes.len() {
            return Err(bad());
        }
        let all_digits = format!("{int_part}{frac_part}");
        let digits = BigUint::parse_bytes(all_digits.as_bytes(), 10).ok_or_else(bad)?;
        let exponent = exponent
            .checked_sub(frac_part.len() as i64)
            .ok_or_else(|| Error::Range(text.to_string()))?;
        let mut value = Decimal {
            negative,
            digits,
            exponent,
        };
        value.normalize();
        if !value.digits.is_zero() {
            let magnitude = value.exponent + value.digits.to_string().len() as i64;
            if magnitude.abs() > MAX_DECIMAL_EXPONENT {
                return Err(Error::Range(text.to_string()));
            }
        }
        Ok(value)
    }

    fn normalize(&mut self) {
        if self.digits.is_zero() {
            self.negative = false;
            self.exponent = 0;
            return;
        }
        let ten = BigUint::from(10u32);
        while (&self.digits % &ten).is_zero() {
            self.digits /= &ten;
            self.exponent += 1;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.digits.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn to_rational(&self) -> BigRational {
        let sign = if self.negative { Sign::Minus } else { Sign::Plus };
        let mantissa = BigInt::from_biguint(sign, self.digits.clone());
        let scale = BigInt::from(10u32).pow(self.exponent.unsigned_abs() as u32);
        if self.exponent >= 0 {
            BigRational::from_integer(mantissa * scale)
        } else {
            BigRational::new(mantissa, scale)
        }
    }

    /// Exact product with an integer, used for `time = step * tau`.
    pub fn mul_int(&self, factor: u64) -> Decimal {
        let mut out = Decimal {
            negative: self.negative,
            digits: &self.digits * BigUint::from(factor),
            exponent: self.exponent,
        };
        out.normalize();
        out
    }

    /// `self / divisor` when the quotient is a non-negative integer.
    pub fn div_exact(&self, divisor: &Decimal) -> Option<u64> {
        if divisor.is_zero() {
            return None;
        }
        let q = self.to_rational() / divisor.to_rational();
        if !q.is_integer() || q < BigRational::zero() {
            return None;
        }
        let n = q.to_integer();
        u64::try_from(n).ok()
    }
}

impl fmt::Display for Decimal {
    /// Plain positional notation without exponent, e.g. `-0.0125`, `60`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.digits.is_zero() {
            return f.write_str("0");
        }
        if self.negative {
            f.write_str("-")?;
        }
        let s = self.digits.to_string();
        if self.exponent >= 0 {
            f.write_str(&s)?;
            for _ in 0..self.exponent {
                f.write_str("0")?;
            }
            return Ok(());
        }
        let frac_len = self.exponent.unsigned_abs() as usize;
        if s.len() > frac_len {
            let (int, frac) = s.split_at(s.len() - frac_len);
            write!(f, "{int}.{frac}")
        } else {
            write!(f, "0.{}{s}", "0".repeat(frac_len - s.len()))
        }
    }
}

impl std::str::FromStr for Decimal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Decimal::parse(s)
    }
}

/// Exact `10^n` as a rational, `n` may be negative.
pub(crate) fn pow10(n: i64) -> BigRational {
    let p = BigInt::from(10u32).pow(n.unsigned_abs() as u32);
    if n >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

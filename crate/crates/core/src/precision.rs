//! Configurable-precision scalars.
//!
//! Every real computation in the crate runs on MPFR floats whose mantissa is
//! sized from a requested number of significant decimal digits. [`Precision`]
//! is the small `Copy` context passed around; [`PrecisionReal`] pairs a value
//! with the precision it was computed at so that downstream tolerance checks
//! can be stated relative to it; [`LogValue`] stores sign and log-magnitude for
//! products whose magnitude leaves any fixed exponent range.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::{Constant, Special};
use rug::ops::Pow;
use rug::{Assign, Float};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DIGITS: u32 = 50;

/// Extra mantissa bits carried beyond the requested decimal digits.
const GUARD_BITS: u32 = 24;
const MIN_DIGITS: u32 = 12;
const MAX_DIGITS: u32 = 20_000;

/// Working precision, expressed in significant decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Precision {
    digits: u32,
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            digits: DEFAULT_DIGITS,
        }
    }
}

impl Precision {
    pub fn new(digits: u32) -> Result<Self> {
        if !(MIN_DIGITS..=MAX_DIGITS).contains(&digits) {
            return Err(Error::InvalidPrecision(format!(
                "{digits} digits requested, supported range is {MIN_DIGITS}..={MAX_DIGITS}"
            )));
        }
        Ok(Precision { digits })
    }

    pub const fn digits(self) -> u32 {
        self.digits
    }

    /// Mantissa bits used for floats at this precision.
    pub fn bits(self) -> u32 {
        (f64::from(self.digits) * std::f64::consts::LOG2_10).ceil() as u32 + GUARD_BITS
    }

    /// The same precision with twice the digits, used for rerun spot checks.
    pub fn doubled(self) -> Precision {
        Precision {
            digits: (self.digits * 2).min(MAX_DIGITS),
        }
    }

    pub fn with_extra_digits(self, extra: u32) -> Precision {
        Precision {
            digits: (self.digits + extra).min(MAX_DIGITS),
        }
    }

    pub fn float<T>(self, value: T) -> Float
    where
        Float: Assign<T>,
    {
        Float::with_val(self.bits(), value)
    }

    pub fn zero(self) -> Float {
        Float::new(self.bits())
    }

    pub fn one(self) -> Float {
        self.float(1)
    }

    pub fn pi(self) -> Float {
        self.float(Constant::Pi)
    }

    pub fn infinity(self) -> Float {
        self.float(Special::Infinity)
    }

    /// Parses a decimal literal at this precision.
    pub fn parse(self, text: &str) -> Result<Float> {
        let parsed = Float::parse(text)
            .map_err(|e| Error::InvalidArgument(format!("cannot parse {text:?}: {e}")))?;
        Ok(self.float(parsed))
    }

    /// `10^-(digits - slack)`: the tolerance a result is expected to meet after
    /// spending `slack` digits on conditioning.
    pub fn tolerance(self, slack: u32) -> Float {
        let exponent = i64::from(self.digits) - i64::from(slack);
        let ten = self.float(10);
        ten.pow(-exponent.max(0) as i32)
    }

    /// `2^-bits`, the unit roundoff of this precision.
    pub fn epsilon(self) -> Float {
        let two = self.float(2);
        two.pow(-(self.bits() as i32))
    }
}

/// A real number together with the precision it carries.
#[derive(Debug, Clone)]
pub struct PrecisionReal {
    value: Float,
    precision: Precision,
}

impl PrecisionReal {
    pub fn new(value: Float, precision: Precision) -> Self {
        let mut value = value;
        value.set_prec(precision.bits());
        PrecisionReal { value, precision }
    }

    pub fn from_f64(value: f64, precision: Precision) -> Self {
        PrecisionReal::new(precision.float(value), precision)
    }

    pub fn parse(text: &str, precision: Precision) -> Result<Self> {
        Ok(PrecisionReal::new(precision.parse(text)?, precision))
    }

    pub fn value(&self) -> &Float {
        &self.value
    }

    pub fn into_value(self) -> Float {
        self.value
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    /// Decimal rendering with exactly the carried number of significant digits.
    pub fn to_decimal(&self) -> String {
        decimal_string(&self.value, self.precision.digits())
    }

    pub fn ln(&self) -> PrecisionReal {
        PrecisionReal::new(self.value.clone().ln(), self.precision)
    }

    pub fn exp(&self) -> PrecisionReal {
        PrecisionReal::new(self.value.clone().exp(), self.precision)
    }

    pub fn sqrt(&self) -> PrecisionReal {
        PrecisionReal::new(self.value.clone().sqrt(), self.precision)
    }

    pub fn abs(&self) -> PrecisionReal {
        PrecisionReal::new(self.value.clone().abs(), self.precision)
    }

    /// Number of leading decimal digits on which `self` and `other` agree.
    pub fn agreeing_digits(&self, other: &PrecisionReal) -> f64 {
        let diff = Float::with_val(self.precision.bits(), &self.value - &other.value).abs();
        if diff.is_zero() {
            return f64::from(self.precision.digits().min(other.precision.digits()));
        }
        let scale = Float::with_val(self.precision.bits(), self.value.abs_ref());
        if scale.is_zero() {
            return -diff.to_f64().log10();
        }
        let rel = diff / scale;
        -rel.to_f64().log10()
    }
}

fn combine(a: Precision, b: Precision) -> Precision {
    if a.digits <= b.digits {
        a
    } else {
        b
    }
}

macro_rules! real_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&PrecisionReal> for &PrecisionReal {
            type Output = PrecisionReal;
            fn $method(self, rhs: &PrecisionReal) -> PrecisionReal {
                let precision = combine(self.precision, rhs.precision);
                PrecisionReal::new(
                    Float::with_val(precision.bits(), &self.value $op &rhs.value),
                    precision,
                )
            }
        }
        impl $trait for PrecisionReal {
            type Output = PrecisionReal;
            fn $method(self, rhs: PrecisionReal) -> PrecisionReal {
                (&self).$method(&rhs)
            }
        }
    };
}

real_binop!(Add, add, +);
real_binop!(Sub, sub, -);
real_binop!(Mul, mul, *);
real_binop!(Div, div, /);

impl Neg for PrecisionReal {
    type Output = PrecisionReal;
    fn neg(self) -> PrecisionReal {
        PrecisionReal::new(-self.value, self.precision)
    }
}

impl PartialEq for PrecisionReal {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl PartialOrd for PrecisionReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

impl fmt::Display for PrecisionReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal())
    }
}

#[derive(Serialize, Deserialize)]
struct RealRepr {
    value: String,
    digits: u32,
}

impl Serialize for PrecisionReal {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RealRepr {
            value: self.to_decimal(),
            digits: self.precision.digits(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PrecisionReal {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = RealRepr::deserialize(deserializer)?;
        let precision = Precision::new(repr.digits).map_err(serde::de::Error::custom)?;
        PrecisionReal::parse(&repr.value, precision).map_err(serde::de::Error::custom)
    }
}

/// Renders `value` in scientific notation with `digits` significant digits.
pub fn decimal_string(value: &Float, digits: u32) -> String {
    if value.is_zero() {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    value.to_string_radix(10, Some(digits as usize))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    fn of(value: &Float) -> Sign {
        match value.cmp0() {
            Some(Ordering::Less) => Sign::Negative,
            Some(Ordering::Greater) => Sign::Positive,
            _ => Sign::Zero,
        }
    }

    fn times(self, other: Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }

    fn as_i32(self) -> i32 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }
}

/// A real number stored as `sign · exp(log_magnitude)`.
#[derive(Debug, Clone)]
pub struct LogValue {
    sign: Sign,
    log_magnitude: Float,
}

impl LogValue {
    pub fn zero(precision: Precision) -> Self {
        LogValue {
            sign: Sign::Zero,
            log_magnitude: -precision.infinity(),
        }
    }

    pub fn one(precision: Precision) -> Self {
        LogValue {
            sign: Sign::Positive,
            log_magnitude: precision.zero(),
        }
    }

    /// Builds `sign · exp(log_magnitude)`. A zero sign ignores the magnitude.
    pub fn from_parts(sign: Sign, log_magnitude: Float) -> Self {
        if sign == Sign::Zero {
            let bits = log_magnitude.prec();
            return LogValue {
                sign,
                log_magnitude: -Float::with_val(bits, Special::Infinity),
            };
        }
        LogValue {
            sign,
            log_magnitude,
        }
    }

    pub fn from_log(log_magnitude: Float) -> Self {
        LogValue::from_parts(Sign::Positive, log_magnitude)
    }

    pub fn from_real(value: &Float) -> Self {
        let sign = Sign::of(value);
        if sign == Sign::Zero {
            return LogValue::from_parts(sign, Float::new(value.prec()));
        }
        let log_magnitude = Float::with_val(value.prec(), value.abs_ref()).ln();
        LogValue {
            sign,
            log_magnitude,
        }
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Natural log of `|value|`; `None` for zero.
    pub fn log_magnitude(&self) -> Option<&Float> {
        (self.sign != Sign::Zero).then_some(&self.log_magnitude)
    }

    /// `ln(value)` for a positive value.
    pub fn ln(&self) -> Result<Float> {
        match self.sign {
            Sign::Positive => Ok(self.log_magnitude.clone()),
            _ => Err(Error::InvalidArgument(
                "logarithm of a non-positive LogValue".into(),
            )),
        }
    }

    /// Converts back to a plain float. Values outside MPFR's exponent range
    /// saturate to zero or infinity.
    pub fn to_real(&self) -> Float {
        let bits = self.log_magnitude.prec();
        match self.sign {
            Sign::Zero => Float::new(bits),
            sign => {
                let magnitude = self.log_magnitude.clone().exp();
                magnitude * sign.as_i32()
            }
        }
    }

    pub fn mul(&self, other: &LogValue) -> LogValue {
        let sign = self.sign.times(other.sign);
        let bits = self.log_magnitude.prec().min(other.log_magnitude.prec());
        LogValue::from_parts(
            sign,
            Float::with_val(bits, &self.log_magnitude + &other.log_magnitude),
        )
    }

    pub fn div(&self, other: &LogValue) -> Result<LogValue> {
        if other.sign == Sign::Zero {
            return Err(Error::InvalidArgument("division by a zero LogValue".into()));
        }
        let sign = self.sign.times(other.sign);
        let bits = self.log_magnitude.prec().min(other.log_magnitude.prec());
        Ok(LogValue::from_parts(
            sign,
            Float::with_val(bits, &self.log_magnitude - &other.log_magnitude),
        ))
    }

    /// Signed sum, evaluated as a log-sum-exp relative to the larger term.
    pub fn add(&self, other: &LogValue) -> LogValue {
        if self.sign == Sign::Zero {
            return other.clone();
        }
        if other.sign == Sign::Zero {
            return self.clone();
        }
        let bits = self.log_magnitude.prec().min(other.log_magnitude.prec());
        let (big, small) = if self.log_magnitude >= other.log_magnitude {
            (self, other)
        } else {
            (other, self)
        };
        let gap = Float::with_val(bits, &small.log_magnitude - &big.log_magnitude);
        let ratio = gap.exp();
        if big.sign == small.sign {
            let sum = Float::with_val(bits, &big.log_magnitude + ratio.ln_1p());
            LogValue::from_parts(big.sign, sum)
        } else {
            let diff = Float::with_val(bits, 1 - &ratio);
            if diff.is_zero() {
                return LogValue::from_parts(Sign::Zero, Float::new(bits));
            }
            let sum = Float::with_val(bits, &big.log_magnitude + diff.ln());
            LogValue::from_parts(big.sign, sum)
        }
    }

    pub fn scale_by_real(&self, factor: &Float) -> LogValue {
        self.mul(&LogValue::from_real(factor))
    }
}

#[derive(Serialize, Deserialize)]
struct LogRepr {
    sign: Sign,
    log_magnitude: Option<String>,
}

impl Serialize for LogValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let digits = ((self.log_magnitude.prec() as f64) / std::f64::consts::LOG2_10) as u32;
        LogRepr {
            sign: self.sign,
            log_magnitude: self
                .log_magnitude()
                .map(|m| decimal_string(m, digits.max(1))),
        }
        .serialize(serializer)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Zero => f.write_str("0"),
            Sign::Positive => write!(f, "exp({})", self.log_magnitude.to_f64()),
            Sign::Negative => write!(f, "-exp({})", self.log_magnitude.to_f64()),
        }
    }
}

/// `x^(p/q)` for positive `x`.
pub fn pow_ratio(x: &Float, numerator: i64, denominator: i64) -> Float {
    let bits = x.prec();
    let exponent = Float::with_val(bits, numerator) / denominator;
    Float::with_val(bits, x.pow(&exponent))
}

/// Largest relative deviation `|a - b| / max(|b|, floor)`.
pub fn relative_error(a: &Float, b: &Float, floor: &Float) -> Float {
    let bits = a.prec().max(b.prec());
    let diff = Float::with_val(bits, a - b).abs();
    let scale = Float::with_val(bits, b.abs_ref());
    let scale = if scale > *floor { scale } else { floor.clone() };
    diff / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_cover_requested_digits() {
        let p = Precision::default();
        assert_eq!(p.digits(), 50);
        assert!(p.bits() >= 167 + GUARD_BITS);
        assert!(Precision::new(5).is_err());
    }

    #[test]
    fn tolerance_is_power_of_ten() {
        let p = Precision::default();
        let tol = p.tolerance(10);
        let expected = p.parse("1e-40").unwrap();
        let rel = relative_error(&tol, &expected, &p.zero());
        assert!(rel < 1e-45);
    }

    #[test]
    fn doubled_precision_rerun_keeps_digits() {
        // exp(pi * sqrt(163)) is a near-integer whose digits are sensitive to
        // every intermediate rounding.
        let run = |p: Precision| {
            let x = p.pi() * p.float(163).sqrt();
            PrecisionReal::new(x.exp(), p)
        };
        let p = Precision::default();
        let lo = run(p);
        let hi = run(p.doubled());
        assert!(lo.agreeing_digits(&hi) >= f64::from(p.digits() - 5));
    }

    #[test]
    fn log_value_products_and_round_trip() {
        let p = Precision::default();
        let a = LogValue::from_real(&p.float(-3));
        let b = LogValue::from_real(&p.float(7));
        let prod = a.mul(&b);
        assert_eq!(prod.sign(), Sign::Negative);
        let back = prod.to_real();
        assert!(relative_error(&back, &p.float(-21), &p.zero()) < p.tolerance(2));

        let zero = LogValue::from_real(&p.zero());
        assert_eq!(zero.sign(), Sign::Zero);
        assert!(zero.log_magnitude().is_none());
        assert_eq!(zero.mul(&b).sign(), Sign::Zero);
    }

    #[test]
    fn log_value_spans_huge_exponents() {
        let p = Precision::default();
        let big = LogValue::from_log(p.float(1e7));
        let small = LogValue::from_log(p.float(-1e7));
        let prod = big.mul(&small);
        assert!(prod.ln().unwrap().abs() < p.tolerance(5));
    }

    #[test]
    fn log_value_signed_addition() {
        let p = Precision::default();
        let a = LogValue::from_real(&p.float(5));
        let b = LogValue::from_real(&p.float(-2));
        let sum = a.add(&b).to_real();
        assert!(relative_error(&sum, &p.float(3), &p.zero()) < p.tolerance(2));
        let cancel = a.add(&LogValue::from_real(&p.float(-5)));
        assert_eq!(cancel.sign(), Sign::Zero);
    }

    #[test]
    fn serde_round_trip() {
        let p = Precision::new(30).unwrap();
        let x = PrecisionReal::new(p.pi(), p);
        let json = serde_json::to_string(&x).unwrap();
        let back: PrecisionReal = serde_json::from_str(&json).unwrap();
        assert!(x.agreeing_digits(&back) >= 29.0);
        assert_eq!(back.precision().digits(), 30);
    }
}

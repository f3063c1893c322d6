//! Truncated formal power series in `q` with exact integer coefficients.
//!
//! A [`TruncatedSeries`] always stores exactly `n_max + 1` coefficients. The
//! binary operations refuse operands with different truncation orders instead
//! of silently resizing, so every result has a visible, reproducible order.

use std::io::{Read, Write};

use rug::ops::Pow;
use rug::{Float, Integer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{Precision, PrecisionReal};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    coeffs: Vec<Integer>,
}

impl TruncatedSeries {
    /// Series with the given coefficients; `n_max` is `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<Integer>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidSeries("a series needs at least one coefficient".into()));
        }
        Ok(TruncatedSeries { coeffs })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        TruncatedSeries::new(coeffs.iter().map(|&c| Integer::from(c)).collect())
    }

    pub fn from_fn(n_max: usize, f: impl FnMut(usize) -> Integer) -> Self {
        TruncatedSeries {
            coeffs: (0..=n_max).map(f).collect(),
        }
    }

    pub fn zero(n_max: usize) -> Self {
        TruncatedSeries {
            coeffs: vec![Integer::new(); n_max + 1],
        }
    }

    pub fn one(n_max: usize) -> Self {
        TruncatedSeries::monomial(0, 1, n_max)
    }

    /// `c · q^degree`, zero if the degree lies beyond the truncation.
    pub fn monomial(degree: usize, c: i64, n_max: usize) -> Self {
        let mut s = TruncatedSeries::zero(n_max);
        if degree <= n_max {
            s.coeffs[degree] = Integer::from(c);
        }
        s
    }

    /// `Σ_{n≤n_max} q^n`.
    pub fn geometric(n_max: usize) -> Self {
        TruncatedSeries::from_fn(n_max, |_| Integer::from(1))
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Integer] {
        &self.coeffs
    }

    pub fn coefficient(&self, n: usize) -> Option<&Integer> {
        self.coeffs.get(n)
    }

    pub fn into_coeffs(self) -> Vec<Integer> {
        self.coeffs
    }

    /// Lowers the truncation order. Raising it is not possible.
    pub fn truncate(&self, n_max: usize) -> Result<Self> {
        if n_max > self.n_max() {
            return Err(Error::TruncationMismatch {
                left: n_max,
                right: self.n_max(),
            });
        }
        Ok(TruncatedSeries {
            coeffs: self.coeffs[..=n_max].to_vec(),
        })
    }

    fn check_order(&self, other: &TruncatedSeries) -> Result<()> {
        if self.n_max() != other.n_max() {
            return Err(Error::TruncationMismatch {
                left: self.n_max(),
                right: other.n_max(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &TruncatedSeries) -> Result<Self> {
        self.check_order(other)?;
        Ok(TruncatedSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| Integer::from(a + b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &TruncatedSeries) -> Result<Self> {
        self.check_order(other)?;
        Ok(TruncatedSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| Integer::from(a - b))
                .collect(),
        })
    }

    pub fn neg(&self) -> Self {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|c| Integer::from(-c)).collect(),
        }
    }

    /// Product truncated at `n_max`.
    pub fn mul(&self, other: &TruncatedSeries) -> Result<Self> {
        self.check_order(other)?;
        let n = self.n_max();
        let mut out = vec![Integer::new(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.cmp0().is_eq() {
                continue;
            }
            for (j, b) in other.coeffs[..=n - i].iter().enumerate() {
                if !b.cmp0().is_eq() {
                    out[i + j] += Integer::from(a * b);
                }
            }
        }
        Ok(TruncatedSeries { coeffs: out })
    }

    /// Multiplicative inverse; the constant term must be `±1`.
    pub fn inv(&self) -> Result<Self> {
        let c0 = &self.coeffs[0];
        let sign: i32 = if *c0 == 1 {
            1
        } else if *c0 == -1 {
            -1
        } else {
            return Err(Error::NonUnitConstant(c0.to_string()));
        };
        let n = self.n_max();
        let mut out: Vec<Integer> = Vec::with_capacity(n + 1);
        out.push(Integer::from(sign));
        for m in 1..=n {
            let mut acc = Integer::new();
            for j in 1..=m {
                let a = &self.coeffs[j];
                if !a.cmp0().is_eq() {
                    acc += Integer::from(a * &out[m - j]);
                }
            }
            // b_m = -c0^{-1} Σ a_j b_{m-j} and c0^{-1} = c0.
            acc *= -sign;
            out.push(acc);
        }
        Ok(TruncatedSeries { coeffs: out })
    }

    /// Multiplies in place by `1 + c·q^m`.
    pub fn mul_binomial(&mut self, m: usize, c: i64) {
        assert!(m >= 1, "binomial factor needs a positive degree");
        let n = self.n_max();
        if m > n || c == 0 {
            return;
        }
        for i in (m..=n).rev() {
            let shifted = Integer::from(&self.coeffs[i - m] * c);
            self.coeffs[i] += shifted;
        }
    }

    /// Divides in place by `1 + c·q^m`.
    pub fn div_binomial(&mut self, m: usize, c: i64) {
        assert!(m >= 1, "binomial factor needs a positive degree");
        let n = self.n_max();
        if m > n || c == 0 {
            return;
        }
        for i in m..=n {
            let shifted = Integer::from(&self.coeffs[i - m] * c);
            self.coeffs[i] -= shifted;
        }
    }

    /// `Σ coeffs[n] e^{-ns}` with an estimate of the truncated tail.
    ///
    /// The tail estimate extrapolates the coefficient growth rate observed over
    /// the upper half of the stored coefficients: with `ρ` that rate and
    /// `q = e^{-s}`, the bound is `|a| q^{n_max} · ρq / (1 - ρq)` with `|a|` the largest
    /// upper-half coefficient (infinite when
    /// `ρq ≥ 1`). `tol` is the relative tolerance the bound is checked against.
    pub fn eval_at(&self, s: &PrecisionReal, tol: f64) -> Result<SeriesEvaluation> {
        let precision = s.precision();
        let bits = precision.bits();
        if s.value().cmp0() != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidArgument(format!(
                "evaluation point s = {} must be positive",
                s.to_decimal()
            )));
        }
        let q = Float::with_val(bits, -s.value()).exp();
        let mut acc = Float::new(bits);
        for c in self.coeffs.iter().rev() {
            acc *= &q;
            acc += c;
        }
        let bound = self.tail_estimate(&q, precision);
        let relative = if acc.is_zero() {
            bound.clone()
        } else {
            Float::with_val(bits, &bound / Float::with_val(bits, acc.abs_ref()))
        };
        let flagged = !(relative <= tol);
        Ok(SeriesEvaluation {
            value: PrecisionReal::new(acc, precision),
            truncation_bound: PrecisionReal::new(bound, precision),
            within_tolerance: !flagged,
        })
    }

    fn tail_estimate(&self, q: &Float, precision: Precision) -> Float {
        let bits = precision.bits();
        let n = self.n_max();
        let last = Float::with_val(bits, &self.coeffs[n]).abs();
        let mid = n / 2;
        let base = Float::with_val(bits, &self.coeffs[mid]).abs();
        let one = precision.one();
        let rho = if n == mid || base.is_zero() || last.is_zero() {
            one.clone()
        } else {
            let rate = Float::with_val(bits, &last / &base).ln() / (n - mid) as u32;
            let rho = rate.exp();
            if rho < one {
                one.clone()
            } else {
                rho
            }
        };
        // Vanishing upper coefficients are read as a polynomial, with no tail.
        let scale = self.coeffs[mid..]
            .iter()
            .map(|c| Float::with_val(bits, c).abs())
            .fold(Float::new(bits), |a, b| if b > a { b } else { a });
        if scale.is_zero() {
            return scale;
        }
        let rq = Float::with_val(bits, &rho * q);
        if rq >= one {
            return precision.infinity();
        }
        let geometric = Float::with_val(bits, &rq / Float::with_val(bits, &one - &rq));
        let qn = Float::with_val(bits, q.pow(n as u32));
        scale * geometric * qn
    }

    pub fn to_decimal_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(Integer::to_string).collect()
    }

    pub fn from_decimal_strings<S: AsRef<str>>(values: &[S]) -> Result<Self> {
        let coeffs = values
            .iter()
            .map(|v| {
                Integer::from_str_radix(v.as_ref(), 10)
                    .map_err(|e| Error::InvalidSeries(format!("{:?}: {e}", v.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        TruncatedSeries::new(coeffs)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "coefficient"])?;
        for (i, c) in self.coeffs.iter().enumerate() {
            w.write_record([i.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut coeffs = Vec::new();
        for (expected, record) in r.records().enumerate() {
            let record = record?;
            let index: usize = record
                .get(0)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::InvalidSeries(format!("bad index in row {expected}")))?;
            if index != expected {
                return Err(Error::InvalidSeries(format!(
                    "row {expected} has index {index}; indices must be consecutive from 0"
                )));
            }
            let value = record
                .get(1)
                .ok_or_else(|| Error::InvalidSeries(format!("missing coefficient in row {expected}")))?;
            coeffs.push(
                Integer::from_str_radix(value, 10)
                    .map_err(|e| Error::InvalidSeries(format!("{value:?}: {e}")))?,
            );
        }
        TruncatedSeries::new(coeffs)
    }

    /// Index and values of the first coefficient where `self` and `other` differ.
    pub fn first_difference(&self, other: &TruncatedSeries) -> Option<usize> {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .position(|(a, b)| a != b)
            .or_else(|| {
                (self.coeffs.len() != other.coeffs.len())
                    .then(|| self.coeffs.len().min(other.coeffs.len()))
            })
    }
}

impl Serialize for TruncatedSeries {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_decimal_strings().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<String>::deserialize(deserializer)?;
        TruncatedSeries::from_decimal_strings(&values).map_err(serde::de::Error::custom)
    }
}

/// Result of [`TruncatedSeries::eval_at`].
#[derive(Debug, Clone, Serialize)]
pub struct SeriesEvaluation {
    pub value: PrecisionReal,
    pub truncation_bound: PrecisionReal,
    pub within_tolerance: bool,
}

/// One factor family `∏_{n≥1} (1 - q^{period·n + residue})^{exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductFactor {
    pub period: usize,
    pub residue: i64,
    pub exponent: i32,
}

impl ProductFactor {
    pub const fn new(period: usize, residue: i64, exponent: i32) -> Self {
        ProductFactor {
            period,
            residue,
            exponent,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::MalformedFactor("period must be at least 1".into()));
        }
        if self.exponent == 0 {
            return Err(Error::MalformedFactor("exponent must be nonzero".into()));
        }
        if self.period as i64 + self.residue < 1 {
            return Err(Error::MalformedFactor(format!(
                "first exponent {}·1 + {} is not positive",
                self.period, self.residue
            )));
        }
        Ok(())
    }

    fn degrees(&self, n_max: usize) -> impl Iterator<Item = usize> + '_ {
        (1..)
            .map(move |n: i64| n * self.period as i64 + self.residue)
            .take_while(move |&d| d <= n_max as i64)
            .map(|d| d as usize)
    }
}

/// Expands `∏ factors` exactly up to `q^{n_max}`.
pub fn product_form(factors: &[ProductFactor], n_max: usize) -> Result<TruncatedSeries> {
    for f in factors {
        f.validate()?;
    }
    let mut series = TruncatedSeries::one(n_max);
    for f in factors {
        for d in f.degrees(n_max) {
            for _ in 0..f.exponent.unsigned_abs() {
                if f.exponent > 0 {
                    series.mul_binomial(d, -1);
                } else {
                    series.div_binomial(d, -1);
                }
            }
        }
    }
    Ok(series)
}

/// `∏_{n≥1} 1/(1 - q^n)`, the unrestricted partition series.
pub fn partition_series(n_max: usize) -> TruncatedSeries {
    product_form(&[ProductFactor::new(1, 0, -1)], n_max).expect("valid factor")
}

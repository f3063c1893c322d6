//! The transfer-matrix recursion for partitions with no k-sequence.
//!
//! Part sizes are processed in increasing order. After sizes `1..=N` the
//! state vector entry `a` is the generating function of partitions with
//! parts at most `N` whose sizes `N-a+1..=N` are all present and `N-a` is
//! missing, so entry `0` counts partitions with parts below `N`. One step
//! applies `m(n)`: the first row of ones resets the run when `n` is missing,
//! the subdiagonal `z(n) = qⁿ/(1-qⁿ)` extends it when `n` is present.

use std::io::Write;

use rug::ops::Pow;
use rug::{Float, Integer};
use serde::Serialize;

use crate::complex::Complex;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::precision::{LogValue, Precision, PrecisionReal, Sign};
use crate::series::TruncatedSeries;

/// Largest `k · (n_max + 1)` coefficient count held in formal mode.
pub const FORMAL_COEFFICIENT_LIMIT: u128 = 20_000_000;
/// Largest number of shortening patterns the run-up oracle enumerates.
pub const RUNUP_ENUMERATION_LIMIT: u128 = 10_000_000;
/// Default multiplier on the lower end of the run-up window.
pub const DEFAULT_WINDOW_MULTIPLIER: f64 = 8.0;
const MAX_ADAPTIVE_STEPS: usize = 20_000_000;

fn require_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k}; k must be at least 2")));
    }
    Ok(())
}

fn require_positive(s: &PrecisionReal, name: &str) -> Result<()> {
    if s.value().cmp0() != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidArgument(format!("{name} = {} must be positive", s.to_decimal())));
    }
    Ok(())
}

/// `z(n) = e^{-ns} / (1 - e^{-ns}) = 1 / expm1(ns)`.
pub fn z_of(n: u64, s: &PrecisionReal) -> PrecisionReal {
    let bits = s.precision().bits();
    let ns = Float::with_val(bits, s.value() * n);
    PrecisionReal::new(ns.exp_m1().recip(), s.precision())
}

fn z_float(n: u64, s: &Float) -> Float {
    Float::with_val(s.prec(), s * n).exp_m1().recip()
}

/// The `k × k` matrix `m(n)`: a first row of ones and `z(n)` on the subdiagonal.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub k: usize,
    pub n: u64,
    pub z: PrecisionReal,
}

impl TransferMatrix {
    pub fn entry(&self, i: usize, j: usize) -> PrecisionReal {
        let p = self.z.precision();
        if i == 0 {
            PrecisionReal::new(p.one(), p)
        } else if j + 1 == i {
            self.z.clone()
        } else {
            PrecisionReal::new(p.zero(), p)
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_real(self.k, self.k, |i, j| self.entry(i, j).into_value())
    }

    pub fn trace(&self) -> PrecisionReal {
        (0..self.k)
            .map(|i| self.entry(i, i))
            .reduce(|a, b| a + b)
            .expect("k >= 2")
    }

    pub fn det(&self) -> Complex {
        self.to_matrix().det()
    }
}

pub fn m_matrix(n: u64, s: &PrecisionReal, k: usize) -> Result<TransferMatrix> {
    require_k(k)?;
    if n == 0 {
        return Err(Error::InvalidArgument("m(n) is defined for n >= 1".into()));
    }
    require_positive(s, "s")?;
    Ok(TransferMatrix { k, n, z: z_of(n, s) })
}

#[derive(Debug, Clone)]
pub enum ProductMode {
    /// Exact coefficients up to `q^{n_max}`.
    Formal { n_max: usize },
    /// Evaluation at `q = e^{-s}`.
    Numeric { s: PrecisionReal },
}

#[derive(Debug, Clone)]
pub enum StateVector {
    Formal(Vec<TruncatedSeries>),
    Numeric(Vec<LogValue>),
}

impl StateVector {
    pub fn formal(&self) -> Option<&[TruncatedSeries]> {
        match self {
            StateVector::Formal(v) => Some(v),
            StateVector::Numeric(_) => None,
        }
    }

    pub fn numeric(&self) -> Option<&[LogValue]> {
        match self {
            StateVector::Numeric(v) => Some(v),
            StateVector::Formal(_) => None,
        }
    }
}

/// `v ↦ z(n)·v` on a truncated series, using `z(n) = Σ_{j≥1} q^{nj}`.
fn mul_z_formal(v: &TruncatedSeries, n: usize) -> TruncatedSeries {
    let c = v.coeffs();
    let len = c.len();
    let mut out = vec![Integer::new(); len];
    for m in n..len {
        let (done, rest) = out.split_at_mut(m);
        rest[0] = Integer::from(&c[m - n] + &done[m - n]);
    }
    TruncatedSeries::new(out).expect("non-empty")
}

/// The numeric state `exp(log_scale) · u` with `max_a u_a = 1`.
#[derive(Debug, Clone)]
pub struct NumericState {
    u: Vec<Float>,
    log_scale: Float,
    steps: u64,
}

impl NumericState {
    /// The vector `e₁` before any step.
    pub fn initial(k: usize, precision: Precision) -> Self {
        let mut u = vec![precision.zero(); k];
        u[0] = precision.one();
        NumericState {
            u,
            log_scale: precision.zero(),
            steps: 0,
        }
    }

    /// Applies `m(n)` with subdiagonal value `z`.
    pub fn step(&mut self, z: &Float) {
        let k = self.u.len();
        let bits = self.log_scale.prec();
        let mut sum = Float::new(bits);
        for x in &self.u {
            sum += x;
        }
        for a in (1..k).rev() {
            let v = Float::with_val(bits, &self.u[a - 1] * z);
            self.u[a] = v;
        }
        self.u[0] = sum;
        let max = self
            .u
            .iter()
            .fold(Float::new(bits), |m, x| if *x > m { x.clone() } else { m });
        for x in &mut self.u {
            *x /= &max;
        }
        self.log_scale += max.ln();
        self.steps += 1;
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn entries(&self) -> Vec<LogValue> {
        self.u
            .iter()
            .map(|x| {
                if x.is_zero() {
                    LogValue::zero(Precision::new(digits_of(x.prec())).unwrap_or_default())
                } else {
                    LogValue::from_log(Float::with_val(self.log_scale.prec(), x.ln_ref()) + &self.log_scale)
                }
            })
            .collect()
    }

    /// `log Σ_a ṽ_a`, the log of the next state's entry 0.
    pub fn log_total(&self) -> Float {
        let bits = self.log_scale.prec();
        let mut sum = Float::new(bits);
        for x in &self.u {
            sum += x;
        }
        sum.ln() + &self.log_scale
    }

    /// The normalized entries and the common log scale.
    pub fn scaled(&self) -> (Vec<Float>, Float) {
        (self.u.clone(), self.log_scale.clone())
    }
}

fn digits_of(bits: u32) -> u32 {
    ((f64::from(bits) - 24.0) / std::f64::consts::LOG2_10).floor().max(12.0) as u32
}

/// `ṽ(N) = m(N) ⋯ m(1) e₁`.
pub fn iterate_product(k: usize, n_cut: u64, mode: &ProductMode) -> Result<StateVector> {
    require_k(k)?;
    if n_cut == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    match mode {
        ProductMode::Formal { n_max } => {
            let size = (k as u128) * (*n_max as u128 + 1);
            if size > FORMAL_COEFFICIENT_LIMIT {
                return Err(Error::GuardExceeded {
                    what: "formal state vector coefficients",
                    size,
                    limit: FORMAL_COEFFICIENT_LIMIT,
                });
            }
            let mut v: Vec<TruncatedSeries> = vec![TruncatedSeries::zero(*n_max); k];
            v[0] = TruncatedSeries::one(*n_max);
            for n in 1..=n_cut {
                let mut total = v[0].clone();
                for entry in &v[1..] {
                    total = total.add(entry)?;
                }
                let mut next = Vec::with_capacity(k);
                next.push(total);
                for entry in &v[..k - 1] {
                    next.push(mul_z_formal(entry, n as usize));
                }
                v = next;
            }
            Ok(StateVector::Formal(v))
        }
        ProductMode::Numeric { s } => {
            require_positive(s, "s")?;
            let mut state = NumericState::initial(k, s.precision());
            for n in 1..=n_cut {
                state.step(&z_float(n, s.value()));
            }
            Ok(StateVector::Numeric(state.entries()))
        }
    }
}

/// `log G_k(e^{-s})` with the truncation point chosen adaptively.
#[derive(Debug, Clone, Serialize)]
pub struct GkEvaluation {
    pub k: usize,
    pub s: PrecisionReal,
    pub log_value: PrecisionReal,
    /// Number of part sizes included: the value is `G_{k, N+1}`.
    pub n_used: u64,
    /// Relative error bound from dropping parts larger than `n_used`.
    pub tail_bound: f64,
    /// Relative error bound from rounding across the steps.
    pub rounding_bound: f64,
    pub tolerance: f64,
}

impl GkEvaluation {
    pub fn value(&self) -> LogValue {
        LogValue::from_log(self.log_value.value().clone())
    }

    pub fn total_bound(&self) -> f64 {
        self.tail_bound + self.rounding_bound
    }
}

/// `log(1 + bound)` dominates `-Σ_{n>N} log(1 - qⁿ) ≤ q^{N+1} / ((1-q)(1-q^{N+1}))`.
pub fn partition_tail_log_bound(q: &Float, n_cut: u64) -> Float {
    let bits = q.prec();
    let qn1 = pow_u64(q, n_cut + 1);
    let one_minus_q = Float::with_val(bits, 1 - q);
    let one_minus_qn1 = Float::with_val(bits, 1 - &qn1);
    qn1 / one_minus_q / one_minus_qn1
}

fn pow_u64(x: &Float, e: u64) -> Float {
    let exponent = Float::with_val(x.prec(), e);
    Float::with_val(x.prec(), x.pow(&exponent))
}

/// Evaluates `log G_k(e^{-s})` to relative tolerance `tol`.
///
/// After `N` steps the entries of `ṽ(N)` sum to `S_N`, the generating function
/// of admissible partitions with parts at most `N`. Every admissible partition
/// splits into one of those and a set of parts larger than `N`, so
/// `S_N ≤ G_k ≤ S_N ∏_{n>N} (1-qⁿ)^{-1}`. The returned value is `log S_N`.
pub fn gk_eval(k: usize, s: &PrecisionReal, tol: f64) -> Result<GkEvaluation> {
    require_k(k)?;
    require_positive(s, "s")?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let precision = s.precision();
    let bits = precision.bits();
    let unit = precision.epsilon().to_f64();
    let q = Float::with_val(bits, -s.value()).exp();
    let mut state = NumericState::initial(k, precision);
    // Each step costs a few roundings on every entry, relative to the total.
    let per_step = 4.0 * (k as f64 + 2.0) * unit;
    for n in 1..=MAX_ADAPTIVE_STEPS as u64 {
        state.step(&z_float(n, s.value()));
        let rounding = per_step * n as f64;
        if rounding > tol / 2.0 {
            return Err(Error::ToleranceUnreachable {
                requested: tol,
                achieved: rounding,
            });
        }
        let tail_log = partition_tail_log_bound(&q, n);
        let tail = tail_log.exp_m1().to_f64();
        if tail <= tol / 2.0 {
            return Ok(GkEvaluation {
                k,
                s: s.clone(),
                log_value: PrecisionReal::new(state.log_total(), precision),
                n_used: n,
                tail_bound: tail,
                rounding_bound: rounding,
                tolerance: tol,
            });
        }
    }
    Err(Error::ToleranceUnreachable {
        requested: tol,
        achieved: partition_tail_log_bound(&q, MAX_ADAPTIVE_STEPS as u64).to_f64(),
    })
}

/// One term of the run-up sum: the missing part sizes of a partition with
/// parts at most `N` and no k-sequence, encoded by shortenings.
///
/// `t_j = i` shortens by one the stretch that ends at the `i`-th missing
/// part, so `n_i = k·i - |{j : t_j ≤ i}|`; each stretch is shortened at most
/// `k - 1` times and the sizes `n_M + 1..=N` after the last missing part are
/// all present, `a = N - n_M` of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunupState {
    pub k: usize,
    pub n_cut: u64,
    pub a: usize,
    pub ell: usize,
    pub t: Vec<usize>,
    pub m: usize,
    pub missing: Vec<u64>,
}

impl RunupState {
    /// Builds the state for shortenings `t`, validating every invariant.
    pub fn new(k: usize, n_cut: u64, a: usize, t: Vec<usize>) -> Result<Self> {
        require_k(k)?;
        if a >= k {
            return Err(Error::InvalidArgument(format!("residue a = {a} must be below k = {k}")));
        }
        let ell = t.len();
        if !t.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::InvalidArgument("shortenings must be nondecreasing".into()));
        }
        let total = n_cut as i128 + ell as i128 - a as i128;
        if total < 0 || total % k as i128 != 0 {
            return Err(Error::InvalidArgument(format!(
                "N + ℓ - a = {total} is not a nonnegative multiple of k = {k}"
            )));
        }
        let m = (total / k as i128) as usize;
        if t.first().is_some_and(|&x| x == 0) || t.last().is_some_and(|&x| x > m) {
            return Err(Error::InvalidArgument(format!("shortenings must lie in 1..={m}")));
        }
        let mut missing = Vec::with_capacity(m);
        let mut used = 0;
        let mut prev = 0u64;
        for i in 1..=m {
            let here = t[used..].iter().take_while(|&&x| x == i).count();
            if here > k - 1 {
                return Err(Error::InvalidArgument(format!(
                    "stretch {i} shortened {here} times; at most k - 1 allowed"
                )));
            }
            used += here;
            let n_i = (k * i - used) as u64;
            debug_assert!(n_i > prev);
            missing.push(n_i);
            prev = n_i;
        }
        Ok(RunupState {
            k,
            n_cut,
            a,
            ell,
            t,
            m,
            missing,
        })
    }
}

/// Number of shortening patterns behind entry `a` of `ṽ(N)`.
pub fn runup_pattern_count(k: usize, n_cut: u64, a: usize) -> u128 {
    let mut total: u128 = 0;
    for_each_ell(k, n_cut, a, |ell, m| {
        total = total.saturating_add(bounded_compositions(m, ell, k - 1));
    });
    total
}

fn for_each_ell(k: usize, n_cut: u64, a: usize, mut f: impl FnMut(usize, usize)) {
    let n = n_cut as usize;
    if a > n {
        return;
    }
    let first = (a as i64 - n as i64).rem_euclid(k as i64) as usize;
    let mut ell = first;
    while ell <= (k - 1) * n {
        let m = (n + ell - a) / k;
        if ell <= (k - 1) * m {
            f(ell, m);
        }
        ell += k;
    }
}

/// Compositions of `total` into `parts` parts each in `0..=cap`.
fn bounded_compositions(parts: usize, total: usize, cap: usize) -> u128 {
    let mut ways = vec![0u128; total + 1];
    ways[0] = 1;
    for _ in 0..parts {
        let mut next = vec![0u128; total + 1];
        for (sum, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for c in 0..=cap.min(total - sum) {
                next[sum + c] = next[sum + c].saturating_add(w);
            }
        }
        ways = next;
    }
    ways[total]
}

#[derive(Debug, Clone)]
pub enum RunupValue {
    Formal(TruncatedSeries),
    Numeric(LogValue),
}

/// `ṽ_a(N)` by explicit enumeration of shortening patterns.
///
/// Numeric mode evaluates `∏_{n≤N} z(n) · Σ ∏_i z(n_i)^{-1}` term by term.
/// Formal mode multiplies `z(n)` over the present sizes of each pattern.
pub fn runup_oracle(k: usize, n_cut: u64, a: usize, mode: &ProductMode) -> Result<RunupValue> {
    require_k(k)?;
    if a >= k {
        return Err(Error::InvalidArgument(format!("residue a = {a} must be below k = {k}")));
    }
    let count = runup_pattern_count(k, n_cut, a);
    if count > RUNUP_ENUMERATION_LIMIT {
        return Err(Error::GuardExceeded {
            what: "run-up shortening patterns",
            size: count,
            limit: RUNUP_ENUMERATION_LIMIT,
        });
    }
    let mut patterns: Vec<Vec<u64>> = Vec::new();
    for_each_ell(k, n_cut, a, |ell, m| {
        let mut shortenings = vec![0usize; m];
        collect_missing(k, ell, 0, &mut shortenings, &mut patterns);
    });
    match mode {
        ProductMode::Numeric { s } => {
            require_positive(s, "s")?;
            let bits = s.precision().bits();
            let z: Vec<Float> = (1..=n_cut).map(|n| z_float(n, s.value())).collect();
            let mut prefactor = Float::with_val(bits, 1);
            for zn in &z {
                prefactor *= zn;
            }
            let mut sum = Float::new(bits);
            for missing in &patterns {
                let mut term = Float::with_val(bits, 1);
                for &n in missing {
                    term /= &z[n as usize - 1];
                }
                sum += term;
            }
            let value = Float::with_val(bits, &prefactor * &sum);
            Ok(RunupValue::Numeric(LogValue::from_real(&value)))
        }
        ProductMode::Formal { n_max } => {
            let mut total = TruncatedSeries::zero(*n_max);
            for missing in &patterns {
                let mut term = TruncatedSeries::one(*n_max);
                let mut next_missing = missing.iter().peekable();
                for n in 1..=n_cut {
                    if next_missing.peek() == Some(&&n) {
                        next_missing.next();
                        continue;
                    }
                    term = mul_z_formal(&term, n as usize);
                }
                total = total.add(&term)?;
            }
            Ok(RunupValue::Formal(total))
        }
    }
}

/// Appends the missing-part list of every per-stretch shortening vector
/// with the given remaining total.
fn collect_missing(k: usize, remaining: usize, index: usize, c: &mut [usize], out: &mut Vec<Vec<u64>>) {
    let m = c.len();
    if index == m {
        if remaining == 0 {
            let mut used = 0;
            out.push(
                c.iter()
                    .enumerate()
                    .map(|(i, &ci)| {
                        used += ci;
                        (k * (i + 1) - used) as u64
                    })
                    .collect(),
            );
        }
        return;
    }
    let slots_after = m - index - 1;
    for ci in 0..=(k - 1).min(remaining) {
        if remaining - ci > (k - 1) * slots_after {
            continue;
        }
        c[index] = ci;
        collect_missing(k, remaining - ci, index + 1, c, out);
    }
    c[index] = 0;
}

/// Window of `N` where the run-up main term is asserted.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RunupWindow {
    pub lower: f64,
    pub upper: f64,
    pub multiplier: f64,
}

impl RunupWindow {
    pub fn new(k: usize, s: f64, multiplier: f64) -> Self {
        let kf = k as f64;
        let lower = multiplier * s.powf(-1.0 / (kf + 1.0)) * (1.0 / s).ln().powf(kf / (kf + 1.0));
        let upper = s.powf(-2.0 / (kf + 2.0));
        RunupWindow {
            lower,
            upper,
            multiplier,
        }
    }

    pub fn contains(&self, n: u64) -> bool {
        let n = n as f64;
        n > self.lower && n < self.upper
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunupAsymptotic {
    pub k: usize,
    pub n_cut: u64,
    pub a: usize,
    pub log_main_term: PrecisionReal,
    /// `sN² + s^{2/k} N^{(k+2)/k}`.
    pub predicted_error: f64,
    pub window: RunupWindow,
    pub outside_window: bool,
}

/// Main term of `ṽ_a(N)` for `k | N`:
/// `(sN)^{-a/k - N(k-1)/k} e^{N(k-1)/k} k^{-3/2} exp(s^{1/k} N^{(k+1)/k} / (k+1))`.
pub fn runup_asymptotic(
    k: usize,
    s: &PrecisionReal,
    n_cut: u64,
    a: usize,
    window_multiplier: f64,
) -> Result<RunupAsymptotic> {
    require_k(k)?;
    require_positive(s, "s")?;
    if n_cut == 0 || !n_cut.is_multiple_of(k as u64) {
        return Err(Error::InvalidArgument(format!("N = {n_cut} must be a positive multiple of k = {k}")));
    }
    if a >= k {
        return Err(Error::InvalidArgument(format!("residue a = {a} must be below k = {k}")));
    }
    let p = s.precision();
    let bits = p.bits();
    let kf = Float::with_val(bits, k);
    let n = Float::with_val(bits, n_cut);
    let sn = Float::with_val(bits, s.value() * &n);
    let log_sn = sn.clone().ln();
    let exponent = -(Float::with_val(bits, a) / &kf) - Float::with_val(bits, &n * (k - 1)) / &kf;
    let mut log = Float::with_val(bits, &exponent * &log_sn);
    log += Float::with_val(bits, &n * (k - 1)) / &kf;
    log -= Float::with_val(bits, kf.ln_ref()) * 1.5f64;
    let s_root = Float::with_val(bits, s.value().clone().ln() / &kf).exp();
    let n_pow = Float::with_val(bits, n.clone().ln() * Float::with_val(bits, k + 1) / &kf).exp();
    log += s_root * n_pow / (k as u32 + 1);

    let sf = s.to_f64();
    let nf = n_cut as f64;
    let predicted_error = sf * nf * nf + sf.powf(2.0 / k as f64) * nf.powf((k as f64 + 2.0) / k as f64);
    let window = RunupWindow::new(k, sf, window_multiplier);
    Ok(RunupAsymptotic {
        k,
        n_cut,
        a,
        log_main_term: PrecisionReal::new(log, p),
        predicted_error,
        window,
        outside_window: !window.contains(n_cut),
    })
}

/// Writes `(N, log ṽ_0, …, log ṽ_{k-1})` for `N = 1..=n_cut`.
pub fn write_trace_csv<W: Write>(k: usize, s: &PrecisionReal, n_cut: u64, writer: W) -> Result<()> {
    require_k(k)?;
    require_positive(s, "s")?;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["N".to_string()];
    header.extend((0..k).map(|a| format!("log_v{a}")));
    w.write_record(&header)?;
    let mut state = NumericState::initial(k, s.precision());
    for n in 1..=n_cut {
        state.step(&z_float(n, s.value()));
        let mut row = vec![n.to_string()];
        for e in state.entries() {
            row.push(match e.sign() {
                Sign::Zero => "-inf".to_string(),
                _ => format!("{:.17e}", e.ln()?.to_f64()),
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::gk_coefficients;
    use crate::precision::relative_error;
    use proptest::prelude::*;

    fn p() -> Precision {
        Precision::default()
    }

    fn real(x: f64) -> PrecisionReal {
        PrecisionReal::from_f64(x, p())
    }

    #[test]
    fn z_at_log_two_is_one() {
        let s = PrecisionReal::new(p().float(2).ln(), p());
        let z = z_of(1, &s);
        assert!(relative_error(z.value(), &p().one(), &p().zero()) < p().tolerance(3));
    }

    #[test]
    fn z_first_order_expansion() {
        let s = real(1e-6);
        for n in [1u64, 5, 30] {
            let z = z_of(n, &s).to_f64();
            let ns = n as f64 * 1e-6;
            // z = 1/(ns) - 1/2 + ns/12 + ...
            assert!((z - (1.0 / ns - 0.5)).abs() < ns);
        }
    }

    #[test]
    fn z_strictly_decreasing() {
        let s = real(0.03);
        let zs: Vec<f64> = (1..200).map(|n| z_of(n, &s).to_f64()).collect();
        assert!(zs.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn m_matrix_shape_trace_det() {
        let s = real(0.2);
        let m = m_matrix(3, &s, 2).unwrap();
        let z = m.z.to_f64();
        assert_eq!(m.entry(0, 0).to_f64(), 1.0);
        assert_eq!(m.entry(0, 1).to_f64(), 1.0);
        assert_eq!(m.entry(1, 0).to_f64(), z);
        assert_eq!(m.entry(1, 1).to_f64(), 0.0);
        for k in 2..=6 {
            let m = m_matrix(7, &s, k).unwrap();
            assert_eq!(m.trace().to_f64(), 1.0);
        }
        // Cofactor expansion along the first row leaves (-1)^{k+1} z^{k-1}.
        for k in 2..=4 {
            let m = m_matrix(4, &s, k).unwrap();
            let z = m.z.value().clone();
            let mut expected = pow_u64(&z, k as u64 - 1);
            if k % 2 == 0 {
                expected = -expected;
            }
            let det = m.det();
            assert!(relative_error(&det.re, &expected, &p().zero()) < p().tolerance(5));
            assert!(det.im.is_zero());
        }
    }

    #[test]
    fn first_step_is_first_column() {
        let s = real(0.4);
        for k in 2..=5 {
            let v = iterate_product(k, 1, &ProductMode::Numeric { s: s.clone() }).unwrap();
            let v = v.numeric().unwrap();
            assert_eq!(v[0].to_real().to_f64(), 1.0);
            let z = z_of(1, &s);
            assert!(relative_error(&v[1].to_real(), z.value(), &p().zero()) < p().tolerance(3));
            assert!(v[2..].iter().all(|e| e.sign() == Sign::Zero));
        }
    }

    #[test]
    fn formal_entry_zero_matches_dp() {
        let v = iterate_product(2, 13, &ProductMode::Formal { n_max: 12 }).unwrap();
        let dp = gk_coefficients(2, 12).unwrap().to_series();
        assert_eq!(v.formal().unwrap()[0], dp);
    }

    #[test]
    fn sum_of_entries_is_next_entry_zero() {
        let s = real(0.15);
        for k in 2..=4 {
            let v = iterate_product(k, 9, &ProductMode::Numeric { s: s.clone() }).unwrap();
            let next = iterate_product(k, 10, &ProductMode::Numeric { s: s.clone() }).unwrap();
            let total = v
                .numeric()
                .unwrap()
                .iter()
                .fold(LogValue::zero(p()), |acc, e| acc.add(e));
            let lhs = total.ln().unwrap();
            let rhs = next.numeric().unwrap()[0].ln().unwrap();
            assert!(Float::with_val(p().bits(), &lhs - &rhs).abs() < p().tolerance(8));
        }
    }

    #[test]
    fn formal_guard() {
        let r = iterate_product(3, 5, &ProductMode::Formal { n_max: 10_000_000 });
        assert!(matches!(r, Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn large_s_is_nearly_one() {
        let s = real(5.0);
        let g = gk_eval(2, &s, 1e-30).unwrap();
        // The empty partition and {1} dominate; the next terms are O(e^{-10}).
        let g_value = g.log_value.to_f64().exp();
        assert!((g_value - (1.0 + (-5.0f64).exp())).abs() < 3.0 * (-10.0f64).exp());
        assert!(g.total_bound() <= 1e-30);
    }

    #[test]
    fn gk_eval_matches_series_evaluation() {
        let s = real(0.1);
        let g = gk_eval(2, &s, 1e-35).unwrap();
        let series = gk_coefficients(2, 2500).unwrap().to_series();
        let e = series.eval_at(&s, 1e-35).unwrap();
        assert!(e.within_tolerance);
        let log_series = e.value.value().clone().ln();
        let diff = Float::with_val(p().bits(), g.log_value.value() - &log_series).abs().to_f64();
        let allowed = g.total_bound() + e.truncation_bound.to_f64() / e.value.to_f64() + 1e-40;
        assert!(diff <= allowed, "diff {diff:e} allowed {allowed:e}");
    }

    #[test]
    fn gk_monotone_in_k() {
        let s = real(0.2);
        let logs: Vec<f64> = (2..=5).map(|k| gk_eval(k, &s, 1e-30).unwrap().log_value.to_f64()).collect();
        assert!(logs.windows(2).all(|w| w[0] <= w[1]));
        let unrestricted = crate::series::partition_series(3000).eval_at(&s, 1e-30).unwrap();
        assert!(logs[3] <= unrestricted.value.to_f64().ln());
    }

    #[test]
    fn unreachable_tolerance() {
        let s = real(0.1);
        assert!(matches!(gk_eval(2, &s, 1e-80), Err(Error::ToleranceUnreachable { .. })));
    }

    #[test]
    fn runup_state_invariants() {
        // N + ℓ - a = 8 is not a multiple of 3.
        assert!(RunupState::new(3, 6, 1, vec![1, 2, 2]).is_err());
        let st = RunupState::new(3, 6, 0, vec![1, 2, 2]).unwrap();
        assert_eq!(st.m, 3);
        assert_eq!(st.missing, vec![2, 3, 6]);
        for (i, &n) in st.missing.iter().enumerate() {
            let below = st.t.iter().filter(|&&t| t <= i + 1).count();
            assert_eq!(n as usize, 3 * (i + 1) - below);
        }
        assert!(RunupState::new(3, 6, 0, vec![2, 1, 1]).is_err());
        assert!(RunupState::new(3, 6, 0, vec![1, 1, 1]).is_err());
    }

    #[test]
    fn empty_shortening_pattern() {
        // ℓ = 0 and k | N: every k-th size is missing, everything else present.
        let st = RunupState::new(3, 9, 0, vec![]).unwrap();
        assert_eq!(st.missing, vec![3, 6, 9]);
    }

    #[test]
    fn runup_matches_formal_product() {
        for (k, n_cut) in [(2usize, 6u64), (3, 6)] {
            let n_max = 30;
            let v = iterate_product(k, n_cut, &ProductMode::Formal { n_max }).unwrap();
            for a in 0..k {
                let RunupValue::Formal(r) = runup_oracle(k, n_cut, a, &ProductMode::Formal { n_max }).unwrap() else {
                    unreachable!()
                };
                assert_eq!(r, v.formal().unwrap()[a], "k={k} N={n_cut} a={a}");
            }
        }
    }

    #[test]
    fn runup_guard() {
        assert!(runup_pattern_count(4, 60, 0) > RUNUP_ENUMERATION_LIMIT);
        let r = runup_oracle(4, 60, 0, &ProductMode::Formal { n_max: 5 });
        assert!(matches!(r, Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn runup_ratio_prefactor() {
        let s = real(1e-4);
        let a0 = runup_asymptotic(2, &s, 60, 0, DEFAULT_WINDOW_MULTIPLIER).unwrap();
        let a1 = runup_asymptotic(2, &s, 60, 1, DEFAULT_WINDOW_MULTIPLIER).unwrap();
        let ratio = (a1.log_main_term.clone() - a0.log_main_term.clone()).to_f64();
        assert!((ratio - (-(1e-4f64 * 60.0).ln() / 2.0)).abs() < 1e-12);
        assert!(a0.outside_window);
        assert!((a0.predicted_error - 0.72).abs() < 1e-12);
        assert!(runup_asymptotic(2, &s, 61, 0, 8.0).is_err());
    }

    #[test]
    fn runup_main_term_tracks_exact_value() {
        let s = real(1e-4);
        let exact = iterate_product(2, 60, &ProductMode::Numeric { s: s.clone() }).unwrap();
        for a in 0..2 {
            let main = runup_asymptotic(2, &s, 60, a, DEFAULT_WINDOW_MULTIPLIER).unwrap();
            let log_exact = exact.numeric().unwrap()[a].ln().unwrap().to_f64();
            let residual = log_exact - main.log_main_term.to_f64();
            assert!(residual.abs() < main.predicted_error, "a={a} residual {residual}");
        }
    }

    #[test]
    fn trace_csv_has_one_row_per_step() {
        let mut buf = Vec::new();
        write_trace_csv(3, &real(0.3), 5, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "N,log_v0,log_v1,log_v2");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].ends_with("-inf"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn formal_product_matches_dp(k in 2usize..5, n_cut in 1u64..25) {
            let n_max = n_cut as usize - 1;
            let v = iterate_product(k, n_cut, &ProductMode::Formal { n_max }).unwrap();
            let dp = gk_coefficients(k, n_max).unwrap().to_series();
            prop_assert_eq!(&v.formal().unwrap()[0], &dp);
            for entry in v.formal().unwrap() {
                prop_assert!(entry.coeffs().iter().all(|c| c.cmp0().is_ge()));
            }
        }

        #[test]
        fn runup_numeric_matches_product(k in 2usize..5, n_cut in 1u64..9, s in 0.05f64..2.0) {
            let s = real(s);
            let v = iterate_product(k, n_cut, &ProductMode::Numeric { s: s.clone() }).unwrap();
            for a in 0..k {
                let RunupValue::Numeric(r) = runup_oracle(k, n_cut, a, &ProductMode::Numeric { s: s.clone() }).unwrap() else {
                    unreachable!()
                };
                let expected = &v.numeric().unwrap()[a];
                prop_assert_eq!(r.sign(), expected.sign());
                if r.sign() != Sign::Zero {
                    let rel = relative_error(&r.to_real(), &expected.to_real(), &p().zero());
                    prop_assert!(rel < p().tolerance(10));
                }
            }
        }

        #[test]
        fn shortenings_round_trip(k in 2usize..5, c in proptest::collection::vec(0usize..4, 0..6), a in 0usize..4) {
            prop_assume!(a < k);
            let c: Vec<usize> = c.into_iter().map(|x| x % k).collect();
            let m = c.len();
            let ell: usize = c.iter().sum();
            prop_assume!(k * m + a >= ell);
            let n_cut = (k * m + a - ell) as u64;
            let t: Vec<usize> = c.iter().enumerate().flat_map(|(i, &ci)| std::iter::repeat_n(i + 1, ci)).collect();
            let st = RunupState::new(k, n_cut, a, t).unwrap();
            prop_assert_eq!(st.m, m);
            prop_assert!(st.missing.windows(2).all(|w| w[0] < w[1] && w[1] - w[0] <= k as u64));
            if let Some(&last) = st.missing.last() {
                prop_assert_eq!(n_cut - last, a as u64);
            }
            prop_assert!(st.ell <= (k - 1) * n_cut as usize || n_cut == 0);
        }
    }
}

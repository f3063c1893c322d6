//! The special functions `f_k`, `g_k` and the closed-form main terms.
//!
//! `f_k(y)` solves `f^{k+1} - f^k = y^{k+1} - y^k` on the branch across
//! `c = k/(k+1)` from `y`: the curve `t ↦ t^k(1 - t)` takes every value in
//! `(0, c^k(1-c))` exactly twice, once on each side of `c`, and `f_k` swaps
//! the two. With `g_k(x) = -log f_k(e^{-x})` this makes
//! `f_k(e^{-ns}) = λ_1(n) e^{-ns}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use rayon::prelude::*;
use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::precision::{LogValue, Precision, PrecisionReal};
use crate::quadrature::{exp_sinh, tanh_sinh};

const EXTRA_BITS: u32 = 64;

/// Closed-form parameters of the main terms for one `k`.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticModel {
    pub k: usize,
    /// `λ_k = π²/(3k(k+1))`, the decay rate of `P_s(A_k)`.
    pub rate: f64,
    /// `C_k = √(2π)/k`.
    pub prefactor: f64,
    /// `(π²/6)(1 - 2/(k(k+1)))`, the growth rate of `G_k(e^{-s})`.
    pub gk_rate: f64,
    pub gk_prefactor: f64,
    /// Error exponent `1/(2k+3)` of the generating-function asymptotic.
    pub error_exponent: f64,
    pub ingham: InghamInput,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InghamInput {
    pub amplitude: f64,
    pub alpha: f64,
    pub growth: f64,
}

impl AsymptoticModel {
    pub fn new(k: usize) -> Result<Self> {
        require_k(k)?;
        let kf = k as f64;
        let delta = 1.0 - 2.0 / (kf * (kf + 1.0));
        let gk_rate = PI * PI / 6.0 * delta;
        Ok(AsymptoticModel {
            k,
            rate: PI * PI / (3.0 * kf * (kf + 1.0)),
            prefactor: (2.0 * PI).sqrt() / kf,
            gk_rate,
            gk_prefactor: 1.0 / kf,
            error_exponent: 1.0 / (2.0 * kf + 3.0),
            ingham: InghamInput {
                amplitude: 1.0 / kf,
                alpha: 1.0,
                growth: gk_rate,
            },
        })
    }

    /// `1 - 2/(k(k+1))`.
    pub fn delta(&self) -> f64 {
        let kf = self.k as f64;
        1.0 - 2.0 / (kf * (kf + 1.0))
    }
}

fn require_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k}; k must be at least 2")));
    }
    Ok(())
}

fn require_positive(x: &Float, name: &str) -> Result<()> {
    if x.cmp0() != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidArgument(format!("{name} = {} must be positive", x.to_f64())));
    }
    Ok(())
}

fn pi(bits: u32) -> Float {
    Float::with_val(bits, Constant::Pi)
}

/// `(π²/6)(1 - 2/(k(k+1)))` at `bits`.
pub fn gk_rate(k: usize, bits: u32) -> Float {
    let p2 = Float::with_val(bits, pi(bits).square_ref());
    let kk = (k * (k + 1)) as u32;
    let delta = Float::with_val(bits, kk - 2) / kk;
    p2 / 6u32 * delta
}

/// `π²/(3k(k+1))` at `bits`.
pub fn prob_rate(k: usize, bits: u32) -> Float {
    Float::with_val(bits, pi(bits).square_ref()) / (3 * k * (k + 1)) as u32
}

/// Root data for one `x`, kept in the form that is accurate on its branch.
#[derive(Debug, Clone)]
pub struct FkRoot {
    pub f: Float,
    /// `1 - f`, computed directly when `f` is close to 1.
    pub u: Float,
    /// `g_k(x) = -log f`.
    pub g: Float,
}

/// Sign-bracketed Newton: requires `eval(lo) < 0 < eval(hi)`.
fn bracketed_newton<F>(mut lo: Float, mut hi: Float, bits: u32, mut eval: F) -> Result<Float>
where
    F: FnMut(&Float) -> (Float, Float),
{
    let stop = Float::with_val(bits, 1) >> (bits as i32 - 6);
    let mut x = Float::with_val(bits, &lo + &hi) / 2u32;
    for _ in 0..(4 * bits as usize + 200) {
        let (v, dv) = eval(&x);
        if v.is_zero() {
            return Ok(x);
        }
        if v.is_sign_negative() {
            lo = x.clone();
        } else {
            hi = x.clone();
        }
        let newton = Float::with_val(bits, &x - Float::with_val(bits, &v / &dv));
        let next = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            Float::with_val(bits, &lo + &hi) / 2u32
        };
        let step = Float::with_val(bits, &next - &x).abs();
        x = next;
        let scale = Float::with_val(bits, x.abs_ref()) * &stop;
        if step <= scale || Float::with_val(bits, &hi - &lo) <= scale {
            return Ok(x);
        }
    }
    Err(Error::NumericalBreakdown("f_k root iteration did not converge".into()))
}

/// `f_k(e^{-x})` at `bits` of working precision.
pub fn fk_root_from_x(k: usize, x: &Float, bits: u32) -> Result<FkRoot> {
    require_k(k)?;
    require_positive(x, "x")?;
    let x = Float::with_val(bits, x);
    let kf = k as u32;
    // Crossover x0 = log((k+1)/k), where y = c.
    let x0 = Float::with_val(bits, Float::with_val(bits, kf + 1) / kf).ln();
    let ln2 = Float::with_val(bits, Constant::Log2);
    // w = 1 - y without cancellation.
    let w = -Float::with_val(bits, (-x.clone()).exp_m1_ref());

    if x > Float::with_val(bits, &x0 + &ln2) {
        // y < c/2: solve k log(1-u) + log u = -kx + log w for u = 1 - f.
        let target = Float::with_val(bits, w.ln_ref()) - Float::with_val(bits, &x * kf);
        if target < -1e7f64 {
            let u = target.exp();
            return Ok(FkRoot {
                f: Float::with_val(bits, 1u32 - &u),
                g: u.clone(),
                u,
            });
        }
        let lo = Float::with_val(bits, target.exp_ref());
        let upper = Float::with_val(bits, &lo * Float::with_val(bits, 1).exp());
        let cap = Float::with_val(bits, 1) / (kf + 1);
        let hi = if upper < cap { upper } else { cap };
        let u = bracketed_newton(lo, hi, bits, |u| {
            let one_minus = Float::with_val(bits, 1u32 - u);
            let value = Float::with_val(bits, (-u.clone()).ln_1p_ref()) * kf + Float::with_val(bits, u.ln_ref()) - &target;
            let slope = Float::with_val(bits, u.recip_ref()) - Float::with_val(bits, kf) / one_minus;
            (value, slope)
        })?;
        let g = -Float::with_val(bits, (-u.clone()).ln_1p_ref());
        return Ok(FkRoot {
            f: Float::with_val(bits, 1u32 - &u),
            u,
            g,
        });
    }

    let c = Float::with_val(bits, kf) / (kf + 1);
    let y = Float::with_val(bits, (-x.clone()).exp_ref());
    if x == x0 {
        let u = Float::with_val(bits, 1u32 - &c);
        let g = -Float::with_val(bits, c.ln_ref());
        return Ok(FkRoot { f: c, u, g });
    }
    // φ(f) = f^k - w Σ_{i<k} f^i y^{k-1-i}: the cubic-type equation with the
    // trivial root f = y divided out.
    let (lo, hi) = if x < x0 {
        (Float::new(bits), c.clone())
    } else {
        (c.clone(), Float::with_val(bits, 1))
    };
    let f = bracketed_newton(lo, hi, bits, |f| {
        let mut s = Float::new(bits);
        let mut ds = Float::new(bits);
        // Horner in f over coefficients y^{k-1-i}.
        for i in (0..k).rev() {
            ds = Float::with_val(bits, &ds * f) + &s;
            s = Float::with_val(bits, &s * f) + Float::with_val(bits, (&y).pow((k - 1 - i) as u32));
        }
        let fk = Float::with_val(bits, f.pow(kf));
        let dfk = Float::with_val(bits, f.pow(kf - 1)) * kf;
        (fk - Float::with_val(bits, &w * &s), dfk - Float::with_val(bits, &w * &ds))
    })?;
    let u = Float::with_val(bits, 1u32 - &f);
    let g = -Float::with_val(bits, f.ln_ref());
    Ok(FkRoot { f, u, g })
}

/// `(g_k(x), g_k'(x), g_k''(x))` by implicit differentiation.
pub fn gk_with_derivatives(k: usize, x: &Float, bits: u32) -> Result<(Float, Float, Float)> {
    let root = fk_root_from_x(k, x, bits)?;
    let kf = k as u32;
    let y = Float::with_val(bits, (-Float::with_val(bits, x)).exp());
    let hp = |t: &Float| -> Float {
        Float::with_val(bits, t.pow(kf - 1)) * (Float::with_val(bits, t * (kf + 1)) - kf)
    };
    let hpp = |t: &Float| -> Float {
        Float::with_val(bits, t.pow(kf - 1)) * ((kf + 1) * kf)
            - Float::with_val(bits, t.pow(kf as i32 - 2)) * (kf * (kf - 1))
    };
    let f = &root.f;
    let hpf = hp(f);
    let d1 = Float::with_val(bits, hp(&y) / &hpf);
    let d2 = (hpp(&y) - hpp(f) * Float::with_val(bits, d1.square_ref())) / &hpf;
    let ratio = Float::with_val(bits, &d1 / f);
    let g1 = Float::with_val(bits, &y * &ratio);
    let inner = Float::with_val(bits, &ratio + Float::with_val(bits, &y * &d2) / f)
        - Float::with_val(bits, &y * Float::with_val(bits, ratio.square_ref()));
    let g2 = -(y * inner);
    Ok((root.g, g1, g2))
}

/// `f_k` with a per-instance cache keyed by the exact argument.
#[derive(Debug)]
pub struct FkFunction {
    pub k: usize,
    precision: Precision,
    cache: Mutex<HashMap<String, Float>>,
}

impl FkFunction {
    pub fn new(k: usize, precision: Precision) -> Result<Self> {
        require_k(k)?;
        Ok(FkFunction {
            k,
            precision,
            cache: Mutex::new(HashMap::new()),
        })
    }

    fn key(v: &Float, tag: char) -> String {
        format!("{tag}{}", v.to_string_radix(16, None))
    }

    fn cached(&self, key: String, compute: impl FnOnce() -> Result<Float>) -> Result<PrecisionReal> {
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(PrecisionReal::new(v.clone(), self.precision));
        }
        let v = compute()?;
        self.cache.lock().expect("cache lock").insert(key, v.clone());
        Ok(PrecisionReal::new(v, self.precision))
    }

    /// `f_k(y)` for `y ∈ (0, 1)`.
    pub fn eval(&self, y: &PrecisionReal) -> Result<PrecisionReal> {
        let v = y.value();
        if v.cmp0() != Some(std::cmp::Ordering::Greater) || *v >= 1u32 {
            return Err(Error::InvalidArgument(format!("f_k needs y in (0, 1), got {}", v.to_f64())));
        }
        let bits = self.precision.bits();
        self.cached(Self::key(v, 'y'), || {
            let wb = bits + EXTRA_BITS;
            let x = -Float::with_val(wb, v).ln();
            Ok(Float::with_val(bits, fk_root_from_x(self.k, &x, wb)?.f))
        })
    }

    /// `f_k(e^{-x})` for `x > 0`.
    pub fn eval_x(&self, x: &PrecisionReal) -> Result<PrecisionReal> {
        let bits = self.precision.bits();
        self.cached(Self::key(x.value(), 'x'), || {
            Ok(Float::with_val(bits, fk_root_from_x(self.k, x.value(), bits + EXTRA_BITS)?.f))
        })
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}

/// `f_k(y)` without a cache.
pub fn f_k(k: usize, y: &PrecisionReal) -> Result<PrecisionReal> {
    FkFunction::new(k, y.precision())?.eval(y)
}

/// `g_k(x) = -log f_k(e^{-x})`.
pub fn g_k(k: usize, x: &PrecisionReal) -> Result<PrecisionReal> {
    let p = x.precision();
    let root = fk_root_from_x(k, x.value(), p.bits() + EXTRA_BITS)?;
    Ok(PrecisionReal::new(Float::with_val(p.bits(), root.g), p))
}

/// `∫_0^∞ g_k(x) dx` by exp-sinh quadrature, whose nodes cluster at both
/// the logarithmic singularity at 0 and the far tail.
pub fn gk_integral(k: usize, tol: f64, precision: Precision) -> Result<PrecisionReal> {
    require_k(k)?;
    let bits = precision.bits() + 16;
    let zero = Float::new(bits);
    let r = exp_sinh(&zero, tol, |x| Ok(fk_root_from_x(k, x, bits + EXTRA_BITS)?.g))?;
    if r.error_estimate > tol {
        return Err(Error::ToleranceUnreachable {
            requested: tol,
            achieved: r.error_estimate.to_f64(),
        });
    }
    Ok(PrecisionReal::new(Float::with_val(precision.bits(), r.value), precision))
}

/// `log G(e^{-s}) = π²/(6s) + (1/2) log(s/2π) - s/24`, optionally without
/// the `s/24` term.
///
/// This is `-Σ log(1 - qⁿ)`; the omitted remainder is
/// `-Σ log(1 - e^{-4π²n/s})`, below `e^{-4π²/s}/(1 - e^{-4π²/s})`.
pub fn partition_asymptotic(s: &PrecisionReal, with_s24: bool) -> Result<PrecisionReal> {
    require_positive(s.value(), "s")?;
    let p = s.precision();
    let bits = p.bits();
    let sv = s.value();
    let p2 = Float::with_val(bits, pi(bits).square_ref());
    let mut v = p2 / Float::with_val(bits, sv * 6u32);
    let two_pi = pi(bits) * 2u32;
    v += Float::with_val(bits, Float::with_val(bits, sv / &two_pi).ln_ref()) / 2u32;
    if with_s24 {
        v -= Float::with_val(bits, sv / 24u32);
    }
    Ok(PrecisionReal::new(v, p))
}

/// `-Σ_{n≥1} log(1 - e^{-ns})` by direct summation, with a bound on the
/// omitted terms.
pub fn log_partition_product(s: &PrecisionReal, tol: f64) -> Result<(PrecisionReal, f64)> {
    require_positive(s.value(), "s")?;
    let p = s.precision();
    let bits = p.bits() + 16;
    let sv = Float::with_val(bits, s.value());
    let q = Float::with_val(bits, (-sv.clone()).exp_ref());
    let mut n_cut = 1u64;
    loop {
        let bound = crate::transfer::partition_tail_log_bound(&q, n_cut).to_f64();
        if bound < tol {
            break;
        }
        n_cut = (n_cut * 2).max(n_cut + 1);
        if n_cut > 1 << 40 {
            return Err(Error::ToleranceUnreachable {
                requested: tol,
                achieved: bound,
            });
        }
    }
    let mut sum = Float::new(bits);
    for n in 1..=n_cut {
        let e = -Float::with_val(bits, &sv * n);
        sum -= Float::with_val(bits, (-Float::with_val(bits, e.exp_m1_ref())).ln_ref());
    }
    let bound = crate::transfer::partition_tail_log_bound(&q, n_cut).to_f64();
    Ok((PrecisionReal::new(Float::with_val(p.bits(), sum), p), bound))
}

/// `log[(1/k) exp(gk_rate/s)]`.
pub fn main_term_gk(k: usize, s: &PrecisionReal) -> Result<LogValue> {
    require_k(k)?;
    require_positive(s.value(), "s")?;
    let bits = s.precision().bits();
    let v = gk_rate(k, bits) / s.value() - Float::with_val(bits, k as u32).ln();
    Ok(LogValue::from_log(v))
}

/// `log[(√(2π)/k) s^{-1/2} exp(-λ_k/s)]`.
pub fn main_term_psk(k: usize, s: &PrecisionReal) -> Result<LogValue> {
    require_k(k)?;
    require_positive(s.value(), "s")?;
    let bits = s.precision().bits();
    let sv = s.value();
    let mut v = Float::with_val(bits, pi(bits) * 2u32).ln() / 2u32 - Float::with_val(bits, k as u32).ln();
    v -= Float::with_val(bits, sv.ln_ref()) / 2u32;
    v -= prob_rate(k, bits) / sv;
    Ok(LogValue::from_log(v))
}

/// `log[(1/(2k)) (Δ/6)^{1/4} n^{-3/4} exp(π √(2Δn/3))]` with `Δ = 1 - 2/(k(k+1))`.
pub fn main_term_pk(k: usize, n: u64, precision: Precision) -> Result<LogValue> {
    require_k(k)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let bits = precision.bits();
    let kk = (k * (k + 1)) as u32;
    let delta = Float::with_val(bits, kk - 2) / kk;
    let nf = Float::with_val(bits, n);
    let mut v = -Float::with_val(bits, (2 * k) as u32).ln();
    v += Float::with_val(bits, Float::with_val(bits, &delta / 6u32).ln_ref()) / 4u32;
    v -= Float::with_val(bits, nf.ln_ref()) * 3u32 / 4u32;
    let inner = Float::with_val(bits, &delta * &nf) * 2u32 / 3u32;
    v += pi(bits) * inner.sqrt();
    Ok(LogValue::from_log(v))
}

/// Partial-sum asymptotic `c · n^{power} · exp(growth · √n)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InghamAsymptotic {
    pub coefficient: f64,
    pub power: f64,
    pub growth: f64,
}

impl InghamAsymptotic {
    pub fn log_at(&self, n: f64) -> f64 {
        self.coefficient.ln() + self.power * n.ln() + self.growth * n.sqrt()
    }
}

/// Maps `f(e^{-s}) ∼ λ s^α e^{A/s}` to `Σ_{m≤n} a(m) ∼ (λ/(2√π)) A^{α/2-1/4} n^{-α/2-1/4} e^{2√(An)}`.
pub fn ingham_map(amplitude: f64, alpha: f64, growth: f64) -> Result<InghamAsymptotic> {
    if !(growth > 0.0) {
        return Err(Error::InvalidArgument(format!("growth A = {growth} must be positive")));
    }
    Ok(InghamAsymptotic {
        coefficient: amplitude / (2.0 * PI.sqrt()) * growth.powf(alpha / 2.0 - 0.25),
        power: -(alpha / 2.0 + 0.25),
        growth: 2.0 * growth.sqrt(),
    })
}

/// `[x] - x + 1/2`.
pub fn sawtooth(x: &Float) -> Float {
    let bits = x.prec();
    Float::with_val(bits, x.floor_ref()) - x + Float::with_val(bits, 0.5f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct EulerMaclaurinForms {
    /// `Σ [∫ h - ∫ h' ψ]` over the unit cells.
    pub first_form: PrecisionReal,
    /// `Σ [∫ h - (1/2) ∫ h'' ψ²]`.
    pub second_form: PrecisionReal,
    /// `Σ h(n)` evaluated directly.
    pub direct: PrecisionReal,
}

type RealFn<'a> = &'a (dyn Fn(&Float) -> Result<Float> + Sync);

/// `Σ_{n=a}^{b} h(n)` rebuilt cell by cell from integrals over
/// `[n - 1/2, n + 1/2]`, with `ψ(x) = [x] - x + 1/2`.
///
/// Requires `h` to be twice differentiable on `[a - 1/2, b + 1/2]`; the
/// sawtooth jumps at integers, so each cell is split there.
pub fn euler_maclaurin_sum(
    h: RealFn,
    dh: RealFn,
    ddh: RealFn,
    a: u64,
    b: u64,
    tol: f64,
    precision: Precision,
) -> Result<EulerMaclaurinForms> {
    if a == 0 || b < a {
        return Err(Error::InvalidArgument(format!("need 1 <= a <= b, got {a}..={b}")));
    }
    let bits = precision.bits();
    let cells: Vec<(Float, Float, Float)> = (a..=b)
        .into_par_iter()
        .map(|n| {
            let mid = Float::with_val(bits, n);
            let left = Float::with_val(bits, &mid - 0.5f64);
            let right = Float::with_val(bits, &mid + 0.5f64);
            let mut plain = Float::new(bits);
            let mut first = Float::new(bits);
            let mut second = Float::new(bits);
            // On [n-1/2, n) the sawtooth is n - 1/2 - x; on [n, n+1/2] it is n + 1/2 - x.
            for (lo, hi, offset) in [(&left, &mid, &left), (&mid, &right, &right)] {
                let psi = |x: &Float| Float::with_val(bits, offset - x);
                plain += tanh_sinh(lo, hi, tol, |x, _, _| h(x))?.value;
                first += tanh_sinh(lo, hi, tol, |x, _, _| Ok(dh(x)? * psi(x)))?.value;
                second += tanh_sinh(lo, hi, tol, |x, _, _| Ok(ddh(x)? * Float::with_val(bits, psi(x).square_ref())))?.value;
            }
            let direct = h(&mid)?;
            Ok((
                Float::with_val(bits, &plain - &first),
                Float::with_val(bits, &plain - Float::with_val(bits, &second / 2u32)),
                direct,
            ))
        })
        .collect::<Result<_>>()?;
    let mut f1 = Float::new(bits);
    let mut f2 = Float::new(bits);
    let mut d = Float::new(bits);
    for (x, y, z) in cells {
        f1 += x;
        f2 += y;
        d += z;
    }
    Ok(EulerMaclaurinForms {
        first_form: PrecisionReal::new(f1, precision),
        second_form: PrecisionReal::new(f2, precision),
        direct: PrecisionReal::new(d, precision),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HackRelation {
    pub s: f64,
    /// `-∫_0^{1/2} log x dx - s ∫_{1/2}^∞ (e^{-xs}/(1-e^{-xs})) ψ(x) dx`.
    pub lhs: f64,
    /// `(1/2) log 2π`.
    pub target: f64,
    pub residual: f64,
}

/// Evaluates the sawtooth relation whose limit is `(1/2) log 2π`.
pub fn hack_relation(s: &PrecisionReal, tol: f64) -> Result<HackRelation> {
    require_positive(s.value(), "s")?;
    let bits = s.precision().bits();
    let sv = Float::with_val(bits, s.value());
    let sf = sv.to_f64();
    let n_end = (((1.0 / tol).ln() + 10.0) / sf).ceil() as u64;
    let weight = |x: &Float| -> Float {
        let e = Float::with_val(bits, -Float::with_val(bits, x * &sv));
        // e^{-xs}/(1-e^{-xs}) = -1/expm1(-xs) - 1.
        -Float::with_val(bits, e.exp_m1_ref()).recip() - 1u32
    };
    let pieces: Vec<Float> = (1..=n_end)
        .into_par_iter()
        .map(|n| {
            let mid = Float::with_val(bits, n);
            let left = Float::with_val(bits, &mid - 0.5f64);
            let right = Float::with_val(bits, &mid + 0.5f64);
            let a = tanh_sinh(&left, &mid, tol * 1e-3, |x, _, _| {
                Ok(weight(x) * Float::with_val(bits, &left - x))
            })?;
            let b = tanh_sinh(&mid, &right, tol * 1e-3, |x, _, _| {
                Ok(weight(x) * Float::with_val(bits, &right - x))
            })?;
            Ok(a.value + b.value)
        })
        .collect::<Result<_>>()?;
    let mut integral = Float::new(bits);
    for p in pieces {
        integral += p;
    }
    // -∫_0^{1/2} log x dx = (1 + log 2)/2.
    let head = (Float::with_val(bits, Constant::Log2) + 1u32) / 2u32;
    let lhs = head - integral * &sv;
    let target = (pi(bits) * 2u32).ln() / 2u32;
    let residual = Float::with_val(bits, &lhs - &target).to_f64();
    Ok(HackRelation {
        s: sf,
        lhs: lhs.to_f64(),
        target: target.to_f64(),
        residual,
    })
}

/// Prediction for `Σ_{n≥1} log(λ_1(n) z(n))`:
/// `gk_rate/s + ((k-1)/(2k)) log s - ((k-1)/(2k)) log 2π`.
pub fn eigen_product_prediction(k: usize, s: &PrecisionReal) -> Result<PrecisionReal> {
    require_k(k)?;
    require_positive(s.value(), "s")?;
    let p = s.precision();
    let bits = p.bits();
    let w = Float::with_val(bits, (k - 1) as u32) / (2 * k) as u32;
    let log_ratio = Float::with_val(bits, s.value() / (pi(bits) * 2u32)).ln();
    let v = gk_rate(k, bits) / s.value() + w * log_ratio;
    Ok(PrecisionReal::new(v, p))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureFit {
    pub k: usize,
    pub c: f64,
    pub c2: Option<f64>,
    pub residual_norm: f64,
    pub samples: Vec<(f64, f64)>,
    /// `√(2/(9π))`, the conjectured coefficient; only meaningful for comparison at k = 2.
    pub reference: f64,
}

/// Least-squares fit of `log(k G_k) - gk_rate/s` against `c s^{1/k}`,
/// optionally with a second term `c₂ s^{2/k}`.
pub fn conjecture_fit(k: usize, samples: &[(f64, PrecisionReal)], with_second: bool) -> Result<ConjectureFit> {
    require_k(k)?;
    if samples.len() < 4 {
        return Err(Error::DegenerateFit(format!("{} samples; at least 4 are needed", samples.len())));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (s, _)| (lo.min(*s), hi.max(*s)));
    if !(lo > 0.0) || hi / lo < 10.0 * (1.0 - 1e-9) {
        return Err(Error::DegenerateFit(format!("s range [{lo}, {hi}] spans less than a decade")));
    }
    let kf = k as f64;
    let bits = samples[0].1.precision().bits();
    let rate = gk_rate(k, bits);
    let ln_k = Float::with_val(bits, k as u32).ln();
    let points: Vec<(f64, f64)> = samples
        .iter()
        .map(|(s, log_g)| {
            let sf = Float::with_val(bits, *s);
            let r = Float::with_val(bits, log_g.value() + &ln_k) - Float::with_val(bits, &rate / &sf);
            (*s, r.to_f64())
        })
        .collect();
    let basis = |s: f64| (s.powf(1.0 / kf), s.powf(2.0 / kf));
    let (c, c2) = if with_second {
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(s, r) in &points {
            let (x1, x2) = basis(s);
            a11 += x1 * x1;
            a12 += x1 * x2;
            a22 += x2 * x2;
            b1 += x1 * r;
            b2 += x2 * r;
        }
        let det = a11 * a22 - a12 * a12;
        if det.abs() <= 1e-14 * a11 * a22 {
            return Err(Error::DegenerateFit("normal equations are singular".into()));
        }
        ((b1 * a22 - b2 * a12) / det, Some((a11 * b2 - a12 * b1) / det))
    } else {
        let (mut a, mut b) = (0.0, 0.0);
        for &(s, r) in &points {
            let x = basis(s).0;
            a += x * x;
            b += x * r;
        }
        (b / a, None)
    };
    let residual_norm = points
        .iter()
        .map(|&(s, r)| {
            let (x1, x2) = basis(s);
            let e = r - c * x1 - c2.unwrap_or(0.0) * x2;
            e * e
        })
        .sum::<f64>()
        .sqrt();
    Ok(ConjectureFit {
        k,
        c,
        c2,
        residual_norm,
        samples: points,
        reference: (2.0 / (9.0 * PI)).sqrt(),
    })
}

/// One theorem check, serialized as a JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub theorem: String,
    pub parameters: serde_json::Value,
    pub exact: f64,
    pub main_term: f64,
    pub residual: f64,
    pub predicted_error_exponent: f64,
    pub trend_pass: Option<bool>,
}

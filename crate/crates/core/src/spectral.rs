//! Eigen-decomposition of the transfer matrices.
//!
//! The eigenvalues of `m(n)` are `z·λ_j`, where `λ_j` runs over the roots of
//! `P(λ, z) = λᵏ - z⁻¹(λ^{k-1} + ⋯ + 1)` at `z = z(n)`. Root `j` is labeled by
//! the k-th root of unity `ω_j = e^{2πi(j-1)/k}` it follows as `z → ∞`, so
//! `λ_1` is the unique positive root. Eigenvector `j` is
//! `(1, λ_j⁻¹, …, λ_j^{1-k})ᵀ`, which makes `m(n) = A D A⁻¹` with `A` a
//! Vandermonde matrix in the reciprocal roots.

use std::io::Write;

use rayon::prelude::*;
use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;
use serde::Serialize;

use crate::complex::Complex;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::precision::{Precision, PrecisionReal};
use crate::transfer::{m_matrix, z_of, NumericState};

const EXTRA_BITS: u32 = 64;
const MAX_ABERTH_ITERATIONS: usize = 500;

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

/// `P(λ, z) = λᵏ - z⁻¹(λ^{k-1} + ⋯ + λ + 1)`.
#[derive(Debug, Clone)]
pub struct CharPoly {
    pub k: usize,
    pub z: PrecisionReal,
}

impl CharPoly {
    pub fn new(k: usize, z: PrecisionReal) -> Result<Self> {
        require_k(k)?;
        require_positive(z.value(), "z")?;
        Ok(CharPoly { k, z })
    }

    fn inv_z(&self, bits: u32) -> Float {
        Float::with_val(bits, self.z.value()).recip()
    }

    /// `P` and `∂P/∂λ` at a complex point, by Horner.
    pub fn eval(&self, lambda: &Complex) -> (Complex, Complex) {
        eval_complex(self.k, &self.inv_z(lambda.prec()), lambda)
    }

    /// `|P(λ)|` divided by `|λ|ᵏ + z⁻¹ Σ |λ|^j`, the natural scale of its terms.
    pub fn scaled_residual(&self, lambda: &Complex) -> Float {
        let bits = lambda.prec();
        let c = self.inv_z(bits);
        let (p, _) = eval_complex(self.k, &c, lambda);
        let r = lambda.abs();
        let mut lower = Float::new(bits);
        let mut power = Float::with_val(bits, 1);
        for _ in 0..self.k {
            lower += &power;
            power *= &r;
        }
        let scale = power + lower * c;
        p.abs() / scale
    }
}

fn eval_complex(k: usize, c: &Float, lambda: &Complex) -> (Complex, Complex) {
    let bits = lambda.prec();
    // Coefficients from λᵏ down to λ⁰: 1, -c, …, -c.
    let neg_c = Complex::real(Float::with_val(bits, -c));
    let mut p = Complex::one(bits);
    let mut dp = Complex::zero(bits);
    for _ in 0..k {
        dp = &(&dp * lambda) + &p;
        p = &(&p * lambda) + &neg_c;
    }
    (p, dp)
}

/// `P`, `P'` and `P''` at a real point.
fn eval_real(k: usize, c: &Float, x: &Float) -> (Float, Float, Float) {
    let bits = x.prec();
    let neg_c = Float::with_val(bits, -c);
    let mut p = Float::with_val(bits, 1);
    let mut dp = Float::new(bits);
    let mut ddp = Float::new(bits);
    for _ in 0..k {
        ddp = Float::with_val(bits, &ddp * x) + Float::with_val(bits, &dp * 2u32);
        dp = Float::with_val(bits, &dp * x) + &p;
        p = Float::with_val(bits, &p * x) + &neg_c;
    }
    (p, dp, ddp)
}

/// The unique positive root of `P(·, z)`.
///
/// The bracket `[max(z^{-1/k}, 1/z), 1 + 1/z]` follows from
/// `λ - 1 = z⁻¹(1 - λ^{-k})`; Newton steps that leave the bracket fall back
/// to bisection.
pub fn primary_root(k: usize, z: &PrecisionReal) -> Result<PrecisionReal> {
    let root = primary_root_bits(k, z.value(), z.precision().bits() + EXTRA_BITS)?;
    Ok(PrecisionReal::new(root, z.precision()))
}

fn primary_root_bits(k: usize, z: &Float, bits: u32) -> Result<Float> {
    require_k(k)?;
    require_positive(z, "z")?;
    let z = Float::with_val(bits, z);
    let c = Float::with_val(bits, z.recip_ref());
    let root_k = (Float::with_val(bits, z.ln_ref()) / k as u32).exp().recip();
    let mut lo = if root_k > c { root_k } else { c.clone() };
    let mut hi = Float::with_val(bits, &c + 1u32);
    let mut x = if lo > 1u32 { lo.clone() } else { Float::with_val(bits, &lo + &hi) / 2u32 };
    let stop = Float::with_val(bits, 1) >> (bits as i32 - 6);
    for _ in 0..(4 * bits as usize + 200) {
        let (p, dp, _) = eval_real(k, &c, &x);
        if p.is_zero() {
            return Ok(x);
        }
        if p.is_sign_negative() {
            lo = x.clone();
        } else {
            hi = x.clone();
        }
        let newton = Float::with_val(bits, &x - Float::with_val(bits, &p / &dp));
        let next = if newton > lo && newton < hi {
            newton
        } else {
            Float::with_val(bits, &lo + &hi) / 2u32
        };
        let step = Float::with_val(bits, &next - &x).abs();
        x = next;
        let width = Float::with_val(bits, &hi - &lo);
        if step <= Float::with_val(bits, &x * &stop) || width <= Float::with_val(bits, &x * &stop) {
            return Ok(x);
        }
    }
    Err(Error::RootNonConvergence {
        k,
        z: z.to_f64(),
        residual: f64::NAN,
    })
}

/// Labeled roots, eigenvectors and eigenvalues at one `z`.
#[derive(Debug, Clone)]
pub struct SpectralPoint {
    pub k: usize,
    pub z: PrecisionReal,
    /// `roots[j-1] = λ_j`; `roots[0]` is the positive root.
    pub roots: Vec<Complex>,
}

impl SpectralPoint {
    pub fn precision(&self) -> Precision {
        self.z.precision()
    }

    pub fn lambda1(&self) -> PrecisionReal {
        PrecisionReal::new(self.roots[0].re.clone(), self.precision())
    }

    /// `A = (λ_j^{1-i})_{i,j}`.
    pub fn a_matrix(&self) -> CMatrix {
        let inverses: Vec<Complex> = self.roots.iter().map(Complex::recip).collect();
        CMatrix::from_fn(self.k, self.k, |i, j| inverses[j].powi(i as i32))
    }

    /// The diagonal `z·λ_j` of `D`.
    pub fn d_diagonal(&self) -> Vec<Complex> {
        self.roots.iter().map(|l| l.scale(self.z.value())).collect()
    }

    pub fn reconstruct(&self) -> Result<CMatrix> {
        let a = self.a_matrix();
        let inv = a.inverse()?;
        Ok(a.scale_columns(&self.d_diagonal()).mul(&inv))
    }

    /// Largest root residual, scaled by the size of the polynomial's terms.
    pub fn max_root_residual(&self) -> Float {
        let poly = CharPoly {
            k: self.k,
            z: self.z.clone(),
        };
        self.roots
            .iter()
            .map(|r| poly.scaled_residual(r))
            .fold(Float::new(self.precision().bits()), |a, b| a.max(&b))
    }

    /// Relative errors of `Σ λ_j = z⁻¹` and `∏ λ_j = (-1)^{k+1} z⁻¹`.
    pub fn vieta_errors(&self) -> (Float, Float) {
        let bits = self.precision().bits();
        let c = Float::with_val(bits, self.z.value()).recip();
        let mut sum = Complex::zero(bits);
        let mut prod = Complex::one(bits);
        for r in &self.roots {
            sum = &sum + r;
            prod = &prod * r;
        }
        let target_prod = if self.k % 2 == 1 { c.clone() } else { Float::with_val(bits, -&c) };
        let sum_err = (&sum - &Complex::real(c.clone())).abs() / &c;
        let prod_err = (&prod - &Complex::real(target_prod)).abs() / &c;
        (sum_err, prod_err)
    }

    /// Smallest `|λ_i - λ_j| / max(|λ_i|, |λ_j|)`.
    pub fn min_relative_separation(&self) -> Float {
        let bits = self.precision().bits();
        let mut best = Float::with_val(bits, rug::float::Special::Infinity);
        for i in 0..self.k {
            for j in i + 1..self.k {
                let d = (&self.roots[i] - &self.roots[j]).abs();
                let scale = self.roots[i].abs().max(&self.roots[j].abs());
                best = best.min(&(d / scale));
            }
        }
        best
    }

    /// `2 Σ_{m≠1} 1/(λ_1 - λ_m)`.
    pub fn twice_inverse_gap_sum(&self) -> Complex {
        let bits = self.precision().bits();
        let mut sum = Complex::zero(bits);
        for r in &self.roots[1..] {
            sum = &sum + &(&self.roots[0] - r).recip();
        }
        &sum + &sum
    }
}

/// Angle of `x` in `[0, 2π)`.
fn angle(x: &Complex, two_pi: &Float) -> Float {
    let a = x.arg();
    if a.is_sign_negative() {
        a + two_pi
    } else {
        a
    }
}

/// All roots of `P(·, z)`, labeled.
///
/// The positive root comes from [`primary_root`]; the others from Aberth
/// iteration seeded at `ω_j · min(1, z^{-1/k})`, which are their limits for
/// large and small `z`. Labels follow the argument order of the `ω_j`.
pub fn char_roots(k: usize, z: &PrecisionReal) -> Result<SpectralPoint> {
    require_k(k)?;
    require_positive(z.value(), "z")?;
    let precision = z.precision();
    let bits = precision.bits() + EXTRA_BITS;
    let zw = Float::with_val(bits, z.value());
    let c = Float::with_val(bits, zw.recip_ref());
    let lambda1 = Complex::real(primary_root_bits(k, &zw, bits)?);

    let radius = {
        let r = (Float::with_val(bits, zw.ln_ref()) / k as u32).exp().recip();
        if r > 1u32 {
            Float::with_val(bits, 1)
        } else {
            r
        }
    };
    let mut roots: Vec<Complex> = (1..k)
        .map(|j| {
            // A small twist keeps seeds off the exact root directions.
            let w = Complex::root_of_unity(j, k, bits);
            let twist = Complex::from_polar(&Float::with_val(bits, 1), &Float::with_val(bits, 1e-3f64));
            &w.scale(&radius) * &twist
        })
        .collect();
    let stop = Float::with_val(bits, 1) >> (bits as i32 - 8);
    let mut converged = false;
    for _ in 0..MAX_ABERTH_ITERATIONS {
        let mut max_step = Float::new(bits);
        for i in 0..roots.len() {
            let (p, dp) = eval_complex(k, &c, &roots[i]);
            if p.norm_sqr().is_zero() {
                continue;
            }
            let newton = &p / &dp;
            let mut repulsion = (&roots[i] - &lambda1).recip();
            for (j, other) in roots.iter().enumerate() {
                if j != i {
                    repulsion = &repulsion + &(&roots[i] - other).recip();
                }
            }
            let denom = &Complex::one(bits) - &(&newton * &repulsion);
            let step = &newton / &denom;
            let rel = step.abs() / roots[i].abs();
            max_step = max_step.max(&rel);
            roots[i] = &roots[i] - &step;
        }
        if max_step <= stop {
            converged = true;
            break;
        }
    }
    let poly = CharPoly::new(k, PrecisionReal::new(zw.clone(), Precision::new(bits_to_digits(bits))?))?;
    // Two Newton polishing steps against the undeflated polynomial.
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let (p, dp) = eval_complex(k, &c, r);
            if dp.norm_sqr().is_zero() {
                break;
            }
            *r = &*r - &(&p / &dp);
        }
    }
    let worst = roots
        .iter()
        .chain(std::iter::once(&lambda1))
        .map(|r| poly.scaled_residual(r))
        .fold(Float::new(bits), |a, b| a.max(&b));
    let limit = precision.tolerance(8);
    if !converged || worst > limit || roots.iter().any(|r| !r.is_finite()) {
        return Err(Error::RootNonConvergence {
            k,
            z: z.to_f64(),
            residual: worst.to_f64(),
        });
    }

    let two_pi = Float::with_val(bits, Constant::Pi) * 2u32;
    roots.sort_by(|a, b| {
        angle(a, &two_pi)
            .partial_cmp(&angle(b, &two_pi))
            .expect("finite roots")
    });
    let out_bits = precision.bits();
    let mut labeled = Vec::with_capacity(k);
    labeled.push(round_complex(&lambda1, out_bits));
    let half_sector = Float::with_val(bits, &two_pi / (2 * k) as u32);
    for (idx, r) in roots.iter().enumerate() {
        let j = idx + 1;
        let target = Float::with_val(bits, &two_pi * j as u32) / k as u32;
        let off = Float::with_val(bits, angle(r, &two_pi) - &target).abs();
        if off >= half_sector {
            return Err(Error::NumericalBreakdown(format!(
                "root {} at z = {} lies outside the sector of its label",
                j + 1,
                z.to_f64()
            )));
        }
        labeled.push(round_complex(r, out_bits));
    }
    let point = SpectralPoint {
        k,
        z: z.clone(),
        roots: labeled,
    };
    let separation = point.min_relative_separation();
    if separation <= Float::with_val(out_bits, &limit * 10u32) {
        return Err(Error::NumericalBreakdown(format!(
            "roots at z = {} are not separated",
            z.to_f64()
        )));
    }
    Ok(point)
}

fn bits_to_digits(bits: u32) -> u32 {
    ((f64::from(bits) - 24.0) / std::f64::consts::LOG2_10).floor() as u32
}

fn round_complex(x: &Complex, bits: u32) -> Complex {
    Complex::new(Float::with_val(bits, &x.re), Float::with_val(bits, &x.im))
}

/// Spectral points for `z(n)`, `n` in `ns`, computed in parallel.
pub fn spectral_points(k: usize, s: &PrecisionReal, ns: &[u64]) -> Result<Vec<SpectralPoint>> {
    ns.par_iter().map(|&n| char_roots(k, &z_of(n, s))).collect()
}

/// Verifies that every label moves to its nearest successor between
/// consecutive points. `LabelSwap { index }` names the first failing pair.
pub fn check_label_continuation(points: &[SpectralPoint]) -> Result<()> {
    for (index, pair) in points.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        for (j, r) in a.roots.iter().enumerate() {
            let nearest = b
                .roots
                .iter()
                .enumerate()
                .map(|(m, x)| (m, (x - r).abs()))
                .min_by(|x, y| x.1.partial_cmp(&y.1).expect("finite"))
                .map(|(m, _)| m)
                .expect("k >= 2");
            if nearest != j {
                return Err(Error::LabelSwap { index });
            }
        }
    }
    Ok(())
}

/// `T(n) = A(n+1)⁻¹ A(n)`.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub t: CMatrix,
}

impl TransitionMatrix {
    /// `T^{1,1}`, real because non-real roots come in conjugate pairs.
    pub fn t11(&self) -> Float {
        self.t[(0, 0)].re.clone()
    }

    /// Largest `|T - I|` entry.
    pub fn max_deviation_from_identity(&self) -> Float {
        let n = self.t.rows();
        let bits = self.t[(0, 0)].prec();
        self.t.max_abs_diff(&CMatrix::identity(n, bits))
    }
}

fn same_k(point_n: &SpectralPoint, point_n1: &SpectralPoint) -> Result<()> {
    if point_n.k != point_n1.k {
        return Err(Error::InvalidArgument(format!(
            "points have k = {} and k = {}",
            point_n.k, point_n1.k
        )));
    }
    Ok(())
}

/// Closed form `T^{ij} = ∏_{m≠i} ((μ_j - λ_m)/(λ_i - λ_m)) (λ_i/μ_j)` with
/// `λ` the roots at `n+1` and `μ` those at `n`.
pub fn transition_matrix(point_n: &SpectralPoint, point_n1: &SpectralPoint) -> Result<TransitionMatrix> {
    same_k(point_n, point_n1)?;
    let k = point_n.k;
    let lam = &point_n1.roots;
    let mu = &point_n.roots;
    let bits = point_n.precision().bits();
    let tiny = Float::with_val(bits, 1) >> (bits as i32 - 4);
    let shifts = root_shifts(point_n, point_n1);
    let mut t = CMatrix::zeros(k, k, bits);
    for i in 0..k {
        for j in 0..k {
            let mut entry = Complex::one(bits);
            let ratio = &lam[i] / &mu[j];
            for m in 0..k {
                if m == i {
                    continue;
                }
                let gap = &lam[i] - &lam[m];
                if gap.abs() <= Float::with_val(bits, lam[i].abs() * &tiny) {
                    return Err(Error::NumericalBreakdown("coincident roots in transition matrix".into()));
                }
                let num = if m == j { -&shifts[j] } else { &mu[j] - &lam[m] };
                entry = &entry * &(&(&num / &gap) * &ratio);
            }
            t[(i, j)] = entry;
        }
    }
    Ok(TransitionMatrix { t })
}

fn with_bits(c: &Complex, bits: u32) -> Complex {
    Complex::new(Float::with_val(bits, &c.re), Float::with_val(bits, &c.im))
}

/// `λ_j - μ_j` for each label, accurate relative to its own size.
///
/// Subtracting the rounded roots loses every digit once the shift drops
/// below the working epsilon, which happens for the roots near the unit
/// circle when `z` is small. Instead Newton runs on the Taylor expansion of
/// `P(·, z(n+1))` about `μ_j`, whose constant term is taken from
/// `μ_jᵏ = z(n)⁻¹ Σ_{i<k} μ_j^i`: `P(μ_j, z(n+1)) = -(z(n)/z(n+1) - 1) μ_jᵏ`.
fn root_shifts(point_n: &SpectralPoint, point_n1: &SpectralPoint) -> Vec<Complex> {
    let k = point_n.k;
    let bits = point_n.precision().bits() + EXTRA_BITS;
    let z = Float::with_val(bits, point_n.z.value());
    let z1 = Float::with_val(bits, point_n1.z.value());
    let c1 = Float::with_val(bits, z1.recip_ref());
    let ratio = Float::with_val(bits, &z / &z1) - 1u32;
    let out_bits = point_n.precision().bits();
    (0..k)
        .map(|j| {
            let mu = with_bits(&point_n.roots[j], bits);
            // Coefficients of P(x) = xᵏ - c₁ Σ_{i<k} x^i, shifted to powers of (x - μ).
            let mut b: Vec<Complex> = (0..k).map(|_| Complex::real(Float::with_val(bits, -&c1))).collect();
            b.push(Complex::one(bits));
            for i in 0..k {
                for m in (i..k).rev() {
                    let carry = &mu * &b[m + 1];
                    b[m] = &b[m] + &carry;
                }
            }
            b[0] = -&mu.powi(k as i32).scale(&ratio);
            let mut delta = &with_bits(&point_n1.roots[j], bits) - &mu;
            for _ in 0..16 {
                let mut g = b[k].clone();
                let mut dg = Complex::zero(bits);
                for c in b[..k].iter().rev() {
                    dg = &(&dg * &delta) + &g;
                    g = &(&g * &delta) + c;
                }
                let step = &g / &dg;
                delta = &delta - &step;
                if step.abs() <= Float::with_val(bits, delta.abs() >> (bits as i32 - 8)) {
                    break;
                }
            }
            with_bits(&delta, out_bits)
        })
        .collect()
}

/// `A(n+1)⁻¹ A(n)` by Gauss-Jordan inversion, for cross-checking.
pub fn direct_transition(point_n: &SpectralPoint, point_n1: &SpectralPoint) -> Result<CMatrix> {
    same_k(point_n, point_n1)?;
    Ok(point_n1.a_matrix().inverse()?.mul(&point_n.a_matrix()))
}

/// Entry `(i, j)` of `T(n)` as `p(μ_j⁻¹)`, with `p` the Lagrange polynomial
/// over the nodes `λ_ℓ⁻¹` that is 1 at node `i` and 0 at the others.
pub fn lagrange_entry(point_n: &SpectralPoint, point_n1: &SpectralPoint, i: usize, j: usize) -> Complex {
    let bits = point_n.precision().bits();
    let nodes: Vec<Complex> = point_n1.roots.iter().map(Complex::recip).collect();
    let x = point_n.roots[j].recip();
    let mut value = Complex::one(bits);
    for (m, node) in nodes.iter().enumerate() {
        if m != i {
            value = &value * &(&(&x - node) / &(&nodes[i] - node));
        }
    }
    value
}

/// `(∂λ_1/∂z, ∂²λ_1/∂z²)` by implicit differentiation of
/// `λ^{k+1} - λᵏ - z⁻¹(λᵏ - 1) = 0`.
pub fn lambda1_derivatives(k: usize, z: &PrecisionReal) -> Result<(PrecisionReal, PrecisionReal)> {
    let precision = z.precision();
    let bits = precision.bits() + EXTRA_BITS;
    let zw = Float::with_val(bits, z.value());
    let l = primary_root_bits(k, &zw, bits)?;
    let inv_z = Float::with_val(bits, zw.recip_ref());
    let inv_z2 = Float::with_val(bits, inv_z.square_ref());
    let inv_z3 = Float::with_val(bits, &inv_z2 * &inv_z);
    let pow = |e: i32| -> Float { Float::with_val(bits, (&l).pow(e)) };
    let kf = k as u32;

    // First derivative: -z⁻²(λ^{k-1}+…+1) / (kλ^{k-1} - z⁻¹((k-1)λ^{k-2}+…+1)).
    let mut b = Float::new(bits);
    let mut db = Float::new(bits);
    for j in 0..k {
        b += pow(j as i32);
        if j >= 1 {
            db += pow(j as i32 - 1) * j as u32;
        }
    }
    let denom = pow(k as i32 - 1) * kf - Float::with_val(bits, &inv_z * &db);
    let d1 = -(Float::with_val(bits, &inv_z2 * &b)) / &denom;

    // Second derivative from the identity in the λ^{k+1} form.
    let lhs_coeff = pow(k as i32) * (kf + 1) - pow(k as i32 - 1) * kf - Float::with_val(bits, &inv_z * pow(k as i32 - 1)) * kf;
    let lk_minus_1 = pow(k as i32) - 1u32;
    let mut rhs = Float::with_val(bits, &inv_z3 * &lk_minus_1) * 2u32;
    rhs -= Float::with_val(bits, &d1 * &inv_z2) * pow(k as i32 - 1) * (2 * kf);
    let curvature = pow(k as i32 - 1) * ((kf + 1) * kf)
        - Float::with_val(bits, &inv_z + 1u32) * pow(k as i32 - 2) * (kf * (kf - 1));
    rhs -= Float::with_val(bits, d1.square_ref()) * curvature;
    let d2 = rhs / lhs_coeff;
    Ok((PrecisionReal::new(d1, precision), PrecisionReal::new(d2, precision)))
}

/// `(R_k(λ), Q(λ))` with `Q(λ) = Σ_{j=1}^{k} j λ^{2k-1-j}` and `R_k = Q'/Q`.
pub fn rk_q(k: usize, lambda: &PrecisionReal) -> Result<(PrecisionReal, PrecisionReal)> {
    require_k(k)?;
    require_positive(lambda.value(), "λ")?;
    let precision = lambda.precision();
    let bits = precision.bits();
    let l = lambda.value();
    let mut q = Float::new(bits);
    let mut dq = Float::new(bits);
    for j in 1..=k {
        let e = (2 * k - 1 - j) as i32;
        q += Float::with_val(bits, l.pow(e)) * j as u32;
        if e >= 1 {
            dq += Float::with_val(bits, l.pow(e - 1)) * (j as u32 * e as u32);
        }
    }
    let r = Float::with_val(bits, &dq / &q);
    Ok((PrecisionReal::new(r, precision), PrecisionReal::new(q, precision)))
}

/// `∂²P/∂λ² / ∂P/∂λ` at `λ` with `z` chosen so that `λ` is the positive root,
/// `z = (λ^{k-1}+⋯+1)/λᵏ`.
pub fn rk_from_char_poly(k: usize, lambda: &PrecisionReal) -> Result<PrecisionReal> {
    require_k(k)?;
    require_positive(lambda.value(), "λ")?;
    let precision = lambda.precision();
    let bits = precision.bits() + EXTRA_BITS;
    let l = Float::with_val(bits, lambda.value());
    let mut b = Float::new(bits);
    for j in 0..k {
        b += Float::with_val(bits, (&l).pow(j as i32));
    }
    let a = Float::with_val(bits, (&l).pow(k as i32));
    let c = Float::with_val(bits, &a / &b);
    let (_, dp, ddp) = eval_real(k, &c, &l);
    Ok(PrecisionReal::new(ddp / dp, precision))
}

/// `-(1/2) log(Q(λ) λ^{2-2k})`, the closed form of `∫_λ^∞ (R_k(x)/2 - (k-1)/x) dx`.
pub fn transition_integral_closed_form(k: usize, lambda: &PrecisionReal) -> Result<PrecisionReal> {
    let (_, q) = rk_q(k, lambda)?;
    let bits = lambda.precision().bits();
    let scaled = Float::with_val(bits, q.value() * Float::with_val(bits, lambda.value().pow(2 - 2 * k as i32)));
    Ok(PrecisionReal::new(-scaled.ln() / 2u32, lambda.precision()))
}

/// `∫_λ^∞ (R_k(x)/2 - (k-1)/x) dx` by exp-sinh quadrature.
pub fn transition_integral_numeric(k: usize, lambda: &PrecisionReal, tol: f64) -> Result<PrecisionReal> {
    let precision = lambda.precision();
    let bits = precision.bits();
    let r = crate::quadrature::exp_sinh(lambda.value(), tol, |x| {
        let xr = PrecisionReal::new(x.clone(), precision);
        let (rk, _) = rk_q(k, &xr)?;
        let tail = Float::with_val(bits, (k - 1) as u32) / x;
        Ok(Float::with_val(bits, rk.value() / 2u32) - tail)
    })?;
    Ok(PrecisionReal::new(r.value, precision))
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionTail {
    pub k: usize,
    pub s: PrecisionReal,
    pub n_start: u64,
    pub n_end: u64,
    /// `Σ_{n=N}^{M} log T(n)^{1,1}`.
    pub log_product: PrecisionReal,
    /// Geometric extrapolation of the terms beyond `M`.
    pub tail_estimate: f64,
    /// `(1/2) log k - ((k-1)/(2k)) log(Ns)`.
    pub prediction: f64,
    pub residual: f64,
    pub tail_flagged: bool,
}

/// `log ∏_{n=N}^{M} T(n)^{1,1}` with `M` chosen so the extrapolated tail
/// stays below `tol`.
pub fn transition_tail_product(k: usize, s: &PrecisionReal, n_start: u64, tol: f64) -> Result<TransitionTail> {
    require_k(k)?;
    if n_start < 2 {
        return Err(Error::InvalidArgument("the tail product needs N >= 2".into()));
    }
    let sf = s.to_f64();
    // Terms decay like e^{-ns} once ns is large.
    let span = ((1.0 / tol).ln().max(1.0) + 10.0) / sf;
    let n_end = n_start + span.ceil() as u64;
    transition_tail_product_to(k, s, n_start, n_end, tol)
}

pub fn transition_tail_product_to(
    k: usize,
    s: &PrecisionReal,
    n_start: u64,
    n_end: u64,
    tol: f64,
) -> Result<TransitionTail> {
    require_k(k)?;
    if n_start < 2 || n_end < n_start {
        return Err(Error::InvalidArgument(format!("need 2 <= N <= M, got N = {n_start}, M = {n_end}")));
    }
    let precision = s.precision();
    let bits = precision.bits();
    let ns: Vec<u64> = (n_start..=n_end + 1).collect();
    let points = spectral_points(k, s, &ns)?;
    check_label_continuation(&points)?;
    let logs: Vec<Float> = points
        .par_windows(2)
        .map(|w| transition_matrix(&w[0], &w[1]).map(|t| t.t11().ln()))
        .collect::<Result<_>>()?;
    let mut sum = Float::new(bits);
    for l in &logs {
        sum += l;
    }
    let last = logs.last().map(|l| l.to_f64().abs()).unwrap_or(0.0);
    let r = (-sf_of(s)).exp();
    let tail_estimate = last * r / (1.0 - r);
    let prediction = 0.5 * (k as f64).ln() - ((k - 1) as f64 / (2 * k) as f64) * ((n_start as f64) * sf_of(s)).ln();
    let residual = sum.to_f64() - prediction;
    Ok(TransitionTail {
        k,
        s: s.clone(),
        n_start,
        n_end,
        log_product: PrecisionReal::new(sum, precision),
        tail_estimate,
        prediction,
        residual,
        tail_flagged: tail_estimate > tol,
    })
}

fn sf_of(s: &PrecisionReal) -> f64 {
    s.to_f64()
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenProduct {
    pub k: usize,
    pub s: PrecisionReal,
    pub n_start: u64,
    pub n_cut: u64,
    /// `Σ_{n=n_start}^{n_cut} log(λ_1(n) z(n))`.
    pub sum: PrecisionReal,
    /// Bound on the omitted terms `n > n_cut`.
    pub tail_bound: f64,
}

/// `log(λ_1(n) z(n))` for one `n`.
pub fn eigen_term(k: usize, n: u64, s: &PrecisionReal) -> Result<PrecisionReal> {
    let z = z_of(n, s);
    let bits = s.precision().bits() + EXTRA_BITS;
    let l = primary_root_bits(k, z.value(), bits)?;
    let v = Float::with_val(bits, &l * z.value()).ln();
    Ok(PrecisionReal::new(v, s.precision()))
}

/// `Σ_{n=n_start}^{n_cut} log(λ_1(n) z(n))` with a bound on the rest.
///
/// Once `z(n) < k` the positive root exceeds 1 and
/// `0 < log(λ_1 z) ≤ z(n)`, so the omitted terms sum to at most
/// `q^{n_cut+1} / ((1-q)(1-q^{n_cut+1}))`.
pub fn eigen_product_log_range(k: usize, s: &PrecisionReal, n_start: u64, n_cut: u64) -> Result<EigenProduct> {
    require_k(k)?;
    require_positive(s.value(), "s")?;
    if n_start == 0 || n_cut < n_start {
        return Err(Error::InvalidArgument(format!("need 1 <= start <= N, got {n_start}..={n_cut}")));
    }
    let precision = s.precision();
    let bits = precision.bits();
    let terms: Vec<PrecisionReal> = (n_start..=n_cut)
        .into_par_iter()
        .map(|n| eigen_term(k, n, s))
        .collect::<Result<_>>()?;
    let mut sum = Float::new(bits);
    for t in &terms {
        sum += t.value();
    }
    let q = Float::with_val(bits, -s.value()).exp();
    let z_next = z_of(n_cut + 1, s).to_f64();
    let tail_bound = if z_next < k as f64 {
        crate::transfer::partition_tail_log_bound(&q, n_cut).to_f64()
    } else {
        f64::INFINITY
    };
    Ok(EigenProduct {
        k,
        s: s.clone(),
        n_start,
        n_cut,
        sum: PrecisionReal::new(sum, precision),
        tail_bound,
    })
}

pub fn eigen_product_log(k: usize, s: &PrecisionReal, n_cut: u64) -> Result<EigenProduct> {
    eigen_product_log_range(k, s, 1, n_cut)
}

/// Smallest `N` with the eigen-product tail bound below `tol`.
pub fn eigen_cutoff(s: &PrecisionReal, tol: f64) -> u64 {
    let sf = s.to_f64();
    let q = (-sf).exp();
    let mut n = ((1.0 / (tol * (1.0 - q))).ln() / sf).ceil().max(1.0) as u64;
    while q.powf((n + 1) as f64) / ((1.0 - q) * (1.0 - q.powf((n + 1) as f64))) > tol {
        n += 1;
    }
    n
}

/// `c_n = -log(max_{i>1} |λ_i| / λ_1) / (ns)^{1/k}` for the given `n` with `ns ≤ 1`.
pub fn eigenvalue_ratio_constants(k: usize, s: &PrecisionReal, ns: &[u64]) -> Result<Vec<(u64, f64)>> {
    let sf = s.to_f64();
    let kept: Vec<u64> = ns.iter().copied().filter(|&n| n as f64 * sf <= 1.0).collect();
    let points = spectral_points(k, s, &kept)?;
    Ok(kept
        .iter()
        .zip(&points)
        .map(|(&n, p)| {
            let l1 = p.roots[0].abs().to_f64();
            let worst = p.roots[1..].iter().map(|r| r.abs().to_f64()).fold(0.0, f64::max);
            (n, -(worst / l1).ln() / (n as f64 * sf).powf(1.0 / k as f64))
        })
        .collect())
}

/// Coefficients of `ṽ(N)` in the eigenbasis of `m(N)`, `A(N)⁻¹ ṽ(N)`,
/// returned with a common log scale split off.
pub fn eigenbasis_coefficients(k: usize, s: &PrecisionReal, n_cut: u64) -> Result<(Vec<Complex>, Float)> {
    let state = run_state(k, s, n_cut);
    let point = char_roots(k, &z_of(n_cut, s))?;
    let (u, scale) = state.scaled();
    let v: Vec<Complex> = u.into_iter().map(Complex::real).collect();
    Ok((point.a_matrix().inverse()?.mul_vec(&v), scale))
}

fn run_state(k: usize, s: &PrecisionReal, n_cut: u64) -> NumericState {
    let mut state = NumericState::initial(k, s.precision());
    for n in 1..=n_cut {
        state.step(z_of(n, s).value());
    }
    state
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationSample {
    pub n: u64,
    /// `max_{i>1} |w(n)_i| / |w(n)_1|`.
    pub ratio: f64,
    /// `n^{-(k+1)/k} s^{-1/k} + s`.
    pub bound_shape: f64,
    pub normalized: f64,
}

/// `w(n) = A(n)⁻¹ m(n-1) ⋯ m(1) e₁` measured against the domination shape.
pub fn domination_profile(k: usize, s: &PrecisionReal, ns: &[u64]) -> Result<Vec<DominationSample>> {
    require_k(k)?;
    let sf = s.to_f64();
    let mut sorted: Vec<u64> = ns.to_vec();
    sorted.sort_unstable();
    let points = spectral_points(k, s, &sorted)?;
    let mut state = NumericState::initial(k, s.precision());
    let mut done = 0u64;
    let mut out = Vec::with_capacity(sorted.len());
    for (&n, point) in sorted.iter().zip(&points) {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        while done + 1 < n {
            done += 1;
            state.step(z_of(done, s).value());
        }
        let (u, _) = state.scaled();
        let v: Vec<Complex> = u.into_iter().map(Complex::real).collect();
        let w = point.a_matrix().inverse()?.mul_vec(&v);
        let w1 = w[0].abs().to_f64();
        let worst = w[1..].iter().map(|x| x.abs().to_f64()).fold(0.0, f64::max);
        let ratio = worst / w1;
        let nf = n as f64;
        let bound_shape = nf.powf(-(k as f64 + 1.0) / k as f64) * sf.powf(-1.0 / k as f64) + sf;
        out.push(DominationSample {
            n,
            ratio,
            bound_shape,
            normalized: ratio / bound_shape,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunupEigenComparison {
    pub k: usize,
    pub n_cut: u64,
    /// `log ṽ_0(N) - Σ_{n≤N} log(λ_1(n) z(n))`.
    pub log_ratio: f64,
    /// `((k-1)/(2k)) log N + log(k^{-3/2} (2π)^{(k-1)/(2k)})`.
    pub prediction: f64,
    pub residual: f64,
}

pub fn runup_eigen_comparison(k: usize, s: &PrecisionReal, n_cut: u64) -> Result<RunupEigenComparison> {
    let state = run_state(k, s, n_cut);
    let v0 = state.entries()[0].ln()?;
    let eig = eigen_product_log(k, s, n_cut)?;
    let log_ratio = Float::with_val(s.precision().bits(), &v0 - eig.sum.value()).to_f64();
    let kf = k as f64;
    let prediction = (kf - 1.0) / (2.0 * kf) * (n_cut as f64).ln() - 1.5 * kf.ln()
        + (kf - 1.0) / (2.0 * kf) * (2.0 * std::f64::consts::PI).ln();
    Ok(RunupEigenComparison {
        k,
        n_cut,
        log_ratio,
        prediction,
        residual: log_ratio - prediction,
    })
}

/// Writes `(n, Re λ_j, Im λ_j for each j, T(n)^{1,1})` rows for `n` in `ns`.
pub fn write_trace_csv<W: Write>(k: usize, s: &PrecisionReal, ns: &[u64], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["n".to_string()];
    for j in 1..=k {
        header.push(format!("re_lambda{j}"));
        header.push(format!("im_lambda{j}"));
    }
    header.push("t11".into());
    w.write_record(&header)?;
    let next: Vec<u64> = ns.iter().map(|n| n + 1).collect();
    let here = spectral_points(k, s, ns)?;
    let there = spectral_points(k, s, &next)?;
    for ((n, a), b) in ns.iter().zip(&here).zip(&there) {
        let mut row = vec![n.to_string()];
        for r in &a.roots {
            let (re, im) = r.to_f64_pair();
            row.push(format!("{re:.17e}"));
            row.push(format!("{im:.17e}"));
        }
        row.push(format!("{:.17e}", transition_matrix(a, b)?.t11().to_f64()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `m(n)` rebuilt from its eigen-decomposition against the direct matrix.
pub fn reconstruction_error(point: &SpectralPoint, n: u64, s: &PrecisionReal) -> Result<Float> {
    let m = m_matrix(n, s, point.k)?.to_matrix();
    Ok(point.reconstruct()?.max_rel_diff(&m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::relative_error;
    use proptest::prelude::*;

    fn p() -> Precision {
        Precision::default()
    }

    fn real(x: f64) -> PrecisionReal {
        PrecisionReal::from_f64(x, p())
    }

    #[test]
    fn quadratic_closed_form() {
        let l = primary_root(2, &real(0.5)).unwrap();
        let expected = Float::with_val(p().bits(), 3).sqrt() + 1u32;
        assert!(relative_error(l.value(), &expected, &p().zero()) < p().tolerance(2));
    }

    #[test]
    fn primary_root_limits() {
        for k in 2..=4 {
            let big: Vec<f64> = [1e4, 1e6, 1e8]
                .iter()
                .map(|&z| primary_root(k, &real(z)).unwrap().to_f64() * z.powf(1.0 / k as f64))
                .collect();
            assert!(big.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()));
            assert!((big[2] - 1.0).abs() < 1e-2);
            let small: Vec<f64> = [1e-2, 1e-4, 1e-6]
                .iter()
                .map(|&z| primary_root(k, &real(z)).unwrap().to_f64() * z)
                .collect();
            assert!(small.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()));
            assert!((small[2] - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn roots_satisfy_polynomial_and_vieta() {
        for k in 2..=6 {
            for z in [1e-30, 1e-3, 0.7, 1.0, 3.0, 1e3, 1e9] {
                let pt = char_roots(k, &real(z)).unwrap();
                assert!(pt.max_root_residual() < p().tolerance(8), "k={k} z={z}");
                let (sum, prod) = pt.vieta_errors();
                assert!(sum < p().tolerance(8) && prod < p().tolerance(8), "k={k} z={z}");
                assert!(pt.roots[0].im.is_zero() && pt.roots[0].re > 0u32);
            }
        }
    }

    #[test]
    fn second_order_expansion_at_large_z() {
        // λ_j ≈ ω_j z^{-1/3} (1 + ω_j z^{-1/3} / 3); the next term is relative z^{-2/3}.
        let k = 3;
        let z = 1e3f64;
        let pt = char_roots(k, &real(z)).unwrap();
        let bits = p().bits();
        let zr = Float::with_val(bits, z).ln() / 3u32;
        let scale = Float::with_val(bits, -zr).exp();
        for (j, r) in pt.roots.iter().enumerate() {
            let w = Complex::root_of_unity(j, k, bits);
            let corr = &Complex::one(bits) + &w.scale(&Float::with_val(bits, &scale / 3u32));
            let approx = &w.scale(&scale) * &corr;
            let err = (r - &approx).abs().to_f64() / r.abs().to_f64();
            assert!(err < 2.0 * z.powf(-2.0 / 3.0), "j={j} err={err}");
            assert!(err > 0.1 * z.powf(-2.0 / 3.0));
        }
    }

    #[test]
    fn reconstruction_matches_transfer_matrix() {
        let s = real(0.01);
        for k in 2..=4 {
            for n in [1u64, 10, 100, 1000] {
                let pt = char_roots(k, &z_of(n, &s)).unwrap();
                let err = reconstruction_error(&pt, n, &s).unwrap();
                assert!(err < p().tolerance(10), "k={k} n={n} err={}", err.to_f64());
            }
        }
    }

    #[test]
    fn transition_identity_on_same_point() {
        let pt = char_roots(3, &real(2.5)).unwrap();
        let t = transition_matrix(&pt, &pt).unwrap();
        assert!(t.max_deviation_from_identity() < p().tolerance(8));
    }

    #[test]
    fn transition_closed_form_agrees_with_inversion_and_lagrange() {
        let s = real(0.01);
        let a = char_roots(2, &z_of(100, &s)).unwrap();
        let b = char_roots(2, &z_of(101, &s)).unwrap();
        let t = transition_matrix(&a, &b).unwrap();
        let direct = direct_transition(&a, &b).unwrap();
        assert!(t.t.max_rel_diff(&direct) < p().tolerance(10));
        let off = t.t[(0, 1)].abs().to_f64().max(t.t[(1, 0)].abs().to_f64());
        assert!(off < 1.0);
        assert!(off < 10.0 * (0.01 + 1.0 / 100.0) && off > 1e-3 * (0.01 + 1.0 / 100.0));
        for i in 0..2 {
            for j in 0..2 {
                let l = lagrange_entry(&a, &b, i, j);
                assert!((&l - &t.t[(i, j)]).abs() < p().tolerance(10));
            }
        }
    }

    #[test]
    fn transition_entrywise_accurate_for_tiny_z() {
        // z(512) at s = 0.3 is near 1e-67, far below the working epsilon.
        let s = real(0.3);
        let a = char_roots(3, &z_of(512, &s)).unwrap();
        let b = char_roots(3, &z_of(513, &s)).unwrap();
        let t = transition_matrix(&a, &b).unwrap();
        let hp = p().with_extra_digits(100);
        let sh = PrecisionReal::from_f64(0.3, hp);
        let ah = char_roots(3, &z_of(512, &sh)).unwrap();
        let bh = char_roots(3, &z_of(513, &sh)).unwrap();
        let reference = direct_transition(&ah, &bh).unwrap();
        assert!(t.t[(1, 2)].abs().to_f64() < 1e-60);
        assert!(t.t.max_rel_diff(&reference) < p().tolerance(10));
    }

    #[test]
    fn label_continuation_over_a_grid() {
        let s = real(0.05);
        let ns: Vec<u64> = (1..120).collect();
        let pts = spectral_points(4, &s, &ns).unwrap();
        check_label_continuation(&pts).unwrap();
        let mut swapped = pts[..3].to_vec();
        swapped[2].roots.swap(1, 3);
        assert!(matches!(check_label_continuation(&swapped), Err(Error::LabelSwap { index: 1 })));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let bits = p().bits();
        for k in 2..=4 {
            for z in [0.05, 0.9, 7.0, 300.0] {
                let (d1, d2) = lambda1_derivatives(k, &real(z)).unwrap();
                let hz = Float::with_val(bits, z) * Float::with_val(bits, 1e-12f64);
                let at = |shift: i32| {
                    let x = Float::with_val(bits, z) + Float::with_val(bits, &hz * shift);
                    primary_root(k, &PrecisionReal::new(x, p())).unwrap().into_value()
                };
                let (up, mid, down) = (at(1), at(0), at(-1));
                let fd1 = Float::with_val(bits, &up - &down) / Float::with_val(bits, &hz * 2u32);
                let fd2 = (up + down - Float::with_val(bits, &mid * 2u32)) / Float::with_val(bits, hz.square_ref());
                assert!(((fd1.to_f64() - d1.to_f64()) / d1.to_f64()).abs() < 1e-20, "k={k} z={z}");
                assert!(((fd2.to_f64() - d2.to_f64()) / d2.to_f64()).abs() < 1e-10, "k={k} z={z}");
                assert!(d1.to_f64() < 0.0);
            }
        }
    }

    #[test]
    fn derivative_bound_shape() {
        for k in 2..=4 {
            let ratios: Vec<f64> = (-12..=12)
                .map(|e| {
                    let z = 10f64.powi(e);
                    let (d1, _) = lambda1_derivatives(k, &real(z)).unwrap();
                    let l = primary_root(k, &real(z)).unwrap().to_f64();
                    d1.to_f64().abs() / (l * (1.0 + 1.0 / z))
                })
                .collect();
            assert!(ratios.iter().all(|&r| r < 2.0), "k={k} {ratios:?}");
        }
    }

    #[test]
    fn q_polynomial_instances() {
        let l = real(1.7);
        let (_, q2) = rk_q(2, &l).unwrap();
        assert!((q2.to_f64() - (1.7f64 * 1.7 + 2.0 * 1.7)).abs() < 1e-13);
        let (_, q3) = rk_q(3, &l).unwrap();
        let x = 1.7f64;
        assert!((q3.to_f64() - (x.powi(4) + 2.0 * x.powi(3) + 3.0 * x.powi(2))).abs() < 1e-12);
        for k in 2..=5 {
            let big = real(1e12);
            let (_, q) = rk_q(k, &big).unwrap();
            assert!((q.to_f64() * 1e12f64.powi(2 - 2 * k as i32) - 1.0).abs() < 1e-11);
        }
        assert!(rk_q(2, &real(-1.0)).is_err());
    }

    #[test]
    fn rk_equals_char_poly_ratio_and_gap_sum() {
        for k in 2..=5 {
            for z in [0.01, 0.5, 20.0] {
                let pt = char_roots(k, &real(z)).unwrap();
                let l1 = pt.lambda1();
                let (r, _) = rk_q(k, &l1).unwrap();
                let r2 = rk_from_char_poly(k, &l1).unwrap();
                assert!(relative_error(r.value(), r2.value(), &p().zero()) < p().tolerance(10));
                let gaps = pt.twice_inverse_gap_sum();
                assert!(relative_error(&gaps.re, r.value(), &p().zero()) < p().tolerance(10));
            }
        }
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        for k in 2..=4 {
            let l = primary_root(k, &real(3.0)).unwrap();
            let closed = transition_integral_closed_form(k, &l).unwrap();
            let numeric = transition_integral_numeric(k, &l, 1e-30).unwrap();
            assert!((closed.clone() - numeric).abs().to_f64() < 1e-25, "k={k}");
        }
    }

    #[test]
    fn t11_tends_to_one() {
        let s = real(0.1);
        let logs: Vec<f64> = [5u64, 50, 200]
            .iter()
            .map(|&n| {
                let a = char_roots(3, &z_of(n, &s)).unwrap();
                let b = char_roots(3, &z_of(n + 1, &s)).unwrap();
                transition_matrix(&a, &b).unwrap().t11().ln().to_f64().abs()
            })
            .collect();
        assert!(logs.windows(2).all(|w| w[1] < w[0]));
        assert!(logs[2] < 1e-8);
    }

    #[test]
    fn eigen_terms_positive_once_z_below_k() {
        let s = real(0.05);
        for k in 2..=4 {
            for n in 1..200 {
                let z = z_of(n, &s).to_f64();
                let t = eigen_term(k, n, &s).unwrap().to_f64();
                if z < k as f64 {
                    assert!(t > 0.0 && t <= z * (1.0 + 1e-12), "k={k} n={n}");
                }
            }
        }
    }

    #[test]
    fn eigen_tail_bound_holds() {
        let s = real(0.2);
        let short = eigen_product_log(2, &s, 60).unwrap();
        let long = eigen_product_log(2, &s, 400).unwrap();
        let gap = (long.sum.clone() - short.sum.clone()).to_f64();
        assert!(gap >= 0.0 && gap <= short.tail_bound);
        let n = eigen_cutoff(&s, 1e-30);
        assert!(eigen_product_log(2, &s, n).unwrap().tail_bound <= 1e-30);
    }

    #[test]
    fn ratio_constants_are_positive() {
        let s = real(0.001);
        let ns: Vec<u64> = (1..=1000).step_by(37).collect();
        let c = eigenvalue_ratio_constants(3, &s, &ns).unwrap();
        assert!(!c.is_empty());
        assert!(c.iter().all(|&(_, v)| v > 0.0));
    }

    #[test]
    fn trace_csv_columns() {
        let mut buf = Vec::new();
        write_trace_csv(2, &real(0.1), &[3, 4], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,re_lambda1,im_lambda1,re_lambda2,im_lambda2,t11\n3,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn roots_are_simple_and_labeled(k in 2usize..7, log_z in -40.0f64..40.0) {
            let z = log_z.exp();
            let pt = char_roots(k, &real(z)).unwrap();
            prop_assert!(pt.min_relative_separation() > p().tolerance(7));
            prop_assert!(pt.max_root_residual() < p().tolerance(8));
            // Exactly one positive real root, in slot 0.
            let positives = pt.roots.iter().filter(|r| r.im.is_zero() && r.re > 0u32).count();
            prop_assert_eq!(positives, 1);
        }
    }
}

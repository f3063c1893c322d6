//! Double-exponential quadrature at MPFR precision.
//!
//! Finite intervals use the tanh-sinh map, half-lines the exp-sinh map. Both
//! refine by halving the step and reuse the previous level's nodes; the error
//! estimate is the change between the last two levels.

use rug::float::Constant;
use rug::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QuadResult {
    pub value: Float,
    pub error_estimate: Float,
    pub levels: u32,
    pub evaluations: usize,
}

const MAX_LEVEL: u32 = 12;
const MIN_LEVEL: u32 = 3;

/// Sums `node(t)` for `t = start, start + step, …` until the terms fall below
/// `cutoff` three times in a row or `node` reports the map left range.
fn sweep<F>(node: &mut F, start: &Float, step: &Float, cutoff: &Float, evals: &mut usize) -> Result<Float>
where
    F: FnMut(&Float) -> Result<Option<Float>>,
{
    let bits = step.prec();
    let mut sum = Float::new(bits);
    let mut small = 0;
    let mut t = start.clone();
    for _ in 0..1_000_000 {
        let Some(term) = node(&t)? else { return Ok(sum) };
        *evals += 1;
        let below = Float::with_val(bits, term.abs_ref()) < *cutoff;
        sum += term;
        if below {
            small += 1;
            if small >= 3 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
        t += step;
    }
    Err(Error::NumericalBreakdown("quadrature sweep did not terminate".into()))
}

/// Trapezoidal sums of `node` over `t ∈ hℤ` with `h` halved per level.
fn integrate<F>(bits: u32, tol: f64, mut node: F) -> Result<QuadResult>
where
    F: FnMut(&Float) -> Result<Option<Float>>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("quadrature tolerance {tol} must be positive")));
    }
    let tol_f = Float::with_val(bits, tol);
    let cutoff = Float::with_val(bits, &tol_f * 1e-8f64);
    let mut evals = 0;
    let mut h = Float::with_val(bits, 0.5f64);
    let zero = Float::new(bits);
    let mut raw = match node(&zero)? {
        Some(v) => {
            evals += 1;
            v
        }
        None => Float::new(bits),
    };
    let neg_h = Float::with_val(bits, -&h);
    raw += sweep(&mut node, &h, &h, &cutoff, &mut evals)?;
    raw += sweep(&mut node, &neg_h, &neg_h, &cutoff, &mut evals)?;
    let mut estimate = Float::with_val(bits, &raw * &h);
    let mut last_change = Float::with_val(bits, rug::float::Special::Infinity);
    for level in 1..=MAX_LEVEL {
        let step = h.clone();
        h /= 2u32;
        let neg_h = Float::with_val(bits, -&h);
        let neg_step = Float::with_val(bits, -&step);
        raw += sweep(&mut node, &h, &step, &cutoff, &mut evals)?;
        raw += sweep(&mut node, &neg_h, &neg_step, &cutoff, &mut evals)?;
        let next = Float::with_val(bits, &raw * &h);
        let change = Float::with_val(bits, &next - &estimate).abs();
        estimate = next;
        let scale = Float::with_val(bits, estimate.abs_ref()).max(&Float::with_val(bits, 1));
        if level >= MIN_LEVEL && Float::with_val(bits, &change / &scale) <= tol_f {
            return Ok(QuadResult {
                value: estimate,
                error_estimate: change,
                levels: level,
                evaluations: evals,
            });
        }
        last_change = change;
    }
    Err(Error::ToleranceUnreachable {
        requested: tol,
        achieved: last_change.to_f64(),
    })
}

/// `∫_a^b f(x) dx` with endpoint singularities allowed.
///
/// `f` receives the abscissa together with its distances to `a` and to `b`,
/// each computed without cancellation.
pub fn tanh_sinh<F>(a: &Float, b: &Float, tol: f64, mut f: F) -> Result<QuadResult>
where
    F: FnMut(&Float, &Float, &Float) -> Result<Float>,
{
    let bits = a.prec().max(b.prec());
    let width = Float::with_val(bits, b - a);
    let half_pi = Float::with_val(bits, Constant::Pi) / 2u32;
    // Far enough out that x^{-1/2}-type endpoint mass below it is negligible.
    let floor = Float::with_val(bits, &width >> (4 * bits as i32));
    integrate(bits, tol, |t| {
        let u = Float::with_val(bits, t.sinh_ref()) * &half_pi;
        let e = (Float::with_val(bits, u.abs_ref()) * 2u32).exp();
        // Distance from the nearer endpoint: width / (1 + e^{2|u|}).
        let near = Float::with_val(bits, &width / Float::with_val(bits, &e + 1u32));
        if near < floor {
            return Ok(None);
        }
        let far = Float::with_val(bits, &width - &near);
        let (x, da, db) = if u.is_sign_negative() {
            (Float::with_val(bits, a + &near), near, far)
        } else {
            (Float::with_val(bits, b - &near), far, near)
        };
        let sech2 = Float::with_val(bits, Float::with_val(bits, u.cosh_ref()).square_ref()).recip();
        let w = Float::with_val(bits, &half_pi * Float::with_val(bits, t.cosh_ref())) * sech2 * &width / 2u32;
        Ok(Some(w * f(&x, &da, &db)?))
    })
}

/// `∫_a^∞ f(x) dx` by the map `x = a + exp((π/2) sinh t)`.
///
/// Also suitable for a logarithmic singularity at `a`: nodes cluster
/// double-exponentially at both ends.
pub fn exp_sinh<F>(a: &Float, tol: f64, mut f: F) -> Result<QuadResult>
where
    F: FnMut(&Float) -> Result<Float>,
{
    let bits = a.prec();
    let half_pi = Float::with_val(bits, Constant::Pi) / 2u32;
    let limit = Float::with_val(bits, 1u64 << 30);
    integrate(bits, tol, |t| {
        let u = Float::with_val(bits, t.sinh_ref()) * &half_pi;
        if Float::with_val(bits, u.abs_ref()) > limit {
            return Ok(None);
        }
        let eu = Float::with_val(bits, u.exp_ref());
        let x = Float::with_val(bits, a + &eu);
        if x == *a {
            return Ok(None);
        }
        let w = Float::with_val(bits, &half_pi * Float::with_val(bits, t.cosh_ref())) * &eu;
        Ok(Some(w * f(&x)?))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BITS: u32 = 200;

    fn fl(x: f64) -> Float {
        Float::with_val(BITS, x)
    }

    #[test]
    fn polynomial_on_interval() {
        let r = tanh_sinh(&fl(0.0), &fl(2.0), 1e-40, |x, _, _| Ok(Float::with_val(BITS, x.square_ref()))).unwrap();
        let exact = Float::with_val(BITS, 8) / 3u32;
        assert!(Float::with_val(BITS, &r.value - &exact).abs() < 1e-40);
    }

    #[test]
    fn log_singularity_on_interval() {
        // ∫_0^1 log x dx = -1, evaluated through the distance to the left end.
        let r = tanh_sinh(&fl(0.0), &fl(1.0), 1e-40, |_, da, _| Ok(da.clone().ln())).unwrap();
        assert!(Float::with_val(BITS, &r.value + 1u32).abs() < 1e-40);
    }

    #[test]
    fn endpoint_inverse_sqrt() {
        // ∫_0^1 (1-x)^{-1/2} dx = 2.
        let r = tanh_sinh(&fl(0.0), &fl(1.0), 1e-35, |_, _, db| Ok(db.clone().sqrt().recip())).unwrap();
        assert!(Float::with_val(BITS, &r.value - 2u32).abs() < 1e-30);
    }

    #[test]
    fn half_line_exponential_and_log() {
        let r = exp_sinh(&fl(0.0), 1e-40, |x| Ok(Float::with_val(BITS, -x).exp())).unwrap();
        assert!(Float::with_val(BITS, &r.value - 1u32).abs() < 1e-40);
        // ∫_0^∞ -log(x) e^{-x} dx = γ.
        let r = exp_sinh(&fl(0.0), 1e-40, |x| Ok(-Float::with_val(BITS, x.ln_ref()) * Float::with_val(BITS, -x).exp()))
            .unwrap();
        let gamma = Float::with_val(BITS, Constant::Euler);
        assert!(Float::with_val(BITS, &r.value - &gamma).abs() < 1e-38);
    }

    #[test]
    fn algebraic_decay() {
        // ∫_1^∞ x^{-2} dx = 1.
        let r = exp_sinh(&fl(1.0), 1e-35, |x| Ok(Float::with_val(BITS, x.square_ref()).recip())).unwrap();
        assert!(Float::with_val(BITS, &r.value - 1u32).abs() < 1e-30);
    }
}

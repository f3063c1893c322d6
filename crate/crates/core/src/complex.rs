//! Complex numbers over MPFR floats.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct Complex {
    pub re: Float,
    pub im: Float,
}

impl Complex {
    pub fn new(re: Float, im: Float) -> Self {
        Complex { re, im }
    }

    pub fn real(re: Float) -> Self {
        let im = Float::new(re.prec());
        Complex { re, im }
    }

    pub fn zero(bits: u32) -> Self {
        Complex::real(Float::new(bits))
    }

    pub fn one(bits: u32) -> Self {
        Complex::real(Float::with_val(bits, 1))
    }

    /// `r · e^{iθ}`.
    pub fn from_polar(r: &Float, theta: &Float) -> Self {
        let bits = r.prec();
        let (sin, cos) = theta.clone().sin_cos(Float::new(bits));
        Complex {
            re: Float::with_val(bits, r * &cos),
            im: Float::with_val(bits, r * &sin),
        }
    }

    /// `e^{2πi j / k}`.
    pub fn root_of_unity(j: usize, k: usize, bits: u32) -> Self {
        let pi = Float::with_val(bits, rug::float::Constant::Pi);
        let theta = pi * 2u32 * (j as u32) / (k as u32);
        Complex::from_polar(&Float::with_val(bits, 1), &theta)
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn norm_sqr(&self) -> Float {
        let bits = self.prec();
        Float::with_val(bits, self.re.square_ref()) + Float::with_val(bits, self.im.square_ref())
    }

    pub fn abs(&self) -> Float {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn arg(&self) -> Float {
        Float::with_val(self.prec(), self.im.atan2_ref(&self.re))
    }

    pub fn conj(&self) -> Complex {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    pub fn recip(&self) -> Complex {
        let n = self.norm_sqr();
        Complex::new(
            Float::with_val(self.prec(), &self.re / &n),
            Float::with_val(self.prec(), -(self.im.clone()) / &n),
        )
    }

    pub fn scale(&self, factor: &Float) -> Complex {
        let bits = self.prec();
        Complex::new(
            Float::with_val(bits, &self.re * factor),
            Float::with_val(bits, &self.im * factor),
        )
    }

    pub fn powi(&self, exponent: i32) -> Complex {
        let mut base = if exponent < 0 { self.recip() } else { self.clone() };
        let mut e = exponent.unsigned_abs();
        let mut acc = Complex::one(self.prec());
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn ln(&self) -> Complex {
        Complex::new(self.abs().ln(), self.arg())
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl Add<&Complex> for &Complex {
    type Output = Complex;
    fn add(self, rhs: &Complex) -> Complex {
        let bits = self.prec();
        Complex::new(
            Float::with_val(bits, &self.re + &rhs.re),
            Float::with_val(bits, &self.im + &rhs.im),
        )
    }
}

impl Sub<&Complex> for &Complex {
    type Output = Complex;
    fn sub(self, rhs: &Complex) -> Complex {
        let bits = self.prec();
        Complex::new(
            Float::with_val(bits, &self.re - &rhs.re),
            Float::with_val(bits, &self.im - &rhs.im),
        )
    }
}

impl Mul<&Complex> for &Complex {
    type Output = Complex;
    fn mul(self, rhs: &Complex) -> Complex {
        let bits = self.prec();
        let re = Float::with_val(bits, &self.re * &rhs.re) - Float::with_val(bits, &self.im * &rhs.im);
        let im = Float::with_val(bits, &self.re * &rhs.im) + Float::with_val(bits, &self.im * &rhs.re);
        Complex::new(re, im)
    }
}

impl Div<&Complex> for &Complex {
    type Output = Complex;
    fn div(self, rhs: &Complex) -> Complex {
        let bits = self.prec();
        let n = rhs.norm_sqr();
        let re = Float::with_val(bits, &self.re * &rhs.re) + Float::with_val(bits, &self.im * &rhs.im);
        let im = Float::with_val(bits, &self.im * &rhs.re) - Float::with_val(bits, &self.re * &rhs.im);
        Complex::new(re / &n, im / &n)
    }
}

impl Neg for &Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        Complex::new(-self.re.clone(), -self.im.clone())
    }
}

macro_rules! owned_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Complex {
            type Output = Complex;
            fn $method(self, rhs: Complex) -> Complex {
                (&self).$method(&rhs)
            }
        }
    };
}

owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);
owned_binop!(Div, div);

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_f64_pair();
        if im < 0.0 {
            write!(f, "{re:e} - {:e}i", -im)
        } else {
            write!(f, "{re:e} + {im:e}i")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BITS: u32 = 200;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(Float::with_val(BITS, re), Float::with_val(BITS, im))
    }

    #[test]
    fn field_operations() {
        let a = c(1.5, -2.0);
        let b = c(-0.25, 3.0);
        let back = &(&a * &b) / &b;
        assert!((&back - &a).abs() < 1e-55);
        let sum = &a + &b;
        assert_eq!(sum.to_f64_pair(), (1.25, 1.0));
    }

    #[test]
    fn roots_of_unity_close_the_circle() {
        for k in 2..7 {
            let w = Complex::root_of_unity(1, k, BITS);
            let p = w.powi(k as i32);
            assert!((&p - &Complex::one(BITS)).abs() < 1e-55);
        }
    }

    #[test]
    fn negative_powers() {
        let a = c(0.3, 0.4);
        let p = &a.powi(-3) * &a.powi(3);
        assert!((&p - &Complex::one(BITS)).abs() < 1e-55);
    }
}

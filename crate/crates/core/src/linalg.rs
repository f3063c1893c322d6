//! Small dense complex matrices at MPFR precision.

use rug::Float;

use crate::complex::Complex;
use crate::error::{Error, Result};

/// Row-major `rows × cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize, bits: u32) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex::zero(bits); rows * cols],
        }
    }

    pub fn identity(n: usize, bits: u32) -> Self {
        let mut m = CMatrix::zeros(n, n, bits);
        for i in 0..n {
            m[(i, i)] = Complex::one(bits);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Float) -> Self {
        CMatrix::from_fn(rows, cols, |i, j| Complex::real(f(i, j)))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn bits(&self) -> u32 {
        self.data.first().map_or(64, Complex::prec)
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let bits = self.bits();
        CMatrix::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = Complex::zero(bits);
            for l in 0..self.cols {
                acc = &acc + &(&self[(i, l)] * &other[(l, j)]);
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[Complex]) -> Vec<Complex> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        let bits = self.bits();
        (0..self.rows)
            .map(|i| {
                let mut acc = Complex::zero(bits);
                for (l, x) in v.iter().enumerate() {
                    acc = &acc + &(&self[(i, l)] * x);
                }
                acc
            })
            .collect()
    }

    /// Scales column `j` by `d[j]`, i.e. `self · diag(d)`.
    pub fn scale_columns(&self, d: &[Complex]) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] * &d[j])
    }

    /// Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<CMatrix> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let bits = self.bits();
        let mut a = self.clone();
        let mut inv = CMatrix::identity(n, bits);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| {
                    a[(x, col)]
                        .norm_sqr()
                        .partial_cmp(&a[(y, col)].norm_sqr())
                        .expect("NaN in matrix")
                })
                .expect("non-empty range");
            if a[(pivot, col)].norm_sqr().is_zero() {
                return Err(Error::SingularMatrix);
            }
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let p = a[(col, col)].recip();
            for j in 0..n {
                a[(col, j)] = &a[(col, j)] * &p;
                inv[(col, j)] = &inv[(col, j)] * &p;
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = a[(row, col)].clone();
                if factor.norm_sqr().is_zero() {
                    continue;
                }
                for j in 0..n {
                    a[(row, j)] = &a[(row, j)] - &(&factor * &a[(col, j)]);
                    inv[(row, j)] = &inv[(row, j)] - &(&factor * &inv[(col, j)]);
                }
            }
        }
        Ok(inv)
    }

    /// Determinant by elimination with partial pivoting.
    pub fn det(&self) -> Complex {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Complex::one(self.bits());
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| {
                    a[(x, col)]
                        .norm_sqr()
                        .partial_cmp(&a[(y, col)].norm_sqr())
                        .expect("NaN in matrix")
                })
                .expect("non-empty range");
            if a[(pivot, col)].norm_sqr().is_zero() {
                return Complex::zero(self.bits());
            }
            if pivot != col {
                a.swap_rows(col, pivot);
                det = -&det;
            }
            det = &det * &a[(col, col)];
            let p = a[(col, col)].recip();
            for row in col + 1..n {
                let factor = &a[(row, col)] * &p;
                for j in col..n {
                    a[(row, j)] = &a[(row, j)] - &(&factor * &a[(col, j)]);
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, x: usize, y: usize) {
        if x == y {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(x * self.cols + j, y * self.cols + j);
        }
    }

    /// Largest entrywise `|a_ij - b_ij|`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> Float {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(Float::new(self.bits()), |acc, x| if x > acc { x } else { acc })
    }

    /// Largest entrywise `|a_ij - b_ij| / max(|b_ij|, scale)` with
    /// `scale = max |b|` times `floor`.
    pub fn max_rel_diff(&self, other: &CMatrix) -> Float {
        let scale = other.max_abs();
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| {
                let d = (a - b).abs();
                let m = b.abs();
                if m.is_zero() {
                    if scale.is_zero() {
                        d
                    } else {
                        d / &scale
                    }
                } else {
                    d / m
                }
            })
            .fold(Float::new(self.bits()), |acc, x| if x > acc { x } else { acc })
    }

    pub fn max_abs(&self) -> Float {
        self.data
            .iter()
            .map(Complex::abs)
            .fold(Float::new(self.bits()), |acc, x| if x > acc { x } else { acc })
    }

    pub fn entries(&self) -> &[Complex] {
        &self.data
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BITS: u32 = 200;

    fn real(rows: usize, vals: &[f64]) -> CMatrix {
        let cols = vals.len() / rows;
        CMatrix::from_real(rows, cols, |i, j| Float::with_val(BITS, vals[i * cols + j]))
    }

    #[test]
    fn inverse_round_trip() {
        let m = real(3, &[0.0, 2.0, 1.0, 1.0, 0.0, 3.0, 4.0, -1.0, 0.5]);
        let inv = m.inverse().unwrap();
        let id = CMatrix::identity(3, BITS);
        assert!(m.mul(&inv).max_abs_diff(&id) < 1e-55);
        assert!(inv.mul(&m).max_abs_diff(&id) < 1e-55);
    }

    #[test]
    fn singular_is_reported() {
        let m = real(2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(m.inverse(), Err(Error::SingularMatrix)));
        assert!(m.det().abs() < 1e-55);
    }

    #[test]
    fn determinant_with_pivoting() {
        let m = real(3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let d = m.det();
        assert!((d.re.to_f64() - 1.0).abs() < 1e-30);
        let m = real(2, &[1.0, 1.0, 3.0, 0.0]);
        assert!((m.det().re.to_f64() + 3.0).abs() < 1e-30);
    }
}

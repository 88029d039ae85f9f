//! LU factorisation without pivoting for matrices of half-bandwidth 3.
//! Row `i` stores entry `(i, k)` at `band[i][3 + k - i]`.

use std::ops::{Add, Div, Mul, Sub};

use crate::error::{InlsError, Result};

pub(crate) const HALF: usize = 3;
pub(crate) type Band<T> = Vec<[T; 2 * HALF + 1]>;

pub(crate) trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + From<f64>
{
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for num_complex::Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandedLu<T> {
    lu: Band<T>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn factor(mut a: Band<T>) -> Result<Self> {
        let n = a.len();
        for p in 0..n {
            let piv = a[p][HALF];
            if !(piv.magnitude() > 0.0) || !piv.magnitude().is_finite() {
                return Err(InlsError::Numerical(format!("zero or non-finite pivot at row {p}")));
            }
            for i in (p + 1)..n.min(p + HALF + 1) {
                let l = a[i][HALF + p - i] / piv;
                a[i][HALF + p - i] = l;
                for k in (p + 1)..n.min(p + HALF + 1) {
                    let upk = a[p][HALF + k - p];
                    let cur = a[i][HALF + k - i];
                    a[i][HALF + k - i] = cur - l * upk;
                }
            }
        }
        Ok(Self { lu: a })
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let n = self.lu.len();
        for i in 0..n {
            let mut acc = x[i];
            for k in i.saturating_sub(HALF)..i {
                acc = acc - self.lu[i][HALF + k - i] * x[k];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in (i + 1)..n.min(i + HALF + 1) {
                acc = acc - self.lu[i][HALF + k - i] * x[k];
            }
            x[i] = acc / self.lu[i][HALF];
        }
    }
}

/// `y = A x` for a banded `A`.
pub(crate) fn band_mul<T: Scalar, S: Copy>(a: &[[S; 2 * HALF + 1]], x: &[T]) -> Vec<T>
where
    T: Mul<S, Output = T>,
{
    let n = a.len();
    (0..n)
        .map(|i| {
            let mut acc = T::from(0.0);
            for k in i.saturating_sub(HALF)..n.min(i + HALF + 1) {
                acc = acc + x[k] * a[i][HALF + k - i];
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn solves_complex_band_system() {
        let n = 40;
        let mut a: Band<Complex64> = vec![[Complex64::new(0.0, 0.0); 7]; n];
        for i in 0..n {
            for k in i.saturating_sub(3)..n.min(i + 4) {
                let off = k as f64 - i as f64;
                a[i][3 + k - i] = if off == 0.0 {
                    Complex64::new(4.0, 1.0)
                } else {
                    Complex64::new(0.3 / off.abs(), 0.2 * off)
                };
            }
        }
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, -(i as f64).sqrt())).collect();
        let mut b = band_mul(&a, &x);
        BandedLu::factor(a).unwrap().solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }
}

//! Small row-major dense matrices for N x N measurement data and the
//! low-rank correction systems.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{Num, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Copy + Zero> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map<U: Copy + Zero>(&self, f: impl Fn(S) -> U) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

impl<S: Copy + Num> Mat<S> {
    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn matmul(&self, other: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(S::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn zip_with(&self, other: &Mat<S>, f: impl Fn(S, S) -> S) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Mat<S>) -> Mat<S> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Mat<S>) -> Mat<S> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, s: S) -> Mat<S> {
        self.map(|x| x * s)
    }
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mat<T> {
    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// `(A + A^T) / 2`.
    pub fn symmetrized(&self) -> Mat<T> {
        let half = T::lit(0.5);
        Mat::from_fn(self.rows, self.cols, |i, j| {
            half * (self[(i, j)] + self[(j, i)])
        })
    }

    pub fn symmetry_defect(&self) -> T {
        self.sub(&self.transpose()).frobenius_norm()
    }
}

impl<T: Real> Mat<Complex<T>> {
    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// `||R - R^T||_F`, the bilinear (unconjugated) symmetry defect.
    pub fn symmetry_defect(&self) -> T {
        self.sub(&self.transpose()).frobenius_norm()
    }

    pub fn symmetrized(&self) -> Self {
        let half = Complex::new(T::lit(0.5), T::zero());
        Mat::from_fn(self.rows, self.cols, |i, j| {
            half * (self[(i, j)] + self[(j, i)])
        })
    }

    pub fn conj_transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn re(&self) -> Mat<T> {
        self.map(|z| z.re)
    }

    pub fn im(&self) -> Mat<T> {
        self.map(|z| z.im)
    }
}

/// LU factorization with partial pivoting of a square complex matrix.
#[derive(Debug, Clone)]
pub struct ComplexLu<T> {
    lu: Mat<Complex<T>>,
    perm: Vec<usize>,
}

impl<T: Real> ComplexLu<T> {
    pub fn new(mut a: Mat<Complex<T>>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Invalid("LU of a non-square matrix".into()));
        }
        let n = a.rows();
        let scale = a.frobenius_norm().max(T::min_positive_value());
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmag) =
                (k..n)
                    .map(|i| (i, a[(i, k)].norm()))
                    .fold(
                        (k, -T::one()),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if !(pmag > T::epsilon() * scale * T::lit(1e-3)) {
                return Err(Error::FactorizationBreakdown {
                    row: k,
                    size: n,
                    pivot: pmag.to_f64_lossy(),
                });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = a[(p, j)];
                    a[(p, j)] = a[(k, j)];
                    a[(k, j)] = tmp;
                }
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let l = a[(i, k)] / pivot;
                a[(i, k)] = l;
                if l.norm_sqr() == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= l * akj;
                }
            }
        }
        Ok(ComplexLu { lu: a, perm })
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.lu.rows();
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_complex_system() {
        let a = Mat::from_rows(&[
            vec![Complex::new(0.0, 1.0), Complex::new(2.0, 0.0)],
            vec![Complex::new(3.0, -1.0), Complex::new(1.0, 1.0)],
        ]);
        let x = vec![Complex::new(1.0, 2.0), Complex::new(-0.5, 0.25)];
        let b = a.matvec(&x);
        let lu = ComplexLu::new(a).unwrap();
        let y = lu.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn lu_rejects_singular() {
        let a = Mat::from_rows(&[
            vec![Complex::new(1.0, 0.0), Complex::new(2.0, 0.0)],
            vec![Complex::new(2.0, 0.0), Complex::new(4.0, 0.0)],
        ]);
        assert!(matches!(
            ComplexLu::new(a),
            Err(Error::FactorizationBreakdown { .. })
        ));
    }

    #[test]
    fn symmetrize_real() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![4.0, 3.0]]);
        let s = a.symmetrized();
        assert_eq!(s[(0, 1)], 3.0);
        assert_eq!(s.symmetry_defect(), 0.0);
    }
}

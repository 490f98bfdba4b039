//! Envelope (skyline) LDL^T factorization of complex symmetric matrices.
//!
//! No pivoting and no conjugation: valid for complex symmetric matrices
//! whose Hermitian part is positive definite, which is the case for the
//! grounded shunt stiffness with `Re(gamma) > 0`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{czero, Real};

#[derive(Debug, Clone)]
pub struct SkylineLdlt<T> {
    n: usize,
    first: Vec<usize>,
    offset: Vec<usize>,
    /// Row `i` holds columns `first[i]..=i`; after factorization the strict
    /// lower part is `L` and the diagonal is `D`.
    data: Vec<Complex<T>>,
}

impl<T: Real> SkylineLdlt<T> {
    /// Zero matrix with the given per-row first column (`first[i] <= i`).
    pub fn with_envelope(first: Vec<usize>) -> Self {
        let n = first.len();
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for (i, &f) in first.iter().enumerate() {
            assert!(f <= i, "envelope must stay in the lower triangle");
            offset.push(offset[i] + (i - f + 1));
        }
        let nnz = offset[n];
        SkylineLdlt {
            n,
            first,
            offset,
            data: vec![czero(); nnz],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Rough multiply-add count of [`Self::factorize`].
    pub fn factor_work(&self) -> f64 {
        (0..self.n)
            .map(|i| ((i - self.first[i]) as f64).powi(2) / 2.0)
            .sum()
    }

    pub fn stored_entries(&self) -> usize {
        self.data.len()
    }

    /// Adds `v` to entry `(i, j)` of the symmetric matrix (either triangle).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: Complex<T>) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(c >= self.first[r], "entry outside envelope");
        let k = self.offset[r] + (c - self.first[r]);
        self.data[k] += v;
    }

    #[inline]
    fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[self.offset[i]..self.offset[i + 1]]
    }

    /// Symmetric matrix-vector product of the stored (unfactored) matrix.
    pub fn matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut y = vec![czero(); self.n];
        for i in 0..self.n {
            let f = self.first[i];
            let row = self.row(i);
            for (k, &a) in row.iter().enumerate() {
                let j = f + k;
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place Crout factorization `A = L D L^T`.
    pub fn factorize(mut self) -> Result<Self> {
        let scale = (0..self.n)
            .map(|i| self.data[self.offset[i + 1] - 1].norm())
            .fold(T::zero(), T::max)
            .max(T::min_positive_value());
        let tol = scale * T::epsilon() * T::lit(16.0);
        for i in 0..self.n {
            let fi = self.first[i];
            let oi = self.offset[i];
            // row i becomes G_ij = L_ij D_j for j < i
            for j in fi..i {
                let fj = self.first[j];
                let lo = fi.max(fj);
                let oj = self.offset[j];
                let mut s = self.data[oi + (j - fi)];
                let (ri, rj) = (
                    &self.data[oi + (lo - fi)..oi + (j - fi)],
                    &self.data[oj + (lo - fj)..oj + (j - fj)],
                );
                for (a, b) in ri.iter().zip(rj) {
                    s -= *a * *b;
                }
                self.data[oi + (j - fi)] = s;
            }
            let mut d = self.data[oi + (i - fi)];
            for j in fi..i {
                let dj = self.data[self.offset[j + 1] - 1];
                let g = self.data[oi + (j - fi)];
                let l = g / dj;
                d -= l * g;
                self.data[oi + (j - fi)] = l;
            }
            if !(d.norm() > tol) || !d.re.is_finite() || !d.im.is_finite() {
                return Err(Error::FactorizationBreakdown {
                    row: i,
                    size: self.n,
                    pivot: d.norm().to_f64_lossy(),
                });
            }
            self.data[oi + (i - fi)] = d;
        }
        Ok(self)
    }

    /// Solves with a factorized matrix.
    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        for i in 0..self.n {
            let f = self.first[i];
            let row = self.row(i);
            let mut s = x[i];
            for (k, &l) in row[..row.len() - 1].iter().enumerate() {
                s -= l * x[f + k];
            }
            x[i] = s;
        }
        for i in 0..self.n {
            x[i] = x[i] / self.data[self.offset[i + 1] - 1];
        }
        for i in (0..self.n).rev() {
            let f = self.first[i];
            let row = self.row(i);
            let xi = x[i];
            for (k, &l) in row[..row.len() - 1].iter().enumerate() {
                x[f + k] -= l * xi;
            }
        }
        x
    }
}

//! Cyclic Jacobi eigensolver for small dense real symmetric matrices.

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues ascending, with eigenvectors as the matching columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Mat<T>,
}

const MAX_SWEEPS: usize = 64;

pub fn symmetric_eigen<T: Real>(a: &Mat<T>) -> Result<SymmetricEigen<T>> {
    if !a.is_square() {
        return Err(Error::Invalid(
            "eigen decomposition of a non-square matrix".into(),
        ));
    }
    let n = a.rows();
    for i in 0..n {
        for j in 0..n {
            if !a[(i, j)].is_finite() {
                return Err(Error::NonFinite(i, j));
            }
        }
    }
    let mut m = a.symmetrized();
    let mut v = Mat::<T>::identity(n);
    let scale = m.frobenius_norm();
    let two = T::lit(2.0);

    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off.sqrt() <= T::epsilon() * T::lit(0.5) * scale || scale == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let (app, aqq) = (m[(p, p)], m[(q, q)]);
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = T::zero();
                m[(q, p)] = T::zero();
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_norm_symmetric<T: Real>(a: &Mat<T>) -> Result<T> {
    let e = symmetric_eigen(a)?;
    Ok(e.values.iter().fold(T::zero(), |m, &x| m.max(x.abs())))
}

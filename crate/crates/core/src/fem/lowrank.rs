//! Solves with `K + dK` where `dK` is supported on a few elements, reusing
//! the factorization of `K` (Woodbury identity with a possibly singular
//! update block):
//!
//! `(K + P D P^T)^-1 = K^-1 - K^-1 P (I + D P^T K^-1 P)^-1 D P^T K^-1`.

use num_complex::Complex;
use rayon::prelude::*;

use super::ShuntSystem;
use crate::dense::{ComplexLu, Mat};
use crate::error::{invalid, Result};
use crate::scalar::{czero, Real};

/// Change of admittivity on one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementUpdate<T> {
    pub element: usize,
    pub delta: Complex<T>,
}

/// Factorized low-rank correction bound to a base system.
pub struct LowRankUpdate<'a, T> {
    system: &'a ShuntSystem<T>,
    positions: Vec<usize>,
    /// `K^-1 e_p` for every touched reduced position `p`.
    columns: Vec<Vec<Complex<T>>>,
    block: Mat<Complex<T>>,
    capacitance: Option<ComplexLu<T>>,
}

impl<'a, T: Real> LowRankUpdate<'a, T> {
    pub fn new(system: &'a ShuntSystem<T>, updates: &[ElementUpdate<T>]) -> Result<Self> {
        let nt = system.geometry().len();
        let dofs = system.dofs();
        let mut positions: Vec<usize> = Vec::new();
        for u in updates {
            if u.element >= nt {
                return invalid(format!("element {} out of range", u.element));
            }
            for &v in &system.triangles()[u.element] {
                if let Some(p) = dofs.position(dofs.node_dof(v)) {
                    positions.push(p);
                }
            }
        }
        positions.sort_unstable();
        positions.dedup();
        let k = positions.len();
        let local = |p: usize| positions.binary_search(&p).ok();

        let mut block = Mat::zeros(k, k);
        for u in updates {
            let tri = system.triangles()[u.element];
            let ke = system.geometry()[u.element].local_stiffness();
            let idx: [Option<usize>; 3] =
                std::array::from_fn(|a| dofs.position(dofs.node_dof(tri[a])).and_then(local));
            for a in 0..3 {
                for b in 0..3 {
                    if let (Some(i), Some(j)) = (idx[a], idx[b]) {
                        block[(i, j)] += u.delta * ke[a][b];
                    }
                }
            }
        }

        let n = dofs.reduced_len();
        let columns: Vec<Vec<Complex<T>>> = positions
            .par_iter()
            .map(|&p| {
                let mut e = vec![czero(); n];
                e[p] = Complex::new(T::one(), T::zero());
                system.solve_reduced(&e)
            })
            .collect();

        let capacitance = if k == 0 {
            None
        } else {
            let zs = Mat::from_fn(k, k, |i, j| columns[j][positions[i]]);
            let cap = Mat::identity(k).add(&block.matmul(&zs));
            Some(ComplexLu::new(cap)?)
        };
        Ok(LowRankUpdate {
            system,
            positions,
            columns,
            block,
            capacitance,
        })
    }

    pub fn rank_bound(&self) -> usize {
        self.positions.len()
    }

    fn coefficients(&self, y: &[Complex<T>]) -> Option<Vec<Complex<T>>> {
        let lu = self.capacitance.as_ref()?;
        let ys: Vec<Complex<T>> = self.positions.iter().map(|&p| y[p]).collect();
        Some(lu.solve(&self.block.matvec(&ys)))
    }

    /// Corrected reduced solution from a base solution `y = K^-1 f`.
    pub fn correct(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut x = y.to_vec();
        if let Some(w) = self.coefficients(y) {
            for (col, &wk) in self.columns.iter().zip(&w) {
                for (xi, &zi) in x.iter_mut().zip(col) {
                    *xi -= zi * wk;
                }
            }
        }
        x
    }

    /// Gauged electrode potentials of the corrected solution.
    pub fn correct_electrodes(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        let dofs = self.system.dofs();
        let m = self.system.electrode_count();
        let w = self.coefficients(y);
        let mut u: Vec<Complex<T>> = (0..m)
            .map(|l| match dofs.position(dofs.electrode_dof(l)) {
                None => czero(),
                Some(p) => {
                    let mut v = y[p];
                    if let Some(w) = &w {
                        for (col, &wk) in self.columns.iter().zip(w) {
                            v -= col[p] * wk;
                        }
                    }
                    v
                }
            })
            .collect();
        let mean = u.iter().fold(czero(), |a, &b| a + b) / T::lit(m as f64);
        for v in &mut u {
            *v -= mean;
        }
        u
    }
}

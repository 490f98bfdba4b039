//! Dipole-dipole measurement matrices, ratio weighting and the
//! complex monotonicity sandwich.

use num_complex::Complex;
use rayon::prelude::*;

use crate::dense::Mat;
use crate::error::{invalid, Result};
use crate::fem::{assemble, dipole, element_energies, FieldSolution, ShuntSystem};
use crate::geometry::{Mesh, RegionSpec};
use crate::phantom::{FreqMode, Modulation, ModulationSign, Phantom};
use crate::scalar::Real;

/// Ordered electrode pairs `(source, sink)`, 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrivePatternSet {
    pairs: Vec<(usize, usize)>,
    electrodes: usize,
}

impl DrivePatternSet {
    pub fn new(electrodes: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.is_empty() {
            return invalid("pattern set is empty");
        }
        for (k, &(j, l)) in pairs.iter().enumerate() {
            if j == l {
                return invalid(format!("pattern {k}: source and sink coincide"));
            }
            if j >= electrodes || l >= electrodes {
                return invalid(format!("pattern {k}: electrode index out of range"));
            }
            if pairs[..k].contains(&(j, l)) {
                return invalid(format!("pattern {k} is duplicated"));
            }
        }
        Ok(DrivePatternSet { pairs, electrodes })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn electrodes(&self) -> usize {
        self.electrodes
    }

    pub fn currents<T: Real>(&self, r: usize) -> Vec<Complex<T>> {
        let (j, k) = self.pairs[r];
        dipole(self.electrodes, j, k)
    }

    /// Electrode currents of the pattern combination `sum_r g_r I^(r)`.
    pub fn combined_currents<T: Real>(&self, g: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut c = vec![Complex::new(T::zero(), T::zero()); self.electrodes];
        for (&(j, k), &gr) in self.pairs.iter().zip(g) {
            c[j] += gr;
            c[k] -= gr;
        }
        c
    }

    /// Voltage read-out of every pattern pair from electrode potentials.
    pub fn read_out<T: Real>(&self, potentials: &[Complex<T>]) -> Vec<Complex<T>> {
        self.pairs
            .iter()
            .map(|&(j, k)| potentials[j] - potentials[k])
            .collect()
    }
}

/// `(0,1), (1,2), ..., (m-1, 0)`.
pub fn adjacent_dipole_patterns(m: usize) -> Result<DrivePatternSet> {
    if m < 3 {
        return invalid("adjacent dipole patterns need at least 3 electrodes");
    }
    DrivePatternSet::new(m, (0..m).map(|r| (r, (r + 1) % m)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationInfo<T> {
    pub sign: ModulationSign,
    pub beta: T,
    pub region: RegionSpec<T>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance<T> {
    pub mode: FreqMode,
    pub modulation: Option<ModulationInfo<T>>,
    pub mesh_level: usize,
    pub omega: T,
}

impl<T: Real> Provenance<T> {
    pub fn new(mode: FreqMode, mesh_level: usize, omega: T) -> Self {
        Provenance {
            mode,
            modulation: None,
            mesh_level,
            omega,
        }
    }
}

/// Complex `N x N` matrix `R_rs = U^(r)_{j_s} - U^(r)_{k_s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix<T> {
    pub entries: Mat<Complex<T>>,
    pub patterns: DrivePatternSet,
    pub provenance: Provenance<T>,
}

impl<T: Real> MeasurementMatrix<T> {
    /// `||R - R^T||_F / ||R||_F`.
    pub fn relative_symmetry_defect(&self) -> T {
        let n = self.entries.frobenius_norm();
        if n == T::zero() {
            T::zero()
        } else {
            self.entries.symmetry_defect() / n
        }
    }

    pub fn symmetrized(&self) -> Self {
        MeasurementMatrix {
            entries: self.entries.symmetrized(),
            ..self.clone()
        }
    }

    pub fn scaled(&self, s: Complex<T>) -> Mat<Complex<T>> {
        self.entries.scale(s)
    }
}

/// Assembles the matrix from per-drive electrode potentials.
pub fn matrix_from_potentials<T: Real>(
    patterns: &DrivePatternSet,
    potentials: &[Vec<Complex<T>>],
) -> Mat<Complex<T>> {
    let rows: Vec<Vec<Complex<T>>> = potentials.iter().map(|u| patterns.read_out(u)).collect();
    Mat::from_rows(&rows)
}

/// Solves every drive of `patterns` on an assembled system.
pub fn measure_system<T: Real>(
    system: &ShuntSystem<T>,
    patterns: &DrivePatternSet,
) -> Result<Mat<Complex<T>>> {
    if patterns.electrodes() != system.electrode_count() {
        return invalid("pattern set and mesh disagree on the electrode count");
    }
    let potentials: Vec<Vec<Complex<T>>> = (0..patterns.len())
        .into_par_iter()
        .map(|r| system.solve_electrodes(&patterns.currents(r)))
        .collect::<Result<_>>()?;
    Ok(matrix_from_potentials(patterns, &potentials))
}

/// Simulates `R(gamma)` for per-element admittivities on `mesh`.
pub fn measurement_matrix<T: Real>(
    mesh: &Mesh<T>,
    gamma_e: &[Complex<T>],
    patterns: &DrivePatternSet,
    provenance: Provenance<T>,
) -> Result<MeasurementMatrix<T>> {
    let system = assemble(mesh, gamma_e)?;
    let entries = measure_system(&system, patterns)?;
    Ok(MeasurementMatrix {
        entries,
        patterns: patterns.clone(),
        provenance,
    })
}

/// Measures a phantom on `mesh`, optionally modulated (DC only), with
/// provenance filled in.
pub fn simulate<T: Real>(
    phantom: &Phantom<T>,
    mesh: &Mesh<T>,
    patterns: &DrivePatternSet,
    mode: FreqMode,
    modulation: Option<&Modulation<T>>,
) -> Result<MeasurementMatrix<T>> {
    let gamma = phantom.element_admittivity(mesh, mode, modulation)?;
    let provenance = Provenance {
        mode,
        modulation: modulation.map(|m| ModulationInfo {
            sign: m.sign,
            beta: m.beta,
            region: m.region.clone(),
            label: String::new(),
        }),
        mesh_level: mesh.level(),
        omega: phantom.omega,
    };
    measurement_matrix(mesh, &gamma, patterns, provenance)
}

/// `(alpha R + (alpha R)^*) / 2`, real symmetric for complex symmetric `R`.
pub fn weighted_real_part<T: Real>(r: &Mat<Complex<T>>, alpha: Complex<T>) -> Mat<T> {
    let ar = r.scale(alpha);
    let herm = ar
        .add(&ar.conj_transpose())
        .scale(Complex::new(T::lit(0.5), T::zero()));
    herm.re()
}

/// Both sides and the middle term of the complex monotonicity estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich<T> {
    pub lower: T,
    pub middle: T,
    pub upper: T,
}

impl<T: Real> Sandwich<T> {
    /// How far the middle term escapes `[lower, upper]`, relative to the gap
    /// (0 when the ordering holds).
    pub fn relative_slack(&self) -> T {
        let gap = (self.upper - self.lower).abs().max(T::min_positive_value());
        let below = (self.lower - self.middle).max(T::zero());
        let above = (self.middle - self.upper).max(T::zero());
        below.max(above) / gap
    }
}

/// Evaluates `g^* Re[R(gamma2) - R(gamma1)] g` and its two FEM quadrature
/// bounds with the potential `u^[g]_{gamma2}`.
pub fn sandwich_check<T: Real>(
    mesh: &Mesh<T>,
    gamma1: &[Complex<T>],
    gamma2: &[Complex<T>],
    patterns: &DrivePatternSet,
    g: &[Complex<T>],
) -> Result<Sandwich<T>> {
    if g.len() != patterns.len() {
        return invalid("g must have one entry per drive pattern");
    }
    let s1 = assemble(mesh, gamma1)?;
    let s2 = assemble(mesh, gamma2)?;
    let r1 = measure_system(&s1, patterns)?;
    let r2 = measure_system(&s2, patterns)?;
    let diff = weighted_real_part(&r2.sub(&r1), Complex::new(T::one(), T::zero()));
    let gc: Vec<Complex<T>> = g.to_vec();
    let dg = diff.map(|x| Complex::new(x, T::zero())).matvec(&gc);
    let middle = gc
        .iter()
        .zip(&dg)
        .map(|(a, b)| (a.conj() * b).re)
        .sum::<T>();

    let u2: FieldSolution<T> = s2.solve_drive(&patterns.combined_currents(g))?;
    let energy = element_energies(mesh, &u2.u);
    let mut lower = T::zero();
    let mut upper = T::zero();
    for ((e, g1), g2) in energy.iter().zip(gamma1).zip(gamma2) {
        let re_diff = g1.re - g2.re;
        lower += (g2.re / g1.re * re_diff - g2.im * g2.im / g1.re) * *e;
        upper += (re_diff + g1.im * g1.im / g1.re) * *e;
    }
    Ok(Sandwich {
        lower,
        middle,
        upper,
    })
}

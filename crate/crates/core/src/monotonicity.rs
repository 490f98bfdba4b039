//! Difference matrices, spectra and the regularized definiteness test.

use num_complex::Complex;

use crate::dense::Mat;
use crate::eigen::{spectral_norm_symmetric, symmetric_eigen};
use crate::error::{Error, Result};
use crate::fem::{element_energies, ShuntSystem};
use crate::geometry::{Mesh, RegionSpec};
use crate::measurements::{weighted_real_part, DrivePatternSet, MeasurementMatrix};
use crate::phantom::{FreqMode, TestCase};
use crate::scalar::Real;

/// Symmetry defect tolerated by [`eigen_spectrum`], relative to `||A||_F`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Sorted spectrum of a difference matrix with the test outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct DefinitenessReport<T> {
    /// Ascending.
    pub eigenvalues: Vec<T>,
    pub delta: T,
    pub direction: TestCase,
    pub verdict: bool,
    /// `lambda_min + delta`.
    pub margin: T,
}

impl<T: Real> DefinitenessReport<T> {
    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }
}

fn check_pair<T: Real>(
    r_mod: &MeasurementMatrix<T>,
    r_ac: &MeasurementMatrix<T>,
    case: TestCase,
) -> Result<()> {
    let mismatch = |s: &str| Err(Error::ProvenanceMismatch(s.into()));
    if r_mod.provenance.mode != FreqMode::Dc {
        return mismatch("modulated matrix must be a DC measurement");
    }
    if r_ac.provenance.mode != FreqMode::Ac {
        return mismatch("frequency matrix must be an AC measurement");
    }
    if r_ac.provenance.modulation.is_some() {
        return mismatch("AC matrix must be unmodulated");
    }
    if let Some(m) = &r_mod.provenance.modulation {
        if m.sign != case.modulation_sign() {
            return mismatch("modulation sign does not match the test case");
        }
    }
    if r_mod.provenance.mesh_level != r_ac.provenance.mesh_level {
        return mismatch("matrices come from different mesh levels");
    }
    if r_mod.patterns != r_ac.patterns {
        return mismatch("matrices use different drive patterns");
    }
    Ok(())
}

/// Case a: `R((1+beta chi_B) gamma_0) - Re(alpha R(gamma_omega))`.
/// Case b: `Re(alpha R(gamma_omega)) - R((1-beta chi_B) gamma_0)`.
///
/// An unmodulated DC matrix is accepted and acts as `beta = 0`.
pub fn difference_matrix<T: Real>(
    r_mod: &MeasurementMatrix<T>,
    r_ac: &MeasurementMatrix<T>,
    alpha: Complex<T>,
    case: TestCase,
) -> Result<Mat<T>> {
    check_pair(r_mod, r_ac, case)?;
    Ok(difference_of(&r_mod.entries, &r_ac.entries, alpha, case))
}

/// [`difference_matrix`] on raw entries, without provenance checks.
pub fn difference_of<T: Real>(
    r_mod: &Mat<Complex<T>>,
    r_ac: &Mat<Complex<T>>,
    alpha: Complex<T>,
    case: TestCase,
) -> Mat<T> {
    let dc = r_mod.re();
    let ac = weighted_real_part(r_ac, alpha);
    match case {
        TestCase::A => dc.sub(&ac),
        TestCase::B => ac.sub(&dc),
    }
}

/// All eigenvalues in ascending order.
pub fn eigen_spectrum<T: Real>(a: &Mat<T>) -> Result<Vec<T>> {
    if !a.is_square() {
        return Err(Error::Invalid(
            "eigen_spectrum needs a square matrix".into(),
        ));
    }
    let norm = a.frobenius_norm();
    if norm.is_finite() && a.symmetry_defect() > T::lit(SYMMETRY_TOLERANCE) * norm {
        return Err(Error::Invalid(format!(
            "matrix is not symmetric (defect {:e} relative to norm {:e}); symmetrize first",
            a.symmetry_defect(),
            norm
        )));
    }
    Ok(symmetric_eigen(a)?.values)
}

/// Checks `A >= -delta I`. Ties (`margin == 0`) pass.
pub fn regularized_test<T: Real>(
    a: &Mat<T>,
    delta: T,
    case: TestCase,
) -> Result<DefinitenessReport<T>> {
    if !(delta >= T::zero()) {
        return Err(Error::Invalid(format!(
            "delta must be non-negative, got {delta}"
        )));
    }
    let eigenvalues = eigen_spectrum(a)?;
    Ok(report_from_spectrum(eigenvalues, delta, case))
}

pub fn report_from_spectrum<T: Real>(
    eigenvalues: Vec<T>,
    delta: T,
    case: TestCase,
) -> DefinitenessReport<T> {
    let margin = eigenvalues[0] + delta;
    DefinitenessReport {
        eigenvalues,
        delta,
        direction: case,
        verdict: margin >= T::zero(),
        margin,
    }
}

/// `max ||A_fine - A_coarse||_2` over the given pairs.
pub fn estimate_delta<T: Real>(level_pairs: &[(Mat<T>, Mat<T>)]) -> Result<T> {
    if level_pairs.is_empty() {
        return Err(Error::Empty(
            "estimate_delta needs at least one level pair".into(),
        ));
    }
    let mut delta = T::zero();
    for (coarse, fine) in level_pairs {
        if coarse.rows() != fine.rows() || coarse.cols() != fine.cols() {
            return Err(Error::Invalid("level pair matrices differ in shape".into()));
        }
        let d = fine.sub(coarse).symmetrized();
        delta = delta.max(spectral_norm_symmetric(&d)?);
    }
    Ok(delta)
}

/// Links a strongly negative eigenvector of `A` to the interior energy of
/// the potential it drives.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDiagnostic<T> {
    pub eigenvalue: T,
    /// `g^T A g` for the unit eigenvector `g`.
    pub quadratic_form: T,
    pub energy_outside: T,
    pub energy_inside: T,
    /// `energy(B \ D) / energy(D)`; infinite when `D` carries no energy.
    pub ratio: T,
}

/// For every eigenpair of `a` with eigenvalue below `-threshold`, evaluates
/// `int_{B\D} gamma_0 |grad u|^2` and `int_D gamma_0 |grad u|^2` for
/// `u = sum_r g_r u^(r)` solved on `system` (assembled with real `gamma_0`).
pub fn energy_diagnostic<T: Real>(
    mesh: &Mesh<T>,
    system: &ShuntSystem<T>,
    gamma0: &[Complex<T>],
    patterns: &DrivePatternSet,
    a: &Mat<T>,
    ball: &RegionSpec<T>,
    inclusion: &RegionSpec<T>,
    threshold: T,
) -> Result<Vec<EnergyDiagnostic<T>>> {
    let eig = symmetric_eigen(&a.symmetrized())?;
    let mut out = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate() {
        if !(lambda < -threshold) {
            continue;
        }
        let g: Vec<T> = eig.vectors.column(k);
        let ag = a.matvec(&g);
        let quadratic_form = g.iter().zip(&ag).map(|(x, y)| *x * *y).sum::<T>();
        let gc: Vec<Complex<T>> = g.iter().map(|&x| Complex::new(x, T::zero())).collect();
        let sol = system.solve_drive(&patterns.combined_currents(&gc))?;
        let energies = element_energies(mesh, &sol.u);
        let (mut outside, mut inside) = (T::zero(), T::zero());
        for (t, e) in energies.iter().enumerate() {
            let c = mesh.centroid(t);
            let w = gamma0[t].re * *e;
            if inclusion.contains(c) {
                inside += w;
            } else if ball.contains(c) {
                outside += w;
            }
        }
        let ratio = if inside > T::zero() {
            outside / inside
        } else {
            T::infinity()
        };
        out.push(EnergyDiagnostic {
            eigenvalue: lambda,
            quadratic_form,
            energy_outside: outside,
            energy_inside: inside,
            ratio,
        });
    }
    Ok(out)
}

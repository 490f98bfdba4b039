//! Test-ball sweeps over the domain.

use std::time::Instant;

use num_complex::Complex;
use rayon::prelude::*;

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::fem::lowrank::{ElementUpdate, LowRankUpdate};
use crate::fem::{assemble, ShuntSystem};
use crate::geometry::{refine_mesh, Mesh, RegionSpec};
use crate::measurements::{matrix_from_potentials, measure_system, DrivePatternSet};
use crate::monotonicity::{difference_of, estimate_delta, regularized_test};
use crate::phantom::{ContrastConstants, FreqMode, Modulation, Phantom, TestCase};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaChoice<T> {
    Value(T),
    /// The theorem's bound for the selected case.
    TheoremMax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaChoice<T> {
    Value(T),
    /// One refinement estimate on the unmodulated pair.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseChoice {
    Fixed(TestCase),
    /// From the sign of the contrast constant.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig<T> {
    pub ball_radius: T,
    pub spacing: T,
    /// Minimum distance between a ball and the boundary.
    pub margin: T,
    pub beta: BetaChoice<T>,
    pub delta: DeltaChoice<T>,
    pub case: CaseChoice,
}

impl<T: Real> ScanConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.ball_radius > T::zero()) {
            return Err(Error::Invalid(format!(
                "ball_radius must be positive, got {}",
                self.ball_radius
            )));
        }
        if !(self.spacing > T::zero()) {
            return Err(Error::Invalid(format!(
                "spacing must be positive, got {}",
                self.spacing
            )));
        }
        if !(self.margin >= T::zero()) {
            return Err(Error::Invalid(format!(
                "margin must be non-negative, got {}",
                self.margin
            )));
        }
        if let BetaChoice::Value(b) = self.beta {
            if !(b > T::zero()) {
                return Err(Error::Invalid(format!("beta must be positive, got {b}")));
            }
        }
        if let DeltaChoice::Value(d) = self.delta {
            if !(d >= T::zero()) {
                return Err(Error::Invalid(format!(
                    "delta must be non-negative, got {d}"
                )));
            }
        }
        Ok(())
    }
}

/// A ball centre with its lattice indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBall<T> {
    pub ix: i64,
    pub iy: i64,
    pub center: [T; 2],
    pub radius: T,
}

impl<T: Real> GridBall<T> {
    pub fn region(&self) -> RegionSpec<T> {
        RegionSpec::Disk {
            center: self.center,
            radius: self.radius,
        }
    }
}

/// Lattice `spacing * (ix, iy)` filtered by `|c| <= R - margin - r`, ordered
/// by `iy` then `ix`.
pub fn generate_ball_grid<T: Real>(
    domain_radius: T,
    config: &ScanConfig<T>,
) -> Result<Vec<GridBall<T>>> {
    config.validate()?;
    let reach = domain_radius - config.margin - config.ball_radius;
    let mut out = Vec::new();
    if reach >= T::zero() {
        let kmax = (reach / config.spacing).floor().to_f64_lossy() as i64;
        for iy in -kmax..=kmax {
            for ix in -kmax..=kmax {
                let c = [
                    config.spacing * T::lit(ix as f64),
                    config.spacing * T::lit(iy as f64),
                ];
                let d = (c[0] * c[0] + c[1] * c[1]).sqrt();
                if d <= reach && d + config.ball_radius < domain_radius {
                    out.push(GridBall {
                        ix,
                        iy,
                        center: c,
                        radius: config.ball_radius,
                    });
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::NoAdmissibleBalls);
    }
    Ok(out)
}

/// Outcome for one test ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallRecord<T> {
    pub ball: GridBall<T>,
    pub verdict: bool,
    pub margin: T,
    pub min_eigenvalue: T,
    /// Set when this ball could not be evaluated; the verdict is then false.
    pub error: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult<T> {
    pub balls: Vec<BallRecord<T>>,
    pub delta_used: T,
    pub beta_used: T,
    pub case: TestCase,
    pub warnings: Vec<String>,
}

impl<T: Real> ScanResult<T> {
    /// Re-thresholds the stored spectra with another `delta`.
    pub fn with_delta(&self, delta: T) -> Self {
        let mut out = self.clone();
        out.delta_used = delta;
        for b in &mut out.balls {
            if b.error.is_none() {
                b.margin = b.min_eigenvalue + delta;
                b.verdict = b.margin >= T::zero();
            }
        }
        out
    }

    pub fn marked(&self) -> impl Iterator<Item = &BallRecord<T>> {
        self.balls.iter().filter(|b| b.verdict)
    }
}

/// Everything shared between balls: AC matrix, base DC factorization and
/// the base drive solutions.
pub struct ScanContext<'m, T> {
    pub mesh: &'m Mesh<T>,
    pub patterns: DrivePatternSet,
    pub constants: ContrastConstants<T>,
    pub case: TestCase,
    pub beta: T,
    pub gamma0: Vec<Complex<T>>,
    pub r_ac: Mat<Complex<T>>,
    base: ShuntSystem<T>,
    base_solutions: Vec<Vec<Complex<T>>>,
    pub warnings: Vec<String>,
}

impl<'m, T: Real> ScanContext<'m, T> {
    pub fn new(
        phantom: &Phantom<T>,
        mesh: &'m Mesh<T>,
        patterns: &DrivePatternSet,
        config: &ScanConfig<T>,
    ) -> Result<Self> {
        config.validate()?;
        let constants = phantom.contrast_constants()?;
        let case = match config.case {
            CaseChoice::Fixed(c) => c,
            CaseChoice::Auto => constants.case(),
        };
        let bound = match case {
            TestCase::A => constants.beta_max_a,
            TestCase::B => constants.beta_max_b,
        };
        let mut warnings = Vec::new();
        if case != constants.case() {
            warnings.push(format!(
                "case {case:?} does not match the sign of the contrast constant"
            ));
        }
        let beta = match config.beta {
            BetaChoice::Value(b) => {
                if b > bound {
                    warnings.push(format!("beta {b:e} exceeds the theorem bound {bound:e}"));
                }
                b
            }
            BetaChoice::TheoremMax => bound,
        };
        if case == TestCase::B && beta >= T::one() {
            return Err(Error::Invalid(format!("case b needs beta < 1, got {beta}")));
        }

        let gamma_ac = phantom.element_admittivity(mesh, FreqMode::Ac, None)?;
        let ac_system = assemble(mesh, &gamma_ac)?;
        let r_ac = measure_system(&ac_system, patterns)?;
        drop(ac_system);

        let gamma0 = phantom.element_admittivity(mesh, FreqMode::Dc, None)?;
        let base = assemble(mesh, &gamma0)?;
        let base_solutions: Vec<Vec<Complex<T>>> = (0..patterns.len())
            .into_par_iter()
            .map(|r| {
                base.reduced_rhs(&patterns.currents(r))
                    .map(|f| base.solve_reduced(&f))
            })
            .collect::<Result<_>>()?;
        Ok(ScanContext {
            mesh,
            patterns: patterns.clone(),
            constants,
            case,
            beta,
            gamma0,
            r_ac,
            base,
            base_solutions,
            warnings,
        })
    }

    /// Unmodulated DC matrix from the cached base solutions.
    pub fn base_matrix(&self) -> Mat<Complex<T>> {
        let pots: Vec<Vec<Complex<T>>> = self
            .base_solutions
            .iter()
            .map(|y| self.base.electrode_potentials_of(y))
            .collect();
        matrix_from_potentials(&self.patterns, &pots)
    }

    /// `R((1 +/- beta chi_B) gamma_0)` via a low-rank update of the base
    /// factorization.
    pub fn modulated_matrix(&self, ball: &RegionSpec<T>) -> Result<Mat<Complex<T>>> {
        let md = Modulation {
            region: ball.clone(),
            beta: self.beta,
            sign: self.case.modulation_sign(),
        };
        md.validate(self.mesh.radius())?;
        let factor = md.sign.factor::<T>() * self.beta;
        let updates: Vec<ElementUpdate<T>> = self
            .mesh
            .elements_in_region(ball)
            .into_iter()
            .map(|t| ElementUpdate {
                element: t,
                delta: self.gamma0[t] * factor,
            })
            .collect();
        if self.prefer_direct(&updates) {
            let mut gamma = self.gamma0.clone();
            for u in &updates {
                gamma[u.element] += u.delta;
            }
            return measure_system(&assemble(self.mesh, &gamma)?, &self.patterns);
        }
        let lr = LowRankUpdate::new(&self.base, &updates)?;
        let pots: Vec<Vec<Complex<T>>> = self
            .base_solutions
            .iter()
            .map(|y| lr.correct_electrodes(y))
            .collect();
        Ok(matrix_from_potentials(&self.patterns, &pots))
    }

    /// Low-rank updates cost one base solve per touched node; large balls
    /// on fine meshes are cheaper to refactorize.
    fn prefer_direct(&self, updates: &[ElementUpdate<T>]) -> bool {
        let mut nodes: Vec<usize> = updates
            .iter()
            .flat_map(|u| self.mesh.triangles()[u.element])
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        let factor = self.base.factor();
        let low_rank = nodes.len() as f64 * 2.0 * factor.stored_entries() as f64;
        low_rank > factor.factor_work()
    }

    pub fn difference(&self, ball: &RegionSpec<T>) -> Result<Mat<T>> {
        let r_mod = self.modulated_matrix(ball)?;
        Ok(difference_of(
            &r_mod,
            &self.r_ac,
            self.constants.alpha,
            self.case,
        ))
    }

    /// Difference matrix at `beta = 0`.
    pub fn unmodulated_difference(&self) -> Mat<T> {
        difference_of(
            &self.base_matrix(),
            &self.r_ac,
            self.constants.alpha,
            self.case,
        )
    }

    fn evaluate(&self, ball: GridBall<T>, delta: T) -> BallRecord<T> {
        let start = Instant::now();
        let outcome = self
            .difference(&ball.region())
            .and_then(|a| regularized_test(&a, delta, self.case));
        let seconds = start.elapsed().as_secs_f64();
        match outcome {
            Ok(r) => BallRecord {
                ball,
                verdict: r.verdict,
                margin: r.margin,
                min_eigenvalue: r.min_eigenvalue(),
                error: None,
                seconds,
            },
            Err(e) => BallRecord {
                ball,
                verdict: false,
                margin: T::nan(),
                min_eigenvalue: T::nan(),
                error: Some(e.to_string()),
                seconds,
            },
        }
    }
}

/// `||A_fine - A_coarse||_2` for the unmodulated difference matrix on `mesh`
/// and its refinement.
pub fn auto_delta<T: Real>(
    phantom: &Phantom<T>,
    mesh: &Mesh<T>,
    patterns: &DrivePatternSet,
    config: &ScanConfig<T>,
    coarse: &ScanContext<'_, T>,
) -> Result<T> {
    let fine_mesh = refine_mesh(mesh);
    let fine_config = ScanConfig {
        case: CaseChoice::Fixed(coarse.case),
        ..*config
    };
    let fine = ScanContext::new(phantom, &fine_mesh, patterns, &fine_config)?;
    estimate_delta(&[(
        coarse.unmodulated_difference(),
        fine.unmodulated_difference(),
    )])
}

/// Runs the modulated test for every grid ball. Per-ball failures are
/// recorded and do not stop the scan.
pub fn run_scan<T: Real>(
    phantom: &Phantom<T>,
    mesh: &Mesh<T>,
    patterns: &DrivePatternSet,
    config: &ScanConfig<T>,
) -> Result<ScanResult<T>> {
    let grid = generate_ball_grid(mesh.radius(), config)?;
    let ctx = ScanContext::new(phantom, mesh, patterns, config)?;
    let delta = match config.delta {
        DeltaChoice::Value(d) => d,
        DeltaChoice::Auto => auto_delta(phantom, mesh, patterns, config, &ctx)?,
    };
    let balls: Vec<BallRecord<T>> = grid
        .into_par_iter()
        .map(|b| ctx.evaluate(b, delta))
        .collect();
    Ok(ScanResult {
        balls,
        delta_used: delta,
        beta_used: ctx.beta,
        case: ctx.case,
        warnings: ctx.warnings.clone(),
    })
}

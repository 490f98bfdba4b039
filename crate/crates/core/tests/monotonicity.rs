mod common;

use monotone_eit::dense::Mat;
use monotone_eit::eigen::symmetric_eigen;
use monotone_eit::export::report_csv;
use monotone_eit::fem::assemble;
use monotone_eit::geometry::{refine_mesh, Mesh, RegionSpec};
use monotone_eit::measurements::{adjacent_dipole_patterns, simulate, DrivePatternSet};
use monotone_eit::monotonicity::{
    difference_matrix, eigen_spectrum, energy_diagnostic, estimate_delta, regularized_test,
    DefinitenessReport,
};
use monotone_eit::phantom::{FreqMode, Inclusion, Modulation, Phantom, TestCase};
use monotone_eit::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Trigonometric closed form for the roots of a symmetric 3x3 characteristic
/// polynomial, ascending.
fn cubic_roots(a: &Mat<f64>) -> [f64; 3] {
    let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    let q = (a[(0, 0)] + a[(1, 1)] + a[(2, 2)]) / 3.0;
    let p2 = (0..3).map(|i| (a[(i, i)] - q).powi(2)).sum::<f64>() + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = Mat::from_fn(3, 3, |i, j| (a[(i, j)] - if i == j { q } else { 0.0 }) / p);
    let det = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
        - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
        + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    [lo, 3.0 * q - hi - lo, hi]
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Mat<f64> {
    let a = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    a.add(&a.transpose()).scale(0.5)
}

/// Case-signed difference matrix for a modulated ball, straight from full
/// assembly.
pub fn detection_matrix(
    ph: &Phantom<f64>,
    mesh: &Mesh<f64>,
    p: &DrivePatternSet,
    ball: &RegionSpec<f64>,
    beta: f64,
    case: TestCase,
) -> Mat<f64> {
    let k = ph.contrast_constants().unwrap();
    let md = Modulation {
        region: ball.clone(),
        beta,
        sign: case.modulation_sign(),
    };
    let r_mod = simulate(ph, mesh, p, FreqMode::Dc, Some(&md)).unwrap();
    let r_ac = simulate(ph, mesh, p, FreqMode::Ac, None).unwrap();
    difference_matrix(&r_mod, &r_ac, k.alpha, case).unwrap()
}

#[test]
fn cubic_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let a = random_symmetric(&mut rng, 3);
        let got = eigen_spectrum(&a).unwrap();
        let want = cubic_roots(&a);
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
        }
    }
}

#[test]
fn background_cancels_without_inclusion() {
    let mesh = common::disk_mesh(1.0, 0);
    let p = adjacent_dipole_patterns(16).unwrap();
    let ph = Phantom::homogeneous(1.0, 1.0, common::OMEGA);
    let dc = simulate(&ph, &mesh, &p, FreqMode::Dc, None).unwrap();
    let ac = simulate(&ph, &mesh, &p, FreqMode::Ac, None).unwrap();
    let alpha = ph.background(FreqMode::Ac) / ph.background(FreqMode::Dc);
    let a = difference_matrix(&dc, &ac, alpha, TestCase::A).unwrap();
    assert!(a.frobenius_norm() <= 1e-10 * dc.entries.frobenius_norm());
}

#[test]
fn provenance_mismatches_rejected() {
    let ph = common::example1();
    let p = adjacent_dipole_patterns(16).unwrap();
    let m0 = common::disk_mesh(1.0, 0);
    let m1 = refine_mesh(&m0);
    let alpha = ph.contrast_constants().unwrap().alpha;
    let dc0 = simulate(&ph, &m0, &p, FreqMode::Dc, None).unwrap();
    let ac0 = simulate(&ph, &m0, &p, FreqMode::Ac, None).unwrap();
    let ac1 = simulate(&ph, &m1, &p, FreqMode::Ac, None).unwrap();
    assert!(matches!(
        difference_matrix(&dc0, &ac1, alpha, TestCase::A),
        Err(Error::ProvenanceMismatch(_))
    ));
    assert!(matches!(
        difference_matrix(&ac0, &ac0, alpha, TestCase::A),
        Err(Error::ProvenanceMismatch(_))
    ));
    let minus = Modulation {
        region: RegionSpec::disk(5.0, 0.0, 1.0),
        beta: 0.3,
        sign: TestCase::B.modulation_sign(),
    };
    let dcm = simulate(&ph, &m0, &p, FreqMode::Dc, Some(&minus)).unwrap();
    assert!(matches!(
        difference_matrix(&dcm, &ac0, alpha, TestCase::A),
        Err(Error::ProvenanceMismatch(_))
    ));
    assert!(difference_matrix(&dcm, &ac0, alpha, TestCase::B).is_ok());
    let q = DrivePatternSet::new(16, (0..16).map(|r| (r, (r + 2) % 16)).collect()).unwrap();
    let acq = simulate(&ph, &m0, &q, FreqMode::Ac, None).unwrap();
    assert!(matches!(
        difference_matrix(&dc0, &acq, alpha, TestCase::A),
        Err(Error::ProvenanceMismatch(_))
    ));
}

fn example1_matrices(level: usize) -> Vec<Mat<f64>> {
    let ph = common::example1();
    let beta = ph.contrast_constants().unwrap().beta_max_a;
    let mesh = common::disk_mesh(common::EXAMPLE1_H, level);
    let p = adjacent_dipole_patterns(16).unwrap();
    common::example1_balls()
        .iter()
        .map(|b| detection_matrix(&ph, &mesh, &p, b, beta, TestCase::A))
        .collect()
}

#[test]
fn example1_verdicts_spectra_and_diagnostic() {
    let coarse = example1_matrices(common::EXAMPLE1_LEVEL);
    let fine = example1_matrices(common::EXAMPLE1_LEVEL + 1);
    let pairs: Vec<_> = coarse.iter().cloned().zip(fine.iter().cloned()).collect();
    let delta = estimate_delta(&pairs).unwrap();
    assert!((1e-4..=2e-3).contains(&delta), "{delta}");
    let reports: Vec<DefinitenessReport<f64>> = coarse
        .iter()
        .map(|a| regularized_test(a, delta, TestCase::A).unwrap())
        .collect();
    let verdicts: Vec<bool> = reports.iter().map(|r| r.verdict).collect();
    assert_eq!(verdicts, vec![false, true, false, false, false]);
    assert!(
        regularized_test(&coarse[1], 0.0005, TestCase::A)
            .unwrap()
            .verdict
    );

    let rows: Vec<(String, DefinitenessReport<f64>)> = reports
        .iter()
        .enumerate()
        .map(|(j, r)| (format!("B{}", j + 1), r.clone()))
        .collect();
    let csv = report_csv(&rows, &[]);
    common::check_golden("example1_level1_spectra.csv", &csv, |e, a| {
        common::numeric_csv_close(e, a, 1e-8, 1e-12)
    });

    // B4 lies outside D: its most negative eigenvector drives energy into B4.
    // Thresholded with the published noise level; ours is about twice that
    // at this mesh level.
    let reference_delta = 0.0005;
    let ph = common::example1();
    let mesh = common::disk_mesh(common::EXAMPLE1_H, common::EXAMPLE1_LEVEL);
    let p = adjacent_dipole_patterns(16).unwrap();
    let gamma0 = ph.element_admittivity(&mesh, FreqMode::Dc, None).unwrap();
    let sys = assemble(&mesh, &gamma0).unwrap();
    let b4 = &common::example1_balls()[3];
    let d = &ph.inclusions[0].region;
    let diag = energy_diagnostic(
        &mesh,
        &sys,
        &gamma0,
        &p,
        &coarse[3],
        b4,
        d,
        10.0 * reference_delta,
    )
    .unwrap();
    assert!(!diag.is_empty());
    let worst = &diag[0];
    assert!(worst.quadratic_form < -10.0 * reference_delta);
    assert!(worst.ratio > 10.0, "{worst:?}");
    // inside D the diagnostic finds nothing
    let b2 = &common::example1_balls()[1];
    assert!(energy_diagnostic(
        &mesh,
        &sys,
        &gamma0,
        &p,
        &coarse[1],
        b2,
        d,
        10.0 * reference_delta
    )
    .unwrap()
    .is_empty());
}

#[test]
fn forward_direction_on_random_phantoms() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let p = adjacent_dipole_patterns(16).unwrap();
    let coarse_mesh = common::disk_mesh(1.5, 0);
    let fine_mesh = refine_mesh(&coarse_mesh);
    for _ in 0..4 {
        let (ph, ball) = random_forward_setup(&mut rng);
        let k = ph.contrast_constants().unwrap();
        let case = k.case();
        let a0 = detection_matrix(&ph, &coarse_mesh, &p, &ball, k.beta_max(), case);
        let a1 = detection_matrix(&ph, &fine_mesh, &p, &ball, k.beta_max(), case);
        let delta = estimate_delta(&[(a0.clone(), a1)]).unwrap();
        assert!(regularized_test(&a0, delta, case).unwrap().verdict);
    }
}

pub fn random_forward_setup(rng: &mut ChaCha8Rng) -> (Phantom<f64>, RegionSpec<f64>) {
    let r = rng.gen_range(1.5..3.0);
    let rho = rng.gen_range(0.0..(8.0 - r));
    let th = rng.gen_range(0.0..std::f64::consts::TAU);
    let center = [rho * th.cos(), rho * th.sin()];
    let (so, eo, sd): (f64, f64, f64) = (
        rng.gen_range(0.5..2.0),
        rng.gen_range(0.5..2.0),
        rng.gen_range(0.5..2.0),
    );
    let ed = loop {
        let e = rng.gen_range(0.5..2.0);
        if (e * so - eo * sd).abs() > 0.05 {
            break e;
        }
    };
    let br = rng.gen_range(0.4..0.9) * r;
    let off = rng.gen_range(0.0..(r - br));
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    let ball = RegionSpec::disk(center[0] + off * phi.cos(), center[1] + off * phi.sin(), br);
    let ph = Phantom {
        sigma_bg: so,
        eps_bg: eo,
        omega: rng.gen_range(1.0..1000.0),
        inclusions: vec![Inclusion {
            region: RegionSpec::disk(center[0], center[1], r),
            sigma: sd,
            eps: ed,
        }],
    };
    (ph, ball)
}

proptest! {
    #[test]
    fn spectrum_shifts_with_identity(seed in any::<u64>(), n in 2usize..17, c in prop::sample::select(vec![-1.0, 0.5])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symmetric(&mut rng, n);
        let s = eigen_spectrum(&a).unwrap();
        let t = eigen_spectrum(&a.add(&Mat::identity(n).scale(c))).unwrap();
        for (x, y) in s.iter().zip(&t) {
            prop_assert!((x + c - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn verdict_monotone_in_delta(seed in any::<u64>(), n in 2usize..17, d1 in 0.0f64..2.0, d2 in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symmetric(&mut rng, n);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let r_lo = regularized_test(&a, lo, TestCase::A).unwrap();
        let r_hi = regularized_test(&a, hi, TestCase::A).unwrap();
        prop_assert!(!r_lo.verdict || r_hi.verdict);
        prop_assert_eq!(r_lo.verdict, r_lo.margin >= 0.0);
        prop_assert!(r_lo.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn jacobi_is_backward_stable(seed in any::<u64>(), n in 1usize..17) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symmetric(&mut rng, n);
        let e = symmetric_eigen(&a).unwrap();
        let lam = Mat::from_fn(n, n, |i, j| if i == j { e.values[i] } else { 0.0 });
        let back = e.vectors.matmul(&lam).matmul(&e.vectors.transpose());
        prop_assert!(a.sub(&back).frobenius_norm() <= 1e-12 * a.frobenius_norm().max(1.0));
        let orth = e.vectors.transpose().matmul(&e.vectors).sub(&Mat::identity(n));
        prop_assert!(orth.frobenius_norm() <= 1e-12);
    }
}

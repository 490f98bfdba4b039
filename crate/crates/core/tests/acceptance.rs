//! End-to-end acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::time::Instant;

use monotone_eit::dense::Mat;
use monotone_eit::eigen::symmetric_eigen;
use monotone_eit::export::{report_csv, scan_csv};
use monotone_eit::fem::{assemble, dipole};
use monotone_eit::geometry::{Mesh, RegionSpec};
use monotone_eit::measurements::{
    adjacent_dipole_patterns, measurement_matrix, sandwich_check, simulate, DrivePatternSet,
    Provenance,
};
use monotone_eit::monotonicity::{
    difference_matrix, estimate_delta, regularized_test, DefinitenessReport,
};
use monotone_eit::phantom::{
    pointwise_identities, FreqMode, Inclusion, Modulation, Phantom, TestCase,
};
use monotone_eit::scan::{run_scan, BetaChoice, CaseChoice, DeltaChoice, ScanConfig};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn patterns() -> DrivePatternSet {
    adjacent_dipole_patterns(16).unwrap()
}

fn detection_matrix(
    ph: &Phantom<f64>,
    mesh: &Mesh<f64>,
    ball: &RegionSpec<f64>,
    beta: f64,
    case: TestCase,
) -> Mat<f64> {
    let p = patterns();
    let alpha = ph.contrast_constants().unwrap().alpha;
    let md = Modulation {
        region: ball.clone(),
        beta,
        sign: case.modulation_sign(),
    };
    let r_mod = simulate(ph, mesh, &p, FreqMode::Dc, Some(&md)).unwrap();
    let r_ac = simulate(ph, mesh, &p, FreqMode::Ac, None).unwrap();
    difference_matrix(&r_mod, &r_ac, alpha, case).unwrap()
}

struct Example1 {
    reports: Vec<DefinitenessReport<f64>>,
    delta: f64,
    seconds: f64,
}

fn example1() -> Example1 {
    let start = Instant::now();
    let ph = common::example1();
    let beta = ph.contrast_constants().unwrap().beta_max_a;
    let mats = |level: usize| -> Vec<Mat<f64>> {
        let mesh = common::disk_mesh(common::EXAMPLE1_H, level);
        common::example1_balls()
            .iter()
            .map(|b| detection_matrix(&ph, &mesh, b, beta, TestCase::A))
            .collect()
    };
    let coarse = mats(common::EXAMPLE1_LEVEL);
    let fine = mats(common::EXAMPLE1_LEVEL + 1);
    let pairs: Vec<_> = coarse.iter().cloned().zip(fine).collect();
    let delta = estimate_delta(&pairs).unwrap();
    let reports = coarse
        .iter()
        .map(|a| regularized_test(a, delta, TestCase::A).unwrap())
        .collect();
    Example1 {
        reports,
        delta,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn criterion1(ex: &Example1) -> Outcome {
    let verdicts: Vec<bool> = ex.reports.iter().map(|r| r.verdict).collect();
    let msg = format!(
        "verdicts B1..B5 = {verdicts:?}, delta = {:.3e}, {:.1}s",
        ex.delta, ex.seconds
    );
    if verdicts == [false, true, false, false, false] && ex.seconds <= 120.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion2(ex: &Example1) -> Outcome {
    let b4 = &ex.reports[3].eigenvalues;
    let b2 = &ex.reports[1].eigenvalues;
    let n = b4.len();
    let neg = [b4[0], b4[1]];
    let pos = [b4[n - 2], b4[n - 1]];
    let mut ok = neg.iter().all(|x| (-0.02..=-0.005).contains(x))
        && pos.iter().all(|x| (0.005..=0.03).contains(x));
    ok &= b2.iter().all(|x| (-ex.delta..=0.02).contains(x));
    let rows: Vec<(String, DefinitenessReport<f64>)> = ex
        .reports
        .iter()
        .enumerate()
        .map(|(j, r)| (format!("B{}", j + 1), r.clone()))
        .collect();
    let golden =
        std::fs::read_to_string(common::golden("example1_level1_spectra.csv")).unwrap_or_default();
    let pinned = common::numeric_csv_close(&golden, &report_csv(&rows, &[]), 1e-8, 1e-12);
    ok &= pinned.is_ok();
    let msg = format!(
        "B4 lowest {:.4} {:.4}, highest {:.4} {:.4}; B2 range [{:.1e}, {:.4}]; golden {}",
        neg[0],
        neg[1],
        pos[0],
        pos[1],
        b2[0],
        b2[n - 1],
        if pinned.is_ok() {
            "matches".into()
        } else {
            pinned.unwrap_err()
        }
    );
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion3() -> Outcome {
    let trunc = |x: f64| (x * 1e4).floor() / 1e4;
    let w = common::OMEGA;
    let a = common::example1().contrast_constants().unwrap().beta_max_a;
    let b = common::example3().contrast_constants().unwrap().beta_max_b;
    let ok = (a - w * w / (1.0 + w * w)).abs() < 1e-15
        && (b - w * w / (1.0 + 2.0 * w * w)).abs() < 1e-15
        && trunc(a) == 0.9999
        && trunc(b) == 0.4999;
    let msg = format!("beta_max_a = {a:.7}, beta_max_b = {b:.7}");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn random_forward_setup(rng: &mut ChaCha8Rng) -> (Phantom<f64>, RegionSpec<f64>) {
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
        let e: f64 = rng.gen_range(0.5..2.0);
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

fn criterion4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let coarse = common::disk_mesh(1.5, 0);
    let fine = common::disk_mesh(1.5, 1);
    let mut passed = 0;
    let mut cases = [0, 0];
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let (ph, ball) = random_forward_setup(&mut rng);
        let k = ph.contrast_constants().unwrap();
        let case = k.case();
        cases[(case == TestCase::B) as usize] += 1;
        let a0 = detection_matrix(&ph, &coarse, &ball, k.beta_max(), case);
        let a1 = detection_matrix(&ph, &fine, &ball, k.beta_max(), case);
        let delta = estimate_delta(&[(a0.clone(), a1)]).unwrap();
        let r = regularized_test(&a0, delta, case).unwrap();
        worst = worst.min(r.margin);
        passed += r.verdict as usize;
    }
    let msg = format!(
        "{passed}/20 true (case a {}, case b {}), smallest margin {worst:.2e}",
        cases[0], cases[1]
    );
    if passed == 20 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mesh = common::disk_mesh(1.0, 0);
    let p = patterns();
    let n = mesh.triangles().len();
    let mut worst: f64 = 0.0;
    let mut ordered = 0;
    for _ in 0..20 {
        let g1: Vec<C> = (0..n)
            .map(|_| C::new(rng.gen_range(0.2..3.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let g2: Vec<C> = (0..n)
            .map(|_| C::new(rng.gen_range(0.2..3.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let g: Vec<C> = (0..16)
            .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s = sandwich_check(&mesh, &g1, &g2, &p, &g).unwrap();
        worst = worst.max(s.relative_slack());
        if s.relative_slack() <= 0.05 {
            ordered += 1;
        }
    }
    let msg = format!("{ordered}/20 within 5% slack, worst slack {worst:.2e}");
    if ordered == 20 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn r_of(mesh: &Mesh<f64>, gamma: &[C]) -> Mat<C> {
    measurement_matrix(
        mesh,
        gamma,
        &patterns(),
        Provenance::new(FreqMode::Dc, mesh.level(), 0.0),
    )
    .unwrap()
    .entries
}

fn criterion6() -> Outcome {
    let mesh = common::disk_mesh(1.0, 1);
    let ph = common::example1();
    let k = ph.contrast_constants().unwrap();
    let gw = ph.element_admittivity(&mesh, FreqMode::Ac, None).unwrap();
    let r = r_of(&mesh, &gw);
    let sym = r.symmetry_defect() / r.frobenius_norm();
    let scaled: Vec<C> = gw.iter().map(|g| g / k.alpha).collect();
    let rs = r_of(&mesh, &scaled);
    let alpha_gap = r.scale(k.alpha).sub(&rs).frobenius_norm() / rs.frobenius_norm();

    let g0 = ph.element_admittivity(&mesh, FreqMode::Dc, None).unwrap();
    let r0 = r_of(&mesh, &g0);
    let mut scale_gap: f64 = 0.0;
    for kk in [0.5, 2.0, 10.0] {
        let gk: Vec<C> = g0.iter().map(|g| g * kk).collect();
        let rk = r_of(&mesh, &gk);
        scale_gap = scale_gap
            .max(r0.scale(C::new(1.0 / kk, 0.0)).sub(&rk).frobenius_norm() / rk.frobenius_norm());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let coarse = common::disk_mesh(1.0, 0);
    let mut mono: f64 = f64::INFINITY;
    for _ in 0..10 {
        let s1: Vec<C> = (0..coarse.triangles().len())
            .map(|_| C::new(rng.gen_range(0.5..2.0), 0.0))
            .collect();
        let s2: Vec<C> = s1.iter().map(|s| s + rng.gen_range(0.0..1.5)).collect();
        let r1 = r_of(&coarse, &s1);
        let d = r1.re().sub(&r_of(&coarse, &s2).re()).symmetrized();
        mono = mono.min(symmetric_eigen(&d).unwrap().values[0] / r1.frobenius_norm());
    }

    let mut ident: f64 = 0.0;
    for _ in 0..20 {
        let mut v = || rng.gen_range(0.1..5.0);
        let p = Phantom {
            sigma_bg: v(),
            eps_bg: v(),
            omega: 200.0 * v(),
            inclusions: vec![Inclusion {
                region: RegionSpec::disk(0.0, 0.0, 1.0),
                sigma: v(),
                eps: v(),
            }],
        };
        let bt = rng.gen_range(-0.9..0.9);
        if let Ok(ids) = pointwise_identities(&p, bt) {
            for id in ids {
                ident = ident.max(id.max_relative_gap());
            }
        }
    }
    let ok =
        sym <= 1e-10 && alpha_gap <= 1e-10 && scale_gap <= 1e-10 && mono >= -1e-8 && ident <= 1e-12;
    let msg = format!(
        "symmetry {sym:.1e}, alpha {alpha_gap:.1e}, scaling {scale_gap:.1e}, monotonicity min eig/||R|| {mono:.1e}, identities {ident:.1e}"
    );
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion7() -> Outcome {
    let mesh = common::disk_mesh(1.0, 1);
    let p = patterns();
    let ph = common::example3();
    let d = common::example3_inclusion();
    let cfg = ScanConfig {
        ball_radius: 0.75,
        spacing: 1.5,
        margin: 0.5,
        beta: BetaChoice::TheoremMax,
        delta: DeltaChoice::Value(0.5e-7),
        case: CaseChoice::Auto,
    };
    let mut csvs = Vec::new();
    let mut last = None;
    for threads in [1, 4, 4, 2] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let res = pool.install(|| run_scan(&ph, &mesh, &p, &cfg)).unwrap();
        csvs.push(scan_csv(&res, &[]));
        last = Some(res);
    }
    let res = last.unwrap();
    let identical = csvs.windows(2).all(|w| w[0] == w[1]);
    let (mut inside, mut inside_marked, mut far, mut far_marked) = (0, 0, 0, 0);
    for b in &res.balls {
        if b.ball.region().is_subset_of(&d) {
            inside += 1;
            inside_marked += b.verdict as usize;
        }
        if d.distance_to(b.ball.center) - b.ball.radius > 2.0 * b.ball.radius {
            far += 1;
            far_marked += b.verdict as usize;
        }
    }
    let msg = format!(
        "{} balls, inside D marked {inside_marked}/{inside}, far marked {far_marked}/{far}, csv identical across reruns/threads: {identical}",
        res.balls.len()
    );
    if inside > 0 && inside_marked == inside && far_marked == 0 && identical {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion8() -> Outcome {
    let ph = common::example1();
    let beta = ph.contrast_constants().unwrap().beta_max_a;
    let mut potentials = Vec::new();
    let mut mats = Vec::new();
    for level in 0..4 {
        let mesh = common::disk_mesh(common::EXAMPLE1_H, level);
        let gamma = ph.element_admittivity(&mesh, FreqMode::Ac, None).unwrap();
        potentials.push(
            assemble(&mesh, &gamma)
                .unwrap()
                .solve_electrodes(&dipole(16, 0, 1))
                .unwrap(),
        );
        let ms: Vec<Mat<f64>> = common::example1_balls()
            .iter()
            .map(|b| detection_matrix(&ph, &mesh, b, beta, TestCase::A))
            .collect();
        mats.push(ms);
    }
    let diffs: Vec<f64> = potentials
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let deltas: Vec<f64> = mats
        .windows(2)
        .map(|w| {
            let pairs: Vec<_> = w[0].iter().cloned().zip(w[1].iter().cloned()).collect();
            estimate_delta(&pairs).unwrap()
        })
        .collect();
    let monotone = diffs.windows(2).all(|w| w[1] < w[0]);
    let factors: Vec<f64> = deltas.windows(2).map(|w| w[0] / w[1]).collect();
    let shrinking = factors.iter().all(|&f| f >= 1.5);
    let msg = format!(
        "potential differences {:?}, delta per level pair {:?}, shrink factors {:?}",
        diffs.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>(),
        deltas
            .iter()
            .map(|x| format!("{x:.2e}"))
            .collect::<Vec<_>>(),
        factors
            .iter()
            .map(|x| format!("{x:.2}"))
            .collect::<Vec<_>>()
    );
    if monotone && shrinking {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let start = Instant::now();
    let ex = example1();
    let results: Vec<(&str, Outcome)> = vec![
        ("Example 1 verdicts", criterion1(&ex)),
        ("Example 1 spectrum structure", criterion2(&ex)),
        ("contrast-constant thresholds", criterion3()),
        ("forward direction on 20 random phantoms", criterion4()),
        ("sandwich on 20 random triples", criterion5()),
        ("algebraic invariants", criterion6()),
        ("Example 3 reference scan", criterion7()),
        ("mesh convergence", criterion8()),
    ];
    let mut failed = 0;
    for (k, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(m) => println!("PASS criterion {}: {name}: {m}", k + 1),
            Err(m) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {m}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

#![allow(dead_code)]

use std::path::PathBuf;

use monotone_eit::geometry::{build_disk_mesh, refine_times, ElectrodeLayout, Mesh, RegionSpec};
use monotone_eit::phantom::{Inclusion, Phantom};

pub const OMEGA: f64 = 200.0 * std::f64::consts::PI;

/// Coarse Example-1 mesh spacing; verdicts are taken one refinement below.
pub const EXAMPLE1_H: f64 = 1.0;
pub const EXAMPLE1_LEVEL: usize = 1;

pub fn layout() -> ElectrodeLayout<f64> {
    ElectrodeLayout::centered(16, 0.5)
}

pub fn disk_mesh(h: f64, level: usize) -> Mesh<f64> {
    refine_times(&build_disk_mesh(10.0, &layout(), h).unwrap(), level)
}

pub fn example1() -> Phantom<f64> {
    Phantom {
        sigma_bg: 1.0,
        eps_bg: 1.0,
        omega: OMEGA,
        inclusions: vec![Inclusion {
            region: RegionSpec::disk(5.0, 0.0, 1.5),
            sigma: 1.0,
            eps: 2.0,
        }],
    }
}

pub fn example1_balls() -> Vec<RegionSpec<f64>> {
    [[0.0, 0.0], [5.0, 0.0], [0.0, 5.0], [-5.0, 0.0], [0.0, -5.0]]
        .iter()
        .map(|c| RegionSpec::disk(c[0], c[1], 1.25))
        .collect()
}

/// Example-3 constants on the reference inclusion.
pub fn example3() -> Phantom<f64> {
    Phantom {
        sigma_bg: 1.0,
        eps_bg: 2.0,
        omega: OMEGA,
        inclusions: vec![Inclusion {
            region: example3_inclusion(),
            sigma: 1.0,
            eps: 1.0,
        }],
    }
}

pub fn example3_inclusion() -> RegionSpec<f64> {
    RegionSpec::disk(2.0, -3.0, 3.0)
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Compares against a golden file, or rewrites it when `MEIT_BLESS` is set.
pub fn check_golden(name: &str, actual: &str, compare: impl Fn(&str, &str) -> Result<(), String>) {
    let path = golden(name);
    if std::env::var_os("MEIT_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected =
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    if let Err(msg) = compare(&expected, actual) {
        panic!("{name} differs from golden file: {msg}");
    }
}

/// Numeric CSV comparison with a relative-plus-absolute tolerance; non-numeric
/// cells must match exactly.
pub fn numeric_csv_close(expected: &str, actual: &str, rel: f64, abs: f64) -> Result<(), String> {
    let e: Vec<&str> = expected.lines().collect();
    let a: Vec<&str> = actual.lines().collect();
    if e.len() != a.len() {
        return Err(format!("{} vs {} lines", e.len(), a.len()));
    }
    for (k, (le, la)) in e.iter().zip(&a).enumerate() {
        let ce: Vec<&str> = le.split(',').collect();
        let ca: Vec<&str> = la.split(',').collect();
        if ce.len() != ca.len() {
            return Err(format!("line {k}: cell count"));
        }
        for (x, y) in ce.iter().zip(&ca) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(p), Ok(q)) if p.is_nan() && q.is_nan() => {}
                (Ok(p), Ok(q)) => {
                    if (p - q).abs() > abs + rel * p.abs() {
                        return Err(format!("line {k}: {p} vs {q}"));
                    }
                }
                _ if x == y => {}
                _ => return Err(format!("line {k}: {x} vs {y}")),
            }
        }
    }
    Ok(())
}

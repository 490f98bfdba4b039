//! Plain-text exports: matrices, reports, scan tables and PGM rasters.
//!
//! Numbers are written with 17 significant digits so files round-trip.

use std::fmt::Write;

use crate::geometry::RegionSpec;
use crate::measurements::MeasurementMatrix;
use crate::monotonicity::DefinitenessReport;
use crate::phantom::{FreqMode, TestCase};
use crate::scalar::Real;
use crate::scan::ScanResult;

pub fn num<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

pub fn mode_name(mode: FreqMode) -> &'static str {
    match mode {
        FreqMode::Dc => "dc",
        FreqMode::Ac => "ac",
    }
}

pub fn case_name(case: TestCase) -> &'static str {
    match case {
        TestCase::A => "a",
        TestCase::B => "b",
    }
}

pub fn region_text<T: Real>(r: &RegionSpec<T>) -> String {
    match r {
        RegionSpec::Disk { center, radius } => {
            format!(
                "disk({} {} {})",
                num(center[0]),
                num(center[1]),
                num(*radius)
            )
        }
        RegionSpec::Polygon { vertices } => {
            let v: Vec<String> = vertices
                .iter()
                .map(|p| format!("{} {}", num(p[0]), num(p[1])))
                .collect();
            format!("polygon({})", v.join("; "))
        }
    }
}

/// Header comment lines, then `# real` and `# imag` blocks of comma
/// separated rows. `extra` lines are written verbatim after `# `.
pub fn matrix_csv<T: Real>(m: &MeasurementMatrix<T>, extra: &[String]) -> String {
    let p = &m.provenance;
    let mut s = String::new();
    writeln!(s, "# mode: {}", mode_name(p.mode)).unwrap();
    match &p.modulation {
        Some(md) => {
            writeln!(s, "# beta: {}", num(md.beta)).unwrap();
            writeln!(
                s,
                "# sign: {}",
                if md.sign.factor::<f64>() > 0.0 {
                    "+"
                } else {
                    "-"
                }
            )
            .unwrap();
            writeln!(s, "# region: {} {}", md.label, region_text(&md.region)).unwrap();
        }
        None => writeln!(s, "# beta: {}", num(T::zero())).unwrap(),
    }
    writeln!(s, "# mesh_level: {}", p.mesh_level).unwrap();
    writeln!(s, "# omega: {}", num(p.omega)).unwrap();
    let pairs: Vec<String> = m
        .patterns
        .pairs()
        .iter()
        .map(|(j, k)| format!("{}-{}", j + 1, k + 1))
        .collect();
    writeln!(s, "# patterns: {}", pairs.join(" ")).unwrap();
    writeln!(
        s,
        "# symmetry_defect: {}",
        num(m.relative_symmetry_defect())
    )
    .unwrap();
    for e in extra {
        writeln!(s, "# {e}").unwrap();
    }
    for (label, part) in [("real", m.entries.re()), ("imag", m.entries.im())] {
        writeln!(s, "# {label}").unwrap();
        for i in 0..part.rows() {
            let row: Vec<String> = part.row(i).iter().map(|&x| num(x)).collect();
            writeln!(s, "{}", row.join(",")).unwrap();
        }
    }
    s
}

/// Reads back the two blocks written by [`matrix_csv`] as `(real, imag)` rows.
pub fn parse_matrix_csv(text: &str) -> Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut re = Vec::new();
    let mut im = Vec::new();
    let mut block = None;
    for line in text.lines() {
        match line.trim() {
            "# real" => block = Some(0),
            "# imag" => block = Some(1),
            l if l.starts_with('#') || l.is_empty() => {}
            l => {
                let row: Vec<f64> = l
                    .split(',')
                    .map(|x| x.trim().parse().ok())
                    .collect::<Option<_>>()?;
                match block? {
                    0 => re.push(row),
                    _ => im.push(row),
                }
            }
        }
    }
    Some((re, im))
}

/// One row per region: `region,eig_1..eig_N,delta,verdict,margin`.
pub fn report_csv<T: Real>(rows: &[(String, DefinitenessReport<T>)], extra: &[String]) -> String {
    let mut s = String::new();
    for e in extra {
        writeln!(s, "# {e}").unwrap();
    }
    let n = rows.first().map_or(0, |(_, r)| r.eigenvalues.len());
    let mut head = vec!["region".to_string()];
    head.extend((1..=n).map(|k| format!("eig{k}")));
    head.extend(["delta", "case", "verdict", "margin"].map(String::from));
    writeln!(s, "{}", head.join(",")).unwrap();
    for (name, r) in rows {
        let mut cells = vec![name.clone()];
        cells.extend(r.eigenvalues.iter().map(|&x| num(x)));
        cells.push(num(r.delta));
        cells.push(case_name(r.direction).into());
        cells.push(r.verdict.to_string());
        cells.push(num(r.margin));
        writeln!(s, "{}", cells.join(",")).unwrap();
    }
    s
}

/// Scan table without timings so reruns compare byte for byte.
pub fn scan_csv<T: Real>(result: &ScanResult<T>, extra: &[String]) -> String {
    let mut s = String::new();
    for e in extra {
        writeln!(s, "# {e}").unwrap();
    }
    writeln!(s, "# delta: {}", num(result.delta_used)).unwrap();
    writeln!(s, "# beta: {}", num(result.beta_used)).unwrap();
    writeln!(s, "# case: {}", case_name(result.case)).unwrap();
    writeln!(s, "ix,iy,cx,cy,radius,verdict,margin,min_eigenvalue,error").unwrap();
    for b in &result.balls {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            b.ball.ix,
            b.ball.iy,
            num(b.ball.center[0]),
            num(b.ball.center[1]),
            num(b.ball.radius),
            b.verdict,
            num(b.margin),
            num(b.min_eigenvalue),
            b.error.as_deref().unwrap_or("").replace(',', ";")
        )
        .unwrap();
    }
    s
}

/// ASCII graymap with one pixel per lattice point, top row = largest `iy`.
pub fn scan_pgm<T: Real>(result: &ScanResult<T>) -> String {
    let (xmin, xmax, ymin, ymax) =
        result
            .balls
            .iter()
            .fold((i64::MAX, i64::MIN, i64::MAX, i64::MIN), |a, b| {
                (
                    a.0.min(b.ball.ix),
                    a.1.max(b.ball.ix),
                    a.2.min(b.ball.iy),
                    a.3.max(b.ball.iy),
                )
            });
    let w = (xmax - xmin + 1).max(0) as usize;
    let h = (ymax - ymin + 1).max(0) as usize;
    let mut px = vec![0u8; w * h];
    for b in &result.balls {
        let col = (b.ball.ix - xmin) as usize;
        let row = (ymax - b.ball.iy) as usize;
        px[row * w + col] = if b.verdict { 255 } else { 128 };
    }
    let mut s = String::new();
    writeln!(s, "P2").unwrap();
    writeln!(
        s,
        "# {w}x{h} pixels, one per test ball centre; column = ix - ({xmin}), row = ({ymax}) - iy"
    )
    .unwrap();
    writeln!(
        s,
        "# 0 = outside the ball grid, 128 = unmarked, 255 = marked"
    )
    .unwrap();
    writeln!(s, "{w} {h}").unwrap();
    writeln!(s, "255").unwrap();
    for r in 0..h {
        let row: Vec<String> = px[r * w..(r + 1) * w]
            .iter()
            .map(|v| v.to_string())
            .collect();
        writeln!(s, "{}", row.join(" ")).unwrap();
    }
    s
}

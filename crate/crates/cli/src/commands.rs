//! Subcommand implementations. Every command computes all of its outputs
//! before writing any file.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use monotone_eit::dense::Mat;
use monotone_eit::export::{matrix_csv, num, region_text, report_csv, scan_csv, scan_pgm};
use monotone_eit::geometry::{build_disk_mesh, refine_times, Mesh, RegionSpec};
use monotone_eit::measurements::{
    adjacent_dipole_patterns, measurement_matrix, sandwich_check, simulate, DrivePatternSet,
    MeasurementMatrix, Provenance,
};
use monotone_eit::monotonicity::{
    difference_matrix, estimate_delta, regularized_test, DefinitenessReport,
};
use monotone_eit::phantom::{pointwise_identities, FreqMode, Modulation, Phantom, TestCase};
use monotone_eit::scan::{run_scan, BetaChoice, CaseChoice, DeltaChoice, ScanConfig};
use num_complex::Complex64 as C;

use crate::config::{self, Beta, Delta, Loaded, NumberOr};
use crate::Common;

pub struct Ctx {
    loaded: Loaded,
    level: usize,
    beta: Beta,
    delta: Delta,
    out: PathBuf,
    symmetrize: bool,
}

fn keyword(s: &str) -> NumberOr {
    s.parse::<f64>()
        .map(NumberOr::Number)
        .unwrap_or_else(|_| NumberOr::Word(s.to_string()))
}

pub fn run(common: &Common, f: impl FnOnce(&Ctx) -> Result<()>) -> Result<()> {
    if let Some(n) = common.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool")?;
    }
    let loaded = config::load(&common.config)?;
    let c = &loaded.config;
    let beta = match &common.beta {
        Some(b) => config::parse_beta(&keyword(b)).context("--beta")?,
        None => config::parse_beta(&c.detection.beta)?,
    };
    let delta = match &common.delta {
        Some(d) => config::parse_delta(&keyword(d)).context("--delta")?,
        None => config::parse_delta(&c.detection.delta)?,
    };
    let ctx = Ctx {
        level: common.mesh_level.unwrap_or(c.geometry.level),
        out: common
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(&c.output.dir)),
        symmetrize: common.symmetrize,
        beta,
        delta,
        loaded,
    };
    f(&ctx)
}

fn write_all(dir: &Path, files: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

impl Ctx {
    fn config(&self) -> &config::RunConfig {
        &self.loaded.config
    }

    fn mesh(&self, level: usize) -> Result<Mesh<f64>> {
        let g = &self.config().geometry;
        let base = build_disk_mesh(g.radius, &self.config().layout(), g.target_h)?;
        Ok(refine_times(&base, level))
    }

    fn phantom(&self) -> Result<Phantom<f64>> {
        self.config().phantom_model()
    }

    fn patterns(&self) -> Result<DrivePatternSet> {
        Ok(adjacent_dipole_patterns(self.config().geometry.electrodes)?)
    }

    fn header(&self, level: usize) -> Vec<String> {
        vec![
            format!("config_hash: {}", self.loaded.hash),
            format!("mesh_level: {level}"),
        ]
    }

    fn case(&self, phantom: &Phantom<f64>) -> Result<TestCase> {
        match self.config().detection.case()? {
            Some(c) => Ok(c),
            None => Ok(phantom.contrast_constants()?.case()),
        }
    }

    /// `beta` for the configured case; `Max` resolves to the theorem bound.
    fn beta_value(&self, phantom: &Phantom<f64>, case: TestCase) -> Result<f64> {
        match self.beta {
            Beta::Value(b) => Ok(b),
            Beta::Max => {
                let k = phantom.contrast_constants()?;
                Ok(match case {
                    TestCase::A => k.beta_max_a,
                    TestCase::B => k.beta_max_b,
                })
            }
        }
    }

    fn regions(&self) -> Result<Vec<(String, RegionSpec<f64>)>> {
        self.config().named_regions()
    }

    fn finish(&self, mut m: MeasurementMatrix<f64>) -> MeasurementMatrix<f64> {
        if self.symmetrize {
            m = m.symmetrized();
        }
        m
    }

    fn modulated(
        &self,
        ph: &Phantom<f64>,
        mesh: &Mesh<f64>,
        p: &DrivePatternSet,
        name: &str,
        region: &RegionSpec<f64>,
        beta: f64,
        case: TestCase,
    ) -> Result<MeasurementMatrix<f64>> {
        if beta == 0.0 {
            return Ok(self.finish(simulate(ph, mesh, p, FreqMode::Dc, None)?));
        }
        let md = Modulation {
            region: region.clone(),
            beta,
            sign: case.modulation_sign(),
        };
        let mut m = simulate(ph, mesh, p, FreqMode::Dc, Some(&md))
            .with_context(|| format!("region {name}"))?;
        if let Some(info) = &mut m.provenance.modulation {
            info.label = name.to_string();
        }
        Ok(self.finish(m))
    }

    pub fn mesh_cmd(&self) -> Result<()> {
        let mesh = self.mesh(self.level)?;
        mesh.validate()?;
        let mut body: String = self
            .header(self.level)
            .iter()
            .map(|l| format!("# {l}\n"))
            .collect();
        body.push_str(&mesh.dump());
        write_all(&self.out, &[("mesh.txt".into(), body)])
    }

    pub fn simulate(&self) -> Result<()> {
        let ph = self.phantom()?;
        let mesh = self.mesh(self.level)?;
        let p = self.patterns()?;
        let head = vec![
            format!("config_hash: {}", self.loaded.hash),
            format!("symmetrized: {}", self.symmetrize),
        ];
        let dc = self.finish(simulate(&ph, &mesh, &p, FreqMode::Dc, None)?);
        let ac = self.finish(simulate(&ph, &mesh, &p, FreqMode::Ac, None)?);
        let mut files = vec![
            ("dc.csv".to_string(), matrix_csv(&dc, &head)),
            ("ac.csv".to_string(), matrix_csv(&ac, &head)),
        ];
        let regions = self.regions()?;
        if !regions.is_empty() {
            let case = self.case(&ph)?;
            let beta = self.beta_value(&ph, case)?;
            for (name, region) in &regions {
                let m = self.modulated(&ph, &mesh, &p, name, region, beta, case)?;
                let mut h = head.clone();
                h.push(format!("case: {}", monotone_eit::export::case_name(case)));
                files.push((format!("dc_mod_{name}.csv"), matrix_csv(&m, &h)));
            }
        }
        write_all(&self.out, &files)
    }

    fn difference_matrices(
        &self,
        ph: &Phantom<f64>,
        level: usize,
        regions: &[(String, RegionSpec<f64>)],
        beta: f64,
        case: TestCase,
    ) -> Result<Vec<Mat<f64>>> {
        let mesh = self.mesh(level)?;
        let p = self.patterns()?;
        let alpha = ph.contrast_constants()?.alpha;
        let ac = self.finish(simulate(ph, &mesh, &p, FreqMode::Ac, None)?);
        regions
            .iter()
            .map(|(name, region)| {
                let r_mod = self.modulated(ph, &mesh, &p, name, region, beta, case)?;
                Ok(difference_matrix(&r_mod, &ac, alpha, case)?)
            })
            .collect()
    }

    pub fn test(&self, only: Option<&str>) -> Result<()> {
        let ph = self.phantom()?;
        let mut regions = self.regions()?;
        if let Some(name) = only {
            regions.retain(|(n, _)| n == name);
            if regions.is_empty() {
                bail!("no region named {name:?} in the config");
            }
        }
        if regions.is_empty() {
            bail!("config has no [[region]] blocks to test");
        }
        let case = self.case(&ph)?;
        let beta = self.beta_value(&ph, case)?;
        let mats = self.difference_matrices(&ph, self.level, &regions, beta, case)?;
        let delta = match self.delta {
            Delta::Value(d) => d,
            Delta::Auto => {
                let fine = self.difference_matrices(&ph, self.level + 1, &regions, beta, case)?;
                estimate_delta(&mats.iter().cloned().zip(fine).collect::<Vec<_>>())?
            }
        };
        let mut rows: Vec<(String, DefinitenessReport<f64>)> = Vec::new();
        let mut head = self.header(self.level);
        head.push(format!("omega: {}", num(ph.omega)));
        head.push(format!("beta: {}", num(beta)));
        head.push(format!("delta: {}", num(delta)));
        head.push(format!(
            "delta_source: {}",
            if self.delta == Delta::Auto {
                "refinement"
            } else {
                "fixed"
            }
        ));
        head.push(format!("symmetrized: {}", self.symmetrize));
        for ((name, region), a) in regions.iter().zip(&mats) {
            let defect = a.symmetry_defect() / a.frobenius_norm().max(f64::MIN_POSITIVE);
            if defect > 1e-12 {
                head.push(format!(
                    "{name}: difference matrix symmetry defect {}, spectrum taken of (A + A^T)/2",
                    num(defect)
                ));
            }
            head.push(format!("{name}: {}", region_text(region)));
            let r = regularized_test(a, delta, case)?;
            println!(
                "{name}: verdict {} margin {:.6e} min eigenvalue {:.6e}",
                r.verdict,
                r.margin,
                r.min_eigenvalue()
            );
            rows.push((name.clone(), r));
        }
        write_all(
            &self.out,
            &[("report.csv".into(), report_csv(&rows, &head))],
        )
    }

    pub fn scan(&self) -> Result<()> {
        let block = self
            .config()
            .scan
            .clone()
            .ok_or_else(|| anyhow!("config has no [scan] block"))?;
        let ph = self.phantom()?;
        let mesh = self.mesh(self.level)?;
        let p = self.patterns()?;
        let cfg = ScanConfig {
            ball_radius: block.ball_radius,
            spacing: block.spacing,
            margin: block.margin,
            beta: match self.beta {
                Beta::Value(b) => BetaChoice::Value(b),
                Beta::Max => BetaChoice::TheoremMax,
            },
            delta: match self.delta {
                Delta::Value(d) => DeltaChoice::Value(d),
                Delta::Auto => DeltaChoice::Auto,
            },
            case: match self.config().detection.case()? {
                Some(c) => CaseChoice::Fixed(c),
                None => CaseChoice::Auto,
            },
        };
        let result = run_scan(&ph, &mesh, &p, &cfg)?;
        for w in &result.warnings {
            eprintln!("warning: {w}");
        }
        let failed = result.balls.iter().filter(|b| b.error.is_some()).count();
        if failed > 0 {
            eprintln!("warning: {failed} balls could not be evaluated; see the error column");
        }
        let mut head = self.header(self.level);
        head.push(format!("omega: {}", num(ph.omega)));
        let marked = result.marked().count();
        println!(
            "{marked} of {} balls marked, delta {:.6e}",
            result.balls.len(),
            result.delta_used
        );
        let mut pgm = scan_pgm(&result);
        let insert = pgm.find('\n').map(|i| i + 1).unwrap_or(0);
        pgm.insert_str(insert, &format!("# config_hash: {}\n", self.loaded.hash));
        write_all(
            &self.out,
            &[
                ("scan.csv".into(), scan_csv(&result, &head)),
                ("scan.pgm".into(), pgm),
            ],
        )
    }

    pub fn verify(&self) -> Result<()> {
        let ph = self.phantom()?;
        let mesh = self.mesh(self.level)?;
        let p = self.patterns()?;
        let k = ph.contrast_constants()?;
        let case = k.case();
        let beta = self.beta_value(&ph, case)?;
        let prov = || Provenance::new(FreqMode::Dc, mesh.level(), 0.0);
        let r_of =
            |g: &[C]| -> Result<Mat<C>> { Ok(measurement_matrix(&mesh, g, &p, prov())?.entries) };
        let mut lines: Vec<(bool, String)> = Vec::new();

        let gw = ph.element_admittivity(&mesh, FreqMode::Ac, None)?;
        let rw = r_of(&gw)?;
        let sym = rw.symmetry_defect() / rw.frobenius_norm();
        lines.push((
            sym <= 1e-10,
            format!("reciprocity: relative symmetry defect {sym:.2e}"),
        ));

        let scaled: Vec<C> = gw.iter().map(|g| g / k.alpha).collect();
        let rs = r_of(&scaled)?;
        let gap = rw.scale(k.alpha).sub(&rs).frobenius_norm() / rs.frobenius_norm();
        lines.push((
            gap <= 1e-10,
            format!("alpha weighting: relative gap {gap:.2e}"),
        ));

        let g0 = ph.element_admittivity(&mesh, FreqMode::Dc, None)?;
        let r0 = r_of(&g0)?;
        let mut worst: f64 = 0.0;
        for s in [0.5, 2.0, 10.0] {
            let gs: Vec<C> = g0.iter().map(|g| g * s).collect();
            let rk = r_of(&gs)?;
            worst = worst.max(
                r0.scale(C::new(1.0 / s, 0.0)).sub(&rk).frobenius_norm() / rk.frobenius_norm(),
            );
        }
        lines.push((worst <= 1e-10, format!("scaling: relative gap {worst:.2e}")));

        let doubled: Vec<C> = (0..g0.len())
            .map(|t| {
                let inside = ph
                    .inclusions
                    .iter()
                    .any(|i| i.region.contains(mesh.centroid(t)));
                if inside {
                    g0[t] * 2.0
                } else {
                    g0[t]
                }
            })
            .collect();
        let d = r0.re().sub(&r_of(&doubled)?.re()).symmetrized();
        let lmin = monotone_eit::eigen::symmetric_eigen(&d)?.values[0] / r0.frobenius_norm();
        lines.push((
            lmin >= -1e-8,
            format!("real monotonicity: min eigenvalue / ||R|| {lmin:.2e}"),
        ));

        let region = self
            .regions()?
            .first()
            .map(|(_, r)| r.clone())
            .unwrap_or_else(|| ph.inclusions[0].region.clone());
        let md = Modulation {
            region,
            beta,
            sign: case.modulation_sign(),
        };
        let g2 = ph.element_admittivity(&mesh, FreqMode::Dc, Some(&md))?;
        let mut slack: f64 = 0.0;
        for trial in 0..20 {
            let g: Vec<C> = (0..p.len())
                .map(|r| {
                    let x = (trial * p.len() + r) as f64;
                    C::new((1.7 * x).sin(), (0.9 * x + 0.3).cos())
                })
                .collect();
            slack = slack.max(sandwich_check(&mesh, &scaled, &g2, &p, &g)?.relative_slack());
        }
        lines.push((
            slack <= 0.05,
            format!(
                "sandwich: worst slack {:.2}% over 20 patterns",
                100.0 * slack
            ),
        ));

        let mut ident: f64 = 0.0;
        for bt in [0.0, beta, -beta] {
            for id in pointwise_identities(&ph, bt)? {
                ident = ident.max(id.max_relative_gap());
            }
        }
        lines.push((
            ident <= 1e-12,
            format!("pointwise identities: relative gap {ident:.2e}"),
        ));

        let mut failed = 0;
        for (ok, text) in &lines {
            println!("{} {text}", if *ok { "PASS" } else { "FAIL" });
            failed += !ok as usize;
        }
        if failed > 0 {
            bail!("{failed} of {} properties failed", lines.len());
        }
        Ok(())
    }
}

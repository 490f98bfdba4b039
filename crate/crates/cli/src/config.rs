//! Run configuration: a TOML file with named blocks.

use std::path::Path;

use anyhow::{bail, Context, Result};
use monotone_eit::geometry::{ElectrodeLayout, RegionSpec};
use monotone_eit::phantom::{Inclusion, Phantom, TestCase};
use serde::Deserialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub phantom: Background,
    #[serde(default, rename = "inclusion")]
    pub inclusions: Vec<InclusionBlock>,
    #[serde(default)]
    pub measurement: Measurement,
    #[serde(default)]
    pub detection: Detection,
    #[serde(default, rename = "region")]
    pub regions: Vec<NamedRegion>,
    pub scan: Option<ScanBlock>,
    #[serde(default)]
    pub output: Output,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub radius: f64,
    pub electrodes: usize,
    #[serde(default = "default_coverage")]
    pub coverage: f64,
    /// Radians; electrode 1 is centred on the positive x axis when omitted.
    pub start_angle: Option<f64>,
    pub target_h: f64,
    /// Uniform refinements applied to the generated mesh.
    #[serde(default)]
    pub level: usize,
}

fn default_coverage() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub sigma: f64,
    pub eps: f64,
    pub omega: f64,
}

/// A disk (`center` and `radius`) or a polygon (`vertices`).
fn shape(
    center: Option<[f64; 2]>,
    radius: Option<f64>,
    vertices: &Option<Vec<[f64; 2]>>,
    what: &str,
) -> Result<RegionSpec<f64>> {
    match (center, radius, vertices) {
        (Some(c), Some(r), None) => Ok(RegionSpec::disk(c[0], c[1], r)),
        (None, None, Some(v)) => Ok(RegionSpec::Polygon {
            vertices: v.clone(),
        }),
        _ => bail!("{what}: give either `center` and `radius` or `vertices`"),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionBlock {
    pub center: Option<[f64; 2]>,
    pub radius: Option<f64>,
    pub vertices: Option<Vec<[f64; 2]>>,
    pub sigma: f64,
    pub eps: f64,
}

impl InclusionBlock {
    pub fn region(&self, what: &str) -> Result<RegionSpec<f64>> {
        shape(self.center, self.radius, &self.vertices, what)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measurement {
    #[serde(default = "default_patterns")]
    pub patterns: String,
}

fn default_patterns() -> String {
    "adjacent".into()
}

impl Default for Measurement {
    fn default() -> Self {
        Measurement {
            patterns: default_patterns(),
        }
    }
}

/// A number or a keyword.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum NumberOr {
    Number(f64),
    Word(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Value(f64),
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta {
    Value(f64),
    Auto,
}

pub fn parse_beta(v: &NumberOr) -> Result<Beta> {
    match v {
        NumberOr::Number(x) if *x >= 0.0 => Ok(Beta::Value(*x)),
        NumberOr::Number(x) => bail!("detection.beta must be non-negative, got {x}"),
        NumberOr::Word(w) if w == "max" || w == "theorem-max" => Ok(Beta::Max),
        NumberOr::Word(w) => bail!("detection.beta: expected a number or \"max\", got {w:?}"),
    }
}

pub fn parse_delta(v: &NumberOr) -> Result<Delta> {
    match v {
        NumberOr::Number(x) if *x >= 0.0 => Ok(Delta::Value(*x)),
        NumberOr::Number(x) => bail!("detection.delta must be non-negative, got {x}"),
        NumberOr::Word(w) if w == "auto" => Ok(Delta::Auto),
        NumberOr::Word(w) => bail!("detection.delta: expected a number or \"auto\", got {w:?}"),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    #[serde(default = "default_beta")]
    pub beta: NumberOr,
    #[serde(default = "default_delta")]
    pub delta: NumberOr,
    /// "a", "b" or "auto".
    #[serde(default = "default_case")]
    pub case: String,
}

fn default_beta() -> NumberOr {
    NumberOr::Word("max".into())
}

fn default_delta() -> NumberOr {
    NumberOr::Word("auto".into())
}

fn default_case() -> String {
    "auto".into()
}

impl Default for Detection {
    fn default() -> Self {
        Detection {
            beta: default_beta(),
            delta: default_delta(),
            case: default_case(),
        }
    }
}

impl Detection {
    pub fn case(&self) -> Result<Option<TestCase>> {
        match self.case.as_str() {
            "auto" => Ok(None),
            "a" => Ok(Some(TestCase::A)),
            "b" => Ok(Some(TestCase::B)),
            other => bail!("detection.case: expected \"a\", \"b\" or \"auto\", got {other:?}"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedRegion {
    pub name: String,
    pub center: Option<[f64; 2]>,
    pub radius: Option<f64>,
    pub vertices: Option<Vec<[f64; 2]>>,
}

impl NamedRegion {
    pub fn region(&self) -> Result<RegionSpec<f64>> {
        shape(
            self.center,
            self.radius,
            &self.vertices,
            &format!("region {}", self.name),
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub ball_radius: f64,
    pub spacing: f64,
    #[serde(default)]
    pub margin: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_dir")]
    pub dir: String,
}

fn default_dir() -> String {
    "out".into()
}

impl Default for Output {
    fn default() -> Self {
        Output { dir: default_dir() }
    }
}

/// Parsed configuration with the hash of its source text.
pub struct Loaded {
    pub config: RunConfig,
    pub hash: String,
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let config = parse(&text).with_context(|| format!("config {}", path.display()))?;
    let digest = Sha256::digest(text.as_bytes());
    let hash = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(Loaded { config, hash })
}

pub fn parse(text: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].lines().count().max(1));
        let msg = e.message().replace('\n', " ");
        match line {
            Some(l) => anyhow::anyhow!("line {l}: {msg}"),
            None => anyhow::anyhow!("{msg}"),
        }
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if !(g.radius > 0.0) {
            bail!("geometry.radius must be positive, got {}", g.radius);
        }
        if !(g.target_h > 0.0 && g.target_h < g.radius) {
            bail!(
                "geometry.target_h must lie in (0, radius), got {}",
                g.target_h
            );
        }
        self.layout().validate()?;
        for (k, inc) in self.inclusions.iter().enumerate() {
            inc.region(&format!("inclusion {}", k + 1))?;
        }
        self.phantom_model()?.validate(g.radius)?;
        if self.measurement.patterns != "adjacent" {
            bail!(
                "measurement.patterns: only \"adjacent\" is supported, got {:?}",
                self.measurement.patterns
            );
        }
        parse_beta(&self.detection.beta)?;
        parse_delta(&self.detection.delta)?;
        self.detection.case()?;
        let mut names = std::collections::BTreeSet::new();
        for r in &self.regions {
            if !names.insert(r.name.as_str()) {
                bail!("region name {:?} is used twice", r.name);
            }
            if r.name.is_empty()
                || r.name
                    .contains(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-'))
            {
                bail!(
                    "region name {:?} must be non-empty and use only letters, digits, '_' or '-'",
                    r.name
                );
            }
            r.region()?.validate()?;
        }
        Ok(())
    }

    pub fn layout(&self) -> ElectrodeLayout<f64> {
        let g = &self.geometry;
        let mut lay = ElectrodeLayout::centered(g.electrodes, g.coverage);
        if let Some(a) = g.start_angle {
            lay.start_angle = a;
        }
        lay
    }

    pub fn phantom_model(&self) -> Result<Phantom<f64>> {
        let inclusions = self
            .inclusions
            .iter()
            .enumerate()
            .map(|(k, i)| {
                Ok(Inclusion {
                    region: i.region(&format!("inclusion {}", k + 1))?,
                    sigma: i.sigma,
                    eps: i.eps,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Phantom {
            sigma_bg: self.phantom.sigma,
            eps_bg: self.phantom.eps,
            omega: self.phantom.omega,
            inclusions,
        })
    }

    pub fn named_regions(&self) -> Result<Vec<(String, RegionSpec<f64>)>> {
        self.regions
            .iter()
            .map(|r| Ok((r.name.clone(), r.region()?)))
            .collect()
    }
}

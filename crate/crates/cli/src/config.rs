//! Run configuration: a JSON config file plus flag overrides resolve into
//! the concrete family, mode, starts and solver settings a command runs
//! with. Flags win over the file, which wins over defaults.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use conical_core::{
    builtin, load_family, BaselineConfig, MatrixFamily, ModeKind, MultiplicityMode, PairChoice,
    ParameterPoint, SolverConfig,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::output::OutputFormat;

/// Start-point source: an explicit list, or a seeded sampler over a box or
/// circle. Identical seeds reproduce identical starts.
#[derive(Clone, Debug)]
pub enum StartSpec {
    Explicit(Vec<Vec<f64>>),
    Box {
        ranges: Vec<(f64, f64)>,
        count: usize,
        seed: u64,
    },
    Circle {
        center: (f64, f64),
        radius: f64,
        count: usize,
        seed: u64,
    },
}

impl StartSpec {
    pub fn materialize(&self, d: usize) -> Result<Vec<ParameterPoint>> {
        let points = match self {
            StartSpec::Explicit(list) => {
                let mut pts = Vec::with_capacity(list.len());
                for coords in list {
                    if coords.len() != d {
                        bail!(
                            "start point has {} coordinates, family expects {d}",
                            coords.len()
                        );
                    }
                    pts.push(ParameterPoint::new(coords.clone())?);
                }
                pts
            }
            StartSpec::Box {
                ranges,
                count,
                seed,
            } => {
                if ranges.len() != d {
                    bail!("sample box has {} ranges, family expects {d}", ranges.len());
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..*count)
                    .map(|_| {
                        let coords = ranges
                            .iter()
                            .map(|&(lo, hi)| lo + (hi - lo) * rng.random_range(0.0..1.0))
                            .collect::<Vec<_>>();
                        ParameterPoint::new(coords).map_err(Into::into)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            StartSpec::Circle {
                center,
                radius,
                count,
                seed,
            } => {
                if d != 2 {
                    bail!("circle sampling requires a 2-parameter family");
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..*count)
                    .map(|_| {
                        let theta: f64 = rng.random_range(0.0..(2.0 * std::f64::consts::PI));
                        ParameterPoint::new(vec![
                            center.0 + radius * theta.cos(),
                            center.1 + radius * theta.sin(),
                        ])
                        .map_err(Into::into)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        if points.is_empty() {
            bail!("no start points specified");
        }
        Ok(points)
    }
}

/// Everything a run needs, fully resolved.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub family: MatrixFamily,
    pub mode: MultiplicityMode,
    pub starts: Vec<ParameterPoint>,
    pub solver: SolverConfig,
    pub baseline: BaselineConfig,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

/// JSON config file schema. Every field is optional; flags override.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub family: Option<FamilySource>,
    pub mode: Option<String>,
    pub pair: Option<usize>,
    pub starts: Option<Vec<Vec<f64>>>,
    pub sample: Option<SampleConfig>,
    pub solver: Option<SolverConfig>,
    pub baseline: Option<BaselineConfig>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySource {
    pub builtin: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    #[serde(rename = "box")]
    pub box_ranges: Option<Vec<Vec<f64>>>,
    pub circle: Option<CircleConfig>,
    pub count: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleConfig {
    pub center: Vec<f64>,
    pub radius: f64,
}

pub fn parse_mode(s: &str) -> Result<Option<ModeKind>> {
    let kind = match s {
        "auto" => return Ok(None),
        "double2d" | "double-2d" => ModeKind::Double2D,
        "hermitian3d" | "hermitian-double-3d" => ModeKind::HermitianDouble3D,
        "inversion2d" | "inversion-symmetric-2d" => ModeKind::InversionSymmetric2D,
        "triple5d" | "triple-5d" => ModeKind::Triple5D,
        other => bail!(
            "unknown mode `{other}` (expected auto, double2d, hermitian3d, inversion2d or triple5d)"
        ),
    };
    Ok(Some(kind))
}

/// `key=value` pair for builtin family parameters.
pub fn parse_param(s: &str) -> Result<(String, f64)> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("expected key=value, got `{s}`"))?;
    let value: f64 = value
        .parse()
        .with_context(|| format!("parameter `{key}` has a non-numeric value `{value}`"))?;
    Ok((key.to_string(), value))
}

/// Semicolon-separated list of comma-separated coordinates.
pub fn parse_starts(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';')
        .filter(|chunk| !chunk.trim().is_empty())
        .map(|chunk| {
            chunk
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .with_context(|| format!("bad coordinate `{v}` in `{chunk}`"))
                })
                .collect()
        })
        .collect()
}

/// Comma-separated `lo:hi` ranges, one per parameter axis.
pub fn parse_ranges(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|chunk| {
            let (lo, hi) = chunk
                .split_once(':')
                .ok_or_else(|| anyhow!("expected lo:hi, got `{chunk}`"))?;
            let lo: f64 = lo.trim().parse().context("bad range bound")?;
            let hi: f64 = hi.trim().parse().context("bad range bound")?;
            if !(lo < hi) {
                bail!("empty range {lo}:{hi}");
            }
            Ok((lo, hi))
        })
        .collect()
}

pub fn parse_circle(s: &str) -> Result<((f64, f64), f64)> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().context("bad circle component"))
        .collect::<Result<_>>()?;
    if parts.len() != 3 {
        bail!("expected cx,cy,radius");
    }
    if !(parts[2] > 0.0) {
        bail!("circle radius must be positive");
    }
    Ok(((parts[0], parts[1]), parts[2]))
}

pub fn parse_point(s: &str) -> Result<ParameterPoint> {
    let coords: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().context("bad coordinate"))
        .collect::<Result<_>>()?;
    Ok(ParameterPoint::new(coords)?)
}

/// Builds the family from either CLI flags or the config file.
pub fn resolve_family(
    flag_builtin: Option<&str>,
    flag_file: Option<&PathBuf>,
    flag_params: &[(String, f64)],
    file_cfg: Option<&FamilySource>,
) -> Result<MatrixFamily> {
    if flag_builtin.is_some() && flag_file.is_some() {
        bail!("--family and --family-file are mutually exclusive");
    }
    if let Some(name) = flag_builtin {
        let mut params: BTreeMap<String, f64> =
            file_cfg.map(|f| f.params.clone()).unwrap_or_default();
        params.extend(flag_params.iter().cloned());
        return Ok(builtin(name, &params)?);
    }
    if let Some(path) = flag_file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading family file {}", path.display()))?;
        return Ok(load_family(&text)?);
    }
    match file_cfg {
        Some(src) => {
            if let Some(name) = &src.builtin {
                let mut params = src.params.clone();
                params.extend(flag_params.iter().cloned());
                Ok(builtin(name, &params)?)
            } else if let Some(path) = &src.file {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading family file {}", path.display()))?;
                Ok(load_family(&text)?)
            } else {
                bail!("config `family` must name a builtin or a file");
            }
        }
        None => bail!("no family specified (use --family, --family-file or a config file)"),
    }
}

/// Mode selection: explicit kind, or the natural kind for the family.
pub fn resolve_mode(
    family: &MatrixFamily,
    kind: Option<ModeKind>,
    pair: Option<usize>,
) -> Result<MultiplicityMode> {
    let kind = match kind {
        Some(k) => k,
        None => ModeKind::default_for(family).ok_or_else(|| {
            anyhow!(
                "no natural mode for family `{}` (d = {}, {})",
                family.name(),
                family.d(),
                family.symmetry()
            )
        })?,
    };
    Ok(match pair {
        Some(k) => MultiplicityMode::with_pair(kind, k),
        None => MultiplicityMode::new(kind),
    })
}

pub fn load_file_config(path: Option<&PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

pub fn format_from(flag: Option<&str>, file: Option<&str>) -> Result<OutputFormat> {
    let chosen = flag.or(file).unwrap_or("trace-json-lines");
    OutputFormat::from_str(chosen).map_err(|e| anyhow!(e))
}

/// Resolved pair choice as a display string for summaries.
pub fn pair_label(mode: &MultiplicityMode) -> String {
    match mode.pair {
        PairChoice::Auto => "auto".to_string(),
        PairChoice::Index(k) => k.to_string(),
    }
}

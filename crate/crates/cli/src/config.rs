//! TOML run configuration.
//!
//! ```toml
//! schema_version = 1
//! L = 16
//! t2 = 1.5
//! t12 = "pi/2"
//! p = 1.0
//!
//! [run]
//! n_traj = 200
//! seed = 7
//!
//! [scan]
//! t12 = { start = 0, stop = "2pi", points = 9 }
//! t2 = [1, 3, 5]
//! quantity = "delta_s"
//! ```
//!
//! Ladder couplings sit at the top level; `t1` and `tau_u` default to 1.
//! Unknown keys are rejected and errors carry the offending key path.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ladder_core::analysis::FitModel;
use ladder_core::engine::{InitKind, Observable, RunConfig, ScanGrid, ScanQuantity};
use ladder_core::lattice::LadderParams;
use ladder_core::nonmarkov::PairMode;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::expr::Real;

pub const SCHEMA_VERSION: u32 = 1;

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn one() -> Real {
    Real(1.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(default = "one")]
    pub t1: Real,
    pub t2: Real,
    pub t12: Real,
    #[serde(default = "one")]
    pub tau_u: Real,
    pub p: Real,
    #[serde(default)]
    pub run: RunSection,
    pub trajectory: Option<TrajectorySection>,
    pub scan: Option<ScanSection>,
    pub negativity: Option<NegativitySection>,
    pub blp: Option<BlpSection>,
    pub d2: Option<D2Section>,
    pub fit: Option<FitSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_st: Option<usize>,
    pub m: Option<usize>,
    pub n_traj: Option<usize>,
    pub seed: Option<u64>,
    pub init: Option<InitKind>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    /// Observable specs such as `"entropy:L/2"`, `"negativity:4"`,
    /// `"mutual_information:L/8"`, `"particle_number"`.
    pub observables: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<Real>),
    Range { start: Real, stop: Real, points: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.iter().map(|r| r.0).collect(),
            Axis::Range { start, stop, points } => ScanGrid::linspace(start.0, stop.0, *points),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub t12: Axis,
    pub t2: Axis,
    pub quantity: ScanQuantity,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegativitySection {
    pub lengths: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlpSection {
    pub n_pairs: usize,
    pub t_max: usize,
    pub pair_mode: Option<PairMode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct D2Section {
    pub n_pairs: usize,
    pub n_traj: usize,
    pub t_max: usize,
    pub pair_mode: Option<PairMode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// CSV with columns `L`, `mean`, `ci95_low`, `ci95_high` and optionally `t2`.
    pub input: PathBuf,
    pub model: FitModel,
    pub ranges: Vec<[usize; 2]>,
    #[serde(default)]
    pub weighted: bool,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub params: LadderParams,
    pub run: RunConfig,
    pub file: ConfigFile,
    /// Directory of the config file, for resolving relative paths.
    pub base_dir: PathBuf,
}

pub fn parse_config(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("", format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config_str(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

pub fn parse_config_str(text: &str) -> Result<Config, CliError> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| CliError::config("", e.to_string()))?;
    let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;
    validate(file)
}

fn validate(file: ConfigFile) -> Result<Config, CliError> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::config(
            "schema_version",
            format!("unsupported schema version {} (expected {SCHEMA_VERSION})", file.schema_version),
        ));
    }
    if file.l < 2 {
        return Err(CliError::config("L", format!("L = {} must be at least 2", file.l)));
    }
    if !(0.0..=1.0).contains(&file.p.0) {
        return Err(CliError::config("p", format!("p = {} outside [0, 1]", file.p.0)));
    }
    if !(file.tau_u.0 > 0.0) {
        return Err(CliError::config("tau_u", "tau_u must be positive"));
    }
    let params = LadderParams::new(file.l, file.t2.0, file.t12.0, file.p.0).with_t1(file.t1.0).with_tau(file.tau_u.0);
    params.validate().map_err(|e| CliError::config("", e.to_string()))?;
    let defaults = RunConfig::defaults_for(file.l, file.t2.0);
    let r = &file.run;
    let run = RunConfig {
        t_st: r.t_st.unwrap_or(defaults.t_st),
        m: r.m.unwrap_or(defaults.m),
        n_traj: r.n_traj.unwrap_or(defaults.n_traj),
        base_seed: r.seed.unwrap_or(defaults.base_seed),
        init: r.init.unwrap_or_default(),
    };
    for (key, v) in [("run.t_st", run.t_st), ("run.m", run.m), ("run.n_traj", run.n_traj)] {
        if v == 0 {
            return Err(CliError::config(key, "must be positive"));
        }
    }
    if let Some(t) = &file.trajectory {
        for (i, s) in t.observables.iter().enumerate() {
            parse_observable(s, file.l).map_err(|e| CliError::config(format!("trajectory.observables[{i}]"), e))?;
        }
    }
    if let Some(s) = &file.scan {
        if s.t12.values().is_empty() || s.t2.values().is_empty() {
            return Err(CliError::config("scan", "scan axes must be nonempty"));
        }
    }
    if let Some(f) = &file.fit {
        for (i, [a, b]) in f.ranges.iter().enumerate() {
            if a >= b {
                return Err(CliError::config(format!("fit.ranges[{i}]"), "range must satisfy L_min < L_max"));
            }
        }
    }
    Ok(Config { params, run, file, base_dir: PathBuf::new() })
}

/// Segment lengths written as integers or `L/k`.
pub fn parse_length(text: &str, l: usize) -> Result<usize, String> {
    let t = text.trim();
    let value = if t == "L" {
        l
    } else if let Some(k) = t.strip_prefix("L/") {
        let k: usize = k.parse().map_err(|_| format!("bad length `{text}`"))?;
        if k == 0 {
            return Err(format!("bad length `{text}`"));
        }
        l / k
    } else {
        t.parse().map_err(|_| format!("bad length `{text}`"))?
    };
    if value == 0 || value > l {
        return Err(format!("length `{text}` = {value} outside 1..={l}"));
    }
    Ok(value)
}

pub fn parse_observable(text: &str, l: usize) -> Result<Observable, String> {
    let (kind, arg) = match text.split_once(':') {
        Some((k, a)) => (k.trim(), Some(a)),
        None => (text.trim(), None),
    };
    let len = || parse_length(arg.ok_or_else(|| format!("`{text}` needs a length, e.g. `{kind}:L/2`"))?, l);
    Ok(match kind {
        "entropy" => Observable::Entropy { len: len()? },
        "renyi" => Observable::Renyi { len: len()? },
        "negativity" => Observable::Negativity { len: len()? },
        "mutual_information" => {
            let len = len()?;
            if 2 * len > l {
                return Err(format!("two arcs of length {len} do not fit on L = {l}"));
            }
            Observable::MutualInformation { len }
        }
        "particle_number" if arg.is_none() => Observable::ParticleNumber,
        _ => return Err(format!("unknown observable `{text}`")),
    })
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',').map(|v| crate::expr::parse_real(v).map(Real)).collect::<Result<_, _>>().map(Axis::Values)
    }
}

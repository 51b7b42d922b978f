//! Scenario configuration and the JSON specs it is built from.
//!
//! Paths inside a config resolve relative to the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use balayage_core::classical_domains::BallDomain;
use balayage_core::geometry::GridOpenSet;
use balayage_core::poisson_jensen::{CanonicalSubharmonic, Region};
use balayage_core::DiscreteMeasure;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    PjClassical,
    PjSymmetric,
    PjMeasure,
    MainLemma,
    BalayageHar,
    BalayageSbh,
    DualityRoundtrip,
    MfsFit,
    InwardFill,
    WosCompare,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    pub params: serde_json::Value,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<(Config, serde_json::Value), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let raw: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        let config: Config =
            serde_json::from_value(raw.clone()).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        Ok((config, raw))
    }

    pub fn params<T: for<'de> Deserialize<'de>>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.params.clone())
            .map_err(|e| CliError::Config(format!("invalid params for {:?}: {e}", self.kind)))
    }
}

/// Tolerances with defaults; unknown names are rejected.
pub struct Tolerances {
    values: BTreeMap<String, f64>,
}

impl Tolerances {
    pub fn new(given: &BTreeMap<String, f64>, defaults: &[(&str, f64)]) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, f64> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in given {
            if !values.contains_key(k) {
                let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
                return Err(CliError::Config(format!(
                    "unknown tolerance {k:?}; expected one of {known:?}"
                )));
            }
            if !(v.is_finite() && *v >= 0.0) {
                return Err(CliError::Config(format!(
                    "tolerance {k:?} must be a finite non-negative number"
                )));
            }
            values.insert(k.clone(), *v);
        }
        Ok(Tolerances { values })
    }

    pub fn get(&self, name: &str) -> f64 {
        self.values[name]
    }
}

pub struct Resolver {
    base: PathBuf,
}

impl Resolver {
    pub fn new(config_path: &Path) -> Self {
        let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
        Resolver { base }
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn read(&self, p: &Path) -> Result<String, CliError> {
        let full = self.path(p);
        std::fs::read_to_string(&full).map_err(|e| CliError::Config(format!("cannot read {}: {e}", full.display())))
    }

    pub fn measure(&self, spec: &MeasureSpec) -> Result<DiscreteMeasure, CliError> {
        Ok(match spec {
            MeasureSpec::Measure(m) => m.clone(),
            MeasureSpec::Dirac(x) => DiscreteMeasure::dirac(x)?,
            MeasureSpec::HarmonicMeasure { ball, pole, n } => ball_of(ball)?.harmonic_measure_quadrature(pole, *n)?,
            MeasureSpec::Sweep { measure, ball, n } => {
                let mu = self.measure(measure)?;
                let ball = ball_of(ball)?;
                let mut out = DiscreteMeasure::empty(mu.dim());
                for a in mu.atoms() {
                    let w = ball.harmonic_measure_quadrature(&a.location, *n)?;
                    out = DiscreteMeasure::combine(1.0, &out, a.weight, &w)?;
                }
                out
            }
            MeasureSpec::File(p) => serde_json::from_str(&self.read(p)?)
                .map_err(|e| CliError::Config(format!("invalid measure file {}: {e}", p.display())))?,
        })
    }

    pub fn grid(&self, spec: &GridSpec) -> Result<GridOpenSet, CliError> {
        Ok(match spec {
            GridSpec::Box { origin, spacing, shape } => GridOpenSet::full_box(origin.clone(), *spacing, shape.clone())?,
            GridSpec::Mask(p) => GridOpenSet::parse_mask(&self.read(p)?)?,
        })
    }

    /// `default_region` applies to specs that do not declare one.
    pub fn subharmonic(
        &self,
        spec: &SubharmonicSpec,
        default_region: &Region,
    ) -> Result<CanonicalSubharmonic, CliError> {
        let region_or = |r: &Option<Region>| r.clone().unwrap_or_else(|| default_region.clone());
        Ok(match spec {
            SubharmonicSpec::Canonical(u) => u.clone(),
            SubharmonicSpec::Kernel { pole, region } => CanonicalSubharmonic::kernel(pole, region_or(region))?,
            SubharmonicSpec::Potential {
                measure,
                sources,
                constant,
                region,
            } => {
                let mu = self.measure(measure)?;
                let src = sources.clone().unwrap_or_else(|| DiscreteMeasure::empty(mu.dim()));
                CanonicalSubharmonic::new(mu, src, constant.unwrap_or(0.0), region_or(region))?
            }
            SubharmonicSpec::File(p) => serde_json::from_str(&self.read(p)?)
                .map_err(|e| CliError::Config(format!("invalid subharmonic file {}: {e}", p.display())))?,
        })
    }
}

pub fn ball_of(b: &BallDomain) -> Result<BallDomain, CliError> {
    Ok(BallDomain::new(b.center.clone(), b.radius)?)
}

/// A discrete measure, inline or derived.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Measure(DiscreteMeasure),
    Dirac(Vec<f64>),
    HarmonicMeasure {
        ball: BallDomain,
        pole: Vec<f64>,
        n: usize,
    },
    /// Each atom of `measure` replaced by its harmonic measure quadrature on `ball`.
    Sweep {
        measure: Box<MeasureSpec>,
        ball: BallDomain,
        n: usize,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Box {
        origin: Vec<f64>,
        spacing: f64,
        shape: Vec<usize>,
    },
    Mask(PathBuf),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SubharmonicSpec {
    Canonical(CanonicalSubharmonic),
    Kernel {
        pole: Vec<f64>,
        #[serde(default)]
        region: Option<Region>,
    },
    Potential {
        measure: MeasureSpec,
        #[serde(default)]
        sources: Option<DiscreteMeasure>,
        #[serde(default)]
        constant: Option<f64>,
        #[serde(default)]
        region: Option<Region>,
    },
    File(PathBuf),
}

/// Seeded family of subharmonic functions on the grid box with atoms kept
/// `clearance` away from the supports of the measures under test.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFamily {
    pub count: usize,
    #[serde(default = "default_atoms")]
    pub atoms: usize,
    #[serde(default = "default_sources")]
    pub sources: usize,
    #[serde(default = "default_clearance")]
    pub clearance: f64,
}

fn default_atoms() -> usize {
    3
}

fn default_sources() -> usize {
    2
}

fn default_clearance() -> f64 {
    0.2
}

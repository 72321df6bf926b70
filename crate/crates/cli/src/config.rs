//! Run configuration from a key-value file plus command-line overrides.
//!
//! Recognized keys:
//!
//! | key              | meaning                                            |
//! |------------------|----------------------------------------------------|
//! | `family`         | `normal` (default) or `binomial`                   |
//! | `sigma`          | normal sd, scalar or one per grid point (default 1)|
//! | `trials`         | binomial `n`                                       |
//! | `grid`           | explicit support points, comma separated           |
//! | `range`, `delta` | build the grid from a mean range and tolerance     |
//! | `gamma`          | pruning threshold (default 0.15)                   |
//! | `tol`, `max_iter`| outer convergence controls                         |
//! | `inner_tol`, `inner_max_iter` | per-component solver controls         |
//! | `seed`           | recorded only; the fit is deterministic            |
//! | `input`          | observation file, relative to the config file      |

use std::path::{Path, PathBuf};

use locmix_core::emfit::{EmConfig, InnerConfig, MixtureModel};
use locmix_core::gridsel::{build_grid, GridSpec};
use locmix_core::BaseFamily;

use crate::error::{read_file, CliError};
use crate::kv::KvMap;

pub const KEYS: &[&str] = &[
    "family",
    "sigma",
    "trials",
    "grid",
    "range",
    "delta",
    "gamma",
    "tol",
    "max_iter",
    "inner_tol",
    "inner_max_iter",
    "seed",
    "input",
];

#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    /// One sd shared by all components, or one per grid point.
    Normal { sigmas: Vec<f64> },
    Binomial { n: u32 },
}

impl FamilySpec {
    pub fn from_map(map: &KvMap) -> Result<Self, CliError> {
        match map.get("family").unwrap_or("normal") {
            "normal" => {
                let sigmas = map.list("sigma")?.unwrap_or_else(|| vec![1.0]);
                for &s in &sigmas {
                    BaseFamily::normal(s)?;
                }
                Ok(FamilySpec::Normal { sigmas })
            }
            "binomial" => {
                let n = map
                    .usize("trials")?
                    .ok_or_else(|| CliError::Config("binomial family needs `trials`".into()))?;
                let n = u32::try_from(n).map_err(|_| CliError::Config("trials too large".into()))?;
                BaseFamily::binomial(n)?;
                Ok(FamilySpec::Binomial { n })
            }
            other => Err(CliError::Config(format!("unknown family {other:?}"))),
        }
    }

    /// The shared base family; fails when sds differ per component.
    pub fn shared(&self) -> Result<BaseFamily, CliError> {
        match self {
            FamilySpec::Normal { sigmas } if sigmas.len() == 1 => Ok(BaseFamily::normal(sigmas[0])?),
            FamilySpec::Normal { .. } => Err(CliError::Config(
                "per-component sigma needs an explicit grid".into(),
            )),
            FamilySpec::Binomial { n } => Ok(BaseFamily::binomial(*n)?),
        }
    }

    pub fn per_component(&self, count: usize) -> Result<Vec<BaseFamily>, CliError> {
        match self {
            FamilySpec::Normal { sigmas } if sigmas.len() > 1 => {
                if sigmas.len() != count {
                    return Err(CliError::Config(format!(
                        "{} sigma values for {count} grid points",
                        sigmas.len()
                    )));
                }
                sigmas
                    .iter()
                    .map(|&s| BaseFamily::normal(s).map_err(CliError::from))
                    .collect()
            }
            _ => Ok(vec![self.shared()?; count]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridChoice {
    Points(Vec<f64>),
    Range { lo: f64, hi: f64, delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: FamilySpec,
    pub grid: Option<GridChoice>,
    pub em: EmConfig,
    pub input: Option<PathBuf>,
}

impl RunConfig {
    /// Reads `path` (if any) and applies `overrides` on top.
    pub fn load(path: Option<&Path>, overrides: &[(&str, String)]) -> Result<Self, CliError> {
        let mut map = match path {
            Some(p) => KvMap::parse(&read_file(p)?, true).map_err(|e| e.in_file(p))?,
            None => KvMap::default(),
        };
        if let (Some(p), Some(input)) = (path, map.get("input")) {
            let input = Path::new(input);
            if input.is_relative() {
                let base = p.parent().unwrap_or(Path::new(""));
                map.set("input", base.join(input).to_string_lossy().into_owned());
            }
        }
        for (k, v) in overrides {
            map.set(k, v.clone());
        }
        Self::from_map(&map)
    }

    pub fn from_map(map: &KvMap) -> Result<Self, CliError> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(k)) {
            return Err(CliError::Config(format!("unknown key {k:?}")));
        }
        let family = FamilySpec::from_map(map)?;
        let grid = match (map.list("grid")?, map.list("range")?, map.f64("delta")?) {
            (Some(_), Some(_), _) => {
                return Err(CliError::Config("give either `grid` or `range`, not both".into()))
            }
            (Some(points), None, _) => Some(GridChoice::Points(points)),
            (None, Some(r), Some(delta)) => {
                if r.len() != 2 {
                    return Err(CliError::Config("range needs two values lo,hi".into()));
                }
                Some(GridChoice::Range { lo: r[0], hi: r[1], delta })
            }
            (None, Some(_), None) => return Err(CliError::Config("range needs `delta`".into())),
            (None, None, _) => None,
        };
        let defaults = EmConfig::default();
        let em = EmConfig {
            gamma: map.f64("gamma")?.unwrap_or(defaults.gamma),
            tol: map.f64("tol")?.unwrap_or(defaults.tol),
            max_iter: map.usize("max_iter")?.unwrap_or(defaults.max_iter),
            inner: InnerConfig {
                tol: map.f64("inner_tol")?.unwrap_or(defaults.inner.tol),
                max_iter: map.usize("inner_max_iter")?.unwrap_or(defaults.inner.max_iter),
            },
            seed: map.usize("seed")?.map_or(defaults.seed, |s| s as u64),
        };
        em.validate()?;
        Ok(RunConfig {
            family,
            grid,
            em,
            input: map.get("input").map(PathBuf::from),
        })
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        match &self.grid {
            None => Err(CliError::Config("no grid: set `grid` or `range` and `delta`".into())),
            Some(GridChoice::Points(p)) => {
                let family = match &self.family {
                    FamilySpec::Normal { sigmas } => BaseFamily::normal(sigmas[0])?,
                    FamilySpec::Binomial { n } => BaseFamily::binomial(*n)?,
                };
                Ok(GridSpec::from_points(family, p)?)
            }
            Some(GridChoice::Range { lo, hi, delta }) => {
                Ok(build_grid(&self.family.shared()?, (*lo, *hi), *delta)?)
            }
        }
    }

    /// Uniform proportions and zero `lambda` on the configured grid.
    pub fn initial_model(&self) -> Result<MixtureModel, CliError> {
        let points = self.grid_spec()?.points();
        let families = self.family.per_component(points.len())?;
        let anchors: Vec<_> = families.into_iter().zip(points).collect();
        Ok(MixtureModel::uniform(&anchors)?)
    }
}

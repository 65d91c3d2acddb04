//! Run configuration: JSON with unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thouless_lab::{
    LeadModel, QuadratureConfig, SampleSpec, Side, TabulatedLead, ThermoState, WeightFunction,
};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub hop: Vec<f64>,
    pub onsite: Vec<f64>,
    pub kappa_s: f64,
}

impl SampleConfig {
    fn build(&self, field: &str) -> Result<SampleSpec, CliError> {
        SampleSpec::new(self.hop.clone(), self.onsite.clone(), self.kappa_s)
            .map_err(|e| CliError::Config(format!("{field}: {e}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CrystalSource {
    Marker(String),
    Explicit(SampleConfig),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LeadConfig {
    Crystalline { sample: CrystalSource },
    HalfLineChain { t: f64, v0: f64 },
    Tabulated { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadsConfig {
    pub left: LeadConfig,
    pub right: LeadConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Beta {
    Finite(f64),
    Named(Infinity),
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub enum Infinity {
    #[serde(rename = "inf")]
    Inf,
}

impl Beta {
    fn value(self) -> f64 {
        match self {
            Self::Finite(b) => b,
            Self::Named(Infinity::Inf) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoConfig {
    pub beta_l: Beta,
    pub mu_l: f64,
    pub beta_r: Beta,
    pub mu_r: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Points(PointsGrid),
    Count(CountGrid),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsGrid {
    pub points: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountGrid {
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sample: SampleConfig,
    pub leads: Option<LeadsConfig>,
    pub kappa: Option<f64>,
    pub thermo: Option<ThermoConfig>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    pub energy_grid: Option<GridConfig>,
    pub output: Option<OutputConfig>,
    pub seed: Option<u64>,
    pub weight: Option<WeightFunction>,
    pub n_list: Option<Vec<u64>>,
    pub k_points: Option<usize>,
}

/// Default number of energies when the grid is derived from the bands.
pub const DEFAULT_GRID_COUNT: usize = 201;

/// Validated configuration with models built.
#[derive(Debug, Clone)]
pub struct Run {
    pub raw: RunConfig,
    pub sample: SampleSpec,
    pub leads: Option<(LeadModel, LeadModel)>,
}

impl Run {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Parses and validates; relative lead table paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RunConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        let sample = raw.sample.build("sample")?;
        let leads = match &raw.leads {
            Some(cfg) => Some((
                build_lead(&cfg.left, Side::Left, &sample, base, "leads.left")?,
                build_lead(&cfg.right, Side::Right, &sample, base, "leads.right")?,
            )),
            None => None,
        };
        if let Some(k) = raw.kappa {
            if !(k.is_finite() && k != 0.0) {
                return Err(CliError::Config(format!("kappa: must be finite and nonzero, got {k}")));
            }
        }
        raw.quadrature
            .validate()
            .map_err(|e| CliError::Config(format!("quadrature: {e}")))?;
        if let Some(th) = &raw.thermo {
            build_thermo(th)?;
        }
        if let Some(w) = &raw.weight {
            w.validate().map_err(|e| CliError::Config(format!("weight: {e}")))?;
        }
        match &raw.energy_grid {
            Some(GridConfig::Points(PointsGrid { points })) if points.iter().any(|e| !e.is_finite()) => {
                return Err(CliError::Config("energy_grid.points: values must be finite".into()));
            }
            Some(GridConfig::Count(CountGrid { count })) if *count < 2 => {
                return Err(CliError::Config("energy_grid.count: need at least 2 points".into()));
            }
            _ => {}
        }
        if let Some(list) = &raw.n_list {
            if list.is_empty() || list.contains(&0) || list.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Config(
                    "n_list: must be positive and strictly increasing".into(),
                ));
            }
        }
        Ok(Self { raw, sample, leads })
    }

    pub fn leads(&self) -> Result<&(LeadModel, LeadModel), CliError> {
        self.leads
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs `leads`".into()))
    }

    pub fn kappa(&self) -> Result<f64, CliError> {
        self.raw
            .kappa
            .ok_or_else(|| CliError::Config("this command needs `kappa`".into()))
    }

    pub fn thermo(&self) -> Result<ThermoState, CliError> {
        let th = self
            .raw
            .thermo
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs `thermo`".into()))?;
        build_thermo(th)
    }

    pub fn weight(&self) -> Result<WeightFunction, CliError> {
        self.raw
            .weight
            .ok_or_else(|| CliError::Config("this command needs `weight`".into()))
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        self.raw.quadrature
    }

    /// Explicit points, or `count` points over the band hull padded by 10%.
    pub fn energies(&self) -> Result<Vec<f64>, CliError> {
        let count = match &self.raw.energy_grid {
            Some(GridConfig::Points(PointsGrid { points })) => return Ok(points.clone()),
            Some(GridConfig::Count(CountGrid { count })) => *count,
            None => DEFAULT_GRID_COUNT,
        };
        let hull = self
            .sample
            .band_spectrum()
            .map_err(CliError::Numerical)?
            .hull()
            .ok_or_else(|| CliError::Config("sample has an empty spectrum".into()))?;
        let pad = 0.1 * hull.width().max(1e-3);
        let (lo, hi) = (hull.lo - pad, hull.hi + pad);
        Ok((0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect())
    }
}

fn build_thermo(th: &ThermoConfig) -> Result<ThermoState, CliError> {
    ThermoState::new(th.beta_l.value(), th.mu_l, th.beta_r.value(), th.mu_r)
        .map_err(|e| CliError::Config(format!("thermo: {e}")))
}

fn build_lead(
    cfg: &LeadConfig,
    side: Side,
    sample: &SampleSpec,
    base: &Path,
    field: &str,
) -> Result<LeadModel, CliError> {
    match cfg {
        LeadConfig::Crystalline { sample: src } => {
            let s = match src {
                CrystalSource::Marker(m) if m == "self" => sample.clone(),
                CrystalSource::Marker(m) => {
                    return Err(CliError::Config(format!(
                        "{field}.sample: expected \"self\" or a sample object, found \"{m}\""
                    )))
                }
                CrystalSource::Explicit(c) => c.build(&format!("{field}.sample"))?,
            };
            Ok(LeadModel::crystalline(s, side))
        }
        LeadConfig::HalfLineChain { t, v0 } => LeadModel::half_line_chain(*t, *v0)
            .map_err(|e| CliError::Config(format!("{field}: {e}"))),
        LeadConfig::Tabulated { path } => {
            let full = if path.is_absolute() {
                path.clone()
            } else {
                base.join(path)
            };
            TabulatedLead::read_csv(&full)
                .map(LeadModel::Tabulated)
                .map_err(|e| CliError::Config(format!("{field} ({}): {e}", full.display())))
        }
    }
}

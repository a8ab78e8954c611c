//! TOML run configuration.
//!
//! ```toml
//! [vehicle]
//! mass = 1800.0
//! yaw_inertia = 3000.0
//! lever_front = 1.3
//! lever_rear = 1.6
//! track_front = 1.6
//! stiffness_front = 100000.0
//! stiffness_rear = 100000.0
//! imu_lever_x = 1.5
//!
//! [lateral_model]
//! kind = "omega-vy"
//! x_rho_reverse = -0.21
//! ```
//!
//! Every other section is optional and falls back to its defaults. Unknown
//! keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::GateThresholds;
use crate::ekf::{FilterConfig, FilterTuning};
use crate::error::{Error, Result};
use crate::evaluation::ErrorReduction;
use crate::lateral::{LateralModelKind, LateralModelParams};
use crate::sim::{Scenario, SensorNoise};
use crate::types::{TireParams, VehicleParams};

/// Name of a lateral pseudo-measurement model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    ZeroSlip,
    DeltaBeta,
    #[default]
    OmegaVy,
}

impl ModelName {
    pub const ALL: [ModelName; 3] = [ModelName::ZeroSlip, ModelName::DeltaBeta, ModelName::OmegaVy];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::ZeroSlip => "zero-slip",
            ModelName::DeltaBeta => "delta-beta",
            ModelName::OmegaVy => "omega-vy",
        }
    }
}

impl std::str::FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::param("lateral_model.kind", format!("unknown model `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LateralModelSection {
    pub kind: ModelName,
    pub x_rho_forward: f64,
    pub x_rho_reverse: f64,
    /// δ-β gains; derived from the offsets when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_forward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_reverse: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    /// Output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Directory holding a log written by `simulate`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    pub reduction: ErrorReduction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub vehicle: VehicleParams,
    #[serde(default)]
    pub tire: TireParams,
    #[serde(default)]
    pub lateral_model: LateralModelSection,
    #[serde(default)]
    pub filter: FilterTuning,
    #[serde(default)]
    pub noise: SensorNoise,
    #[serde(default)]
    pub calibration: GateThresholds,
    #[serde(default)]
    pub evaluation: EvaluationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub paths: PathsSection,
}

impl RunConfig {
    pub fn new(vehicle: VehicleParams) -> Self {
        Self {
            vehicle,
            tire: TireParams::default(),
            lateral_model: LateralModelSection::default(),
            filter: FilterTuning::default(),
            noise: SensorNoise::default(),
            calibration: GateThresholds::default(),
            evaluation: EvaluationSection::default(),
            scenario: None,
            paths: PathsSection::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The full configuration, defaults included, as TOML.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        self.tire.validate()?;
        self.filter.validate()?;
        self.noise.validate()?;
        self.calibration.validate()?;
        self.lateral_params()?;
        if let Some(sc) = &self.scenario {
            sc.validate()?;
        }
        Ok(())
    }

    pub fn lateral_params(&self) -> Result<LateralModelParams> {
        LateralModelParams::new(
            self.lateral_model.x_rho_forward,
            self.lateral_model.x_rho_reverse,
            self.vehicle.wheelbase(),
        )
    }

    /// Lateral model of the given name built from this configuration.
    pub fn lateral_kind(&self, name: ModelName) -> Result<LateralModelKind> {
        let params = self.lateral_params()?;
        Ok(match name {
            ModelName::ZeroSlip => LateralModelKind::ZeroSlip,
            ModelName::OmegaVy => LateralModelKind::OmegaVy(params),
            ModelName::DeltaBeta => {
                let derived = LateralModelKind::delta_beta_from(&params)?;
                let LateralModelKind::DeltaBeta { k_forward, k_reverse } = derived else {
                    unreachable!("delta_beta_from builds a δ-β model")
                };
                LateralModelKind::DeltaBeta {
                    k_forward: self.lateral_model.k_forward.unwrap_or(k_forward),
                    k_reverse: self.lateral_model.k_reverse.unwrap_or(k_reverse),
                }
            }
        })
    }

    pub fn filter_config(&self, name: ModelName) -> Result<FilterConfig> {
        Ok(FilterConfig {
            tuning: self.filter,
            lateral_model: self.lateral_kind(name)?,
            imu_lever: self.vehicle.imu_lever(),
        })
    }
}

/// Read a scenario from a TOML file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let scenario: Scenario =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    scenario.validate()?;
    Ok(scenario)
}

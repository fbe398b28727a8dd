//! Program configuration: one JSON document in file units (km, deg, days).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anneal::Schedule;
use crate::drift::{DriftBounds, Propulsion, EQUALITY_TOLERANCE};
use crate::lowthrust::{LowThrustConfig, MassModel, DEFAULT_PROFILE_SAMPLES};
use crate::mesh::{DeorbitOption, GridOverride, TransferConfig};
use crate::orbit::{EarthModel, DAY};
use crate::refine::{FuelModel, RefineConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PropulsionConfig {
    HighThrust,
    LowThrust {
        /// Mean acceleration (m/s^2).
        accel: f64,
        /// Thrust (N); with a vehicle mass it turns on the mass model.
        #[serde(default)]
        thrust: Option<f64>,
        #[serde(default)]
        profile_samples: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    /// Gross mass at the start of every mission (kg).
    pub initial_mass: f64,
    /// Exhaust velocity (m/s).
    pub exhaust_velocity: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDays {
    #[serde(default)]
    pub dates_days: Option<Vec<f64>>,
    #[serde(default)]
    pub durations_days: Option<Vec<f64>>,
}

fn default_dwell() -> f64 {
    5.0
}
fn default_min_alt() -> f64 {
    400.0
}
fn default_max_alt() -> f64 {
    2000.0
}
fn default_chains() -> usize {
    1
}
fn default_refine_tol() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramConfig {
    /// Missions.
    pub m: usize,
    /// Debris per mission.
    pub n: usize,
    #[serde(default)]
    pub t0_days: f64,
    pub span_days: f64,
    #[serde(default = "default_dwell")]
    pub op_dwell_days: f64,
    #[serde(default = "default_min_alt")]
    pub drift_min_altitude_km: f64,
    #[serde(default = "default_max_alt")]
    pub drift_max_altitude_km: f64,
    pub propulsion: PropulsionConfig,
    #[serde(default)]
    pub vehicle: Option<VehicleConfig>,
    #[serde(default)]
    pub deorbit: DeorbitOption,
    /// The seed inside is replaced by `seed`.
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default)]
    pub grid: GridDays,
    /// Node tolerance of mesh transfers; the equality band when absent.
    #[serde(default)]
    pub mesh_raan_tolerance_deg: Option<f64>,
    #[serde(default = "default_refine_tol")]
    pub refine_raan_tolerance_deg: f64,
    #[serde(default)]
    pub refine: RefineConfig,
    /// Shortest leg the planner may schedule; the shortest mesh duration
    /// (and at least the operation dwell) when absent.
    #[serde(default)]
    pub min_leg_days: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Debris catalogue (CSV or two-line elements).
    #[serde(default)]
    pub debris: Option<PathBuf>,
}

impl ProgramConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        // catalogue paths are relative to the config file
        if let (Some(d), Some(dir)) = (&cfg.debris, path.parent()) {
            if d.is_relative() {
                cfg.debris = Some(dir.join(d));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.m == 0 || self.n == 0 || self.m * self.n < 2 {
            return bad(format!(
                "m = {} and n = {} must visit at least two debris",
                self.m, self.n
            ));
        }
        if !(self.span_days > 0.0) || !self.t0_days.is_finite() {
            return bad(format!(
                "program window {} + {} days is invalid",
                self.t0_days, self.span_days
            ));
        }
        if !(self.op_dwell_days >= 0.0) {
            return bad(format!("operation dwell {} days must be >= 0", self.op_dwell_days));
        }
        if !(self.drift_min_altitude_km > 0.0 && self.drift_max_altitude_km > self.drift_min_altitude_km) {
            return bad(format!(
                "drift bounds {}..{} km are invalid",
                self.drift_min_altitude_km, self.drift_max_altitude_km
            ));
        }
        if let PropulsionConfig::LowThrust {
            accel,
            thrust,
            profile_samples,
        } = self.propulsion
        {
            if !(accel > 0.0 && accel.is_finite()) {
                return bad(format!("acceleration {accel} m/s^2 must be positive"));
            }
            if let Some(t) = thrust {
                if !(t > 0.0) {
                    return bad(format!("thrust {t} N must be positive"));
                }
                if self.vehicle.is_none() {
                    return bad("a thrust level needs a vehicle mass and exhaust velocity".into());
                }
            }
            if profile_samples.is_some_and(|s| s < 2) {
                return bad("profile samples must be at least 2".into());
            }
        }
        if let Some(v) = self.vehicle {
            if !(v.initial_mass > 0.0 && v.exhaust_velocity > 0.0) {
                return bad("vehicle mass and exhaust velocity must be positive".into());
            }
        }
        self.schedule
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.chains == 0 {
            return bad("chains must be at least 1".into());
        }
        if self.mesh_raan_tolerance_deg.is_some_and(|t| !(t >= 0.0)) || !(self.refine_raan_tolerance_deg >= 0.0) {
            return bad("node tolerances must be >= 0".into());
        }
        if self.min_leg_days.is_some_and(|t| !(t >= 0.0)) {
            return bad("minimum leg must be >= 0".into());
        }
        let r = &self.refine;
        if r.max_sweeps == 0 || r.scan_points < 2 || !(r.date_tolerance > 0.0) || !(r.min_gain >= 0.0) {
            return bad("refine settings are invalid".into());
        }
        Ok(())
    }

    pub fn t0(&self) -> f64 {
        self.t0_days * DAY
    }

    pub fn span(&self) -> f64 {
        self.span_days * DAY
    }

    pub fn op_dwell(&self) -> f64 {
        self.op_dwell_days * DAY
    }

    pub fn bounds(&self) -> DriftBounds {
        DriftBounds {
            min_altitude: self.drift_min_altitude_km * 1e3,
            max_altitude: self.drift_max_altitude_km * 1e3,
        }
    }

    pub fn propulsion(&self) -> Propulsion {
        match self.propulsion {
            PropulsionConfig::HighThrust => Propulsion::HighThrust,
            PropulsionConfig::LowThrust {
                accel,
                thrust,
                profile_samples,
            } => Propulsion::LowThrust(LowThrustConfig {
                accel,
                mass_model: thrust.zip(self.vehicle).map(|(thrust, v)| MassModel {
                    thrust,
                    initial_mass: v.initial_mass,
                    exhaust_velocity: v.exhaust_velocity,
                }),
                samples: profile_samples.unwrap_or(DEFAULT_PROFILE_SAMPLES),
            }),
        }
    }

    fn transfer(&self, raan_tolerance: f64) -> TransferConfig {
        TransferConfig {
            propulsion: self.propulsion(),
            bounds: self.bounds(),
            op_dwell: self.op_dwell(),
            raan_tolerance,
            earth: EarthModel::STANDARD,
        }
    }

    /// Transfer settings for the mesh fill.
    pub fn mesh_transfer(&self) -> TransferConfig {
        self.transfer(self.mesh_raan_tolerance_deg.map_or(EQUALITY_TOLERANCE, f64::to_radians))
    }

    /// Transfer settings for the refinement.
    pub fn refine_transfer(&self) -> TransferConfig {
        self.transfer(self.refine_raan_tolerance_deg.to_radians())
    }

    pub fn grid_override(&self) -> GridOverride {
        let to_s = |v: &Vec<f64>| v.iter().map(|d| d * DAY).collect();
        GridOverride {
            dates: self.grid.dates_days.as_ref().map(to_s),
            durations: self.grid.durations_days.as_ref().map(to_s),
        }
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            seed: self.seed,
            ..self.schedule
        }
    }

    /// Shortest plannable leg (s) for a mesh whose shortest duration is
    /// `shortest`.
    pub fn min_leg(&self, shortest: f64) -> f64 {
        self.min_leg_days.map_or(shortest.max(self.op_dwell()), |d| d * DAY)
    }

    pub fn fuel(&self) -> Option<FuelModel> {
        self.vehicle.map(|v| FuelModel {
            initial_mass: v.initial_mass,
            exhaust_velocity: v.exhaust_velocity,
        })
    }
}

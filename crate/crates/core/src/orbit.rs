//! Circular orbits under secular J2 nodal precession.
//!
//! All quantities are SI (metres, seconds, radians). Time is an offset in
//! seconds on the mission clock, measured from the program start.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seconds in a mean solar day.
pub const DAY: f64 = 86_400.0;

#[derive(Debug, Error, PartialEq)]
pub enum OrbitError {
    #[error("radius {radius} m is not above the Earth radius {earth_radius} m")]
    BelowSurface { radius: f64, earth_radius: f64 },
    #[error("inclination {0} rad outside [0, pi]")]
    Inclination(f64),
    #[error("non-finite orbital element")]
    NonFinite,
    #[error("negative velocity impulse {0} m/s")]
    NegativeImpulse(f64),
    #[error("invalid debris: {0}")]
    Debris(String),
}

/// Central-body constants used by the precession and transfer models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthModel {
    /// Equatorial radius (m).
    pub radius: f64,
    /// Gravitational parameter (m^3/s^2).
    pub mu: f64,
    /// First zonal harmonic (dimensionless).
    pub j2: f64,
}

impl EarthModel {
    pub const STANDARD: EarthModel = EarthModel {
        radius: 6_378_137.0,
        mu: 3.986_005e14,
        j2: 1.082_66e-3,
    };
}

impl Default for EarthModel {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// A circular orbit: radius, inclination and the node longitude at `epoch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularOrbit {
    /// Orbit radius from the Earth centre (m).
    pub radius: f64,
    /// Inclination (rad).
    pub inclination: f64,
    /// RAAN at `epoch`, normalized to [0, 2pi).
    pub raan: f64,
    /// Mission-clock time (s) at which `raan` applies.
    pub epoch: f64,
}

impl CircularOrbit {
    pub fn new(radius: f64, inclination: f64, raan: f64, epoch: f64, earth: &EarthModel) -> Result<Self, OrbitError> {
        if !(radius.is_finite() && inclination.is_finite() && raan.is_finite() && epoch.is_finite()) {
            return Err(OrbitError::NonFinite);
        }
        if radius <= earth.radius {
            return Err(OrbitError::BelowSurface {
                radius,
                earth_radius: earth.radius,
            });
        }
        if !(0.0..=PI).contains(&inclination) {
            return Err(OrbitError::Inclination(inclination));
        }
        Ok(Self {
            radius,
            inclination,
            raan: normalize_angle(raan),
            epoch,
        })
    }

    /// Builds an orbit from an altitude in km and angles in degrees.
    pub fn from_altitude_deg(
        altitude_km: f64,
        inclination_deg: f64,
        raan_deg: f64,
        epoch: f64,
        earth: &EarthModel,
    ) -> Result<Self, OrbitError> {
        Self::new(
            earth.radius + altitude_km * 1e3,
            inclination_deg.to_radians(),
            raan_deg.to_radians(),
            epoch,
            earth,
        )
    }

    pub fn altitude(&self, earth: &EarthModel) -> f64 {
        self.radius - earth.radius
    }

    pub fn raan_rate(&self, earth: &EarthModel) -> f64 {
        raan_rate(self.radius, self.inclination, earth)
    }

    pub fn raan_at(&self, t: f64, earth: &EarthModel) -> f64 {
        propagate_raan(self, t, earth)
    }
}

/// A removal candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Debris {
    pub id: u32,
    pub orbit: CircularOrbit,
    /// Deorbit impulse (m/s) under the vehicle option, or kit mass (kg)
    /// under the kit option.
    pub op_cost: f64,
    /// Priority multiplier applied to edges arriving at this debris.
    pub weight: f64,
}

impl Debris {
    pub fn new(id: u32, orbit: CircularOrbit, op_cost: f64, weight: f64) -> Result<Self, OrbitError> {
        if !(op_cost.is_finite() && op_cost >= 0.0) {
            return Err(OrbitError::Debris(format!(
                "debris {id}: operation cost {op_cost} must be >= 0"
            )));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(OrbitError::Debris(format!("debris {id}: weight {weight} must be > 0")));
        }
        Ok(Self {
            id,
            orbit,
            op_cost,
            weight,
        })
    }
}

/// Secular nodal precession rate (rad/s) of a circular orbit of radius `a`
/// and inclination `inc`.
#[inline]
pub fn raan_rate(a: f64, inc: f64, earth: &EarthModel) -> f64 {
    precession_coefficient(inc, earth) * a.powf(-3.5)
}

/// The factor `k` in `rate = k * a^-3.5`. Its sign is the sign of the rate
/// at every radius.
#[inline]
pub fn precession_coefficient(inc: f64, earth: &EarthModel) -> f64 {
    // cos(pi/2) is 6e-17 in floating point; a polar orbit does not precess
    let c = if inc == FRAC_PI_2 { 0.0 } else { inc.cos() };
    -1.5 * earth.j2 * earth.mu.sqrt() * earth.radius * earth.radius * c
}

/// Radius at which an orbit of inclination `inc` precesses at `rate`.
/// `None` when no radius gives that rate (sign mismatch or zero rate).
pub fn radius_for_rate(rate: f64, inc: f64, earth: &EarthModel) -> Option<f64> {
    let k = precession_coefficient(inc, earth);
    let ratio = k / rate;
    if ratio.is_finite() && ratio > 0.0 {
        Some(ratio.powf(2.0 / 7.0))
    } else {
        None
    }
}

/// RAAN of `orbit` at mission time `t`, normalized to [0, 2pi).
pub fn propagate_raan(orbit: &CircularOrbit, t: f64, earth: &EarthModel) -> f64 {
    normalize_angle(orbit.raan + orbit.raan_rate(earth) * (t - orbit.epoch))
}

/// Circular speed at radius `a`.
#[inline]
pub fn circular_velocity(a: f64, earth: &EarthModel) -> f64 {
    (earth.mu / a).sqrt()
}

/// Propellant mass burnt by an impulse `dv` starting from mass `initial_mass`.
pub fn fuel_consumed(initial_mass: f64, dv: f64, exhaust_velocity: f64) -> Result<f64, OrbitError> {
    if dv < 0.0 {
        return Err(OrbitError::NegativeImpulse(dv));
    }
    Ok(initial_mass * -(-dv / exhaust_velocity).exp_m1())
}

/// Wraps an angle into [0, 2pi).
#[inline]
pub fn normalize_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed difference `target - source` wrapped into (-pi, pi].
#[inline]
pub fn angle_diff(target: f64, source: f64) -> f64 {
    let d = (target - source).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

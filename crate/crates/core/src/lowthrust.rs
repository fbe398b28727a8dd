//! Low-thrust legs: minimum-time Edelbaum transfers between inclined
//! circular orbits at constant acceleration, with the J2 node drift
//! integrated along the spiral.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orbit::{circular_velocity, raan_rate, CircularOrbit, EarthModel};

pub const DEFAULT_PROFILE_SAMPLES: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum LowThrustError {
    #[error("acceleration must be positive, got {0} m/s^2")]
    Acceleration(f64),
    #[error("profile needs at least 2 samples, got {0}")]
    Samples(usize),
    #[error("propelled phases last {propelled:.0} s but only {allotted:.0} s are available")]
    TooLong { propelled: f64, allotted: f64 },
}

/// Closed-form Edelbaum solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdelbaumSolution {
    pub dv: f64,
    pub duration: f64,
    /// Initial out-of-plane yaw angle (rad).
    pub beta0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub t: f64,
    pub radius: f64,
    pub inclination: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdelbaumProfile {
    pub solution: EdelbaumSolution,
    pub accel: f64,
    pub samples: Vec<ProfileSample>,
}

/// Edelbaum impulse, duration and initial yaw for a transfer from circular
/// speed `v0` to `vf` with a plane change `di` (rad) at acceleration `f`.
pub fn edelbaum_solve(v0: f64, vf: f64, di: f64, f: f64) -> Result<EdelbaumSolution, LowThrustError> {
    if !(f > 0.0) {
        return Err(LowThrustError::Acceleration(f));
    }
    let theta = FRAC_PI_2 * di.abs();
    // v0^2 + vf^2 - 2 v0 vf cos(theta), written to stay accurate for small theta
    let s = (0.5 * theta).sin();
    let dv = ((v0 - vf) * (v0 - vf) + 4.0 * v0 * vf * s * s).sqrt();
    let beta0 = theta.sin().atan2(v0 / vf - theta.cos());
    Ok(EdelbaumSolution {
        dv,
        duration: dv / f,
        beta0,
    })
}

/// Evaluates speed and inclination change along an Edelbaum transfer.
struct Spiral {
    v0: f64,
    f: f64,
    cos_b: f64,
    sin_b: f64,
    beta0: f64,
    i0: f64,
    di: f64,
    duration: f64,
}

impl Spiral {
    fn new(from: (f64, f64), to: (f64, f64), f: f64, earth: &EarthModel) -> Result<Self, LowThrustError> {
        let v0 = circular_velocity(from.0, earth);
        let vf = circular_velocity(to.0, earth);
        let di = to.1 - from.1;
        let sol = edelbaum_solve(v0, vf, di, f)?;
        Ok(Self {
            v0,
            f,
            cos_b: sol.beta0.cos(),
            sin_b: sol.beta0.sin(),
            beta0: sol.beta0,
            i0: from.1,
            di,
            duration: sol.duration,
        })
    }

    #[inline]
    fn speed(&self, t: f64) -> f64 {
        let ft = self.f * t;
        (self.v0 * self.v0 - 2.0 * self.v0 * ft * self.cos_b + ft * ft).sqrt()
    }

    #[inline]
    fn inclination(&self, t: f64) -> f64 {
        if self.di == 0.0 || self.sin_b == 0.0 {
            return self.i0;
        }
        let x = (self.f * t - self.v0 * self.cos_b) / (self.v0 * self.sin_b);
        let change = (2.0 / PI) * (x.atan() + FRAC_PI_2 - self.beta0);
        self.i0 + self.di.signum() * change
    }
}

/// Samples radius and inclination along the transfer `from -> to`, each
/// given as (radius, inclination).
pub fn edelbaum_profile(
    from: (f64, f64),
    to: (f64, f64),
    f: f64,
    n_samples: usize,
    earth: &EarthModel,
) -> Result<EdelbaumProfile, LowThrustError> {
    if n_samples < 2 {
        return Err(LowThrustError::Samples(n_samples));
    }
    let spiral = Spiral::new(from, to, f, earth)?;
    let step = spiral.duration / (n_samples - 1) as f64;
    let samples = (0..n_samples)
        .map(|k| {
            let t = if k + 1 == n_samples {
                spiral.duration
            } else {
                k as f64 * step
            };
            let v = spiral.speed(t);
            ProfileSample {
                t,
                radius: earth.mu / (v * v),
                inclination: spiral.inclination(t),
            }
        })
        .collect();
    Ok(EdelbaumProfile {
        solution: EdelbaumSolution {
            dv: spiral.duration * f,
            duration: spiral.duration,
            beta0: spiral.beta0,
        },
        accel: f,
        samples,
    })
}

/// Trapezoidal integral of the precession rate over a sampled profile.
pub fn raan_drift_along_profile(samples: &[ProfileSample], earth: &EarthModel) -> f64 {
    samples
        .windows(2)
        .map(|w| {
            let r0 = raan_rate(w[0].radius, w[0].inclination, earth);
            let r1 = raan_rate(w[1].radius, w[1].inclination, earth);
            0.5 * (r0 + r1) * (w[1].t - w[0].t)
        })
        .sum()
}

/// Same integral as [`raan_drift_along_profile`] without materializing the
/// samples. Uses `a^-3.5 = V^7 / mu^3.5` to avoid a `powf` per node.
fn streamed_raan_drift(spiral: &Spiral, n_samples: usize, earth: &EarthModel) -> f64 {
    if spiral.duration == 0.0 {
        return 0.0;
    }
    let scale = -1.5 * earth.j2 * earth.mu.sqrt() * earth.radius * earth.radius / earth.mu.powf(3.5);
    let rate = |t: f64| {
        let v = spiral.speed(t);
        let v2 = v * v;
        let v7 = v2 * v2 * v2 * v;
        scale * spiral.inclination(t).cos() * v7
    };
    let step = spiral.duration / (n_samples - 1) as f64;
    let mut sum = 0.5 * (rate(0.0) + rate(spiral.duration));
    for k in 1..n_samples - 1 {
        sum += rate(k as f64 * step);
    }
    sum * step
}

/// Vehicle mass model used to refine the mean acceleration of a phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassModel {
    /// Thrust (N).
    pub thrust: f64,
    /// Vehicle mass at the start of the leg (kg).
    pub initial_mass: f64,
    /// Exhaust velocity (m/s).
    pub exhaust_velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowThrustConfig {
    /// Mean acceleration (m/s^2); the initial level when a mass model is set.
    pub accel: f64,
    pub mass_model: Option<MassModel>,
    pub samples: usize,
}

impl LowThrustConfig {
    pub fn constant(accel: f64) -> Self {
        Self {
            accel,
            mass_model: None,
            samples: DEFAULT_PROFILE_SAMPLES,
        }
    }
}

/// One propelled Edelbaum phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropelledPhase {
    pub dv: f64,
    pub duration: f64,
    /// Node drift accumulated during the phase (rad).
    pub raan_drift: f64,
    /// Acceleration used for the final solution (m/s^2).
    pub accel: f64,
}

impl PropelledPhase {
    pub const NONE: PropelledPhase = PropelledPhase {
        dv: 0.0,
        duration: 0.0,
        raan_drift: 0.0,
        accel: 0.0,
    };
}

/// Solves one propelled phase in two stages: at the starting acceleration,
/// then at the mean acceleration implied by the propellant burnt in the
/// first solution. Returns the phase and the mass at its end.
pub fn propelled_phase(
    from: (f64, f64),
    to: (f64, f64),
    cfg: &LowThrustConfig,
    mass: Option<f64>,
    earth: &EarthModel,
) -> Result<(PropelledPhase, Option<f64>), LowThrustError> {
    if cfg.samples < 2 {
        return Err(LowThrustError::Samples(cfg.samples));
    }
    if from == to {
        return Ok((PropelledPhase::NONE, mass));
    }
    let (f_used, end_mass) = match (cfg.mass_model, mass) {
        (Some(mm), Some(m_start)) => {
            let f0 = mm.thrust / m_start;
            let first = edelbaum_solve(
                circular_velocity(from.0, earth),
                circular_velocity(to.0, earth),
                to.1 - from.1,
                f0,
            )?;
            let m_end = m_start * (-first.dv / mm.exhaust_velocity).exp();
            (mm.thrust / (0.5 * (m_start + m_end)), Some(m_end))
        }
        _ => (cfg.accel, mass),
    };
    let spiral = Spiral::new(from, to, f_used, earth)?;
    let raan_drift = streamed_raan_drift(&spiral, cfg.samples, earth);
    Ok((
        PropelledPhase {
            dv: spiral.duration * f_used,
            duration: spiral.duration,
            raan_drift,
            accel: f_used,
        },
        end_mass,
    ))
}

/// Low-thrust leg `from -> drift -> to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowThrustLeg {
    pub first: PropelledPhase,
    pub second: PropelledPhase,
    pub total_dv: f64,
}

impl LowThrustLeg {
    pub fn propelled_duration(&self) -> f64 {
        self.first.duration + self.second.duration
    }
}

/// Both propelled phases of a leg through a drift orbit. `allotted` is the
/// time available for the leg; the leg is rejected when its propelled
/// phases alone do not fit.
pub fn lowthrust_leg(
    from: &CircularOrbit,
    drift: (f64, f64),
    to: &CircularOrbit,
    cfg: &LowThrustConfig,
    allotted: Option<f64>,
    earth: &EarthModel,
) -> Result<LowThrustLeg, LowThrustError> {
    if !(cfg.accel > 0.0) {
        return Err(LowThrustError::Acceleration(cfg.accel));
    }
    let start_mass = cfg.mass_model.map(|m| m.initial_mass);
    let (first, mass) = propelled_phase((from.radius, from.inclination), drift, cfg, start_mass, earth)?;
    let (second, _) = propelled_phase(drift, (to.radius, to.inclination), cfg, mass, earth)?;
    let leg = LowThrustLeg {
        first,
        second,
        total_dv: first.dv + second.dv,
    };
    if let Some(allotted) = allotted {
        if leg.propelled_duration() > allotted {
            return Err(LowThrustError::TooLong {
                propelled: leg.propelled_duration(),
                allotted,
            });
        }
    }
    Ok(leg)
}

/// Impulse of `from -> drift -> to` without integrating the node drift.
#[inline]
pub fn lowthrust_leg_dv(r1: f64, i1: f64, drift: (f64, f64), r2: f64, i2: f64, earth: &EarthModel) -> f64 {
    let dv = |ra: f64, ia: f64, rb: f64, ib: f64| {
        let v0 = circular_velocity(ra, earth);
        let vf = circular_velocity(rb, earth);
        let s = (0.5 * FRAC_PI_2 * (ib - ia).abs()).sin();
        ((v0 - vf) * (v0 - vf) + 4.0 * v0 * vf * s * s).sqrt()
    };
    dv(r1, i1, drift.0, drift.1) + dv(drift.0, drift.1, r2, i2)
}

//! Elementary transfer problem: pick the drift orbit that lets J2 close the
//! RAAN gap between two debris at minimum impulse.
//!
//! The leg starts at `t1` on the first debris orbit and must reach the second
//! debris orbit, with matching node, by `t2 - op_dwell`. The vehicle may
//! arrive early and co-orbit the target for the remaining time. For a drift
//! orbit `(a, I)` the required drift duration follows from the node gap, so
//! each candidate is feasible when that duration fits in the time left after
//! the propelled phases. At fixed inclination feasibility is a threshold on
//! the radius, which reduces the search to a 1-D slice problem per
//! inclination.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::impulsive::impulsive_leg_dv;
use crate::lowthrust::{lowthrust_leg_dv, propelled_phase, LowThrustConfig};
use crate::numeric::{golden_section, linspace};
use crate::orbit::{angle_diff, normalize_angle, raan_rate, radius_for_rate, CircularOrbit, EarthModel};

/// Half-width of the drift inclination window around the two debris
/// inclinations.
pub const INCLINATION_MARGIN: f64 = 3.0 * PI / 180.0;
/// Constraint tolerance in equality mode (rad).
pub const EQUALITY_TOLERANCE: f64 = 1e-3;

const COARSE_INCLINATIONS: usize = 13;
const RADIUS_TOL: f64 = 1.0;
const INCLINATION_TOL: f64 = 1e-6;
const FIXED_POINT_ITERATIONS: usize = 20;
/// Profile samples per phase used while searching; the chosen point is
/// re-solved with the configured sample count.
const SEARCH_SAMPLES: usize = 32;
/// Node shortfall accepted when a boundary point found with coarse sampling
/// is re-evaluated at full sampling (rad).
const FINAL_SLACK: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum DriftError {
    #[error("invalid transfer problem: {0}")]
    InvalidProblem(String),
    #[error("no drift orbit within bounds meets the node constraint in the allotted time")]
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Propulsion {
    HighThrust,
    LowThrust(LowThrustConfig),
}

impl Propulsion {
    pub fn name(&self) -> &'static str {
        match self {
            Propulsion::HighThrust => "high_thrust",
            Propulsion::LowThrust(_) => "low_thrust",
        }
    }
}

/// Allowed drift altitudes (m above the Earth radius).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftBounds {
    pub min_altitude: f64,
    pub max_altitude: f64,
}

impl Default for DriftBounds {
    fn default() -> Self {
        Self {
            min_altitude: 400e3,
            max_altitude: 2000e3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferProblem {
    pub from: CircularOrbit,
    pub to: CircularOrbit,
    pub t1: f64,
    pub t2: f64,
    /// Dwell reserved at the end of the leg for the debris operation (s).
    pub op_dwell: f64,
    pub bounds: DriftBounds,
    pub propulsion: Propulsion,
    /// Largest accepted node deviation at arrival (rad).
    /// [`EQUALITY_TOLERANCE`] for an equality-constrained rendezvous. The
    /// solver aims inside it by the re-evaluation slack, so zero asks for an
    /// exact rendezvous and gets one within that slack.
    pub raan_tolerance: f64,
    pub earth: EarthModel,
}

impl TransferProblem {
    pub fn validate(&self) -> Result<(), DriftError> {
        let bad = |msg: String| Err(DriftError::InvalidProblem(msg));
        if !(self.t2 > self.t1) {
            return bad(format!("t2 = {} must follow t1 = {}", self.t2, self.t1));
        }
        if !(self.op_dwell >= 0.0) {
            return bad(format!("negative operation dwell {}", self.op_dwell));
        }
        if !(self.t2 - self.t1 > self.op_dwell) {
            return bad("leg shorter than the operation dwell".into());
        }
        if !(self.bounds.min_altitude > 0.0 && self.bounds.min_altitude < self.bounds.max_altitude) {
            return bad(format!(
                "drift altitude bounds [{}, {}] are not ordered",
                self.bounds.min_altitude, self.bounds.max_altitude
            ));
        }
        if !(self.raan_tolerance >= 0.0) {
            return bad(format!("negative node tolerance {}", self.raan_tolerance));
        }
        if let Propulsion::LowThrust(cfg) = &self.propulsion {
            if !(cfg.accel > 0.0) || cfg.samples < 2 {
                return bad("low-thrust configuration needs a positive acceleration and 2+ samples".into());
            }
        }
        Ok(())
    }

    /// Time at which the vehicle must be co-orbiting the target.
    pub fn arrival(&self) -> f64 {
        self.t2 - self.op_dwell
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Drift precesses faster than the target to catch up the gap.
    Forwards,
    /// Drift precesses slower than the target and lets it come round.
    Backwards,
    /// No intermediate orbit: wait on the departure orbit, or transfer
    /// at once and wait on the target orbit.
    Wait,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferSolution {
    pub drift_radius: f64,
    pub drift_inclination: f64,
    pub dv: f64,
    /// Impulse of the departure-to-drift and drift-to-target transfers.
    pub phase_dv: [f64; 2],
    /// Start and end of the drift (s).
    pub t_d1: f64,
    pub t_d2: f64,
    /// Time the target orbit is reached (s).
    pub t_arrive: f64,
    /// Node of the vehicle minus node of the target at `t2 - op_dwell`.
    pub raan_residual: f64,
    pub branch: Branch,
}

/// Starting point suggested for the drift search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchGuess {
    pub branch: Branch,
    pub drift_radius: f64,
    pub drift_inclination: f64,
    /// Whole turns added to the wrapped node gap.
    pub revolutions: i32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchOutcome {
    pub branch: Branch,
    /// Whole turns added to the node gap, measured in [0, 2pi).
    pub revolutions: i32,
    pub solution: Option<TransferSolution>,
}

/// Propelled-phase data for one drift orbit.
#[derive(Debug, Clone, Copy)]
struct Phases {
    d1: f64,
    d2: f64,
    /// Node change over both propelled phases relative to the target's.
    relative_drift: f64,
    dv: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
struct Schedule {
    tau: f64,
    phases: Phases,
    residual: f64,
}

struct Solver<'a> {
    p: &'a TransferProblem,
    r1: f64,
    i1: f64,
    r2: f64,
    i2: f64,
    rate2: f64,
    /// Time from t1 to arrival.
    span: f64,
    /// Target node minus departure node at t1, in [0, 2pi).
    gap: f64,
    rmin: f64,
    rmax: f64,
}

impl<'a> Solver<'a> {
    fn new(p: &'a TransferProblem) -> Self {
        let e = &p.earth;
        let gap = normalize_angle(p.to.raan_at(p.t1, e) - p.from.raan_at(p.t1, e));
        Self {
            p,
            r1: p.from.radius,
            i1: p.from.inclination,
            r2: p.to.radius,
            i2: p.to.inclination,
            rate2: p.to.raan_rate(e),
            span: p.arrival() - p.t1,
            gap,
            rmin: e.radius + p.bounds.min_altitude,
            rmax: e.radius + p.bounds.max_altitude,
        }
    }

    fn leg_dv(&self, a: f64, inc: f64) -> f64 {
        let e = &self.p.earth;
        match self.p.propulsion {
            Propulsion::HighThrust => impulsive_leg_dv(self.r1, self.i1, (a, inc), self.r2, self.i2, e),
            Propulsion::LowThrust(_) => lowthrust_leg_dv(self.r1, self.i1, (a, inc), self.r2, self.i2, e),
        }
    }

    fn phases(&self, a: f64, inc: f64, samples: usize) -> Option<Phases> {
        let e = &self.p.earth;
        match &self.p.propulsion {
            Propulsion::HighThrust => Some(Phases {
                d1: 0.0,
                d2: 0.0,
                relative_drift: 0.0,
                dv: [
                    crate::impulsive::hohmann_split(self.r1, self.i1, a, inc, e).total(),
                    crate::impulsive::hohmann_split(a, inc, self.r2, self.i2, e).total(),
                ],
            }),
            Propulsion::LowThrust(cfg) => {
                let cfg = LowThrustConfig { samples, ..*cfg };
                let mass = cfg.mass_model.map(|m| m.initial_mass);
                let (ph1, mass) = propelled_phase((self.r1, self.i1), (a, inc), &cfg, mass, e).ok()?;
                let (ph2, _) = propelled_phase((a, inc), (self.r2, self.i2), &cfg, mass, e).ok()?;
                let d = ph1.duration + ph2.duration;
                Some(Phases {
                    d1: ph1.duration,
                    d2: ph2.duration,
                    relative_drift: ph1.raan_drift + ph2.raan_drift - self.rate2 * d,
                    dv: [ph1.dv, ph2.dv],
                })
            }
        }
    }

    /// Node change the drift itself has to provide when the gap is closed
    /// with `lap` extra turns, shrunk by the targeted band. Continuous in the
    /// drift orbit for a fixed `lap`.
    fn required(&self, phases: &Phases, lap: i32) -> f64 {
        let x = self.gap - phases.relative_drift + TAU * lap as f64;
        let tol = (self.p.raan_tolerance - FINAL_SLACK).max(0.0);
        if x > tol {
            x - tol
        } else if x < -tol {
            x + tol
        } else {
            0.0
        }
    }

    fn available(&self, phases: &Phases) -> f64 {
        self.span - phases.d1 - phases.d2
    }

    fn schedule(&self, a: f64, inc: f64, lap: i32, samples: usize) -> Option<Schedule> {
        self.schedule_within(a, inc, lap, samples, 0.0)
    }

    /// Drift schedule for an orbit, accepting a node shortfall up to `slack`
    /// once the drift duration is clamped into the available time.
    fn schedule_within(&self, a: f64, inc: f64, lap: i32, samples: usize, slack: f64) -> Option<Schedule> {
        let phases = self.phases(a, inc, samples)?;
        let avail = self.available(&phases);
        if avail < 0.0 {
            return None;
        }
        let rhs = self.required(&phases, lap);
        let delta = raan_rate(a, inc, &self.p.earth) - self.rate2;
        let tau = if rhs == 0.0 { 0.0 } else { rhs / delta };
        let tau = if tau >= 0.0 && tau <= avail {
            tau
        } else if slack > 0.0 && tau.is_finite() {
            let clamped = tau.clamp(0.0, avail);
            if (rhs - delta * clamped).abs() > slack {
                return None;
            }
            clamped
        } else {
            return None;
        };
        let residual = angle_diff(phases.relative_drift + delta * tau, self.gap);
        Some(Schedule { tau, phases, residual })
    }

    /// Radius at which the drift exactly uses all the available time.
    fn boundary(&self, inc: f64, lap: i32, samples: usize, feasible_end: f64, infeasible_end: f64) -> f64 {
        let e = &self.p.earth;
        let (lo, hi) = (self.rmin.min(infeasible_end), self.rmax.max(infeasible_end));
        let target = |phases: &Phases| {
            let avail = self.available(phases);
            let rhs = self.required(phases, lap);
            radius_for_rate(self.rate2 + rhs / avail, inc, e).map(|r| r.clamp(lo, hi))
        };
        let a = match self.p.propulsion {
            Propulsion::HighThrust => {
                let ph = self
                    .phases(feasible_end, inc, samples)
                    .expect("impulsive phases always exist");
                target(&ph)
            }
            Propulsion::LowThrust(_) => {
                let mut a = 0.5 * (feasible_end + infeasible_end);
                let mut ok = false;
                for _ in 0..FIXED_POINT_ITERATIONS {
                    let Some(ph) = self.phases(a, inc, samples) else { break };
                    if self.available(&ph) <= 0.0 {
                        break;
                    }
                    let Some(next) = target(&ph) else { break };
                    let done = (next - a).abs() < RADIUS_TOL;
                    a = next;
                    if done {
                        ok = true;
                        break;
                    }
                }
                ok.then_some(a)
            }
        };
        if let Some(x) = a {
            if self.schedule(x, inc, lap, samples).is_some() {
                return x;
            }
        }
        // Fall back to bisection between the known feasible end and the
        // best estimate of the threshold.
        let (mut good, mut bad) = (feasible_end, a.unwrap_or(infeasible_end));
        for _ in 0..40 {
            if (good - bad).abs() < RADIUS_TOL {
                break;
            }
            let mid = 0.5 * (good + bad);
            if self.schedule(mid, inc, lap, samples).is_some() {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    }

    /// Cheapest feasible radius at a fixed drift inclination.
    fn slice(&self, inc: f64, lap: i32, samples: usize) -> Option<(f64, f64)> {
        let lo_ok = self.schedule(self.rmin, inc, lap, samples).is_some();
        let hi_ok = self.schedule(self.rmax, inc, lap, samples).is_some();
        let (lo, hi) = match (lo_ok, hi_ok) {
            (true, true) => (self.rmin, self.rmax),
            (false, false) => return None,
            (true, false) => (self.rmin, self.boundary(inc, lap, samples, self.rmin, self.rmax)),
            (false, true) => (self.boundary(inc, lap, samples, self.rmax, self.rmin), self.rmax),
        };
        Some(golden_section(|a| self.leg_dv(a, inc), lo, hi, RADIUS_TOL))
    }

    fn inclination_window(&self) -> (f64, f64) {
        (
            (self.i1.min(self.i2) - INCLINATION_MARGIN).max(0.0),
            (self.i1.max(self.i2) + INCLINATION_MARGIN).min(PI),
        )
    }

    /// Best (radius, inclination, dv) on a branch using a coarse scan of the
    /// inclination window refined by golden section.
    fn reachable(&self, inc: f64, lap: i32) -> bool {
        self.schedule(self.rmin, inc, lap, SEARCH_SAMPLES).is_some()
            || self.schedule(self.rmax, inc, lap, SEARCH_SAMPLES).is_some()
    }

    /// Part of the inclination window where some radius is feasible. The
    /// node rate grows with inclination at any radius, so this is one end of
    /// the window cut at a threshold.
    fn feasible_window(&self, lap: i32) -> Option<(f64, f64)> {
        let (ilo, ihi) = self.inclination_window();
        let (lo_ok, hi_ok) = (self.reachable(ilo, lap), self.reachable(ihi, lap));
        if lo_ok && hi_ok {
            return Some((ilo, ihi));
        }
        if !lo_ok && !hi_ok {
            return None;
        }
        let edge = if lo_ok {
            self.threshold(ilo, ihi, lap)
        } else {
            self.threshold(ihi, ilo, lap)
        };
        Some(if lo_ok { (ilo, edge) } else { (edge, ihi) })
    }

    /// Bisects the inclination where feasibility is lost between `good` and
    /// `bad`; returns the last feasible point.
    fn threshold(&self, mut good: f64, mut bad: f64, lap: i32) -> f64 {
        while (good - bad).abs() > INCLINATION_TOL {
            let mid = 0.5 * (good + bad);
            if self.reachable(mid, lap) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    }

    fn search(&self, lap: i32) -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        let keep = |a: f64, inc: f64, dv: f64, best: &mut Option<(f64, f64, f64)>| {
            if best.map_or(true, |b| dv < b.2) {
                *best = Some((a, inc, dv));
            }
        };
        let scan = |grid: &[f64], best: &mut Option<(f64, f64, f64)>| {
            let mut best_k = None;
            let mut best_v = f64::INFINITY;
            for (k, &inc) in grid.iter().enumerate() {
                if let Some((a, dv)) = self.slice(inc, lap, SEARCH_SAMPLES) {
                    keep(a, inc, dv, best);
                    if dv < best_v {
                        best_v = dv;
                        best_k = Some(k);
                    }
                }
            }
            best_k
        };
        let (ilo, ihi) = self.inclination_window();
        let mut grid = linspace(ilo, ihi, COARSE_INCLINATIONS);
        let mut found = scan(&grid, &mut best);
        if found.is_none() {
            // feasible only in a sliver at one end of the window
            let (flo, fhi) = self.feasible_window(lap)?;
            grid = linspace(flo, fhi, COARSE_INCLINATIONS);
            found = scan(&grid, &mut best);
        }
        let k = found?;
        let bracket = |j: usize| {
            if self.reachable(grid[j], lap) {
                grid[j]
            } else {
                self.threshold(grid[k], grid[j], lap)
            }
        };
        let lo = bracket(k.saturating_sub(1));
        let hi = bracket((k + 1).min(grid.len() - 1));
        golden_section(
            |inc| match self.slice(inc, lap, SEARCH_SAMPLES) {
                Some((a, dv)) => {
                    keep(a, inc, dv, &mut best);
                    dv
                }
                None => f64::INFINITY,
            },
            lo,
            hi,
            INCLINATION_TOL,
        );
        best
    }

    fn solution(&self, a: f64, inc: f64, branch: Branch, s: &Schedule) -> TransferSolution {
        let t_d1 = self.p.t1 + s.phases.d1;
        let t_d2 = t_d1 + s.tau;
        TransferSolution {
            drift_radius: a,
            drift_inclination: inc,
            dv: s.phases.dv[0] + s.phases.dv[1],
            phase_dv: s.phases.dv,
            t_d1,
            t_d2,
            t_arrive: (t_d2 + s.phases.d2).min(self.p.arrival()),
            raan_residual: s.residual,
            branch,
        }
    }

    fn samples(&self) -> usize {
        match &self.p.propulsion {
            Propulsion::HighThrust => 2,
            Propulsion::LowThrust(cfg) => cfg.samples,
        }
    }

    /// Re-solves a search result at full sampling.
    fn finish(&self, a: f64, inc: f64, lap: i32) -> Option<TransferSolution> {
        let n = self.samples();
        let s = match self.schedule_within(a, inc, lap, n, FINAL_SLACK) {
            Some(s) => s,
            None => {
                let (a, _) = self.slice(inc, lap, n)?;
                return self.finish_at(a, inc, lap, n);
            }
        };
        Some(self.solution(a, inc, self.label(&s, lap), &s))
    }

    fn finish_at(&self, a: f64, inc: f64, lap: i32, n: usize) -> Option<TransferSolution> {
        let s = self.schedule_within(a, inc, lap, n, FINAL_SLACK)?;
        Some(self.solution(a, inc, self.label(&s, lap), &s))
    }

    fn label(&self, s: &Schedule, lap: i32) -> Branch {
        if self.required(&s.phases, lap) < 0.0 {
            Branch::Backwards
        } else {
            Branch::Forwards
        }
    }

    /// Revolution counts worth searching: the node change they ask for is
    /// within reach of the fastest relative drift the window allows.
    fn laps(&self) -> Vec<i32> {
        let e = &self.p.earth;
        let (ilo, ihi) = self.inclination_window();
        let reach = [self.rmin, self.rmax]
            .iter()
            .flat_map(|&r| [ilo, ihi].map(|i| (raan_rate(r, i, e) - self.rate2).abs()))
            .fold(0.0, f64::max)
            * self.span;
        // propelled phases shift the gap by a few degrees at most
        let slack = 0.5;
        (-2..=2)
            .filter(|&k| (self.gap + TAU * k as f64).abs() <= reach + slack)
            .collect()
    }

    fn wait(&self) -> Option<TransferSolution> {
        let n = self.samples();
        let mut best: Option<TransferSolution> = None;
        for (a, inc) in [(self.r1, self.i1), (self.r2, self.i2)] {
            for lap in self.laps() {
                if let Some(s) = self.schedule(a, inc, lap, n) {
                    let sol = self.solution(a, inc, Branch::Wait, &s);
                    if best.map_or(true, |b| sol.dv < b.dv) {
                        best = Some(sol);
                    }
                }
            }
        }
        best
    }
}

/// Signed node residual (rad, wrapped to (-pi, pi]) at `t2 - op_dwell` for a
/// drift orbit held for all the time left by the propelled phases.
pub fn raan_residual(problem: &TransferProblem, drift_radius: f64, drift_inclination: f64) -> f64 {
    let s = Solver::new(problem);
    let samples = s.samples();
    let Some(ph) = s.phases(drift_radius, drift_inclination, samples) else {
        return f64::NAN;
    };
    let tau = s.available(&ph).max(0.0);
    let delta = raan_rate(drift_radius, drift_inclination, &problem.earth) - s.rate2;
    angle_diff(ph.relative_drift + delta * tau, s.gap)
}

/// Initial branch and drift guess from the node gap left by staying on the
/// departure orbit.
pub fn choose_branch(problem: &TransferProblem) -> BranchGuess {
    let e = &problem.earth;
    let span = problem.arrival() - problem.t1;
    let natural = problem.from.raan_at(problem.t1, e) + problem.from.raan_rate(e) * span;
    let short = angle_diff(problem.to.raan_at(problem.arrival(), e), natural);
    let (rmin, rmax) = (
        e.radius + problem.bounds.min_altitude,
        e.radius + problem.bounds.max_altitude,
    );
    if short.abs() <= EQUALITY_TOLERANCE.max(problem.raan_tolerance) {
        return BranchGuess {
            branch: Branch::Wait,
            drift_radius: problem.from.radius,
            drift_inclination: problem.from.inclination,
            revolutions: 0,
        };
    }
    let rate = problem.from.raan_rate(e) + short / span;
    let inc = problem.from.inclination;
    let radius = radius_for_rate(rate, inc, e)
        .map(|r| r.clamp(rmin, rmax))
        .unwrap_or(problem.from.radius);
    // node change relative to the target, unwrapped, against the gap at t1
    let change = short + (problem.from.raan_rate(e) - problem.to.raan_rate(e)) * span;
    let gap = normalize_angle(problem.to.raan_at(problem.t1, e) - problem.from.raan_at(problem.t1, e));
    BranchGuess {
        branch: if short > 0.0 {
            Branch::Forwards
        } else {
            Branch::Backwards
        },
        drift_radius: radius,
        drift_inclination: inc,
        revolutions: ((change - gap) / TAU).round() as i32,
    }
}

/// All branch outcomes evaluated by [`solve_transfer`]: the degenerate
/// wait solutions, then one search per revolution count.
pub fn solve_transfer_detailed(problem: &TransferProblem) -> Result<Vec<BranchOutcome>, DriftError> {
    problem.validate()?;
    let s = Solver::new(problem);
    let mut out = vec![BranchOutcome {
        branch: Branch::Wait,
        revolutions: 0,
        solution: s.wait(),
    }];
    for lap in s.laps() {
        let solution = s.search(lap).and_then(|(a, inc, _)| s.finish(a, inc, lap));
        let branch = match solution {
            Some(sol) => sol.branch,
            None if s.gap + TAU * lap as f64 >= 0.0 => Branch::Forwards,
            None => Branch::Backwards,
        };
        out.push(BranchOutcome {
            branch,
            revolutions: lap,
            solution,
        });
    }
    Ok(out)
}

/// Cheapest drift orbit meeting the node constraint.
pub fn solve_transfer(problem: &TransferProblem) -> Result<TransferSolution, DriftError> {
    solve_transfer_detailed(problem)?
        .into_iter()
        .filter_map(|o| o.solution)
        .min_by(|a, b| a.dv.total_cmp(&b.dv))
        .ok_or(DriftError::Infeasible)
}

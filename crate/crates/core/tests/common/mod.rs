//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdc_core::drift::{DriftBounds, Propulsion, TransferProblem, EQUALITY_TOLERANCE};
use sdc_core::lowthrust::propelled_phase;
use sdc_core::orbit::{raan_rate, CircularOrbit, EarthModel, DAY};

pub const E: EarthModel = EarthModel::STANDARD;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random leg between two near sun-synchronous orbits.
pub fn random_problem(rng: &mut ChaCha8Rng, propulsion: Propulsion) -> TransferProblem {
    let orbit = |rng: &mut ChaCha8Rng| {
        CircularOrbit::from_altitude_deg(
            rng.gen_range(700.0..900.0),
            rng.gen_range(97.0..99.0),
            rng.gen_range(0.0..360.0),
            0.0,
            &E,
        )
        .unwrap()
    };
    let from = orbit(rng);
    let to = orbit(rng);
    let t1 = rng.gen_range(0.0..1000.0) * DAY;
    let t2 = t1 + rng.gen_range(20.0..200.0) * DAY;
    TransferProblem {
        from,
        to,
        t1,
        t2,
        op_dwell: 5.0 * DAY,
        bounds: DriftBounds::default(),
        propulsion,
        raan_tolerance: EQUALITY_TOLERANCE,
        earth: E,
    }
}

/// Propelled durations, impulse and node change of the two phases, straight
/// from the transfer models.
fn phases(p: &TransferProblem, a: f64, inc: f64) -> Option<(f64, f64, f64)> {
    let (r1, i1, r2, i2) = (p.from.radius, p.from.inclination, p.to.radius, p.to.inclination);
    match &p.propulsion {
        Propulsion::HighThrust => {
            let dv = sdc_core::impulsive::impulsive_leg_dv(r1, i1, (a, inc), r2, i2, &E);
            Some((0.0, dv, 0.0))
        }
        Propulsion::LowThrust(cfg) => {
            let mass = cfg.mass_model.map(|m| m.initial_mass);
            let (a1, m) = propelled_phase((r1, i1), (a, inc), cfg, mass, &E).ok()?;
            let (a2, _) = propelled_phase((a, inc), (r2, i2), cfg, m, &E).ok()?;
            Some((a1.duration + a2.duration, a1.dv + a2.dv, a1.raan_drift + a2.raan_drift))
        }
    }
}

/// Cheapest point of a `n x n` grid over the drift bounds and the +-3 deg
/// inclination window that meets the node constraint within `tol`, for some
/// drift duration that fits the leg. `None` when no grid point does.
pub fn grid_oracle(p: &TransferProblem, n: usize, tol: f64) -> Option<f64> {
    let margin = 3f64.to_radians();
    let ilo = p.from.inclination.min(p.to.inclination) - margin;
    let ihi = p.from.inclination.max(p.to.inclination) + margin;
    let rlo = E.radius + p.bounds.min_altitude;
    let rhi = E.radius + p.bounds.max_altitude;
    let t_arr = p.t2 - p.op_dwell;
    let span = t_arr - p.t1;
    let start = p.from.raan + raan_rate(p.from.radius, p.from.inclination, &E) * (p.t1 - p.from.epoch);
    let target = p.to.raan + raan_rate(p.to.radius, p.to.inclination, &E) * (t_arr - p.to.epoch);
    let rate2 = raan_rate(p.to.radius, p.to.inclination, &E);
    let mut best: Option<f64> = None;
    for ia in 0..n {
        let a = rlo + (rhi - rlo) * ia as f64 / (n - 1) as f64;
        for ii in 0..n {
            let inc = ilo + (ihi - ilo) * ii as f64 / (n - 1) as f64;
            let Some((dur, dv, dom)) = phases(p, a, inc) else {
                continue;
            };
            let avail = span - dur;
            if avail < 0.0 {
                continue;
            }
            // vehicle node at arrival minus target node, for zero drift and
            // for drifting the whole available time
            let x0 = start + dom + rate2 * avail - target;
            let x1 = start + dom + raan_rate(a, inc, &E) * avail - target;
            let (lo, hi) = (x0.min(x1) - tol, x0.max(x1) + tol);
            let k = (lo / TAU).ceil();
            if k * TAU <= hi && best.map_or(true, |b| dv < b) {
                best = Some(dv);
            }
        }
    }
    best
}

/// Synthetic mesh over `n` debris: 4 dates 10 days apart, durations of 10
/// and 20 days, finite random costs in [50, 500) and op costs in [0, 20).
pub fn small_mesh(seed: u64, n: usize) -> sdc_core::CostMesh {
    let mut rng = rng(seed);
    let grid = sdc_core::MeshGrid::new(
        vec![0.0, 10.0 * DAY, 20.0 * DAY, 30.0 * DAY],
        vec![10.0 * DAY, 20.0 * DAY],
    )
    .unwrap();
    let ops: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..20.0)).collect();
    let mut costs = vec![0.0; 4 * 2 * n * n];
    for (idx, c) in costs.iter_mut().enumerate() {
        let (k, j) = (idx % n, (idx / n) % n);
        *c = if j == k { ops[j] } else { rng.gen_range(50.0..500.0) };
    }
    sdc_core::CostMesh {
        grid,
        t0: 0.0,
        span: 30.0 * DAY,
        mode: "high_thrust".into(),
        debris_ids: (1..=n as u32).collect(),
        costs,
    }
}

/// Cheapest program over every ordered choice of `spec.visited()` debris and
/// every increasing choice of dates among the mesh dates.
pub fn exhaustive_optimum(mesh: &sdc_core::CostMesh, spec: &sdc_core::planner::PathSpec) -> f64 {
    use sdc_core::planner::evaluate_path;
    use sdc_core::TrialSolution;
    let n = mesh.n();
    let v = spec.visited();
    let dates = &mesh.grid.dates;
    let mut best = f64::INFINITY;
    let mut order = Vec::with_capacity(v);
    let mut picks = Vec::with_capacity(v);
    fn rec(n: usize, v: usize, order: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if order.len() == v {
            f(order);
            return;
        }
        for d in 0..n {
            if !order.contains(&d) {
                order.push(d);
                rec(n, v, order, f);
                order.pop();
            }
        }
    }
    fn combos(k: usize, from: usize, len: usize, picks: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if picks.len() == k {
            f(picks);
            return;
        }
        for i in from..len {
            picks.push(i);
            combos(k, i + 1, len, picks, f);
            picks.pop();
        }
    }
    let mut date_sets: Vec<Vec<f64>> = Vec::new();
    combos(v, 0, dates.len(), &mut picks, &mut |p| {
        date_sets.push(p.iter().map(|&i| dates[i]).collect())
    });
    rec(n, v, &mut order, &mut |o| {
        let mut full: Vec<usize> = o.to_vec();
        full.extend((0..n).filter(|d| !o.contains(d)));
        for ds in &date_sets {
            let mut all = ds.clone();
            all.extend((1..=n - v).map(|k| mesh.end() + k as f64 * DAY));
            let sol = TrialSolution {
                order: full.clone(),
                dates: all,
            };
            best = best.min(evaluate_path(&sol, mesh, spec).0);
        }
    });
    best
}

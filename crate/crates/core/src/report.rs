//! Pipeline artifacts and their text and CSV renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::anneal::LevelStats;
use crate::mesh::{CostMesh, DeorbitOption, SENTINEL};
use crate::orbit::{EarthModel, DAY};
use crate::refine::{FuelEvent, MissionPlan};

pub const PLAN_FILE_VERSION: u32 = 1;

/// Compact view of an annealing trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub levels: usize,
    pub tries: u64,
    pub initial_temperature: f64,
    pub final_temperature: f64,
    pub first_acceptance: f64,
    pub final_acceptance: f64,
    /// Best cost every `stride` levels, last level included.
    pub stride: usize,
    pub best: Vec<f64>,
}

impl TraceSummary {
    pub fn from_trace(trace: &[LevelStats], tries: u64, initial_temperature: f64, points: usize) -> Self {
        let stride = (trace.len() / points.max(1)).max(1);
        let mut best: Vec<f64> = trace.iter().step_by(stride).map(|l| l.best).collect();
        if let Some(last) = trace.last() {
            if (trace.len() - 1) % stride != 0 {
                best.push(last.best);
            }
        }
        Self {
            levels: trace.len(),
            tries,
            initial_temperature,
            final_temperature: trace.last().map_or(initial_temperature, |l| l.temperature),
            first_acceptance: trace.first().map_or(0.0, |l| l.acceptance),
            final_acceptance: trace.last().map_or(0.0, |l| l.acceptance),
            stride,
            best,
        }
    }
}

/// Output of the planning stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub version: u32,
    pub mode: String,
    pub m: usize,
    pub n: usize,
    pub deorbit: DeorbitOption,
    pub t0_days: f64,
    pub span_days: f64,
    /// Debris ids of the mesh, in mesh order.
    pub mesh_ids: Vec<u32>,
    /// Every debris id; the first `m * n` are visited.
    pub order: Vec<u32>,
    /// Rendezvous date of each position (days).
    pub dates_days: Vec<f64>,
    /// Program cost and mission costs on the mesh.
    pub k: f64,
    pub k_missions: Vec<f64>,
    pub seed: u64,
    pub trace: TraceSummary,
}

impl PlanFile {
    /// Debris ids and dates (s) of mission `i`.
    pub fn mission(&self, i: usize) -> (Vec<u32>, Vec<f64>) {
        let r = i * self.n..(i + 1) * self.n;
        (
            self.order[r.clone()].to_vec(),
            self.dates_days[r].iter().map(|d| d * DAY).collect(),
        )
    }
}

fn fmt_cost(c: f64) -> String {
    if c >= SENTINEL {
        "infeasible".into()
    } else {
        format!("{c:.1}")
    }
}

pub fn plan_text(plan: &PlanFile) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Plan ({}), {} missions of {} debris",
        plan.mode.replace('_', " "),
        plan.m,
        plan.n
    );
    let _ = writeln!(
        s,
        "K = {} m/s, seed {}, {} tries",
        fmt_cost(plan.k),
        plan.seed,
        plan.trace.tries
    );
    for i in 0..plan.m {
        let _ = writeln!(s, "\nMission {}  K = {} m/s", i + 1, fmt_cost(plan.k_missions[i]));
        let _ = writeln!(s, "{:>8} {:>10}", "debris", "date (d)");
        let (ids, dates) = plan.mission(i);
        for (id, t) in ids.iter().zip(dates) {
            let _ = writeln!(s, "{id:>8} {:>10.1}", t / DAY);
        }
    }
    let unvisited = &plan.order[plan.m * plan.n..];
    if !unvisited.is_empty() {
        let ids: Vec<String> = unvisited.iter().map(u32::to_string).collect();
        let _ = writeln!(s, "\nNot visited: {}", ids.join(" "));
    }
    s
}

pub fn plan_csv(plan: &PlanFile) -> String {
    let mut s = String::from("mission,position,debris,date_days\n");
    for i in 0..plan.m {
        let (ids, dates) = plan.mission(i);
        for (p, (id, t)) in ids.iter().zip(dates).enumerate() {
            let _ = writeln!(s, "{},{},{},{}", i + 1, p + 1, id, t / DAY);
        }
    }
    s
}

/// Mission blocks with one row per visited debris: date, impulse of the
/// arriving leg and its drift orbit.
pub fn mission_plan_text(plan: &MissionPlan, earth: &EarthModel) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Mission plan ({}), max mission dv {:.1} m/s",
        plan.mode.replace('_', " "),
        plan.max_dv
    );
    for (i, m) in plan.missions.iter().enumerate() {
        let before = m.input_dates_dv.map_or("infeasible".to_string(), |v| format!("{v:.1}"));
        let _ = writeln!(
            s,
            "\nMission {}: {:.1} m/s (input dates {before} m/s)",
            i + 1,
            m.total_dv
        );
        let _ = writeln!(
            s,
            "{:>8} {:>9} {:>9} {:>10} {:>9} {:>9} {:>9} {:>9}",
            "debris", "date (d)", "dv (m/s)", "drift (km)", "inc (deg)", "d1 (d)", "d2 (d)", "dRAAN"
        );
        for v in &m.visits {
            match &v.transfer {
                None => {
                    let _ = writeln!(s, "{:>8} {:>9.1} {:>9.1}", v.debris, v.date / DAY, v.dv);
                }
                Some(t) => {
                    let _ = writeln!(
                        s,
                        "{:>8} {:>9.1} {:>9.1} {:>10.1} {:>9.2} {:>9.1} {:>9.1} {:>9.3}",
                        v.debris,
                        v.date / DAY,
                        v.dv,
                        (t.drift_radius - earth.radius) / 1e3,
                        t.drift_inclination.to_degrees(),
                        t.t_d1 / DAY,
                        t.t_d2 / DAY,
                        t.raan_residual.to_degrees()
                    );
                }
            }
        }
        if let Some(f) = &m.fuel {
            let _ = writeln!(s, "  mass ledger (kg):");
            for e in &f.entries {
                let what = match e.event {
                    FuelEvent::Transfer => "transfer",
                    FuelEvent::Deorbit => "deorbit",
                    FuelEvent::KitRelease => "kit",
                };
                let _ = writeln!(
                    s,
                    "  {:>8} {:<9} {:>9.1} -> {:>9.1}",
                    e.debris, what, e.mass_before, e.mass_after
                );
            }
            let _ = writeln!(
                s,
                "  final mass {:.1} kg{}",
                f.final_mass,
                if f.exhausted { " (EXHAUSTED)" } else { "" }
            );
        }
    }
    s
}

pub fn mission_plan_csv(plan: &MissionPlan, earth: &EarthModel) -> String {
    let mut s = String::from("mission,debris,date_days,dv_ms,drift_altitude_km,drift_inclination_deg,drift_start_days,drift_end_days,raan_residual_deg\n");
    for (i, m) in plan.missions.iter().enumerate() {
        for v in &m.visits {
            let _ = write!(s, "{},{},{},{}", i + 1, v.debris, v.date / DAY, v.dv);
            match &v.transfer {
                Some(t) => {
                    let _ = writeln!(
                        s,
                        ",{},{},{},{},{}",
                        (t.drift_radius - earth.radius) / 1e3,
                        t.drift_inclination.to_degrees(),
                        t.t_d1 / DAY,
                        t.t_d2 / DAY,
                        t.raan_residual.to_degrees()
                    );
                }
                None => s.push_str(",,,,,\n"),
            }
        }
    }
    s
}

pub fn mesh_text(mesh: &CostMesh) -> String {
    let finite: Vec<f64> = mesh.costs.iter().copied().filter(|&c| c < SENTINEL).collect();
    let off_diagonal = mesh.grid.n_dates() * mesh.grid.n_durations() * mesh.n() * (mesh.n() - 1);
    let diagonal = mesh.costs.len() - off_diagonal;
    let mut s = String::new();
    let _ = writeln!(s, "Cost mesh ({}), {} debris", mesh.mode.replace('_', " "), mesh.n());
    let _ = writeln!(
        s,
        "program {:.1} + {:.1} days, {} dates x {} durations",
        mesh.t0 / DAY,
        mesh.span / DAY,
        mesh.grid.n_dates(),
        mesh.grid.n_durations()
    );
    let days = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{:.1}", x / DAY))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(s, "dates (d): {}", days(&mesh.grid.dates));
    let _ = writeln!(s, "durations (d): {}", days(&mesh.grid.durations));
    let _ = writeln!(
        s,
        "finite transfers: {} of {}",
        finite.len() - diagonal.min(finite.len()),
        off_diagonal
    );
    if let (Some(lo), Some(hi)) = (
        finite.iter().copied().reduce(f64::min),
        finite.iter().copied().reduce(f64::max),
    ) {
        let _ = writeln!(s, "finite costs range {lo:.1} .. {hi:.1} m/s");
    }
    s
}

pub fn mesh_csv(mesh: &CostMesh) -> String {
    let mut s = String::from("date_days,duration_days,from,to,dv_ms\n");
    let ids = &mesh.debris_ids;
    for (i, t) in mesh.grid.dates.iter().enumerate() {
        for (d, dt) in mesh.grid.durations.iter().enumerate() {
            for j in 0..ids.len() {
                for k in 0..ids.len() {
                    let c = mesh.get(i, d, j, k);
                    if j != k && c < SENTINEL {
                        let _ = writeln!(s, "{},{},{},{},{}", t / DAY, dt / DAY, ids[j], ids[k], c);
                    }
                }
            }
        }
    }
    s
}

//! Re-optimization of each mission with the debris order and the mission
//! start and end dates fixed: intermediate dates move, every leg is solved
//! with the full transfer model under a relaxed node tolerance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drift::{solve_transfer, TransferSolution};
use crate::mesh::{DeorbitOption, TransferConfig};
use crate::numeric::golden_section;
use crate::orbit::{fuel_consumed, Debris, DAY};

pub const PLAN_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum RefineError {
    #[error("invalid mission: {0}")]
    Invalid(String),
    #[error("mission {mission}: leg {leg} (debris {from} to {to}) has no feasible transfer")]
    Infeasible {
        mission: usize,
        leg: usize,
        from: u32,
        to: u32,
    },
}

/// Vehicle mass bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelModel {
    /// Gross mass at the start of each mission (kg).
    pub initial_mass: f64,
    pub exhaust_velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    /// Interior dates scanned per coordinate before the golden search.
    pub scan_points: usize,
    /// A sweep gaining less than this (m/s) ends the descent.
    pub min_gain: f64,
    pub max_sweeps: usize,
    /// Resolution of the date search (s).
    pub date_tolerance: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            scan_points: 48,
            min_gain: 0.5,
            max_sweeps: 10,
            date_tolerance: 0.01 * DAY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuelEvent {
    Transfer,
    Deorbit,
    KitRelease,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelEntry {
    pub debris: u32,
    pub event: FuelEvent,
    /// Impulse (m/s) for burns, released mass (kg) for kits.
    pub amount: f64,
    pub mass_before: f64,
    pub mass_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelLedger {
    pub entries: Vec<FuelEntry>,
    pub final_mass: f64,
    /// Set when the vehicle runs out of mass along the mission.
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub debris: u32,
    /// Rendezvous date (s).
    pub date: f64,
    /// Transfer arriving here; absent for the first debris of a mission.
    pub transfer: Option<TransferSolution>,
    /// Impulse charged to this visit, deorbit burn included.
    pub dv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub visits: Vec<Visit>,
    pub total_dv: f64,
    /// Same cost with the input dates, if they are feasible.
    pub input_dates_dv: Option<f64>,
    pub sweeps: usize,
    pub fuel: Option<FuelLedger>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionPlan {
    pub version: u32,
    pub mode: String,
    pub deorbit: DeorbitOption,
    pub missions: Vec<Mission>,
    pub max_dv: f64,
}

struct Context<'a> {
    debris: &'a [Debris],
    transfer: &'a TransferConfig,
    deorbit: DeorbitOption,
}

impl Context<'_> {
    fn op(&self, d: &Debris) -> f64 {
        match self.deorbit {
            DeorbitOption::Vehicle => d.op_cost,
            DeorbitOption::Kit => 0.0,
        }
    }

    fn leg(&self, q: usize, t1: f64, t2: f64) -> Option<TransferSolution> {
        if t2 - t1 <= self.transfer.op_dwell {
            return None;
        }
        solve_transfer(&self.transfer.problem(&self.debris[q - 1], &self.debris[q], t1, t2)).ok()
    }

    fn leg_dv(&self, q: usize, t1: f64, t2: f64) -> f64 {
        self.leg(q, t1, t2).map_or(f64::INFINITY, |s| s.dv)
    }

    fn total(&self, dates: &[f64]) -> f64 {
        (1..dates.len()).map(|q| self.leg_dv(q, dates[q - 1], dates[q])).sum()
    }

    /// Cost of the two legs around intermediate date `q` set to `t`.
    fn around(&self, dates: &[f64], q: usize, t: f64) -> f64 {
        self.leg_dv(q, dates[q - 1], t) + self.leg_dv(q + 1, t, dates[q + 1])
    }

    /// Best date for `q` inside its bracket: a uniform scan, then a golden
    /// search between the neighbours of the best scanned point.
    fn best_date(&self, dates: &[f64], q: usize, cfg: &RefineConfig) -> (f64, f64) {
        let (lo, hi) = (dates[q - 1], dates[q + 1]);
        let k = cfg.scan_points.max(2);
        let grid: Vec<f64> = (1..=k).map(|i| lo + (hi - lo) * i as f64 / (k + 1) as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&t| self.around(dates, q, t)).collect();
        let (ib, &vb) = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty scan");
        if !vb.is_finite() {
            return (grid[ib], vb);
        }
        let a = if ib == 0 { lo } else { grid[ib - 1] };
        let b = if ib + 1 == k { hi } else { grid[ib + 1] };
        let (t, v) = golden_section(|t| self.around(dates, q, t), a, b, cfg.date_tolerance);
        if v < vb && t > lo && t < hi {
            (t, v)
        } else {
            (grid[ib], vb)
        }
    }
}

/// Refines one mission: `debris` in visiting order, `dates` its input
/// rendezvous dates. The first and last dates stay fixed.
pub fn refine_mission(
    debris: &[Debris],
    dates: &[f64],
    transfer: &TransferConfig,
    deorbit: DeorbitOption,
    cfg: &RefineConfig,
) -> Result<Mission, RefineError> {
    if debris.is_empty() || debris.len() != dates.len() {
        return Err(RefineError::Invalid(format!(
            "{} debris with {} dates",
            debris.len(),
            dates.len()
        )));
    }
    if dates.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(RefineError::Invalid("dates must increase".into()));
    }
    let ctx = Context {
        debris,
        transfer,
        deorbit,
    };
    let mut dates = dates.to_vec();
    let input = ctx.total(&dates);
    let mut total = input;
    let mut sweeps = 0;
    while dates.len() > 2 && sweeps < cfg.max_sweeps {
        sweeps += 1;
        let before = total;
        for q in 1..dates.len() - 1 {
            let current = ctx.around(&dates, q, dates[q]);
            let (t, v) = ctx.best_date(&dates, q, cfg);
            if v < current {
                dates[q] = t;
                total = ctx.total(&dates);
            }
        }
        if !(before - total >= cfg.min_gain) && before.is_finite() {
            break;
        }
    }

    let mut visits = Vec::with_capacity(debris.len());
    visits.push(Visit {
        debris: debris[0].id,
        date: dates[0],
        transfer: None,
        dv: ctx.op(&debris[0]),
    });
    for q in 1..debris.len() {
        let s = ctx.leg(q, dates[q - 1], dates[q]).ok_or(RefineError::Infeasible {
            mission: 0,
            leg: q - 1,
            from: debris[q - 1].id,
            to: debris[q].id,
        })?;
        visits.push(Visit {
            debris: debris[q].id,
            date: dates[q],
            transfer: Some(s),
            dv: s.dv + ctx.op(&debris[q]),
        });
    }
    let ops: f64 = debris.iter().map(|d| ctx.op(d)).sum();
    Ok(Mission {
        total_dv: visits.iter().map(|v| v.dv).sum(),
        input_dates_dv: input.is_finite().then_some(input + ops),
        visits,
        sweeps,
        fuel: None,
    })
}

/// Mass history of a mission: deorbit burns or kit releases at each debris
/// and the transfer burns between them.
pub fn fuel_ledger(mission: &Mission, debris: &[Debris], deorbit: DeorbitOption, model: &FuelModel) -> FuelLedger {
    let mut mass = model.initial_mass;
    let mut entries = Vec::new();
    let mut exhausted = false;
    let mut push = |entries: &mut Vec<FuelEntry>, mass: &mut f64, id: u32, event: FuelEvent, amount: f64| {
        let before = *mass;
        let spent = match event {
            FuelEvent::KitRelease => amount,
            _ => fuel_consumed(before.max(0.0), amount, model.exhaust_velocity).unwrap_or(f64::INFINITY),
        };
        *mass = before - spent;
        exhausted |= !(*mass > 0.0);
        entries.push(FuelEntry {
            debris: id,
            event,
            amount,
            mass_before: before,
            mass_after: *mass,
        });
    };
    for (visit, d) in mission.visits.iter().zip(debris) {
        if let Some(s) = &visit.transfer {
            push(&mut entries, &mut mass, d.id, FuelEvent::Transfer, s.dv);
        }
        match deorbit {
            DeorbitOption::Vehicle if d.op_cost > 0.0 => {
                push(&mut entries, &mut mass, d.id, FuelEvent::Deorbit, d.op_cost)
            }
            DeorbitOption::Kit if d.op_cost > 0.0 => {
                push(&mut entries, &mut mass, d.id, FuelEvent::KitRelease, d.op_cost)
            }
            _ => {}
        }
    }
    FuelLedger {
        entries,
        final_mass: mass,
        exhausted,
    }
}

/// Refines every mission of a program in parallel. `missions` lists, per
/// mission, the debris in visiting order and their input dates.
pub fn refine_program(
    missions: &[(Vec<Debris>, Vec<f64>)],
    transfer: &TransferConfig,
    deorbit: DeorbitOption,
    fuel: Option<&FuelModel>,
    cfg: &RefineConfig,
) -> Result<MissionPlan, RefineError> {
    if missions.is_empty() {
        return Err(RefineError::Invalid("no missions".into()));
    }
    let refined: Vec<Mission> = missions
        .par_iter()
        .enumerate()
        .map(|(i, (debris, dates))| {
            let mut m = refine_mission(debris, dates, transfer, deorbit, cfg).map_err(|e| match e {
                RefineError::Infeasible { leg, from, to, .. } => RefineError::Infeasible {
                    mission: i,
                    leg,
                    from,
                    to,
                },
                other => other,
            })?;
            m.fuel = fuel.map(|f| fuel_ledger(&m, debris, deorbit, f));
            Ok(m)
        })
        .collect::<Result<_, _>>()?;
    let max_dv = refined.iter().map(|m| m.total_dv).fold(0.0, f64::max);
    Ok(MissionPlan {
        version: PLAN_VERSION,
        mode: transfer.propulsion.name().to_string(),
        deorbit,
        missions: refined,
        max_dv,
    })
}

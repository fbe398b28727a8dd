//! Stage orchestration: mesh, plan, refine.

use std::collections::HashMap;

use thiserror::Error;

use crate::config::ProgramConfig;
use crate::mesh::{build_grid, fill_mesh, CostMesh, FillReport, MeshError};
use crate::orbit::{Debris, DAY};
use crate::planner::{plan, PathSpec, PlanError, PlanResult, Planner, TrialSolution};
use crate::refine::{refine_program, MissionPlan, RefineError};
use crate::report::{PlanFile, TraceSummary, PLAN_FILE_VERSION};

/// Trace points kept in a plan file.
const TRACE_POINTS: usize = 200;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error("inputs do not match: {0}")]
    Mismatch(String),
    #[error("no feasible plan: program cost {0} m/s is the infeasibility sentinel")]
    Infeasible(f64),
}

pub fn mesh_stage(debris: &[Debris], cfg: &ProgramConfig) -> Result<(CostMesh, FillReport), PipelineError> {
    let grid = build_grid(cfg.t0(), cfg.span(), cfg.n, cfg.m, Some(&cfg.grid_override()))?;
    Ok(fill_mesh(debris, &grid, cfg.t0(), cfg.span(), &cfg.mesh_transfer())?)
}

/// Debris of the catalogue in the order of `ids`.
fn select(debris: &[Debris], ids: &[u32]) -> Result<Vec<Debris>, PipelineError> {
    let by_id: HashMap<u32, &Debris> = debris.iter().map(|d| (d.id, d)).collect();
    ids.iter()
        .map(|id| {
            by_id
                .get(id)
                .map(|d| (*d).clone())
                .ok_or_else(|| PipelineError::Mismatch(format!("debris {id} is not in the catalogue")))
        })
        .collect()
}

pub fn path_spec(mesh: &CostMesh, debris: &[Debris], cfg: &ProgramConfig) -> Result<PathSpec, PipelineError> {
    let in_mesh = select(debris, &mesh.debris_ids)?;
    if in_mesh.iter().zip(0..).any(|(d, j)| d.op_cost != mesh.op_cost(j)) {
        return Err(PipelineError::Mismatch(
            "operation costs differ from the mesh diagonal".into(),
        ));
    }
    Ok(PathSpec {
        m: cfg.m,
        n: cfg.n,
        deorbit: cfg.deorbit,
        min_leg: cfg.min_leg(mesh.grid.durations[0]),
        weights: in_mesh.iter().map(|d| d.weight).collect(),
    })
}

pub fn plan_file(result: &PlanResult, mesh: &CostMesh, cfg: &ProgramConfig) -> PlanFile {
    PlanFile {
        version: PLAN_FILE_VERSION,
        mode: mesh.mode.clone(),
        m: cfg.m,
        n: cfg.n,
        deorbit: cfg.deorbit,
        t0_days: mesh.t0 / DAY,
        span_days: mesh.span / DAY,
        mesh_ids: mesh.debris_ids.clone(),
        order: result.solution.order.iter().map(|&j| mesh.debris_ids[j]).collect(),
        dates_days: result.solution.dates.iter().map(|t| t / DAY).collect(),
        k: result.k,
        k_missions: result.k_missions.clone(),
        seed: result.seed,
        trace: TraceSummary::from_trace(&result.trace, result.tries, result.initial_temperature, TRACE_POINTS),
    }
}

pub fn plan_stage(mesh: &CostMesh, debris: &[Debris], cfg: &ProgramConfig) -> Result<PlanFile, PipelineError> {
    let planner = Planner::new(mesh, path_spec(mesh, debris, cfg)?)?;
    let result = plan(&planner, &cfg.schedule(), cfg.chains)?;
    Ok(plan_file(&result, mesh, cfg))
}

/// The plan's solution as mesh positions and dates (s).
pub fn trial_solution(plan: &PlanFile, mesh: &CostMesh) -> Result<TrialSolution, PipelineError> {
    let order = plan
        .order
        .iter()
        .map(|id| {
            mesh.position(*id)
                .ok_or_else(|| PipelineError::Mismatch(format!("plan debris {id} is not in the mesh")))
        })
        .collect::<Result<_, _>>()?;
    Ok(TrialSolution {
        order,
        dates: plan.dates_days.iter().map(|d| d * DAY).collect(),
    })
}

pub fn refine_stage(plan: &PlanFile, debris: &[Debris], cfg: &ProgramConfig) -> Result<MissionPlan, PipelineError> {
    if plan.m * plan.n > plan.order.len() || plan.order.len() != plan.dates_days.len() {
        return Err(PipelineError::Mismatch("plan order and dates are inconsistent".into()));
    }
    if plan.k_missions.iter().any(|&k| k >= crate::mesh::SENTINEL) {
        return Err(PipelineError::Infeasible(plan.k));
    }
    let missions = (0..plan.m)
        .map(|i| {
            let (ids, dates) = plan.mission(i);
            Ok((select(debris, &ids)?, dates))
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let fuel = cfg.fuel();
    Ok(refine_program(
        &missions,
        &cfg.refine_transfer(),
        plan.deorbit,
        fuel.as_ref(),
        &cfg.refine,
    )?)
}

//! Planning of multi-mission space debris cleaning programs.

// validation rejects NaN through negated comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anneal;
pub mod config;
pub mod drift;
pub mod impulsive;
pub mod ingest;
pub mod lowthrust;
pub mod mesh;
pub mod numeric;
pub mod orbit;
pub mod pipeline;
pub mod planner;
pub mod refine;
pub mod report;
pub mod tsp;

pub use anneal::Schedule;
pub use config::ProgramConfig;
pub use drift::{solve_transfer, Propulsion, TransferProblem, TransferSolution};
pub use mesh::{CostMesh, DeorbitOption, MeshGrid, TransferConfig};
pub use orbit::{CircularOrbit, Debris, EarthModel, OrbitError, DAY};
pub use planner::{PlanResult, TrialSolution};
pub use refine::MissionPlan;
pub use report::PlanFile;

//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use sdc_core::ingest::parse_debris_csv;
use sdc_core::pipeline::mesh_stage;
use sdc_core::{CostMesh, Debris, EarthModel, ProgramConfig};

pub fn repo(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn catalogue() -> Vec<Debris> {
    parse_debris_csv(&repo("data/debris21.csv"), &EarthModel::STANDARD).expect("bundled catalogue")
}

pub fn config(name: &str) -> ProgramConfig {
    ProgramConfig::load(&repo(&format!("configs/{name}.json"))).expect("bundled config")
}

/// High-thrust mesh of the bundled program.
pub fn program_mesh() -> CostMesh {
    mesh_stage(&catalogue(), &config("high_thrust")).expect("mesh fill").0
}

//! `sdc`: command-line front end of the debris cleaning planner.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid configuration or
//! arguments, 3 missing input file, 4 no feasible plan, 5 malformed data.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use sdc_core::config::ConfigError;
use sdc_core::ingest::{load_debris, IngestError};
use sdc_core::mesh::{load_mesh, save_mesh, MeshError, MESH_MAGIC, SENTINEL};
use sdc_core::pipeline::{mesh_stage, plan_stage, refine_stage, PipelineError};
use sdc_core::refine::RefineError;
use sdc_core::report::{mesh_csv, mesh_text, mission_plan_csv, mission_plan_text, plan_csv, plan_text};
use sdc_core::tsp::{gap, parse_tour, parse_tsplib, solve_tsp, tsp_tour_length, TspError};
use sdc_core::{Debris, EarthModel, MissionPlan, PlanFile, ProgramConfig, Schedule};

#[derive(Parser)]
#[command(name = "sdc", version, about = "Plan multi-mission space debris cleaning programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Program configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output artifact path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores when absent. Never changes the results.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fill the transfer cost mesh of a debris catalogue.
    Mesh {
        /// Debris catalogue (CSV or two-line elements); overrides the config.
        #[arg(long)]
        debris: Option<PathBuf>,
    },
    /// Anneal the visiting order and dates on a cost mesh.
    Plan {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        debris: Option<PathBuf>,
        /// Overrides the annealing budget.
        #[arg(long)]
        max_tries: Option<u64>,
        /// Overrides the number of independent chains.
        #[arg(long)]
        chains: Option<usize>,
    },
    /// Re-optimise the planned dates against the true transfer model.
    Refine {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        debris: Option<PathBuf>,
    },
    /// Anneal a TSPLIB instance and print the tour length.
    Tsp {
        instance: PathBuf,
        /// Best known length; looked up for common instances when absent.
        #[arg(long)]
        best: Option<f64>,
        /// Score this tour file instead of annealing.
        #[arg(long)]
        tour: Option<PathBuf>,
        #[arg(long)]
        max_tries: Option<u64>,
    },
    /// Render a mesh, plan or mission plan artifact.
    Report {
        artifact: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Code {
    Other = 1,
    Config = 2,
    Missing = 3,
    Infeasible = 4,
    Data = 5,
}

struct Failure {
    code: Code,
    msg: String,
}

impl Failure {
    fn new(code: Code, msg: impl Display) -> Self {
        Self {
            code,
            msg: msg.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::new(Code::Config, e)
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Failure::new(Code::Data, e)
    }
}

fn mesh_code(e: &MeshError) -> Code {
    match e {
        MeshError::Grid(_) | MeshError::TooFewDebris(_) => Code::Config,
        MeshError::Io(_) => Code::Other,
        _ => Code::Data,
    }
}

impl From<MeshError> for Failure {
    fn from(e: MeshError) -> Self {
        Failure::new(mesh_code(&e), e)
    }
}

impl From<TspError> for Failure {
    fn from(e: TspError) -> Self {
        let code = match e {
            TspError::Io { .. } => Code::Other,
            TspError::Schedule(_) => Code::Config,
            _ => Code::Data,
        };
        Failure::new(code, e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::Mesh(m) => mesh_code(m),
            PipelineError::Plan(_) => Code::Config,
            PipelineError::Refine(RefineError::Infeasible { .. }) | PipelineError::Infeasible(_) => Code::Infeasible,
            PipelineError::Refine(RefineError::Invalid(_)) | PipelineError::Mismatch(_) => Code::Data,
        };
        Failure::new(code, e)
    }
}

type Outcome<T> = Result<T, Failure>;

fn require(path: &Path) -> Outcome<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::new(
            Code::Missing,
            format!("input not found: {}", path.display()),
        ))
    }
}

fn write(path: &Path, bytes: &[u8]) -> Outcome<()> {
    fs::write(path, bytes).map_err(|e| Failure::new(Code::Other, format!("cannot write {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Outcome<T> {
    require(path)?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(Code::Other, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::new(Code::Data, format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifacts serialize");
    bytes.push(b'\n');
    bytes
}

fn load_config(common: &Common) -> Outcome<ProgramConfig> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Failure::new(Code::Config, "--config is required for this command"))?;
    require(path)?;
    let mut cfg = ProgramConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn catalogue(cfg: &ProgramConfig, over: Option<&Path>) -> Outcome<Vec<Debris>> {
    let path = over.or(cfg.debris.as_deref()).ok_or_else(|| {
        Failure::new(
            Code::Config,
            "no debris catalogue: set `debris` in the config or pass --debris",
        )
    })?;
    require(path)?;
    Ok(load_debris(path, &EarthModel::STANDARD)?)
}

fn out_path(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

/// Best known tour lengths of common TSPLIB instances.
fn best_known(name: &str) -> Option<f64> {
    match name {
        "bier127" => Some(118282.0),
        "lin318" => Some(42029.0),
        "pcb442" => Some(50778.0),
        "att532" => Some(27686.0),
        _ => None,
    }
}

fn run(cli: Cli) -> Outcome<()> {
    if let Some(threads) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::new(Code::Config, format!("--threads {threads}: {e}")))?;
    }
    let common = &cli.common;
    match &cli.command {
        Command::Mesh { debris } => {
            let cfg = load_config(common)?;
            let debris = catalogue(&cfg, debris.as_deref())?;
            let clock = Instant::now();
            let (mesh, report) = mesh_stage(&debris, &cfg)?;
            let out = out_path(common, "program.sdcmesh");
            save_mesh(&mesh, &out)?;
            info!("mesh filled in {:.1}s", clock.elapsed().as_secs_f64());
            println!(
                "mesh: {} debris, {} dates x {} durations; {} of {} transfers solved, {} infeasible -> {}",
                mesh.n(),
                mesh.grid.n_dates(),
                mesh.grid.n_durations(),
                report.solved,
                report.work_units,
                report.infeasible,
                out.display()
            );
        }
        Command::Plan {
            mesh,
            debris,
            max_tries,
            chains,
        } => {
            let mut cfg = load_config(common)?;
            if let Some(t) = max_tries {
                cfg.schedule.max_tries = *t;
            }
            if let Some(c) = chains {
                cfg.chains = *c;
            }
            require(mesh)?;
            let mesh = load_mesh(mesh)?;
            let debris = catalogue(&cfg, debris.as_deref())?;
            let plan = plan_stage(&mesh, &debris, &cfg)?;
            let out = out_path(common, "plan.json");
            write(&out, &to_json(&plan))?;
            print!("{}", plan_text(&plan));
            if plan.k >= SENTINEL {
                return Err(Failure::new(
                    Code::Infeasible,
                    format!("no feasible plan found; best attempt written to {}", out.display()),
                ));
            }
        }
        Command::Refine { plan, debris } => {
            let cfg = load_config(common)?;
            let plan: PlanFile = read_json(plan)?;
            let debris = catalogue(&cfg, debris.as_deref())?;
            let refined = refine_stage(&plan, &debris, &cfg)?;
            let out = out_path(common, "missions.json");
            write(&out, &to_json(&refined))?;
            print!("{}", mission_plan_text(&refined, &EarthModel::STANDARD));
        }
        Command::Tsp {
            instance,
            best,
            tour,
            max_tries,
        } => {
            require(instance)?;
            let inst = parse_tsplib(instance)?;
            let reference = best.or_else(|| best_known(&inst.name));
            let length = if let Some(tour) = tour {
                require(tour)?;
                tsp_tour_length(&inst.points, &parse_tour(tour)?, inst.metric)?
            } else {
                let mut schedule = Schedule {
                    seed: common.seed.unwrap_or(1),
                    ..Schedule::default()
                };
                if let Some(t) = max_tries {
                    schedule.max_tries = *t;
                }
                let clock = Instant::now();
                let r = solve_tsp(&inst, &schedule)?;
                info!("{} tries in {:.1}s", r.tries, clock.elapsed().as_secs_f64());
                if let Some(out) = &common.out {
                    let body: String = r.tour.iter().map(|c| format!("{}\n", c + 1)).collect();
                    let text = format!(
                        "NAME : {}.tour\nTYPE : TOUR\nDIMENSION : {}\nTOUR_SECTION\n{body}-1\nEOF\n",
                        inst.name,
                        r.tour.len()
                    );
                    write(out, text.as_bytes())?;
                }
                r.length
            };
            match reference {
                Some(b) => println!(
                    "{}: length {length} gap {:.3}% vs {b}",
                    inst.name,
                    100.0 * gap(length, b)
                ),
                None => println!("{}: length {length}", inst.name),
            }
        }
        Command::Report { artifact, format } => {
            require(artifact)?;
            let bytes = fs::read(artifact)
                .map_err(|e| Failure::new(Code::Other, format!("cannot read {}: {e}", artifact.display())))?;
            let earth = EarthModel::STANDARD;
            let text = if bytes.starts_with(MESH_MAGIC) {
                let mesh = sdc_core::mesh::read_mesh(&bytes)?;
                match format {
                    Format::Text => mesh_text(&mesh),
                    Format::Csv => mesh_csv(&mesh),
                }
            } else {
                let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| {
                    Failure::new(
                        Code::Data,
                        format!("{}: neither a mesh nor JSON: {e}", artifact.display()),
                    )
                })?;
                let data = |e: serde_json::Error| Failure::new(Code::Data, format!("{}: {e}", artifact.display()));
                if value.get("missions").is_some() {
                    let plan: MissionPlan = serde_json::from_value(value).map_err(data)?;
                    match format {
                        Format::Text => mission_plan_text(&plan, &earth),
                        Format::Csv => mission_plan_csv(&plan, &earth),
                    }
                } else {
                    let plan: PlanFile = serde_json::from_value(value).map_err(data)?;
                    match format {
                        Format::Text => plan_text(&plan),
                        Format::Csv => plan_csv(&plan),
                    }
                }
            };
            match &common.out {
                Some(out) => write(out, text.as_bytes())?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Code::Config as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code as u8)
        }
    }
}

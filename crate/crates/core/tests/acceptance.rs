//! Acceptance criteria. Each test writes one `criterion N: PASS|FAIL` line to
//! stdout, past the test harness capture, then asserts its verdict.

mod common;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use sdc_core::drift::{solve_transfer, Propulsion, EQUALITY_TOLERANCE};
use sdc_core::ingest::{load_debris, parse_debris_csv};
use sdc_core::lowthrust::{edelbaum_profile, edelbaum_solve, raan_drift_along_profile, LowThrustConfig};
use sdc_core::mesh::{interpolate, write_mesh, SENTINEL};
use sdc_core::orbit::{raan_rate, DAY};
use sdc_core::pipeline::{mesh_stage, plan_stage, refine_stage};
use sdc_core::planner::{anneal_path, PathSpec, Planner};
use sdc_core::tsp::{gap, parse_tsplib, solve_tsp};
use sdc_core::{Debris, ProgramConfig, Schedule};

fn verdict(n: u32, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "\ncriterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" }).unwrap();
    out.flush().unwrap();
}

fn root(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn fixture() -> Vec<Debris> {
    parse_debris_csv(&root("../../data/debris21.csv"), &E).unwrap()
}

fn config(name: &str) -> ProgramConfig {
    ProgramConfig::load(&root(&format!("../../configs/{name}.json"))).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

/// Precession rates (deg/day) of the 21-debris catalogue, in id order.
const CATALOGUE_RATES: [f64; 21] = [
    0.8429, 0.8745, 0.9058, 0.9367, 0.9672, 0.9975, 1.0273, 0.8260, 0.8565, 0.8866, 0.9165, 0.9460, 0.9752, 1.0040,
    0.8094, 0.8389, 0.8681, 0.8969, 0.9254, 0.9536, 0.9815,
];

#[test]
fn criterion_1_precession_rates() {
    let debris = fixture();
    assert_eq!(debris.len(), 21);
    let worst = debris
        .iter()
        .zip(CATALOGUE_RATES)
        .map(|(d, want)| (raan_rate(d.orbit.radius, d.orbit.inclination, &E).to_degrees() * DAY - want).abs())
        .fold(0.0, f64::max);
    let pass = worst <= 0.002;
    verdict(
        1,
        pass,
        &format!("worst rate error {worst:.5} deg/day over 21 debris (limit 0.002)"),
    );
    assert!(pass);
}

/// TSPLIB file from `SDC_TSPLIB_DIR` or the bundled test data.
fn tsplib(name: &str) -> Option<PathBuf> {
    let file = format!("{name}.tsp");
    std::env::var_os("SDC_TSPLIB_DIR")
        .map(|d| Path::new(&d).join(&file))
        .into_iter()
        .chain([root("tests/data").join(&file)])
        .find(|p| p.is_file())
}

#[test]
fn criterion_2_tsp_benchmarks() {
    let limit = Duration::from_secs(600);
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, best, tol, gating) in [
        ("bier127", 118282.0, 0.02, true),
        ("lin318", 42029.0, 0.02, true),
        ("att532", 27686.0, 0.03, false),
    ] {
        let Some(path) = tsplib(name) else {
            pass &= !gating;
            notes.push(format!("{name} missing (set SDC_TSPLIB_DIR)"));
            continue;
        };
        let inst = parse_tsplib(&path).unwrap();
        let clock = Instant::now();
        let r = solve_tsp(
            &inst,
            &Schedule {
                seed: 1,
                ..Schedule::default()
            },
        )
        .unwrap();
        let took = clock.elapsed();
        let g = gap(r.length, best);
        let ok = g <= tol && took <= limit;
        if gating {
            pass &= ok;
        }
        notes.push(format!(
            "{name} {} gap {:.3}% in {:.0}s{}",
            r.length,
            100.0 * g,
            took.as_secs_f64(),
            if ok { "" } else { " (over limit)" }
        ));
    }
    verdict(2, pass, &notes.join(", "));
    assert!(pass);
}

#[test]
fn criterion_3_small_instance_oracle() {
    let spec = PathSpec::new(1, 3, 6);
    let mut pass = true;
    let mut hits = Vec::new();
    for inst in 0..5 {
        let mesh = small_mesh(1000 + inst, 6);
        let best = exhaustive_optimum(&mesh, &spec);
        let planner = Planner::new(&mesh, spec.clone()).unwrap();
        let matched = (0..20)
            .filter(|&seed| {
                let schedule = Schedule {
                    max_tries: 200_000,
                    tries_per_level: 100,
                    seed,
                    ..Schedule::default()
                };
                anneal_path(&planner, planner.greedy_init(), &schedule).unwrap().k <= best + 1e-9
            })
            .count();
        pass &= matched >= 19;
        hits.push(matched);
    }
    verdict(
        3,
        pass,
        &format!("runs matching the exhaustive optimum per instance: {hits:?} of 20 (need 19)"),
    );
    assert!(pass);
}

#[test]
fn criterion_4_drift_solver_optimality() {
    let clock = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for (seed, propulsion) in [
        (41, Propulsion::HighThrust),
        (42, Propulsion::LowThrust(LowThrustConfig::constant(0.0035))),
    ] {
        let mut rng = rng(seed);
        let (mut checked, mut worst, mut residual) = (0, f64::NEG_INFINITY, 0.0f64);
        while checked < 30 {
            let p = random_problem(&mut rng, propulsion);
            let Some(oracle) = grid_oracle(&p, 100, 0.05f64.to_radians()) else {
                continue;
            };
            match solve_transfer(&p) {
                Ok(s) => {
                    worst = worst.max(s.dv - oracle);
                    residual = residual.max(s.raan_residual.abs());
                }
                Err(_) => worst = f64::INFINITY,
            }
            checked += 1;
        }
        pass &= worst <= 2.0 && residual <= EQUALITY_TOLERANCE;
        notes.push(format!(
            "{}: worst excess {worst:.3} m/s, residual {residual:.2e} rad",
            propulsion.name()
        ));
    }
    let took = clock.elapsed();
    pass &= took <= Duration::from_secs(300);
    verdict(4, pass, &format!("{} in {:.0}s", notes.join("; "), took.as_secs_f64()));
    assert!(pass);
}

struct EndToEnd {
    worst_refined: f64,
    k_missions: Vec<f64>,
    refined: Vec<f64>,
    at_plan_dates: Vec<Option<f64>>,
    times: [Duration; 3],
}

fn end_to_end(name: &str) -> EndToEnd {
    let cfg = config(name);
    let debris = load_debris(cfg.debris.as_ref().unwrap(), &E).unwrap();
    let clock = Instant::now();
    let (mesh, _) = mesh_stage(&debris, &cfg).unwrap();
    let mesh_time = clock.elapsed();
    let clock = Instant::now();
    let plan = plan_stage(&mesh, &debris, &cfg).unwrap();
    let plan_time = clock.elapsed();
    let clock = Instant::now();
    let refined = refine_stage(&plan, &debris, &cfg).unwrap();
    let refine_time = clock.elapsed();
    EndToEnd {
        worst_refined: refined.missions.iter().map(|m| m.total_dv).fold(0.0, f64::max),
        k_missions: plan.k_missions.clone(),
        refined: refined.missions.iter().map(|m| m.total_dv).collect(),
        at_plan_dates: refined.missions.iter().map(|m| m.input_dates_dv).collect(),
        times: [mesh_time, plan_time, refine_time],
    }
}

/// Largest relative spread of a set of positive costs.
fn spread(costs: &[f64]) -> f64 {
    let (lo, hi) = costs
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    (hi - lo) / lo
}

#[test]
fn criterion_5_end_to_end() {
    let limits = [
        Duration::from_secs(1800),
        Duration::from_secs(900),
        Duration::from_secs(300),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, lo, hi) in [("high_thrust", 600.0, 1000.0), ("low_thrust", 700.0, 1100.0)] {
        let r = end_to_end(name);
        let bounded = (lo..=hi).contains(&r.worst_refined);
        let balanced = spread(&r.k_missions) <= 0.25 && spread(&r.refined) <= 0.25;
        let improved = r
            .refined
            .iter()
            .zip(&r.at_plan_dates)
            .all(|(after, before)| before.is_some_and(|b| *after <= b + 1e-9));
        let timely = r.times.iter().zip(&limits).all(|(t, l)| t <= l);
        pass &= bounded && balanced && improved && timely;
        notes.push(format!(
            "{name}: refined max {:.1} m/s in [{lo}, {hi}] {bounded}; plan K_i {:?} refined {:?} balanced {balanced}; at plan dates {:?} improved {improved}; mesh/plan/refine {:.0}/{:.0}/{:.0}s",
            r.worst_refined,
            r.k_missions.iter().map(|k| k.round()).collect::<Vec<_>>(),
            r.refined.iter().map(|k| k.round()).collect::<Vec<_>>(),
            r.at_plan_dates.iter().map(|k| k.map(f64::round)).collect::<Vec<_>>(),
            r.times[0].as_secs_f64(),
            r.times[1].as_secs_f64(),
            r.times[2].as_secs_f64(),
        ));
    }
    verdict(5, pass, &notes.join("; "));
    assert!(pass);
}

#[test]
fn criterion_6_interpolation_exactness() {
    let cfg = config("high_thrust");
    let (mesh, _) = mesh_stage(&fixture(), &cfg).unwrap();
    let (nt, nd, n) = (mesh.grid.n_dates(), mesh.grid.n_durations(), mesh.n());
    let mut node_misses = 0;
    for i in 0..nt {
        for d in 0..nd {
            for j in 0..n {
                for k in 0..n {
                    let got = interpolate(&mesh, mesh.grid.dates[i], mesh.grid.durations[d], j, k);
                    node_misses += usize::from(got.to_bits() != mesh.get(i, d, j, k).to_bits());
                }
            }
        }
    }
    let mut rng = rng(6);
    let (mut queries, mut worst) = (0, 0.0f64);
    while queries < 1000 {
        let (i, d) = (rng.gen_range(0..nt - 1), rng.gen_range(0..nd - 1));
        let (j, k) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let corners = [
            mesh.get(i, d, j, k),
            mesh.get(i + 1, d, j, k),
            mesh.get(i, d + 1, j, k),
            mesh.get(i + 1, d + 1, j, k),
        ];
        if corners.iter().any(|&c| c >= SENTINEL) {
            continue;
        }
        let (u, v): (f64, f64) = (rng.gen(), rng.gen());
        let t = mesh.grid.dates[i] + u * (mesh.grid.dates[i + 1] - mesh.grid.dates[i]);
        let dt = mesh.grid.durations[d] + v * (mesh.grid.durations[d + 1] - mesh.grid.durations[d]);
        let u = (t - mesh.grid.dates[i]) / (mesh.grid.dates[i + 1] - mesh.grid.dates[i]);
        let v = (dt - mesh.grid.durations[d]) / (mesh.grid.durations[d + 1] - mesh.grid.durations[d]);
        let want = (1.0 - u) * (1.0 - v) * corners[0]
            + u * (1.0 - v) * corners[1]
            + (1.0 - u) * v * corners[2]
            + u * v * corners[3];
        let got = interpolate(&mesh, t, dt, j, k);
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
        queries += 1;
    }
    let pass = node_misses == 0 && worst <= 1e-12;
    verdict(
        6,
        pass,
        &format!(
            "{node_misses} inexact nodes of {}; worst relative cell error {worst:.2e} over 1000 queries",
            nt * nd * n * n
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_determinism() {
    let debris = fixture();
    let mut cfg = config("high_thrust");
    cfg.chains = 2;
    cfg.schedule.max_tries = 2_000_000;
    let runs: Vec<[Vec<u8>; 3]> = [1, 4, 8]
        .into_iter()
        .map(|k| {
            in_pool(k, || {
                let (mesh, _) = mesh_stage(&debris, &cfg).unwrap();
                let mut bytes = Vec::new();
                write_mesh(&mesh, &mut bytes).unwrap();
                let plan = plan_stage(&mesh, &debris, &cfg).unwrap();
                let refined = refine_stage(&plan, &debris, &cfg).unwrap();
                [
                    bytes,
                    serde_json::to_vec_pretty(&plan).unwrap(),
                    serde_json::to_vec_pretty(&refined).unwrap(),
                ]
            })
        })
        .collect();
    let same = |a: usize| runs.windows(2).all(|w| w[0][a] == w[1][a]);
    let (mesh, plan, refine) = (same(0), same(1), same(2));
    let pass = mesh && plan && refine;
    verdict(
        7,
        pass,
        &format!("identical across 1/4/8 workers: mesh {mesh}, plan {plan}, refine {refine}"),
    );
    assert!(pass);
}

#[test]
fn criterion_8_edelbaum_numerics() {
    let mut rng = rng(8);
    let bounds = (E.radius + 400e3, E.radius + 2000e3);
    let mut halving = 0.0f64;
    for _ in 0..200 {
        let from = (
            rng.gen_range(bounds.0..bounds.1),
            rng.gen_range(94.0..102.0f64).to_radians(),
        );
        let to = (
            rng.gen_range(bounds.0..bounds.1),
            rng.gen_range(94.0..102.0f64).to_radians(),
        );
        let drift = |n| raan_drift_along_profile(&edelbaum_profile(from, to, 0.0035, n, &E).unwrap().samples, &E);
        halving = halving.max((drift(200) - drift(400)).abs());
    }
    let mut violations = 0;
    for _ in 0..1000 {
        let (v0, vf) = (rng.gen_range(6000.0..8000.0), rng.gen_range(6000.0..8000.0));
        let di = if rng.gen_bool(0.2) {
            0.0
        } else {
            rng.gen_range(-0.3..0.3)
        };
        let s = edelbaum_solve(v0, vf, di, rng.gen_range(1e-4..1e-2)).unwrap();
        let floor = (v0 - vf).abs();
        let ok = if di == 0.0 {
            (s.dv - floor).abs() <= 1e-9 * floor.max(1.0)
        } else {
            s.dv > floor
        };
        violations += usize::from(!ok);
    }
    let pass = halving < 1e-4 && violations == 0;
    verdict(
        8,
        pass,
        &format!("worst halving change {halving:.2e} rad; {violations} of 1000 draws break the speed bound"),
    );
    assert!(pass);
}

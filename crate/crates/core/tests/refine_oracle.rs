mod common;

use std::path::PathBuf;

use common::*;
use rand::seq::SliceRandom;
use rand::Rng;
use sdc_core::drift::{DriftBounds, Propulsion};
use sdc_core::ingest::parse_debris_csv;
use sdc_core::lowthrust::LowThrustConfig;
use sdc_core::orbit::fuel_consumed;
use sdc_core::refine::{refine_mission, refine_program, FuelEvent, FuelModel, RefineConfig};
use sdc_core::{solve_transfer, Debris, DeorbitOption, TransferConfig, DAY};

fn fixture() -> Vec<Debris> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/debris21.csv");
    parse_debris_csv(&path, &E).unwrap()
}

fn transfer(propulsion: Propulsion) -> TransferConfig {
    TransferConfig {
        propulsion,
        bounds: DriftBounds::default(),
        op_dwell: 5.0 * DAY,
        raan_tolerance: 1f64.to_radians(),
        earth: E,
    }
}

fn leg(cfg: &TransferConfig, a: &Debris, b: &Debris, t1: f64, t2: f64) -> f64 {
    if t2 - t1 <= cfg.op_dwell {
        return f64::INFINITY;
    }
    solve_transfer(&cfg.problem(a, b, t1, t2)).map_or(f64::INFINITY, |s| s.dv)
}

#[test]
fn middle_date_matches_dense_scan() {
    let all = fixture();
    let cfg = transfer(Propulsion::HighThrust);
    for (ids, (t0, t2)) in [
        ([16u32, 20, 21], (3.0, 380.0)),
        ([1, 4, 9], (940.0, 1180.0)),
        ([15, 3, 14], (550.0, 780.0)),
    ] {
        let d: Vec<Debris> = ids
            .iter()
            .map(|id| all.iter().find(|x| x.id == *id).unwrap().clone())
            .collect();
        let (t0, t2) = (t0 * DAY, t2 * DAY);
        let steps = 1500;
        let scan = (1..steps)
            .map(|s| t0 + (t2 - t0) * s as f64 / steps as f64)
            .map(|t| leg(&cfg, &d[0], &d[1], t0, t) + leg(&cfg, &d[1], &d[2], t, t2))
            .fold(f64::INFINITY, f64::min);
        let start = 0.5 * (t0 + t2);
        let m = refine_mission(&d, &[t0, start, t2], &cfg, DeorbitOption::Kit, &RefineConfig::default()).unwrap();
        assert!(
            m.total_dv <= scan + 0.5,
            "{ids:?}: refined {} vs scan {scan}",
            m.total_dv
        );
        assert_eq!((m.visits[0].date, m.visits[2].date), (t0, t2));
    }
}

#[test]
fn refinement_improves_random_missions() {
    // neighbours in node angle make mostly feasible missions
    let mut all = fixture();
    all.sort_by(|a, b| a.orbit.raan.total_cmp(&b.orbit.raan));
    let mut rng = rng(77);
    for propulsion in [
        Propulsion::HighThrust,
        Propulsion::LowThrust(LowThrustConfig::constant(3.5e-3)),
    ] {
        let cfg = transfer(propulsion);
        let mut checked = 0;
        while checked < 4 {
            let first = rng.gen_range(0..all.len());
            let mut d: Vec<Debris> = (0..4).map(|k| all[(first + k) % all.len()].clone()).collect();
            d.shuffle(&mut rng);
            let mut dates = vec![rng.gen_range(0.0..100.0) * DAY];
            for _ in 1..4 {
                dates.push(dates.last().unwrap() + rng.gen_range(40.0..200.0) * DAY);
            }
            let Ok(m) = refine_mission(&d, &dates, &cfg, DeorbitOption::Vehicle, &RefineConfig::default()) else {
                continue;
            };
            let Some(before) = m.input_dates_dv else { continue };
            assert!(m.total_dv <= before + 1e-9, "{} > {before}", m.total_dv);
            assert!(m.visits.windows(2).all(|w| w[0].date < w[1].date));
            assert_eq!(
                m.visits.iter().map(|v| v.debris).collect::<Vec<_>>(),
                d.iter().map(|x| x.id).collect::<Vec<_>>()
            );
            for v in &m.visits[1..] {
                let t = v.transfer.unwrap();
                assert!(
                    t.raan_residual.abs() <= 1f64.to_radians(),
                    "{:?} {t:?} {:?}",
                    v.debris,
                    m.visits.iter().map(|v| v.date / DAY).collect::<Vec<_>>()
                );
            }
            let ops: f64 = d.iter().map(|x| x.op_cost).sum();
            let legs: f64 = m.visits.iter().filter_map(|v| v.transfer.map(|t| t.dv)).sum();
            assert!((m.total_dv - legs - ops).abs() < 1e-6);
            checked += 1;
        }
    }
}

#[test]
fn fuel_ledger_balances() {
    let all: Vec<Debris> = fixture()
        .into_iter()
        .map(|d| Debris::new(d.id, d.orbit, 30.0, 1.0).unwrap())
        .collect();
    let cfg = transfer(Propulsion::HighThrust);
    let missions = vec![
        (
            vec![all[15].clone(), all[19].clone(), all[20].clone()],
            vec![3.1 * DAY, 184.8 * DAY, 375.0 * DAY],
        ),
        (vec![all[0].clone(), all[3].clone()], vec![942.1 * DAY, 1014.6 * DAY]),
    ];
    let model = FuelModel {
        initial_mass: 2000.0,
        exhaust_velocity: 3000.0,
    };
    for deorbit in [DeorbitOption::Vehicle, DeorbitOption::Kit] {
        let plan = refine_program(&missions, &cfg, deorbit, Some(&model), &RefineConfig::default()).unwrap();
        for (m, (debris, _)) in plan.missions.iter().zip(&missions) {
            let ledger = m.fuel.as_ref().unwrap();
            let mut mass = model.initial_mass;
            let mut burnt = 0.0;
            let mut kits = 0.0;
            for e in &ledger.entries {
                assert_eq!(e.mass_before, mass);
                let spent = match e.event {
                    FuelEvent::KitRelease => {
                        kits += e.amount;
                        e.amount
                    }
                    _ => {
                        let f = fuel_consumed(mass, e.amount, model.exhaust_velocity).unwrap();
                        burnt += f;
                        f
                    }
                };
                mass -= spent;
                assert!((e.mass_after - mass).abs() < 1e-9);
            }
            assert!((ledger.final_mass - (model.initial_mass - burnt - kits)).abs() < 1e-9);
            assert_eq!(ledger.exhausted, ledger.final_mass.is_nan() || ledger.final_mass <= 0.0);
            let releases = ledger
                .entries
                .iter()
                .filter(|e| e.event == FuelEvent::KitRelease)
                .count();
            assert_eq!(releases, if deorbit == DeorbitOption::Kit { debris.len() } else { 0 });
        }
    }
}

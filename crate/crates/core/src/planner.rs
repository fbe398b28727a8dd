//! Mission planning on a cost mesh: one path through every debris, cut into
//! `m` missions of `n` debris, annealed over visiting order and dates.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anneal::{self, Landscape, LevelStats, Schedule, ScheduleError};
use crate::mesh::{edge_cost, CostMesh, DeorbitOption, SENTINEL};
use crate::orbit::DAY;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("need m, n >= 1 and at least two visited debris (m = {m}, n = {n})")]
    Shape { m: usize, n: usize },
    #[error("{needed} debris must be visited but the mesh holds {available}")]
    TooFewDebris { needed: usize, available: usize },
    #[error("{found} weights given for {expected} debris")]
    Weights { expected: usize, found: usize },
    #[error("invalid schedule: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("at least one chain is required")]
    NoChains,
}

/// How a path is cut and priced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub m: usize,
    pub n: usize,
    pub deorbit: DeorbitOption,
    /// Legs shorter than this (s) are priced as infeasible.
    pub min_leg: f64,
    /// Priority weight of each mesh debris, by mesh position.
    pub weights: Vec<f64>,
}

impl PathSpec {
    pub fn new(m: usize, n: usize, debris: usize) -> Self {
        Self {
            m,
            n,
            deorbit: DeorbitOption::Vehicle,
            min_leg: 0.0,
            weights: vec![1.0; debris],
        }
    }

    pub fn visited(&self) -> usize {
        self.m * self.n
    }
}

/// A path over all debris (mesh positions) with one date per position.
/// Only the first `m * n` entries are priced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSolution {
    pub order: Vec<usize>,
    pub dates: Vec<f64>,
}

impl TrialSolution {
    /// Checks the permutation, strictly increasing dates and the program end.
    pub fn is_valid(&self, debris: usize, visited: usize, end: f64) -> bool {
        if self.order.len() != debris || self.dates.len() != debris || visited > debris || visited == 0 {
            return false;
        }
        let mut seen = vec![false; debris];
        for &d in &self.order {
            if d >= debris || seen[d] {
                return false;
            }
            seen[d] = true;
        }
        self.dates.windows(2).all(|w| w[0] < w[1]) && self.dates[visited - 1] <= end
    }
}

/// Evenly spaced dates over the program for the visited positions, then
/// one day apart after the end for the others.
pub fn even_dates(t0: f64, end: f64, visited: usize, total: usize) -> Vec<f64> {
    (0..total)
        .map(|p| {
            if p + 1 == visited {
                end
            } else if p < visited {
                t0 + (end - t0) * p as f64 / (visited - 1) as f64
            } else {
                end + (p + 1 - visited) as f64 * DAY
            }
        })
        .collect()
}

/// Cost of mission `i` of a (possibly partial) path.
fn mission_cost(order: &[usize], dates: &[f64], mesh: &CostMesh, spec: &PathSpec, i: usize) -> f64 {
    let start = i * spec.n;
    let stop = ((i + 1) * spec.n).min(order.len());
    if start >= stop {
        return 0.0;
    }
    let mut k = match spec.deorbit {
        DeorbitOption::Vehicle => mesh.op_cost(order[start]),
        DeorbitOption::Kit => 0.0,
    };
    for q in start + 1..stop {
        let (a, b) = (order[q - 1], order[q]);
        let dt = dates[q] - dates[q - 1];
        k += if dt < spec.min_leg {
            SENTINEL
        } else {
            edge_cost(mesh, dates[q - 1], dt, a, b, spec.weights[b], spec.deorbit)
        };
    }
    k
}

/// Program cost `K = max K_i` and the per-mission costs. Each `K_i` sums the
/// `n - 1` edges of mission `i`; missions are not linked.
pub fn evaluate_path(sol: &TrialSolution, mesh: &CostMesh, spec: &PathSpec) -> (f64, Vec<f64>) {
    let ks: Vec<f64> = (0..spec.m)
        .map(|i| mission_cost(&sol.order, &sol.dates, mesh, spec, i))
        .collect();
    (ks.iter().copied().fold(0.0, f64::max), ks)
}

fn path_cost(order: &[usize], dates: &[f64], mesh: &CostMesh, spec: &PathSpec) -> f64 {
    (0..spec.m)
        .map(|i| mission_cost(order, dates, mesh, spec, i))
        .fold(0.0, f64::max)
}

fn path_sum(order: &[usize], dates: &[f64], mesh: &CostMesh, spec: &PathSpec) -> f64 {
    (0..spec.m).map(|i| mission_cost(order, dates, mesh, spec, i)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Insertion,
    Swap,
    Reversal,
    DateShift,
}

pub fn insert_move<T>(v: &mut Vec<T>, from: usize, to: usize) {
    let x = v.remove(from);
    v.insert(to, x);
}

fn distinct_pair(len: usize, rng: &mut ChaCha8Rng) -> (usize, usize) {
    let p = rng.gen_range(0..len);
    let mut q = rng.gen_range(0..len - 1);
    if q >= p {
        q += 1;
    }
    (p, q)
}

pub struct Planner<'a> {
    pub mesh: &'a CostMesh,
    pub spec: PathSpec,
}

impl<'a> Planner<'a> {
    pub fn new(mesh: &'a CostMesh, spec: PathSpec) -> Result<Self, PlanError> {
        let n_debris = mesh.n();
        if spec.m == 0 || spec.n == 0 || spec.visited() < 2 {
            return Err(PlanError::Shape { m: spec.m, n: spec.n });
        }
        if spec.visited() > n_debris {
            return Err(PlanError::TooFewDebris {
                needed: spec.visited(),
                available: n_debris,
            });
        }
        if spec.weights.len() != n_debris {
            return Err(PlanError::Weights {
                expected: n_debris,
                found: spec.weights.len(),
            });
        }
        Ok(Self { mesh, spec })
    }

    pub fn evaluate(&self, sol: &TrialSolution) -> (f64, Vec<f64>) {
        evaluate_path(sol, self.mesh, &self.spec)
    }

    fn k(&self, sol: &TrialSolution) -> f64 {
        path_cost(&sol.order, &sol.dates, self.mesh, &self.spec)
    }

    pub fn is_valid(&self, sol: &TrialSolution) -> bool {
        sol.is_valid(self.mesh.n(), self.spec.visited(), self.mesh.end())
    }

    /// Open interval a visited date may move in.
    fn date_bounds(&self, dates: &[f64], p: usize) -> (f64, f64) {
        let lo = if p == 0 { self.mesh.t0 } else { dates[p - 1] };
        let hi = if p + 1 == self.spec.visited() {
            self.mesh.end()
        } else {
            dates[p + 1]
        };
        (lo, hi)
    }

    pub fn apply_move(&self, sol: &TrialSolution, kind: MoveKind, rng: &mut ChaCha8Rng) -> TrialSolution {
        let mut next = sol.clone();
        self.move_in_place(&mut next, kind, rng);
        next
    }

    fn move_in_place(&self, next: &mut TrialSolution, kind: MoveKind, rng: &mut ChaCha8Rng) {
        let len = next.order.len();
        match kind {
            MoveKind::Swap => {
                let (p, q) = distinct_pair(len, rng);
                next.order.swap(p, q);
            }
            MoveKind::Reversal => {
                let (p, q) = distinct_pair(len, rng);
                next.order[p.min(q)..=p.max(q)].reverse();
            }
            MoveKind::Insertion => {
                let (p, q) = distinct_pair(len, rng);
                insert_move(&mut next.order, p, q);
            }
            MoveKind::DateShift => {
                let p = rng.gen_range(0..self.spec.visited());
                let (lo, hi) = self.date_bounds(&next.dates, p);
                let t = lo + (hi - lo) * rng.gen::<f64>();
                if t < hi && (t > lo || p == 0) {
                    next.dates[p] = t;
                }
            }
        }
    }

    /// Best-insertion construction: debris are inserted one by one where the
    /// program cost grows least, dates spread evenly over the program.
    pub fn greedy_init(&self) -> TrialSolution {
        let total = self.mesh.n();
        let dates = even_dates(self.mesh.t0, self.mesh.end(), self.spec.visited(), total);
        let mut order: Vec<usize> = Vec::with_capacity(total);
        for d in 0..total {
            let mut best: Option<((f64, f64), usize)> = None;
            for pos in 0..=order.len() {
                order.insert(pos, d);
                let key = (
                    path_cost(&order, &dates, self.mesh, &self.spec),
                    path_sum(&order, &dates, self.mesh, &self.spec),
                );
                order.remove(pos);
                if best.map_or(true, |(b, _)| key < b) {
                    best = Some((key, pos));
                }
            }
            order.insert(best.expect("at least one slot").1, d);
        }
        TrialSolution { order, dates }
    }

    /// Candidate dates for position `p`: fixed fractions of its interval,
    /// mesh dates inside it, and neighbour dates offset by mesh durations.
    fn date_candidates(&self, dates: &[f64], p: usize) -> Vec<f64> {
        let (lo, hi) = self.date_bounds(dates, p);
        let mut c: Vec<f64> = (1..8).map(|k| lo + (hi - lo) * k as f64 / 8.0).collect();
        c.extend(self.mesh.grid.dates.iter().copied());
        for &dt in &self.mesh.grid.durations {
            if p > 0 {
                c.push(dates[p - 1] + dt);
            }
            if p + 1 < self.spec.visited() {
                c.push(dates[p + 1] - dt);
            }
        }
        if p == 0 {
            c.push(lo);
        }
        c.retain(|&t| t < hi && (t > lo || (p == 0 && t >= lo)) && t != dates[p]);
        c
    }

    /// First-improvement descent over every swap, reversal and insertion
    /// and over candidate dates of every visited position.
    pub fn local_search(&self, sol: &TrialSolution) -> TrialSolution {
        let mut best = sol.clone();
        let mut cost = self.k(&best);
        let len = best.order.len();
        let better = |c: f64, cost: f64| c < cost - 1e-9 * cost.abs().max(1.0);
        loop {
            let mut improved = false;
            for p in 0..len {
                for q in 0..len {
                    if p == q {
                        continue;
                    }
                    let mut trial = best.order.clone();
                    insert_move(&mut trial, p, q);
                    let c = path_cost(&trial, &best.dates, self.mesh, &self.spec);
                    if better(c, cost) {
                        best.order = trial;
                        cost = c;
                        improved = true;
                    }
                    if p < q {
                        let mut trial = best.order.clone();
                        trial.swap(p, q);
                        let c = path_cost(&trial, &best.dates, self.mesh, &self.spec);
                        if better(c, cost) {
                            best.order = trial;
                            cost = c;
                            improved = true;
                        }
                        if q > p + 1 {
                            let mut trial = best.order.clone();
                            trial[p..=q].reverse();
                            let c = path_cost(&trial, &best.dates, self.mesh, &self.spec);
                            if better(c, cost) {
                                best.order = trial;
                                cost = c;
                                improved = true;
                            }
                        }
                    }
                }
            }
            for p in 0..self.spec.visited() {
                for t in self.date_candidates(&best.dates, p) {
                    let mut dates = best.dates.clone();
                    dates[p] = t;
                    let c = path_cost(&best.order, &dates, self.mesh, &self.spec);
                    if better(c, cost) {
                        best.dates = dates;
                        cost = c;
                        improved = true;
                    }
                }
            }
            if !improved {
                return best;
            }
        }
    }
}

impl Landscape for Planner<'_> {
    type State = TrialSolution;
    type Move = TrialSolution;

    fn cost(&self, s: &TrialSolution) -> f64 {
        self.k(s)
    }

    /// One random path move followed by one date shift.
    fn propose(&self, s: &TrialSolution, _: f64, rng: &mut ChaCha8Rng) -> (TrialSolution, f64) {
        let kind = match rng.gen_range(0..3) {
            0 => MoveKind::Insertion,
            1 => MoveKind::Swap,
            _ => MoveKind::Reversal,
        };
        let mut next = s.clone();
        self.move_in_place(&mut next, kind, rng);
        self.move_in_place(&mut next, MoveKind::DateShift, rng);
        let c = self.k(&next);
        (next, c)
    }

    fn apply(&self, s: &mut TrialSolution, mv: TrialSolution) {
        *s = mv;
    }

    fn local_search(&self, s: &mut TrialSolution, _: f64) -> f64 {
        *s = Planner::local_search(self, s);
        self.k(s)
    }

    fn infeasible(&self) -> f64 {
        SENTINEL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub solution: TrialSolution,
    pub k: f64,
    pub k_missions: Vec<f64>,
    pub tries: u64,
    pub initial_temperature: f64,
    /// Seed of the chain that produced the solution.
    pub seed: u64,
    pub trace: Vec<LevelStats>,
}

pub fn anneal_path(planner: &Planner, initial: TrialSolution, schedule: &Schedule) -> Result<PlanResult, PlanError> {
    schedule.validate()?;
    let out = anneal::anneal(planner, initial, schedule);
    let (k, k_missions) = planner.evaluate(&out.best);
    Ok(PlanResult {
        solution: out.best,
        k,
        k_missions,
        tries: out.tries,
        initial_temperature: out.initial_temperature,
        seed: schedule.seed,
        trace: out.trace,
    })
}

/// Runs `chains` independent chains from the greedy start, seeded
/// `seed, seed + 1, ...`, and keeps the cheapest (lowest seed on ties).
pub fn plan(planner: &Planner, schedule: &Schedule, chains: usize) -> Result<PlanResult, PlanError> {
    if chains == 0 {
        return Err(PlanError::NoChains);
    }
    schedule.validate()?;
    let initial = planner.greedy_init();
    let results: Vec<PlanResult> = (0..chains as u64)
        .into_par_iter()
        .map(|i| {
            let s = Schedule {
                seed: schedule.seed.wrapping_add(i),
                ..*schedule
            };
            anneal_path(planner, initial.clone(), &s)
        })
        .collect::<Result<_, _>>()?;
    let best = results
        .into_iter()
        .reduce(|a, b| if b.k < a.k { b } else { a })
        .expect("chains >= 1");
    Ok(best)
}

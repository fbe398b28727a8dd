//! Generic simulated annealing with Metropolis acceptance, geometric
//! cooling, stagnation-triggered local search and elitism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Temperature used when calibration sees no degrading move.
pub const TEMPERATURE_FLOOR: f64 = 1e-3;
/// Target acceptance probability of an average degrading move at the start.
pub const INITIAL_ACCEPTANCE: f64 = 0.9;
/// Moves drawn to calibrate the initial temperature.
pub const CALIBRATION_MOVES: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("cooling rate {0} must lie in (0, 1)")]
    Alpha(f64),
    #[error("tries per level must be at least 1")]
    TriesPerLevel,
    #[error("initial temperature {0} must be positive")]
    Temperature(f64),
    #[error("freeze ratio {0} must lie in [0, 1)")]
    Freeze(f64),
    #[error("reheat fraction {0} must be 0 or lie above the freeze ratio and at most 1")]
    Reheat(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    /// Fixed initial temperature; calibrated from the initial state if absent.
    pub initial_temperature: Option<f64>,
    pub alpha: f64,
    pub tries_per_level: u64,
    /// Levels without a best-cost improvement before a local search.
    pub stagnation_levels: u32,
    pub max_tries: u64,
    /// The run stops once the temperature falls below this fraction of the
    /// initial one. Zero disables the rule.
    pub freeze_ratio: f64,
    /// After freezing, the elite is reheated to this fraction of the initial
    /// temperature and cooled again while the budget lasts. Zero stops at
    /// the first freeze.
    pub reheat: f64,
    pub seed: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            initial_temperature: None,
            alpha: 0.999,
            tries_per_level: 1000,
            stagnation_levels: 50,
            max_tries: 200_000_000,
            freeze_ratio: 1e-6,
            reheat: 0.01,
            seed: 0,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ScheduleError::Alpha(self.alpha));
        }
        if self.tries_per_level == 0 {
            return Err(ScheduleError::TriesPerLevel);
        }
        if let Some(t) = self.initial_temperature {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ScheduleError::Temperature(t));
            }
        }
        if !(self.freeze_ratio >= 0.0 && self.freeze_ratio < 1.0) {
            return Err(ScheduleError::Freeze(self.freeze_ratio));
        }
        if !(self.reheat >= 0.0 && self.reheat <= 1.0) || (self.reheat > 0.0 && self.reheat <= self.freeze_ratio) {
            return Err(ScheduleError::Reheat(self.reheat));
        }
        Ok(())
    }
}

/// A search space the annealer can walk.
pub trait Landscape {
    type State: Clone;
    type Move;

    fn cost(&self, state: &Self::State) -> f64;

    /// Draws a random move from `state` and returns it with the cost of the
    /// state it leads to.
    fn propose(&self, state: &Self::State, cost: f64, rng: &mut ChaCha8Rng) -> (Self::Move, f64);

    fn apply(&self, state: &mut Self::State, mv: Self::Move);

    /// Improves `state` in place by exhaustive elementary moves and returns
    /// its new cost, never above `cost`.
    fn local_search(&self, state: &mut Self::State, cost: f64) -> f64;

    /// Costs at or above this value mark infeasible states and are left out
    /// of the temperature calibration.
    fn infeasible(&self) -> f64 {
        f64::INFINITY
    }
}

/// Metropolis rule: downhill always, uphill with probability
/// `exp(-(f_new - f_old) / t)`.
pub fn accept<R: Rng>(f_new: f64, f_old: f64, t: f64, rng: &mut R) -> bool {
    if f_new <= f_old {
        return true;
    }
    rng.gen::<f64>() < (-(f_new - f_old) / t).exp()
}

/// Temperature accepting the mean of the sampled positive degradations with
/// probability 0.9.
pub fn temperature_for(degradations: &[f64]) -> f64 {
    let positive: Vec<f64> = degradations
        .iter()
        .copied()
        .filter(|&d| d > 0.0 && d.is_finite())
        .collect();
    if positive.is_empty() {
        return TEMPERATURE_FLOOR;
    }
    let mean = positive.iter().sum::<f64>() / positive.len() as f64;
    (mean / -INITIAL_ACCEPTANCE.ln()).max(TEMPERATURE_FLOOR)
}

/// Degradations of half `land.infeasible()` or more add an infeasible part
/// and are left out, so an infeasible state still calibrates on the moves
/// that keep its count of infeasible parts.
pub fn initial_temperature<L: Landscape>(land: &L, state: &L::State, cost: f64, rng: &mut ChaCha8Rng) -> f64 {
    let bad = land.infeasible();
    let deltas: Vec<f64> = (0..CALIBRATION_MOVES)
        .filter_map(|_| {
            let (_, c) = land.propose(state, cost, rng);
            (c - cost < 0.5 * bad).then_some(c - cost)
        })
        .collect();
    temperature_for(&deltas)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub tries: u64,
    pub temperature: f64,
    pub acceptance: f64,
    pub best: f64,
}

#[derive(Debug, Clone)]
pub struct AnnealOutcome<S> {
    pub best: S,
    pub best_cost: f64,
    pub tries: u64,
    pub initial_temperature: f64,
    pub trace: Vec<LevelStats>,
}

pub fn anneal<L: Landscape>(land: &L, initial: L::State, schedule: &Schedule) -> AnnealOutcome<L::State> {
    let initial_cost = land.cost(&initial);
    let mut out = AnnealOutcome {
        best: initial.clone(),
        best_cost: initial_cost,
        tries: 0,
        initial_temperature: 0.0,
        trace: Vec::new(),
    };
    if schedule.max_tries == 0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let t_start = schedule
        .initial_temperature
        .unwrap_or_else(|| initial_temperature(land, &initial, initial_cost, &mut rng));
    out.initial_temperature = t_start;

    let mut current = initial;
    let mut cost = initial_cost;
    let mut t = t_start;
    let mut stagnant = 0u32;
    while out.tries < schedule.max_tries {
        let level = schedule.tries_per_level.min(schedule.max_tries - out.tries);
        let mut accepted = 0u64;
        let mut improved = false;
        for _ in 0..level {
            let (mv, c) = land.propose(&current, cost, &mut rng);
            if accept(c, cost, t, &mut rng) {
                land.apply(&mut current, mv);
                cost = c;
                accepted += 1;
                if cost < out.best_cost {
                    out.best_cost = cost;
                    out.best = current.clone();
                    improved = true;
                }
            }
        }
        out.tries += level;
        if improved {
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        if stagnant >= schedule.stagnation_levels {
            cost = land.local_search(&mut current, cost);
            if cost < out.best_cost {
                out.best_cost = cost;
                out.best = current.clone();
            }
            stagnant = 0;
        }
        out.trace.push(LevelStats {
            tries: out.tries,
            temperature: t,
            acceptance: accepted as f64 / level as f64,
            best: out.best_cost,
        });
        t *= schedule.alpha;
        if t < schedule.freeze_ratio * t_start {
            if schedule.reheat == 0.0 {
                break;
            }
            current = out.best.clone();
            cost = out.best_cost;
            t = schedule.reheat * t_start;
            stagnant = 0;
        }
    }
    let polished = land.local_search(&mut out.best, out.best_cost);
    out.best_cost = polished;
    out
}

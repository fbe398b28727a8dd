//! Symmetric TSP benchmark mode: TSPLIB node-coordinate files and an
//! annealer over closed tours.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anneal::{self, Landscape, Schedule, ScheduleError};
use crate::planner::insert_move;

#[derive(Debug, Error)]
pub enum TspError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported edge weight type {0}")]
    Metric(String),
    #[error("tour is not a permutation of {0} nodes")]
    Tour(usize),
    #[error("instance has {0} nodes, at least 5 are needed")]
    TooSmall(usize),
    #[error("invalid schedule: {0}")]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "EUC_2D")]
    Euclidean,
    #[serde(rename = "ATT")]
    Att,
}

impl Metric {
    pub fn parse(s: &str) -> Result<Self, TspError> {
        match s {
            "EUC_2D" => Ok(Metric::Euclidean),
            "ATT" => Ok(Metric::Att),
            other => Err(TspError::Metric(other.to_string())),
        }
    }

    /// Integer distance with the TSPLIB rounding of the metric.
    pub fn distance(self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let (dx, dy) = (a.0 - b.0, a.1 - b.1);
        match self {
            Metric::Euclidean => (dx * dx + dy * dy).sqrt().round(),
            Metric::Att => {
                let r = ((dx * dx + dy * dy) / 10.0).sqrt();
                let t = r.round();
                if t < r {
                    t + 1.0
                } else {
                    t
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TspInstance {
    pub name: String,
    pub metric: Metric,
    pub points: Vec<(f64, f64)>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> TspError {
    TspError::Parse { line, msg: msg.into() }
}

fn read(path: &Path) -> Result<String, TspError> {
    fs::read_to_string(path).map_err(|source| TspError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn keyword(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once(':')?;
    Some((k.trim(), v.trim()))
}

pub fn parse_tsplib_str(text: &str) -> Result<TspInstance, TspError> {
    let mut name = String::new();
    let mut metric = None;
    let mut dimension = None;
    let mut points = Vec::new();
    let mut in_coords = false;
    let mut last = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last = line_no;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        if in_coords {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                if fields[0].chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                    in_coords = false;
                    continue;
                }
                return Err(parse_err(line_no, format!("expected `index x y`, got `{line}`")));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("bad number `{s}`")))
            };
            points.push((num(fields[1])?, num(fields[2])?));
            continue;
        }
        if line.starts_with("NODE_COORD_SECTION") {
            in_coords = true;
            continue;
        }
        if let Some((k, v)) = keyword(line) {
            match k {
                "NAME" => name = v.to_string(),
                "EDGE_WEIGHT_TYPE" => metric = Some(Metric::parse(v)?),
                "DIMENSION" => {
                    dimension = Some(
                        v.parse::<usize>()
                            .map_err(|_| parse_err(line_no, format!("bad dimension `{v}`")))?,
                    )
                }
                _ => {}
            }
        }
    }
    let metric = metric.ok_or_else(|| parse_err(last, "missing EDGE_WEIGHT_TYPE"))?;
    if let Some(d) = dimension {
        if d != points.len() {
            return Err(parse_err(
                last,
                format!("DIMENSION is {d} but {} coordinates were read", points.len()),
            ));
        }
    }
    if points.is_empty() {
        return Err(parse_err(last, "no coordinates"));
    }
    Ok(TspInstance { name, metric, points })
}

pub fn parse_tsplib(path: &Path) -> Result<TspInstance, TspError> {
    parse_tsplib_str(&read(path)?)
}

/// Reads a TSPLIB tour file as zero-based node indices.
pub fn parse_tour(path: &Path) -> Result<Vec<usize>, TspError> {
    let text = read(path)?;
    let mut tour = Vec::new();
    let mut inside = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with("TOUR_SECTION") {
            inside = true;
            continue;
        }
        if !inside || line.is_empty() {
            continue;
        }
        for tok in line.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| parse_err(idx + 1, format!("bad node `{tok}`")))?;
            if v == -1 {
                return Ok(tour);
            }
            if v < 1 {
                return Err(parse_err(idx + 1, format!("bad node `{tok}`")));
            }
            tour.push(v as usize - 1);
        }
    }
    Ok(tour)
}

fn is_permutation(tour: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    tour.len() == n && tour.iter().all(|&c| c < n && !std::mem::replace(&mut seen[c], true))
}

/// Closed-tour length under the metric.
pub fn tsp_tour_length(points: &[(f64, f64)], tour: &[usize], metric: Metric) -> Result<f64, TspError> {
    if !is_permutation(tour, points.len()) {
        return Err(TspError::Tour(points.len()));
    }
    Ok((0..tour.len())
        .map(|i| metric.distance(points[tour[i]], points[tour[(i + 1) % tour.len()]]))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TourMove {
    Swap(usize, usize),
    /// Reverse positions `p..=q`, `p < q`.
    Reversal(usize, usize),
    /// Remove the node at `p` and reinsert it at index `q` of the shortened tour.
    Insertion(usize, usize),
}

/// Nearest neighbours kept per city for move generation.
pub const NEIGHBOURS: usize = 8;
/// Share of moves whose second endpoint is a near neighbour.
pub const NEIGHBOUR_SHARE: f64 = 0.9;

/// A closed tour with the position of every city in it.
#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    pub order: Vec<usize>,
    pos: Vec<usize>,
}

impl Tour {
    pub fn new(order: Vec<usize>) -> Self {
        let mut pos = vec![0; order.len()];
        for (i, &c) in order.iter().enumerate() {
            pos[c] = i;
        }
        Self { order, pos }
    }

    fn reindex(&mut self, lo: usize, hi: usize) {
        for i in lo..=hi {
            self.pos[self.order[i]] = i;
        }
    }
}

pub struct TspLandscape {
    n: usize,
    dist: Vec<f64>,
    near: Vec<[usize; NEIGHBOURS]>,
}

impl TspLandscape {
    pub fn new(inst: &TspInstance) -> Result<Self, TspError> {
        let n = inst.points.len();
        if n < 5 {
            return Err(TspError::TooSmall(n));
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = inst.metric.distance(inst.points[i], inst.points[j]);
            }
        }
        let near = (0..n)
            .map(|i| {
                let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                others.sort_by(|&a, &b| dist[i * n + a].total_cmp(&dist[i * n + b]).then(a.cmp(&b)));
                let mut row = [i; NEIGHBOURS];
                for (slot, &j) in row.iter_mut().zip(&others) {
                    *slot = j;
                }
                row
            })
            .collect();
        Ok(Self { n, dist, near })
    }

    #[inline]
    fn d(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.n + b]
    }

    fn length(&self, tour: &[usize]) -> f64 {
        (0..self.n).map(|i| self.d(tour[i], tour[(i + 1) % self.n])).sum()
    }

    /// Length change caused by a move.
    pub fn delta(&self, t: &[usize], mv: TourMove) -> f64 {
        let n = self.n;
        let at = |i: usize| t[i % n];
        match mv {
            TourMove::Reversal(p, q) => {
                if p == 0 && q == n - 1 {
                    return 0.0;
                }
                let (a, b, c, e) = (at(p + n - 1), at(p), at(q), at(q + 1));
                self.d(a, c) + self.d(b, e) - self.d(a, b) - self.d(c, e)
            }
            TourMove::Swap(p, q) => {
                let (p, q) = (p.min(q), p.max(q));
                let (a, b) = (at(p), at(q));
                if q == p + 1 || (p == 0 && q == n - 1) {
                    // adjacent: the pair edge survives
                    let (before, after) = if q == p + 1 {
                        (at(p + n - 1), at(q + 1))
                    } else {
                        (at(n - 2), at(1))
                    };
                    let (x, y) = if q == p + 1 { (a, b) } else { (b, a) };
                    return self.d(before, y) + self.d(x, after) - self.d(before, x) - self.d(y, after);
                }
                let (ap, an) = (at(p + n - 1), at(p + 1));
                let (bp, bn) = (at(q + n - 1), at(q + 1));
                self.d(ap, b) + self.d(b, an) + self.d(bp, a) + self.d(a, bn)
                    - self.d(ap, a)
                    - self.d(a, an)
                    - self.d(bp, b)
                    - self.d(b, bn)
            }
            TourMove::Insertion(p, q) => {
                let (a, b, c) = (at(p + n - 1), at(p), at(p + 1));
                let removed = self.d(a, c) - self.d(a, b) - self.d(b, c);
                // the shortened tour r skips index p
                let r = |i: usize| {
                    let i = i % (n - 1);
                    if i < p {
                        t[i]
                    } else {
                        t[i + 1]
                    }
                };
                let (x, y) = (r(q + n - 2), r(q));
                removed + self.d(x, b) + self.d(b, y) - self.d(x, y)
            }
        }
    }

    fn apply_move(&self, t: &mut Tour, mv: TourMove) {
        match mv {
            TourMove::Swap(p, q) => {
                t.order.swap(p, q);
                t.reindex(p, p);
                t.reindex(q, q);
            }
            TourMove::Reversal(p, q) => {
                t.order[p..=q].reverse();
                t.reindex(p, q);
            }
            TourMove::Insertion(p, q) => {
                insert_move(&mut t.order, p, q);
                let q = q.min(self.n - 1);
                t.reindex(p.min(q), p.max(q));
            }
        }
    }

    /// A move of `kind` (0 insertion, 1 swap, 2 reversal) that makes city
    /// `b` adjacent to the city at position `p`, or `None` when they already
    /// are.
    fn joining(&self, t: &Tour, kind: u32, p: usize, b: usize) -> Option<TourMove> {
        let n = self.n;
        let q = t.pos[b];
        if (p + 1) % n == q || (q + 1) % n == p {
            return None;
        }
        Some(match kind {
            0 => {
                // index of the city at p once b is taken out
                let pc = if p < q { p } else { p - 1 };
                TourMove::Insertion(q, pc + 1)
            }
            1 => TourMove::Swap((p + 1) % n, q),
            _ => {
                if p < q {
                    TourMove::Reversal(p + 1, q)
                } else {
                    TourMove::Reversal(q, p - 1)
                }
            }
        })
    }

    /// Cheapest-insertion construction.
    pub fn greedy_tour(&self) -> Vec<usize> {
        let mut tour = vec![0, 1];
        for c in 2..self.n {
            let len = tour.len();
            let best = (0..len)
                .map(|i| {
                    let (x, y) = (tour[i], tour[(i + 1) % len]);
                    (self.d(x, c) + self.d(c, y) - self.d(x, y), i)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("non-empty tour")
                .1;
            tour.insert(best + 1, c);
        }
        tour
    }
}

impl Landscape for TspLandscape {
    type State = Tour;
    type Move = TourMove;

    fn cost(&self, t: &Tour) -> f64 {
        self.length(&t.order)
    }

    fn propose(&self, t: &Tour, cost: f64, rng: &mut ChaCha8Rng) -> (TourMove, f64) {
        let n = self.n;
        let p = rng.gen_range(0..n);
        let kind = rng.gen_range(0..3u32);
        let near = if rng.gen::<f64>() < NEIGHBOUR_SHARE {
            let b = self.near[t.order[p]][rng.gen_range(0..NEIGHBOURS.min(n - 1))];
            self.joining(t, kind, p, b)
        } else {
            None
        };
        let mv = near.unwrap_or_else(|| {
            let mut q = rng.gen_range(0..n - 1);
            if q >= p {
                q += 1;
            }
            match kind {
                0 => TourMove::Insertion(p, q.min(n - 2)),
                1 => TourMove::Swap(p, q),
                _ => TourMove::Reversal(p.min(q), p.max(q)),
            }
        });
        (mv, cost + self.delta(&t.order, mv))
    }

    fn apply(&self, t: &mut Tour, mv: TourMove) {
        self.apply_move(t, mv);
    }

    /// 2-opt and node relocation over near neighbours until neither
    /// improves.
    fn local_search(&self, t: &mut Tour, _: f64) -> f64 {
        let n = self.n;
        loop {
            let mut improved = false;
            for p in 0..n {
                for kind in [2, 0] {
                    for k in 0..NEIGHBOURS.min(n - 1) {
                        let b = self.near[t.order[p]][k];
                        if let Some(mv) = self.joining(t, kind, p, b) {
                            if self.delta(&t.order, mv) < -1e-9 {
                                self.apply_move(t, mv);
                                improved = true;
                            }
                        }
                    }
                }
            }
            if !improved {
                return self.length(&t.order);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TspResult {
    pub tour: Vec<usize>,
    pub length: f64,
    pub tries: u64,
}

pub fn solve_tsp(inst: &TspInstance, schedule: &Schedule) -> Result<TspResult, TspError> {
    schedule.validate()?;
    let land = TspLandscape::new(inst)?;
    let out = anneal::anneal(&land, Tour::new(land.greedy_tour()), schedule);
    let length = land.length(&out.best.order);
    Ok(TspResult {
        tour: out.best.order,
        length,
        tries: out.tries,
    })
}

/// Relative gap of `length` over a reference length.
pub fn gap(length: f64, reference: f64) -> f64 {
    (length - reference) / reference
}

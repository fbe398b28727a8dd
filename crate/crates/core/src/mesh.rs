//! Cost meshes: transfer costs between every pair of debris on a grid of
//! departure dates and transfer durations, with bilinear lookup.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drift::{solve_transfer, DriftBounds, Propulsion, TransferProblem};
use crate::numeric::linspace;
use crate::orbit::{Debris, EarthModel};

/// Cost stored for infeasible or out-of-program transfers (m/s).
pub const SENTINEL: f64 = 1e9;

pub const MESH_MAGIC: &[u8; 8] = b"SDCMESH1";
pub const MESH_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("a mesh needs at least 2 debris, got {0}")]
    TooFewDebris(usize),
    #[error("debris index {index} out of range for {n} debris")]
    Index { index: usize, n: usize },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a mesh file (bad magic)")]
    BadMagic,
    #[error("malformed mesh header: {0}")]
    Header(String),
    #[error("mesh format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("mesh payload truncated: {found} of {expected} bytes")]
    Truncated { expected: usize, found: usize },
    #[error("mesh payload checksum {found:08x} does not match header {expected:08x}")]
    Checksum { expected: u32, found: u32 },
    #[error("mesh size mismatch: {0}")]
    SizeMismatch(String),
}

/// Departure dates and transfer durations (s) of a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshGrid {
    pub dates: Vec<f64>,
    pub durations: Vec<f64>,
}

/// Explicit axes replacing the default ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridOverride {
    pub dates: Option<Vec<f64>>,
    pub durations: Option<Vec<f64>>,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<(), MeshError> {
    if axis.len() < 2 {
        return Err(MeshError::Grid(format!(
            "{name} axis needs at least 2 values, got {}",
            axis.len()
        )));
    }
    if axis.iter().any(|x| !x.is_finite()) {
        return Err(MeshError::Grid(format!("{name} axis has non-finite values")));
    }
    if let Some(w) = axis.windows(2).find(|w| w[1] <= w[0]) {
        return Err(MeshError::Grid(format!(
            "{name} axis is not strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

impl MeshGrid {
    pub fn new(dates: Vec<f64>, durations: Vec<f64>) -> Result<Self, MeshError> {
        check_axis("date", &dates)?;
        check_axis("duration", &durations)?;
        if durations[0] <= 0.0 {
            return Err(MeshError::Grid("durations must be positive".into()));
        }
        Ok(Self { dates, durations })
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_durations(&self) -> usize {
        self.durations.len()
    }
}

/// Grid for a program of `m` missions of `n` debris over `[t0, t0 + span]`.
///
/// By default there is one departure date per visited debris plus the
/// program end, evenly spaced, and `n + 1` durations from a half of the
/// mean leg duration over `n` up to a half of the mean mission duration.
pub fn build_grid(
    t0: f64,
    span: f64,
    n: usize,
    m: usize,
    overrides: Option<&GridOverride>,
) -> Result<MeshGrid, MeshError> {
    if n == 0 || m == 0 {
        return Err(MeshError::Grid(
            "need at least one mission and one debris per mission".into(),
        ));
    }
    if n * m < 2 {
        return Err(MeshError::Grid(
            "a single visited debris gives a degenerate grid".into(),
        ));
    }
    if !(span > 0.0) {
        return Err(MeshError::Grid(format!("program duration {span} must be positive")));
    }
    let mission = span / m as f64;
    let dates = overrides
        .and_then(|o| o.dates.clone())
        .unwrap_or_else(|| linspace(t0, t0 + span, n * m + 1));
    let durations = overrides
        .and_then(|o| o.durations.clone())
        .unwrap_or_else(|| linspace(mission / 2.0 / n as f64, mission / 2.0, n + 1));
    MeshGrid::new(dates, durations)
}

/// Which side of the transfer pays for deorbiting a debris.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeorbitOption {
    /// The vehicle performs the deorbit burn; its cost is an impulse.
    #[default]
    Vehicle,
    /// A kit left on the debris performs it; its cost is a released mass.
    Kit,
}

/// Settings shared by every transfer of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    pub propulsion: Propulsion,
    pub bounds: DriftBounds,
    pub op_dwell: f64,
    pub raan_tolerance: f64,
    pub earth: EarthModel,
}

impl TransferConfig {
    pub fn problem(&self, from: &Debris, to: &Debris, t1: f64, t2: f64) -> TransferProblem {
        TransferProblem {
            from: from.orbit,
            to: to.orbit,
            t1,
            t2,
            op_dwell: self.op_dwell,
            bounds: self.bounds,
            propulsion: self.propulsion,
            raan_tolerance: self.raan_tolerance,
            earth: self.earth,
        }
    }

    /// Impulse of one leg, or [`SENTINEL`] when it cannot be flown.
    pub fn leg_cost(&self, from: &Debris, to: &Debris, t1: f64, t2: f64) -> f64 {
        if t2 - t1 <= self.op_dwell {
            return SENTINEL;
        }
        solve_transfer(&self.problem(from, to, t1, t2)).map_or(SENTINEL, |s| s.dv)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostMesh {
    pub grid: MeshGrid,
    pub t0: f64,
    pub span: f64,
    /// Propulsion mode name the costs were computed with.
    pub mode: String,
    pub debris_ids: Vec<u32>,
    /// Row-major `(date, duration, from, to)` costs (m/s).
    pub costs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FillReport {
    /// Work units enumerated, one per off-diagonal entry of every matrix.
    pub work_units: usize,
    /// Transfers actually solved (cells inside the program window).
    pub solved: usize,
    /// Solved transfers that turned out infeasible.
    pub infeasible: usize,
}

impl CostMesh {
    pub fn n(&self) -> usize {
        self.debris_ids.len()
    }

    #[inline]
    pub fn index(&self, i: usize, d: usize, j: usize, k: usize) -> usize {
        let n = self.n();
        ((i * self.grid.n_durations() + d) * n + j) * n + k
    }

    #[inline]
    pub fn get(&self, i: usize, d: usize, j: usize, k: usize) -> f64 {
        self.costs[self.index(i, d, j, k)]
    }

    /// Operation cost of debris `j`, read from the matrix diagonal.
    #[inline]
    pub fn op_cost(&self, j: usize) -> f64 {
        self.get(0, 0, j, j)
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.span
    }

    /// Position of a debris id in the mesh.
    pub fn position(&self, id: u32) -> Option<usize> {
        self.debris_ids.iter().position(|&x| x == id)
    }
}

/// Durations kept in each date row: every node that some query ending within
/// the program interpolates from with nonzero weight. Such a query starts
/// after the previous date and lasts longer than the previous duration, so
/// near the end a row keeps durations that overrun the program.
pub fn kept_durations(grid: &MeshGrid, end: f64) -> Vec<usize> {
    (0..grid.n_dates())
        .map(|i| {
            let t = grid.dates[i.saturating_sub(1)];
            1 + grid.durations[..grid.n_durations() - 1]
                .iter()
                .filter(|&&dt| t + dt < end)
                .count()
        })
        .collect()
}

/// Fills every cost matrix of the grid. Runs on the current rayon pool; the
/// result does not depend on its size.
pub fn fill_mesh(
    debris: &[Debris],
    grid: &MeshGrid,
    t0: f64,
    span: f64,
    cfg: &TransferConfig,
) -> Result<(CostMesh, FillReport), MeshError> {
    let n = debris.len();
    if n < 2 {
        return Err(MeshError::TooFewDebris(n));
    }
    let (nt, nd) = (grid.n_dates(), grid.n_durations());
    let kept = kept_durations(grid, t0 + span);
    let mut costs = vec![SENTINEL; nt * nd * n * n];
    let outcome: Vec<(bool, bool)> = costs
        .par_iter_mut()
        .enumerate()
        .map(|(idx, slot)| {
            let k = idx % n;
            let j = (idx / n) % n;
            let d = (idx / (n * n)) % nd;
            let i = idx / (n * n * nd);
            if j == k {
                *slot = debris[j].op_cost;
                return (false, false);
            }
            if d >= kept[i] {
                return (false, false);
            }
            let t1 = grid.dates[i];
            *slot = cfg.leg_cost(&debris[j], &debris[k], t1, t1 + grid.durations[d]);
            (true, *slot >= SENTINEL)
        })
        .collect();
    let report = FillReport {
        work_units: nt * nd * n * (n - 1),
        solved: outcome.iter().filter(|o| o.0).count(),
        infeasible: outcome.iter().filter(|o| o.1).count(),
    };
    let mesh = CostMesh {
        grid: grid.clone(),
        t0,
        span,
        mode: cfg.propulsion.name().to_string(),
        debris_ids: debris.iter().map(|d| d.id).collect(),
        costs,
    };
    Ok((mesh, report))
}

/// Cell holding `x` on an axis and the fractional position inside it, with
/// `x` clamped to the axis range.
#[inline]
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let last = axis.len() - 1;
    if !(x > axis[0]) {
        return (0, 0.0);
    }
    if x >= axis[last] {
        return (last - 1, 1.0);
    }
    let i = axis.partition_point(|&v| v <= x) - 1;
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]))
}

/// Bilinear lookup of the transfer cost from debris `j` to debris `k`
/// departing at `t` for a duration `dt`. Queries outside the grid are
/// clamped to it. A sentinel on any corner that carries weight makes the
/// result the sentinel.
pub fn interpolate(mesh: &CostMesh, t: f64, dt: f64, j: usize, k: usize) -> f64 {
    let (i, u) = locate(&mesh.grid.dates, t);
    let (d, v) = locate(&mesh.grid.durations, dt);
    let c00 = mesh.get(i, d, j, k);
    let c10 = mesh.get(i + 1, d, j, k);
    let c01 = mesh.get(i, d + 1, j, k);
    let c11 = mesh.get(i + 1, d + 1, j, k);
    let corners = [
        ((1.0 - u) * (1.0 - v), c00),
        (u * (1.0 - v), c10),
        ((1.0 - u) * v, c01),
        (u * v, c11),
    ];
    if corners.iter().any(|&(w, c)| w != 0.0 && c >= SENTINEL) {
        return SENTINEL;
    }
    corners
        .iter()
        .filter(|&&(w, _)| w != 0.0)
        .map(|&(w, c)| w * c)
        .sum::<f64>()
}

/// Cost of the edge arriving at debris `k`: weighted transfer cost, plus the
/// deorbit impulse of `k` when the vehicle performs it.
pub fn edge_cost(mesh: &CostMesh, t: f64, dt: f64, j: usize, k: usize, weight: f64, option: DeorbitOption) -> f64 {
    let c = interpolate(mesh, t, dt, j, k);
    if c >= SENTINEL {
        return SENTINEL;
    }
    match option {
        DeorbitOption::Vehicle => weight * (c + mesh.op_cost(k)),
        DeorbitOption::Kit => weight * c,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    t0: f64,
    span: f64,
    mode: String,
    n: usize,
    debris_ids: Vec<u32>,
    dates: Vec<f64>,
    durations: Vec<f64>,
    sentinel: f64,
    payload_bytes: usize,
    crc32: u32,
}

fn payload(costs: &[f64]) -> Vec<u8> {
    costs.iter().flat_map(|c| c.to_le_bytes()).collect()
}

/// Serializes a mesh: magic line, JSON header line, little-endian payload.
pub fn write_mesh<W: Write>(mesh: &CostMesh, mut w: W) -> Result<(), MeshError> {
    let bytes = payload(&mesh.costs);
    let header = Header {
        version: MESH_VERSION,
        t0: mesh.t0,
        span: mesh.span,
        mode: mesh.mode.clone(),
        n: mesh.n(),
        debris_ids: mesh.debris_ids.clone(),
        dates: mesh.grid.dates.clone(),
        durations: mesh.grid.durations.clone(),
        sentinel: SENTINEL,
        payload_bytes: bytes.len(),
        crc32: crc32fast::hash(&bytes),
    };
    w.write_all(MESH_MAGIC)?;
    w.write_all(b"\n")?;
    serde_json::to_writer(&mut w, &header).map_err(|e| MeshError::Header(e.to_string()))?;
    w.write_all(b"\n")?;
    w.write_all(&bytes)?;
    Ok(())
}

pub fn save_mesh(mesh: &CostMesh, path: &Path) -> Result<(), MeshError> {
    let mut buf = Vec::with_capacity(mesh.costs.len() * 8 + 4096);
    write_mesh(mesh, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_mesh(bytes: &[u8]) -> Result<CostMesh, MeshError> {
    let rest = bytes
        .strip_prefix(MESH_MAGIC.as_slice())
        .and_then(|r| r.strip_prefix(b"\n"))
        .ok_or(MeshError::BadMagic)?;
    let eol = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| MeshError::Header("missing end of header".into()))?;
    let header: Header = serde_json::from_slice(&rest[..eol]).map_err(|e| MeshError::Header(e.to_string()))?;
    if header.version != MESH_VERSION {
        return Err(MeshError::Version {
            found: header.version,
            expected: MESH_VERSION,
        });
    }
    let data = &rest[eol + 1..];
    let (nt, nd, n) = (header.dates.len(), header.durations.len(), header.n);
    let cells = nt * nd * n * n;
    if header.debris_ids.len() != n {
        return Err(MeshError::SizeMismatch(format!(
            "header lists {} debris ids for n = {n}",
            header.debris_ids.len()
        )));
    }
    if header.payload_bytes != cells * 8 {
        return Err(MeshError::SizeMismatch(format!(
            "a {nt} x {nd} grid of {n} x {n} matrices needs {} bytes, header declares {}",
            cells * 8,
            header.payload_bytes
        )));
    }
    if data.len() < header.payload_bytes {
        return Err(MeshError::Truncated {
            expected: header.payload_bytes,
            found: data.len(),
        });
    }
    if data.len() > header.payload_bytes {
        return Err(MeshError::SizeMismatch(format!(
            "{} trailing bytes after the payload",
            data.len() - header.payload_bytes
        )));
    }
    let crc = crc32fast::hash(data);
    if crc != header.crc32 {
        return Err(MeshError::Checksum {
            expected: header.crc32,
            found: crc,
        });
    }
    let costs = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of 8")))
        .collect();
    Ok(CostMesh {
        grid: MeshGrid::new(header.dates, header.durations)?,
        t0: header.t0,
        span: header.span,
        mode: header.mode,
        debris_ids: header.debris_ids,
        costs,
    })
}

pub fn load_mesh(path: &Path) -> Result<CostMesh, MeshError> {
    read_mesh(&fs::read(path)?)
}

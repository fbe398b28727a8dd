//! Debris catalogues: the CSV fixture format and NORAD two-line elements.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::orbit::{raan_rate, CircularOrbit, Debris, EarthModel, DAY};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("line {line}: {msg}")]
    Tle { line: usize, msg: String },
    #[error("duplicate debris id {0}")]
    Duplicate(u32),
    #[error("no debris records")]
    Empty,
}

/// One CSV row, in file units.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DebrisRecord {
    pub id: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    #[serde(default)]
    pub weight: Option<f64>,
    #[serde(default)]
    pub op_cost: Option<f64>,
    /// Mission-clock time (days) the RAAN refers to.
    #[serde(default)]
    pub epoch_days: Option<f64>,
}

impl DebrisRecord {
    pub fn to_debris(&self, earth: &EarthModel) -> Result<Debris, String> {
        if !(self.altitude_km > 0.0 && self.altitude_km.is_finite()) {
            return Err(format!("altitude {} km must be positive", self.altitude_km));
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return Err(format!("inclination {} deg outside [0, 180]", self.inclination_deg));
        }
        if !self.raan_deg.is_finite() {
            return Err("RAAN is not finite".into());
        }
        let orbit = CircularOrbit::from_altitude_deg(
            self.altitude_km,
            self.inclination_deg,
            self.raan_deg,
            self.epoch_days.unwrap_or(0.0) * DAY,
            earth,
        )
        .map_err(|e| e.to_string())?;
        Debris::new(self.id, orbit, self.op_cost.unwrap_or(0.0), self.weight.unwrap_or(1.0)).map_err(|e| e.to_string())
    }
}

fn check_unique(debris: &[Debris]) -> Result<(), IngestError> {
    let mut seen = HashSet::new();
    for d in debris {
        if !seen.insert(d.id) {
            return Err(IngestError::Duplicate(d.id));
        }
    }
    if debris.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(())
}

/// Parses `id,altitude_km,inclination_deg,raan_deg[,weight][,op_cost]`.
/// Row numbers in errors count the header as row 1.
pub fn parse_debris_csv_str(text: &str, earth: &EarthModel) -> Result<Vec<Debris>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in reader.deserialize::<DebrisRecord>().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| IngestError::Row {
            row,
            msg: e.to_string(),
        })?;
        out.push(rec.to_debris(earth).map_err(|msg| IngestError::Row { row, msg })?);
    }
    check_unique(&out)?;
    Ok(out)
}

fn read(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_debris_csv(path: &Path, earth: &EarthModel) -> Result<Vec<Debris>, IngestError> {
    parse_debris_csv_str(&read(path)?, earth)
}

/// Modulo-10 checksum of a TLE line: digits count their value, minus signs
/// count one.
pub fn tle_checksum(line: &str) -> u32 {
    line.chars()
        .take(68)
        .map(|c| match c {
            '0'..='9' => c as u32 - '0' as u32,
            '-' => 1,
            _ => 0,
        })
        .sum::<u32>()
        % 10
}

/// Orbit radius (m) for a mean motion in revolutions per day.
pub fn radius_from_mean_motion(rev_per_day: f64, earth: &EarthModel) -> f64 {
    let period = DAY / rev_per_day;
    (earth.mu * (period / (2.0 * PI)).powi(2)).cbrt()
}

/// Days from 2000-01-01 00:00 for a TLE epoch `YYDDD.DDDDDDDD`.
pub fn tle_epoch_days(yy: u32, day_of_year: f64) -> f64 {
    let year = if yy < 57 { 2000 + yy } else { 1900 + yy } as i32;
    let leap = |y: i32| (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    let whole: i32 = if year >= 2000 {
        (2000..year).map(|y| if leap(y) { 366 } else { 365 }).sum()
    } else {
        -(year..2000).map(|y| if leap(y) { 366 } else { 365 }).sum::<i32>()
    };
    whole as f64 + day_of_year - 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct TleRecord {
    pub catalog: u32,
    pub epoch_days: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    pub mean_motion: f64,
}

fn field<T: std::str::FromStr>(
    line: &str,
    cols: std::ops::Range<usize>,
    no: usize,
    what: &str,
) -> Result<T, IngestError> {
    line.get(cols.clone())
        .map(str::trim)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| IngestError::Tle {
            line: no,
            msg: format!("bad {what} in columns {}-{}", cols.start + 1, cols.end),
        })
}

fn check_line(line: &str, no: usize, tag: char) -> Result<(), IngestError> {
    let err = |msg: String| Err(IngestError::Tle { line: no, msg });
    if line.len() < 69 || !line.is_ascii() {
        return err(format!("expected 69 columns, got {}", line.len()));
    }
    if !line.starts_with(tag) {
        return err(format!("expected line {tag}"));
    }
    let stated = line.as_bytes()[68];
    if !stated.is_ascii_digit() || (stated - b'0') as u32 != tle_checksum(line) {
        return err(format!("checksum mismatch (computed {})", tle_checksum(line)));
    }
    Ok(())
}

pub fn parse_tle_records(text: &str) -> Result<Vec<TleRecord>, IngestError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let (no, l) = lines[i];
        if !l.starts_with("1 ") {
            // title line
            i += 1;
            continue;
        }
        let (no2, l2) = *lines.get(i + 1).ok_or(IngestError::Tle {
            line: no,
            msg: "line 1 without line 2".into(),
        })?;
        check_line(l, no, '1')?;
        check_line(l2, no2, '2')?;
        let catalog: u32 = field(l, 2..7, no, "catalog number")?;
        let yy: u32 = field(l, 18..20, no, "epoch year")?;
        let doy: f64 = field(l, 20..32, no, "epoch day")?;
        out.push(TleRecord {
            catalog,
            epoch_days: tle_epoch_days(yy, doy),
            inclination_deg: field(l2, 8..16, no2, "inclination")?,
            raan_deg: field(l2, 17..25, no2, "RAAN")?,
            mean_motion: field(l2, 52..63, no2, "mean motion")?,
        });
        i += 2;
    }
    Ok(out)
}

/// Converts element sets to debris whose nodes are propagated to a common
/// reference epoch (days from 2000-01-01; the latest record epoch when
/// absent), which becomes mission time zero.
pub fn tle_to_debris(
    records: &[TleRecord],
    reference: Option<f64>,
    earth: &EarthModel,
) -> Result<Vec<Debris>, IngestError> {
    let reference = reference.unwrap_or_else(|| records.iter().map(|r| r.epoch_days).fold(f64::MIN, f64::max));
    let out = records
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let bad = |msg: String| IngestError::Row { row: k + 1, msg };
            if !(r.mean_motion > 0.0) {
                return Err(bad(format!("mean motion {} must be positive", r.mean_motion)));
            }
            let radius = radius_from_mean_motion(r.mean_motion, earth);
            let inc = r.inclination_deg.to_radians();
            let raan = r.raan_deg.to_radians() + raan_rate(radius, inc, earth) * (reference - r.epoch_days) * DAY;
            let orbit = CircularOrbit::new(radius, inc, raan, 0.0, earth).map_err(|e| bad(e.to_string()))?;
            Debris::new(r.catalog, orbit, 0.0, 1.0).map_err(|e| bad(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_unique(&out)?;
    Ok(out)
}

pub fn parse_tle(path: &Path, reference: Option<f64>, earth: &EarthModel) -> Result<Vec<Debris>, IngestError> {
    tle_to_debris(&parse_tle_records(&read(path)?)?, reference, earth)
}

/// Reads a catalogue, choosing the format from the extension (`.csv` or
/// two-line elements otherwise).
pub fn load_debris(path: &Path, earth: &EarthModel) -> Result<Vec<Debris>, IngestError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => parse_debris_csv(path, earth),
        _ => parse_tle(path, None, earth),
    }
}

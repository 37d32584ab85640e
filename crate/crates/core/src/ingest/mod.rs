//! Loading and canonicalizing the raw data streams.
//!
//! Each loader is a pure function of file content: rows that break an
//! invariant are collected as [`Reject`]s with their line number and never
//! abort the load, unless nothing survives ([`Error::EmptyDataset`]).
//! Accepted records come back in a total, deterministic order.

mod table;
pub mod zones;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preference::{Dimension, Preference};
use table::{read_table, RawRow};

pub use zones::{Zone, ZoneMap};

pub type Timestamp = DateTime<Utc>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// Guesses from the extension; anything but `.jsonl` is CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => Format::Jsonl,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

/// Parses an RFC 3339 instant into UTC, truncated to whole seconds.
pub fn parse_timestamp(s: &str) -> std::result::Result<Timestamp, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map(|t| t.with_nanosecond(0).unwrap_or(t))
        .map_err(|e| format!("invalid timestamp {s:?}: {e}"))
}

pub fn format_timestamp(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackVote {
    pub vote_id: String,
    pub occupant_id: String,
    pub timestamp: Timestamp,
    pub thermal: Preference,
    pub light: Preference,
    pub noise: Preference,
    pub zone_id: Option<String>,
}

impl FeedbackVote {
    pub fn preference(&self, dim: Dimension) -> Preference {
        match dim {
            Dimension::Thermal => self.thermal,
            Dimension::Light => self.light,
            Dimension::Noise => self.noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub sensor_id: String,
    pub zone_id: String,
    pub timestamp: Timestamp,
    pub temperature: f64,
    pub humidity: f64,
    pub noise_level: f64,
    pub illuminance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Position {
    Coordinates { x: f64, y: f64, floor: i32 },
    Zone(String),
    /// Both given; the zone wins during fusion.
    Both { x: f64, y: f64, floor: i32, zone_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationFix {
    pub occupant_id: String,
    pub timestamp: Timestamp,
    pub position: Position,
}

impl LocalizationFix {
    pub fn zone_id(&self) -> Option<&str> {
        match &self.position {
            Position::Zone(z) | Position::Both { zone_id: z, .. } => Some(z),
            Position::Coordinates { .. } => None,
        }
    }

    pub fn coordinates(&self) -> Option<(f64, f64, i32)> {
        match self.position {
            Position::Coordinates { x, y, floor } | Position::Both { x, y, floor, .. } => Some((x, y, floor)),
            Position::Zone(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WearableSample {
    pub occupant_id: String,
    pub timestamp: Timestamp,
    pub near_body_temperature: Option<f64>,
    pub heart_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for Reject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

/// Accepted records plus the rows that were turned away.
#[derive(Debug, Clone)]
pub struct LoadReport<T> {
    pub records: Vec<T>,
    pub rejects: Vec<Reject>,
    pub total_rows: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Timestamps after this instant are rejected as future-dated.
    pub horizon: Option<Timestamp>,
}

pub const VOTE_COLUMNS: [&str; 6] = ["vote_id", "occupant_id", "timestamp", "thermal", "light", "noise"];
pub const SENSOR_COLUMNS: [&str; 7] = [
    "sensor_id",
    "zone_id",
    "timestamp",
    "temperature_c",
    "humidity_rh",
    "noise_db",
    "illuminance_lux",
];
pub const LOCALIZATION_COLUMNS: [&str; 6] = ["occupant_id", "timestamp", "x_m", "y_m", "floor", "zone_id"];
pub const WEARABLE_COLUMNS: [&str; 4] = ["occupant_id", "timestamp", "near_body_temp_c", "heart_rate_bpm"];

type RowResult<T> = std::result::Result<T, String>;

fn required<'a>(row: &'a RawRow, i: usize, name: &str) -> RowResult<&'a str> {
    row.get(i).ok_or_else(|| format!("missing {name}"))
}

fn number(row: &RawRow, i: usize, name: &str) -> RowResult<Option<f64>> {
    row.get(i)
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("{name} is not a finite number: {s:?}"))
        })
        .transpose()
}

fn in_range(v: f64, lo: f64, hi: f64, name: &str) -> RowResult<f64> {
    if (lo..=hi).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{name} {v} outside [{lo}, {hi}]"))
    }
}

fn timestamp(row: &RawRow, i: usize, opts: &LoadOptions) -> RowResult<Timestamp> {
    let t = parse_timestamp(required(row, i, "timestamp")?)?;
    match opts.horizon {
        Some(h) if t > h => Err(format!("timestamp {} is after the dataset horizon", format_timestamp(&t))),
        _ => Ok(t),
    }
}

/// Runs `parse` over every row and assembles the report.
fn collect<T>(
    path: &Path,
    format: Format,
    required_cols: &[&str],
    optional_cols: &[&str],
    mut parse: impl FnMut(&RawRow) -> RowResult<T>,
) -> Result<LoadReport<T>> {
    let table = read_table(path, format, required_cols, optional_cols)?;
    let mut rejects: Vec<Reject> = table
        .bad
        .into_iter()
        .map(|b| Reject { line: b.line, reason: b.reason })
        .collect();
    let total_rows = table.rows.len() + rejects.len();
    let mut records = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        match parse(row) {
            Ok(r) => records.push(r),
            Err(reason) => rejects.push(Reject { line: row.line, reason }),
        }
    }
    rejects.sort_by_key(|r| r.line);
    if records.is_empty() {
        return Err(Error::EmptyDataset(path.display().to_string()));
    }
    Ok(LoadReport { records, rejects, total_rows })
}

pub fn load_votes(path: &Path, format: Format) -> Result<LoadReport<FeedbackVote>> {
    load_votes_with(path, format, &LoadOptions::default())
}

pub fn load_votes_with(path: &Path, format: Format, opts: &LoadOptions) -> Result<LoadReport<FeedbackVote>> {
    let mut report = collect(path, format, &VOTE_COLUMNS, &["zone_id"], |row| {
        let pref = |i: usize, dim: Dimension| -> RowResult<Preference> {
            let raw = row.get(i).ok_or_else(|| format!("partial vote: missing {dim}"))?;
            Preference::parse(dim, raw)
        };
        Ok(FeedbackVote {
            vote_id: required(row, 0, "vote_id")?.to_string(),
            occupant_id: required(row, 1, "occupant_id")?.to_string(),
            timestamp: timestamp(row, 2, opts)?,
            thermal: pref(3, Dimension::Thermal)?,
            light: pref(4, Dimension::Light)?,
            noise: pref(5, Dimension::Noise)?,
            zone_id: row.get(6).map(str::to_string),
        })
    })?;
    let mut seen = HashSet::with_capacity(report.records.len());
    for v in &report.records {
        if !seen.insert(v.vote_id.as_str()) {
            return Err(Error::DuplicateVoteId(v.vote_id.clone()));
        }
    }
    sort_votes(&mut report.records);
    Ok(report)
}

pub fn sort_votes(votes: &mut [FeedbackVote]) {
    votes.sort_by(|a, b| {
        (&a.occupant_id, a.timestamp, &a.vote_id).cmp(&(&b.occupant_id, b.timestamp, &b.vote_id))
    });
}

pub fn load_sensor_readings(path: &Path, format: Format) -> Result<LoadReport<SensorReading>> {
    load_sensor_readings_with(path, format, &LoadOptions::default())
}

pub fn load_sensor_readings_with(
    path: &Path,
    format: Format,
    opts: &LoadOptions,
) -> Result<LoadReport<SensorReading>> {
    let mut sensor_zone: BTreeMap<String, String> = BTreeMap::new();
    let mut report = collect(path, format, &SENSOR_COLUMNS, &[], |row| {
        let num = |i: usize, name: &str| -> RowResult<f64> {
            number(row, i, name)?.ok_or_else(|| format!("missing {name}"))
        };
        let reading = SensorReading {
            sensor_id: required(row, 0, "sensor_id")?.to_string(),
            zone_id: required(row, 1, "zone_id")?.to_string(),
            timestamp: timestamp(row, 2, opts)?,
            temperature: in_range(num(3, "temperature_c")?, -10.0, 60.0, "temperature_c")?,
            humidity: in_range(num(4, "humidity_rh")?, 0.0, 100.0, "humidity_rh")?,
            noise_level: in_range(num(5, "noise_db")?, 0.0, 140.0, "noise_db")?,
            illuminance: in_range(num(6, "illuminance_lux")?, 0.0, f64::INFINITY, "illuminance_lux")?,
        };
        match sensor_zone.get(&reading.sensor_id) {
            Some(z) if *z != reading.zone_id => {
                return Err(format!(
                    "sensor {} already mapped to zone {z}",
                    reading.sensor_id
                ))
            }
            Some(_) => {}
            None => {
                sensor_zone.insert(reading.sensor_id.clone(), reading.zone_id.clone());
            }
        }
        Ok(reading)
    })?;
    sort_readings(&mut report.records);
    Ok(report)
}

pub fn sort_readings(readings: &mut [SensorReading]) {
    readings.sort_by(|a, b| {
        (&a.zone_id, a.timestamp, &a.sensor_id).cmp(&(&b.zone_id, b.timestamp, &b.sensor_id))
    });
}

/// Distinct sensor ids, sorted.
pub fn sensor_ids(readings: &[SensorReading]) -> Vec<&str> {
    let mut ids: Vec<&str> = readings.iter().map(|r| r.sensor_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Moves readings whose zone is not in `zones` into rejects. Line numbers are
/// not tracked past loading, so these carry line 0.
pub fn retain_known_zones(readings: &mut Vec<SensorReading>, zones: &ZoneMap) -> Vec<Reject> {
    let mut rejects = Vec::new();
    readings.retain(|r| {
        let known = zones.contains_id(&r.zone_id);
        if !known {
            rejects.push(Reject {
                line: 0,
                reason: format!("sensor {} reports unknown zone {}", r.sensor_id, r.zone_id),
            });
        }
        known
    });
    rejects
}

pub fn load_localization(path: &Path, format: Format) -> Result<LoadReport<LocalizationFix>> {
    load_localization_with(path, format, &LoadOptions::default())
}

pub fn load_localization_with(
    path: &Path,
    format: Format,
    opts: &LoadOptions,
) -> Result<LoadReport<LocalizationFix>> {
    let mut report = collect(path, format, &LOCALIZATION_COLUMNS[..5], &["zone_id"], |row| {
        let x = number(row, 2, "x_m")?;
        let y = number(row, 3, "y_m")?;
        let floor = row
            .get(4)
            .map(|s| s.parse::<i32>().map_err(|_| format!("floor is not an integer: {s:?}")))
            .transpose()?;
        let zone = row.get(5).map(str::to_string);
        let coords = match (x, y, floor) {
            (Some(x), Some(y), Some(floor)) => Some((x, y, floor)),
            (None, None, None) => None,
            _ => return Err("incomplete coordinates (need x_m, y_m and floor)".into()),
        };
        let position = match (coords, zone) {
            (Some((x, y, floor)), Some(zone_id)) => Position::Both { x, y, floor, zone_id },
            (Some((x, y, floor)), None) => Position::Coordinates { x, y, floor },
            (None, Some(z)) => Position::Zone(z),
            (None, None) => return Err("neither coordinates nor zone_id".into()),
        };
        Ok(LocalizationFix {
            occupant_id: required(row, 0, "occupant_id")?.to_string(),
            timestamp: timestamp(row, 1, opts)?,
            position,
        })
    })?;
    sort_fixes(&mut report.records);
    Ok(report)
}

fn position_key(p: &Position) -> (Option<&str>, f64, f64, i32) {
    match p {
        Position::Coordinates { x, y, floor } => (None, *x, *y, *floor),
        Position::Zone(z) => (Some(z), 0.0, 0.0, 0),
        Position::Both { x, y, floor, zone_id } => (Some(zone_id), *x, *y, *floor),
    }
}

pub fn sort_fixes(fixes: &mut [LocalizationFix]) {
    fixes.sort_by(|a, b| {
        let (za, xa, ya, fa) = position_key(&a.position);
        let (zb, xb, yb, fb) = position_key(&b.position);
        (&a.occupant_id, a.timestamp, za, fa)
            .cmp(&(&b.occupant_id, b.timestamp, zb, fb))
            .then(xa.total_cmp(&xb))
            .then(ya.total_cmp(&yb))
    });
}

pub fn load_wearable(path: &Path, format: Format) -> Result<LoadReport<WearableSample>> {
    load_wearable_with(path, format, &LoadOptions::default())
}

pub fn load_wearable_with(path: &Path, format: Format, opts: &LoadOptions) -> Result<LoadReport<WearableSample>> {
    let mut report = collect(path, format, &WEARABLE_COLUMNS, &[], |row| {
        let nbt = number(row, 2, "near_body_temp_c")?
            .map(|v| in_range(v, 10.0, 45.0, "near_body_temp_c"))
            .transpose()?;
        let hr = number(row, 3, "heart_rate_bpm")?
            .map(|v| in_range(v, 25.0, 230.0, "heart_rate_bpm"))
            .transpose()?;
        if nbt.is_none() && hr.is_none() {
            return Err("neither near_body_temp_c nor heart_rate_bpm".into());
        }
        Ok(WearableSample {
            occupant_id: required(row, 0, "occupant_id")?.to_string(),
            timestamp: timestamp(row, 1, opts)?,
            near_body_temperature: nbt,
            heart_rate: hr,
        })
    })?;
    sort_wearables(&mut report.records);
    Ok(report)
}

pub fn sort_wearables(samples: &mut [WearableSample]) {
    samples.sort_by(|a, b| {
        (&a.occupant_id, a.timestamp)
            .cmp(&(&b.occupant_id, b.timestamp))
            .then(cmp_opt(a.near_body_temperature, b.near_body_temperature))
            .then(cmp_opt(a.heart_rate, b.heart_rate))
    });
}

fn cmp_opt(a: Option<f64>, b: Option<f64>) -> std::cmp::Ordering {
    match (a, b) {
        (Some(a), Some(b)) => a.total_cmp(&b),
        (a, b) => a.is_some().cmp(&b.is_some()),
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(Error::from)
}

pub fn write_votes(path: &Path, votes: &[FeedbackVote]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(VOTE_COLUMNS.iter().chain(&["zone_id"]))?;
    for v in votes {
        w.write_record([
            v.vote_id.as_str(),
            v.occupant_id.as_str(),
            &format_timestamp(&v.timestamp),
            v.thermal.label(Dimension::Thermal),
            v.light.label(Dimension::Light),
            v.noise.label(Dimension::Noise),
            v.zone_id.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_sensor_readings(path: &Path, readings: &[SensorReading]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SENSOR_COLUMNS)?;
    for r in readings {
        w.write_record([
            r.sensor_id.clone(),
            r.zone_id.clone(),
            format_timestamp(&r.timestamp),
            r.temperature.to_string(),
            r.humidity.to_string(),
            r.noise_level.to_string(),
            r.illuminance.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_localization(path: &Path, fixes: &[LocalizationFix]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(LOCALIZATION_COLUMNS)?;
    for f in fixes {
        let (x, y, floor) = match f.coordinates() {
            Some((x, y, floor)) => (x.to_string(), y.to_string(), floor.to_string()),
            None => Default::default(),
        };
        w.write_record([
            f.occupant_id.clone(),
            format_timestamp(&f.timestamp),
            x,
            y,
            floor,
            f.zone_id().unwrap_or("").to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_wearable(path: &Path, samples: &[WearableSample]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(WEARABLE_COLUMNS)?;
    for s in samples {
        w.write_record([
            s.occupant_id.clone(),
            format_timestamp(&s.timestamp),
            opt_num(s.near_body_temperature),
            opt_num(s.heart_rate),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_rejects(path: &Path, rejects: &[Reject]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["line", "reason"])?;
    for r in rejects {
        w.write_record([r.line.to_string(), r.reason.clone()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const VOTES: &str = "vote_id,occupant_id,timestamp,thermal,light,noise,zone_id
v3,b,2024-03-04T02:00:00Z,no_change,no_change,no_change,
v1,a,2024-03-04T03:00:00Z,prefer_cooler,prefer_dimmer,prefer_quieter,office-1
v2,a,2024-03-04T01:00:00+08:00,prefer_warmer,no_change,no_change,
";

    #[test]
    fn three_valid_votes() {
        let f = file(VOTES, ".csv");
        let r = load_votes(f.path(), Format::Csv).unwrap();
        assert_eq!((r.records.len(), r.rejects.len(), r.total_rows), (3, 0, 3));
        let ids: Vec<&str> = r.records.iter().map(|v| v.vote_id.as_str()).collect();
        // sorted by occupant then time; v2 is 2024-03-03T17:00Z
        assert_eq!(ids, ["v2", "v1", "v3"]);
        assert_eq!(r.records[1].zone_id.as_deref(), Some("office-1"));
        assert_eq!(r.records[0].zone_id, None);
    }

    #[test]
    fn cross_dimension_class_rejected_with_line() {
        let f = file(
            "vote_id,occupant_id,timestamp,thermal,light,noise,zone_id
v1,a,2024-03-04T03:00:00Z,prefer_louder,no_change,no_change,
v2,a,2024-03-04T04:00:00Z,no_change,no_change,no_change,
",
            ".csv",
        );
        let r = load_votes(f.path(), Format::Csv).unwrap();
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.rejects, vec![Reject { line: 2, reason: "invalid class for dimension".into() }]);
    }

    #[test]
    fn partial_vote_rejected() {
        let f = file(
            "vote_id,occupant_id,timestamp,thermal,light,noise\nv1,a,2024-03-04T03:00:00Z,no_change,,no_change\nv2,a,2024-03-04T03:00:00Z,no_change,no_change,no_change\n",
            ".csv",
        );
        let r = load_votes(f.path(), Format::Csv).unwrap();
        assert_eq!(r.records.len(), 1);
        assert!(r.rejects[0].reason.contains("partial vote"));
    }

    #[test]
    fn duplicate_vote_id_is_an_error() {
        let f = file(
            "vote_id,occupant_id,timestamp,thermal,light,noise\nv1,a,2024-03-04T03:00:00Z,no_change,no_change,no_change\nv1,b,2024-03-04T03:00:00Z,no_change,no_change,no_change\n",
            ".csv",
        );
        assert!(matches!(load_votes(f.path(), Format::Csv), Err(Error::DuplicateVoteId(id)) if id == "v1"));
    }

    #[test]
    fn wrong_header_and_empty_dataset() {
        let f = file("id,who,when\n1,2,3\n", ".csv");
        assert!(matches!(load_votes(f.path(), Format::Csv), Err(Error::MalformedFile { .. })));
        let f = file("vote_id,occupant_id,timestamp,thermal,light,noise\nv1,a,yesterday,no_change,no_change,no_change\n", ".csv");
        assert!(matches!(load_votes(f.path(), Format::Csv), Err(Error::EmptyDataset(_))));
        assert!(matches!(
            load_votes(Path::new("/nonexistent/votes.csv"), Format::Csv),
            Err(Error::MalformedFile { .. })
        ));
    }

    #[test]
    fn horizon_rejects_future_votes() {
        let f = file(VOTES, ".csv");
        let opts = LoadOptions { horizon: Some(parse_timestamp("2024-03-04T02:30:00Z").unwrap()) };
        let r = load_votes_with(f.path(), Format::Csv, &opts).unwrap();
        assert_eq!(r.records.len(), 2);
        assert!(r.rejects[0].reason.contains("horizon"));
    }

    #[test]
    fn sensor_ranges() {
        let f = file(
            "sensor_id,zone_id,timestamp,temperature_c,humidity_rh,noise_db,illuminance_lux
s1,z1,2024-03-04T03:00:00Z,25.0,60,45,300
s1,z1,2024-03-04T03:05:00Z,25.0,140,45,300
s2,z2,2024-03-04T03:05:00Z,25.0,50,45,-1
s1,z2,2024-03-04T03:10:00Z,25.0,50,45,10
",
            ".csv",
        );
        let r = load_sensor_readings(f.path(), Format::Csv).unwrap();
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.records[0].temperature, 25.0);
        assert_eq!(r.rejects.len(), 3);
        assert!(r.rejects[0].reason.starts_with("humidity_rh 140"));
        assert!(r.rejects[2].reason.contains("already mapped"));
        assert_eq!(r.records.len() + r.rejects.len(), r.total_rows);
    }

    #[test]
    fn localization_variants() {
        let f = file(
            "occupant_id,timestamp,x_m,y_m,floor,zone_id
a,2024-03-04T03:00:00Z,,,,office-1
a,2024-03-04T03:01:00Z,1.5,2.5,3,
a,2024-03-04T03:02:00Z,,,,
a,2024-03-04T03:03:00Z,1.5,,3,
",
            ".csv",
        );
        let r = load_localization(f.path(), Format::Csv).unwrap();
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.records[0].zone_id(), Some("office-1"));
        assert_eq!(r.records[1].coordinates(), Some((1.5, 2.5, 3)));
        assert_eq!(r.rejects.len(), 2);
        assert_eq!(r.rejects[0].reason, "neither coordinates nor zone_id");
    }

    #[test]
    fn wearable_validation() {
        let f = file(
            "occupant_id,timestamp,near_body_temp_c,heart_rate_bpm
a,2024-03-04T03:00:00Z,31.2,72
a,2024-03-04T03:01:00Z,,
a,2024-03-04T03:02:00Z,,300
a,2024-03-04T03:03:00Z,30.0,
",
            ".csv",
        );
        let r = load_wearable(f.path(), Format::Csv).unwrap();
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.records[0].heart_rate, Some(72.0));
        assert_eq!(r.records[1].heart_rate, None);
        assert_eq!(r.rejects.iter().map(|r| r.line).collect::<Vec<_>>(), [3, 4]);
    }

    #[test]
    fn jsonl_votes() {
        let f = file(
            r#"{"vote_id":"v1","occupant_id":"a","timestamp":"2024-03-04T03:00:00Z","thermal":"prefer_cooler","light":"no_change","noise":"no_change","zone_id":null}
not json
{"vote_id":"v2","occupant_id":"a","timestamp":"2024-03-04T04:00:00Z","thermal":"no_change","light":"prefer_brighter","noise":"prefer_quieter","zone_id":"z"}
"#,
            ".jsonl",
        );
        let r = load_votes(f.path(), Format::Jsonl).unwrap();
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.rejects.len(), 1);
        assert_eq!(r.rejects[0].line, 2);
        assert_eq!(r.total_rows, 3);
    }

    #[test]
    fn forty_five_sensors_registered() {
        let mut csv = SENSOR_COLUMNS.join(",") + "\n";
        for i in 0..45 {
            csv += &format!("ieq-{i:02},zone-{},2024-03-04T03:00:00Z,24.5,55,40,250\n", i % 9);
        }
        let f = file(&csv, ".csv");
        let r = load_sensor_readings(f.path(), Format::Csv).unwrap();
        assert_eq!(sensor_ids(&r.records).len(), 45);
    }
}

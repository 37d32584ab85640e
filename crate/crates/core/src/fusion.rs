//! Joining votes with location, environment and wearable streams.
//!
//! For each vote: the occupant's temporally nearest localization fix gives
//! the zone, the zone's nearest sensor reading gives the environment, and
//! the occupant's nearest wearable samples give near-body temperature and
//! heart rate. Every join is bounded by a window from [`FusionConfig`]; ties
//! on temporal distance go to the earlier sample.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    format_timestamp, parse_timestamp, FeedbackVote, LocalizationFix, SensorReading, WearableSample, ZoneMap,
};
use crate::preference::{Dimension, Preference};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub env_window: i64,
    pub wearable_window: i64,
    pub localization_window: i64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            env_window: 900,
            wearable_window: 300,
            localization_window: 600,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.env_window <= 0 || self.wearable_window <= 0 || self.localization_window <= 0 {
            return Err(Error::InvalidConfig("fusion windows must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSnapshot {
    pub sensor_id: String,
    pub temperature: f64,
    pub humidity: f64,
    pub noise_level: f64,
    pub illuminance: f64,
    /// Vote time minus reading time, seconds.
    pub reading_age: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    /// Vote time minus sample time, seconds.
    pub sample_age: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedRecord {
    pub vote: FeedbackVote,
    pub zone_id: String,
    pub env: Option<EnvSnapshot>,
    pub near_body_temperature: Option<Measured>,
    pub heart_rate: Option<Measured>,
}

impl FusedRecord {
    pub fn occupant_id(&self) -> &str {
        &self.vote.occupant_id
    }

    pub fn preference(&self, dim: Dimension) -> Preference {
        self.vote.preference(dim)
    }
}

/// Attrition at each fusion stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionStats {
    pub total_votes: usize,
    pub zone_resolved: usize,
    pub env_matched: usize,
    pub wearable_matched: usize,
    pub near_body_matched: usize,
    pub heart_rate_matched: usize,
    /// Votes with no fix inside the localization window and no zone of their own.
    pub no_fix: usize,
    /// Votes whose nearest fix lay outside every zone, or in an unknown zone.
    pub fix_unresolved: usize,
    pub ambiguous: usize,
}

/// Zone for a fix: a pre-resolved zone passes through, coordinates go through
/// polygon containment on the fix's floor.
pub fn assign_zone(fix: &LocalizationFix, zones: &ZoneMap) -> Result<Option<String>> {
    if let Some(z) = fix.zone_id() {
        return Ok(Some(z.to_string()));
    }
    let (x, y, floor) = fix.coordinates().expect("fix has coordinates or zone");
    Ok(zones.locate(x, y, floor)?.map(|z| z.zone_id.clone()))
}

/// Index of the entry nearest to `t` within `window` seconds. `times` must be
/// sorted; among equal distances the earlier entry wins, and among equal
/// timestamps the first one.
pub(crate) fn nearest_in_time(times: &[i64], t: i64, window: i64) -> Option<usize> {
    let right = times.partition_point(|&x| x < t);
    let left = right.checked_sub(1).map(|i| times.partition_point(|&x| x < times[i]));
    let dist = |i: usize| (times[i] - t).abs();
    let best = match (left, (right < times.len()).then_some(right)) {
        (Some(l), Some(r)) => {
            if dist(r) < dist(l) {
                r
            } else {
                l
            }
        }
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (None, None) => return None,
    };
    (dist(best) <= window).then_some(best)
}

struct Series<'a, T> {
    times: Vec<i64>,
    items: Vec<&'a T>,
}

impl<'a, T> Series<'a, T> {
    fn new(mut items: Vec<&'a T>, time: impl Fn(&T) -> i64) -> Self {
        items.sort_by_key(|i| time(i));
        Series {
            times: items.iter().map(|i| time(i)).collect(),
            items,
        }
    }

    fn nearest(&self, t: i64, window: i64) -> Option<&'a T> {
        nearest_in_time(&self.times, t, window).map(|i| self.items[i])
    }
}

enum ZoneOutcome {
    Resolved(String),
    NoFix,
    Unresolved,
    Ambiguous,
}

pub fn fuse_dataset(
    votes: &[FeedbackVote],
    fixes: &[LocalizationFix],
    readings: &[SensorReading],
    wearables: &[WearableSample],
    zones: &ZoneMap,
    cfg: &FusionConfig,
) -> (Vec<FusedRecord>, FusionStats) {
    let mut fixes_by_occupant: BTreeMap<&str, Vec<&LocalizationFix>> = BTreeMap::new();
    for f in fixes {
        fixes_by_occupant.entry(&f.occupant_id).or_default().push(f);
    }
    let fixes_by_occupant: BTreeMap<&str, Series<LocalizationFix>> = fixes_by_occupant
        .into_iter()
        .map(|(k, v)| (k, Series::new(v, |f| f.timestamp.timestamp())))
        .collect();

    let mut readings_by_zone: BTreeMap<&str, Vec<&SensorReading>> = BTreeMap::new();
    for r in readings {
        readings_by_zone.entry(&r.zone_id).or_default().push(r);
    }
    let readings_by_zone: BTreeMap<&str, Series<SensorReading>> = readings_by_zone
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by(|a, b| (a.timestamp, &a.sensor_id).cmp(&(b.timestamp, &b.sensor_id)));
            (k, Series::new(v, |r| r.timestamp.timestamp()))
        })
        .collect();

    let mut nbt_by_occupant: BTreeMap<&str, Vec<&WearableSample>> = BTreeMap::new();
    let mut hr_by_occupant: BTreeMap<&str, Vec<&WearableSample>> = BTreeMap::new();
    for w in wearables {
        if w.near_body_temperature.is_some() {
            nbt_by_occupant.entry(&w.occupant_id).or_default().push(w);
        }
        if w.heart_rate.is_some() {
            hr_by_occupant.entry(&w.occupant_id).or_default().push(w);
        }
    }
    fn to_series<'a>(m: BTreeMap<&'a str, Vec<&'a WearableSample>>) -> BTreeMap<&'a str, Series<'a, WearableSample>> {
        m.into_iter()
            .map(|(k, v)| (k, Series::new(v, |w| w.timestamp.timestamp())))
            .collect()
    }
    let nbt_by_occupant = to_series(nbt_by_occupant);
    let hr_by_occupant = to_series(hr_by_occupant);

    let resolve = |vote: &FeedbackVote| -> ZoneOutcome {
        let t = vote.timestamp.timestamp();
        let fix = fixes_by_occupant
            .get(vote.occupant_id.as_str())
            .and_then(|s| s.nearest(t, cfg.localization_window));
        match fix {
            Some(fix) => match assign_zone(fix, zones) {
                Ok(Some(z)) if zones.contains_id(&z) => ZoneOutcome::Resolved(z),
                Ok(_) => ZoneOutcome::Unresolved,
                Err(_) => ZoneOutcome::Ambiguous,
            },
            None => match &vote.zone_id {
                Some(z) if zones.contains_id(z) => ZoneOutcome::Resolved(z.clone()),
                Some(_) => ZoneOutcome::Unresolved,
                None => ZoneOutcome::NoFix,
            },
        }
    };

    let outcomes: Vec<(ZoneOutcome, Option<FusedRecord>)> = votes
        .par_iter()
        .map(|vote| {
            let outcome = resolve(vote);
            let ZoneOutcome::Resolved(zone_id) = &outcome else {
                return (outcome, None);
            };
            let t = vote.timestamp.timestamp();
            let env = readings_by_zone
                .get(zone_id.as_str())
                .and_then(|s| s.nearest(t, cfg.env_window))
                .map(|r| EnvSnapshot {
                    sensor_id: r.sensor_id.clone(),
                    temperature: r.temperature,
                    humidity: r.humidity,
                    noise_level: r.noise_level,
                    illuminance: r.illuminance,
                    reading_age: t - r.timestamp.timestamp(),
                });
            let measured = |series: &BTreeMap<&str, Series<WearableSample>>,
                            field: fn(&WearableSample) -> Option<f64>| {
                series
                    .get(vote.occupant_id.as_str())
                    .and_then(|s| s.nearest(t, cfg.wearable_window))
                    .map(|w| Measured {
                        value: field(w).expect("series filtered on field"),
                        sample_age: t - w.timestamp.timestamp(),
                    })
            };
            let record = FusedRecord {
                vote: vote.clone(),
                zone_id: zone_id.clone(),
                env,
                near_body_temperature: measured(&nbt_by_occupant, |w| w.near_body_temperature),
                heart_rate: measured(&hr_by_occupant, |w| w.heart_rate),
            };
            (outcome, Some(record))
        })
        .collect();

    let mut stats = FusionStats {
        total_votes: votes.len(),
        ..Default::default()
    };
    let mut records = Vec::with_capacity(votes.len());
    for (outcome, record) in outcomes {
        match outcome {
            ZoneOutcome::Resolved(_) => stats.zone_resolved += 1,
            ZoneOutcome::NoFix => stats.no_fix += 1,
            ZoneOutcome::Unresolved => stats.fix_unresolved += 1,
            ZoneOutcome::Ambiguous => stats.ambiguous += 1,
        }
        if let Some(r) = record {
            stats.env_matched += r.env.is_some() as usize;
            stats.near_body_matched += r.near_body_temperature.is_some() as usize;
            stats.heart_rate_matched += r.heart_rate.is_some() as usize;
            stats.wearable_matched += (r.near_body_temperature.is_some() || r.heart_rate.is_some()) as usize;
            records.push(r);
        }
    }
    sort_records(&mut records);
    (records, stats)
}

pub fn sort_records(records: &mut [FusedRecord]) {
    records.sort_by(|a, b| {
        (&a.vote.occupant_id, a.vote.timestamp, &a.vote.vote_id).cmp(&(
            &b.vote.occupant_id,
            b.vote.timestamp,
            &b.vote.vote_id,
        ))
    });
}

pub const FUSED_COLUMNS: [&str; 17] = [
    "vote_id",
    "occupant_id",
    "timestamp",
    "thermal",
    "light",
    "noise",
    "zone_id",
    "sensor_id",
    "temperature_c",
    "humidity_rh",
    "noise_db",
    "illuminance_lux",
    "reading_age_s",
    "near_body_temp_c",
    "near_body_age_s",
    "heart_rate_bpm",
    "heart_rate_age_s",
];

pub fn write_fused(path: &Path, records: &[FusedRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(FUSED_COLUMNS)?;
    for r in records {
        let v = &r.vote;
        let mut row = vec![
            v.vote_id.clone(),
            v.occupant_id.clone(),
            format_timestamp(&v.timestamp),
            v.thermal.label(Dimension::Thermal).to_string(),
            v.light.label(Dimension::Light).to_string(),
            v.noise.label(Dimension::Noise).to_string(),
            r.zone_id.clone(),
        ];
        match &r.env {
            Some(e) => row.extend([
                e.sensor_id.clone(),
                e.temperature.to_string(),
                e.humidity.to_string(),
                e.noise_level.to_string(),
                e.illuminance.to_string(),
                e.reading_age.to_string(),
            ]),
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        for m in [&r.near_body_temperature, &r.heart_rate] {
            match m {
                Some(m) => row.extend([m.value.to_string(), m.sample_age.to_string()]),
                None => row.extend([String::new(), String::new()]),
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_fused(path: &Path) -> Result<Vec<FusedRecord>> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let bad = |line: u64, reason: String| Error::MalformedFile {
        path: path.to_path_buf(),
        reason: format!("line {line}: {reason}"),
    };
    let mut rdr = csv::Reader::from_path(path)?;
    if rdr.headers()?.iter().ne(FUSED_COLUMNS) {
        return Err(bad(1, "unexpected header".into()));
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(i).filter(|s| !s.is_empty());
        let num = |i: usize| -> Result<Option<f64>> {
            field(i)
                .map(|s| s.parse::<f64>().map_err(|e| bad(line, format!("{}: {e}", FUSED_COLUMNS[i]))))
                .transpose()
        };
        let int = |i: usize| -> Result<Option<i64>> {
            field(i)
                .map(|s| s.parse::<i64>().map_err(|e| bad(line, format!("{}: {e}", FUSED_COLUMNS[i]))))
                .transpose()
        };
        let pref = |i: usize, dim: Dimension| -> Result<Preference> {
            Preference::parse(dim, field(i).unwrap_or("")).map_err(|e| bad(line, e))
        };
        let vote = FeedbackVote {
            vote_id: field(0).ok_or_else(|| bad(line, "missing vote_id".into()))?.to_string(),
            occupant_id: field(1).ok_or_else(|| bad(line, "missing occupant_id".into()))?.to_string(),
            timestamp: parse_timestamp(field(2).unwrap_or("")).map_err(|e| bad(line, e))?,
            thermal: pref(3, Dimension::Thermal)?,
            light: pref(4, Dimension::Light)?,
            noise: pref(5, Dimension::Noise)?,
            zone_id: None,
        };
        let zone_id = field(6).ok_or_else(|| bad(line, "missing zone_id".into()))?.to_string();
        let env = match field(7) {
            Some(sensor_id) => Some(EnvSnapshot {
                sensor_id: sensor_id.to_string(),
                temperature: num(8)?.ok_or_else(|| bad(line, "missing temperature_c".into()))?,
                humidity: num(9)?.ok_or_else(|| bad(line, "missing humidity_rh".into()))?,
                noise_level: num(10)?.ok_or_else(|| bad(line, "missing noise_db".into()))?,
                illuminance: num(11)?.ok_or_else(|| bad(line, "missing illuminance_lux".into()))?,
                reading_age: int(12)?.ok_or_else(|| bad(line, "missing reading_age_s".into()))?,
            }),
            None => None,
        };
        let measured = |vi: usize, ai: usize| -> Result<Option<Measured>> {
            Ok(match (num(vi)?, int(ai)?) {
                (Some(value), Some(sample_age)) => Some(Measured { value, sample_age }),
                _ => None,
            })
        };
        records.push(FusedRecord {
            vote,
            zone_id,
            env,
            near_body_temperature: measured(13, 14)?,
            heart_rate: measured(15, 16)?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Position, Zone};
    use chrono::{TimeZone, Utc};

    fn at(h: u32, m: u32) -> crate::ingest::Timestamp {
        Utc.with_ymd_and_hms(2024, 3, 4, h, m, 0).unwrap()
    }

    fn zones() -> ZoneMap {
        let sq = |id: &str, x0: f64| Zone {
            zone_id: id.into(),
            floor: 1,
            polygon: vec![(x0, 0.0), (x0 + 10.0, 0.0), (x0 + 10.0, 10.0), (x0, 10.0)],
            label: id.into(),
        };
        ZoneMap::new(vec![sq("Z", 0.0), sq("Y", 10.0)]).unwrap()
    }

    fn vote(id: &str, occ: &str, t: crate::ingest::Timestamp) -> FeedbackVote {
        FeedbackVote {
            vote_id: id.into(),
            occupant_id: occ.into(),
            timestamp: t,
            thermal: Preference::NoChange,
            light: Preference::NoChange,
            noise: Preference::NoChange,
            zone_id: None,
        }
    }

    fn fix(occ: &str, t: crate::ingest::Timestamp, x: f64) -> LocalizationFix {
        LocalizationFix {
            occupant_id: occ.into(),
            timestamp: t,
            position: Position::Coordinates { x, y: 5.0, floor: 1 },
        }
    }

    fn reading(zone: &str, t: crate::ingest::Timestamp, temp: f64) -> SensorReading {
        SensorReading {
            sensor_id: format!("s-{zone}"),
            zone_id: zone.into(),
            timestamp: t,
            temperature: temp,
            humidity: 50.0,
            noise_level: 40.0,
            illuminance: 300.0,
        }
    }

    #[test]
    fn nearest_prefers_earlier_on_tie() {
        let times = [0, 10, 10, 20];
        assert_eq!(nearest_in_time(&times, 15, 100), Some(1));
        assert_eq!(nearest_in_time(&times, 16, 100), Some(3));
        assert_eq!(nearest_in_time(&times, 10, 100), Some(1));
        assert_eq!(nearest_in_time(&times, 40, 19), None);
        assert_eq!(nearest_in_time(&times, 40, 20), Some(3));
        assert_eq!(nearest_in_time(&[], 0, 10), None);
    }

    #[test]
    fn env_from_nearest_reading() {
        let cfg = FusionConfig { env_window: 1800, ..Default::default() };
        let votes = [vote("v", "a", at(10, 0))];
        let fixes = [fix("a", at(10, 1), 5.0)];
        let readings = [reading("Z", at(9, 55), 24.0), reading("Z", at(10, 20), 27.0)];
        let (recs, stats) = fuse_dataset(&votes, &fixes, &readings, &[], &zones(), &cfg);
        let env = recs[0].env.as_ref().unwrap();
        assert_eq!(env.temperature, 24.0);
        assert_eq!(env.reading_age, 300);
        assert_eq!((stats.zone_resolved, stats.env_matched), (1, 1));
    }

    #[test]
    fn vote_without_fix_is_dropped() {
        let votes = [vote("v1", "a", at(10, 0)), vote("v2", "a", at(12, 0))];
        let fixes = [fix("a", at(10, 2), 15.0)];
        let (recs, stats) = fuse_dataset(&votes, &fixes, &[], &[], &zones(), &FusionConfig::default());
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].zone_id, "Y");
        assert!(recs[0].env.is_none());
        assert_eq!(stats.no_fix, 1);
        assert_eq!(stats.zone_resolved, 1);
        assert_eq!(stats.env_matched, 0);
    }

    #[test]
    fn own_zone_is_fallback_when_no_fix() {
        let mut v = vote("v1", "a", at(10, 0));
        v.zone_id = Some("Z".into());
        let (recs, _) = fuse_dataset(&[v], &[], &[], &[], &zones(), &FusionConfig::default());
        assert_eq!(recs[0].zone_id, "Z");
    }

    #[test]
    fn fix_outside_and_ambiguous_are_counted() {
        let votes = [vote("v1", "a", at(10, 0)), vote("v2", "b", at(10, 0))];
        let fixes = [fix("a", at(10, 0), 50.0), fix("b", at(10, 0), 10.0)];
        let (recs, stats) = fuse_dataset(&votes, &fixes, &[], &[], &zones(), &FusionConfig::default());
        assert!(recs.is_empty());
        assert_eq!((stats.fix_unresolved, stats.ambiguous), (1, 1));
    }

    #[test]
    fn wearable_fields_join_independently() {
        let votes = [vote("v1", "a", at(10, 0))];
        let fixes = [fix("a", at(10, 0), 5.0)];
        let wear = [
            WearableSample { occupant_id: "a".into(), timestamp: at(9, 58), near_body_temperature: Some(31.0), heart_rate: None },
            WearableSample { occupant_id: "a".into(), timestamp: at(10, 4), near_body_temperature: None, heart_rate: Some(70.0) },
            WearableSample { occupant_id: "a".into(), timestamp: at(10, 9), near_body_temperature: Some(33.0), heart_rate: Some(90.0) },
        ];
        let (recs, stats) = fuse_dataset(&votes, &fixes, &[], &wear, &zones(), &FusionConfig::default());
        assert_eq!(recs[0].near_body_temperature, Some(Measured { value: 31.0, sample_age: 120 }));
        assert_eq!(recs[0].heart_rate, Some(Measured { value: 70.0, sample_age: -240 }));
        assert_eq!(stats.wearable_matched, 1);
    }

    #[test]
    fn fused_csv_round_trip() {
        let votes = [vote("v1", "a", at(10, 0)), vote("v2", "a", at(11, 0))];
        let fixes = [fix("a", at(10, 0), 5.0), fix("a", at(11, 0), 12.5)];
        let readings = [reading("Z", at(10, 3), 23.25)];
        let wear = [WearableSample { occupant_id: "a".into(), timestamp: at(10, 1), near_body_temperature: Some(31.7), heart_rate: Some(66.0) }];
        let (recs, _) = fuse_dataset(&votes, &fixes, &readings, &wear, &zones(), &FusionConfig::default());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fused.csv");
        write_fused(&p, &recs).unwrap();
        let back = read_fused(&p).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.zone_id, b.zone_id);
            assert_eq!(a.env, b.env);
            assert_eq!(a.near_body_temperature, b.near_body_temperature);
            assert_eq!(a.heart_rate, b.heart_rate);
            assert_eq!(a.vote.vote_id, b.vote.vote_id);
            assert_eq!(a.vote.timestamp, b.vote.timestamp);
        }
    }
}

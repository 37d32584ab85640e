//! Feature matrices for preference prediction.
//!
//! A [`FeatureSetSpec`] picks feature groups; [`build_matrix`] turns fused
//! records into rows for one target dimension. Room and History features are
//! looked up in a [`FeatureContext`], which is built from whatever records
//! the caller passes (the evaluation protocol passes training records only).
//! Records missing a required input are excluded and counted, never imputed.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Timelike};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::TrainingSet;
use crate::fusion::FusedRecord;
use crate::ingest::{format_timestamp, parse_timestamp, Timestamp};
use crate::preference::{Dimension, Preference, DIRECTIONAL, DIRECTIONAL_SUFFIXES};
use crate::tendency::{class_counts, kmeans_fit, ClusterModel, ClusterSpace, SubjectKind, TendencyVector};

pub const DEFAULT_TIMEZONE: Tz = chrono_tz::Asia::Singapore;

/// IANA time zone name, e.g. `Asia/Singapore`.
pub fn parse_timezone(name: &str) -> Result<Tz> {
    name.parse()
        .map_err(|_| Error::InvalidConfig(format!("unknown time zone {name:?}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Time,
    Env,
    NearBody,
    HeartRate,
    Room,
    History,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 6] = [
        FeatureGroup::Time,
        FeatureGroup::Env,
        FeatureGroup::NearBody,
        FeatureGroup::HeartRate,
        FeatureGroup::Room,
        FeatureGroup::History,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Time => "time",
            FeatureGroup::Env => "env",
            FeatureGroup::NearBody => "near_body",
            FeatureGroup::HeartRate => "heart_rate",
            FeatureGroup::Room => "room",
            FeatureGroup::History => "history",
        }
    }
}

impl FromStr for FeatureGroup {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| format!("unknown feature group {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSetSpec {
    pub name: String,
    pub include: BTreeSet<FeatureGroup>,
}

impl FeatureSetSpec {
    /// Time is part of every feature set and is added if missing.
    pub fn new(name: impl Into<String>, groups: impl IntoIterator<Item = FeatureGroup>) -> FeatureSetSpec {
        let mut include: BTreeSet<FeatureGroup> = groups.into_iter().collect();
        include.insert(FeatureGroup::Time);
        FeatureSetSpec { name: name.into(), include }
    }

    pub fn has(&self, g: FeatureGroup) -> bool {
        self.include.contains(&g)
    }

    /// The six default combinations.
    pub fn defaults() -> Vec<FeatureSetSpec> {
        use FeatureGroup::*;
        vec![
            FeatureSetSpec::new("fs1", [Time, Env]),
            FeatureSetSpec::new("fs2", [Time, Env, NearBody, HeartRate]),
            FeatureSetSpec::new("fs3", [Time, NearBody, HeartRate]),
            FeatureSetSpec::new("fs4", [Time, NearBody, HeartRate, Room, History]),
            FeatureSetSpec::new("fs5", [Time, Env, Room, History]),
            FeatureSetSpec::new("fs6", FeatureGroup::ALL),
        ]
    }

    pub fn default_named(name: &str) -> Option<FeatureSetSpec> {
        FeatureSetSpec::defaults().into_iter().find(|s| s.name == name)
    }

    pub fn without(&self, g: FeatureGroup) -> FeatureSetSpec {
        let mut s = self.clone();
        if g != FeatureGroup::Time {
            s.include.remove(&g);
        }
        s
    }

    pub fn feature_names(&self, room: &RoomEncoding) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for g in &self.include {
            match g {
                FeatureGroup::Time => names.extend(["hour_sin", "hour_cos", "dow_sin", "dow_cos"].map(String::from)),
                FeatureGroup::Env => {
                    names.extend(["temperature", "humidity", "noise_level", "illuminance"].map(String::from))
                }
                FeatureGroup::NearBody => names.push("near_body_temp".into()),
                FeatureGroup::HeartRate => names.push("heart_rate".into()),
                FeatureGroup::Room => match room {
                    RoomEncoding::Ratios => {
                        names.extend(DIRECTIONAL_SUFFIXES.iter().map(|s| format!("room_ratio_{s}")))
                    }
                    RoomEncoding::ClusterLabel { .. } => names.push("room_cluster".into()),
                },
                FeatureGroup::History => {
                    names.extend(DIRECTIONAL_SUFFIXES.iter().map(|s| format!("history_ratio_{s}")))
                }
            }
        }
        names
    }
}

impl fmt::Display for FeatureSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let groups: Vec<&str> = self.include.iter().map(|g| g.name()).collect();
        write!(f, "{} {{{}}}", self.name, groups.join(", "))
    }
}

/// How the Room feature is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RoomEncoding {
    /// Six directional vote ratios of the room.
    #[default]
    Ratios,
    /// Index of the room's tendency cluster (joint space); `-1` for rooms
    /// without training votes.
    ClusterLabel { k: usize, seed: u64, restarts: usize },
}

/// Hour-of-day and day-of-week on the unit circle, in local time:
/// `(sin 2πh/24, cos 2πh/24, sin 2πd/7, cos 2πd/7)` with fractional hour `h`
/// and fractional day `d` (Monday 00:00 = 0).
pub fn encode_time_cyclical(ts: &Timestamp, tz: Tz) -> [f64; 4] {
    let local = ts.with_timezone(&tz);
    let h = local.hour() as f64 + local.minute() as f64 / 60.0 + local.second() as f64 / 3600.0;
    let d = local.weekday().num_days_from_monday() as f64 + h / 24.0;
    let (hs, hc) = (2.0 * PI * h / 24.0).sin_cos();
    let (ds, dc) = (2.0 * PI * d / 7.0).sin_cos();
    [hs, hc, ds, dc]
}

/// Six directional ratios (cooler, warmer, dimmer, brighter, quieter, louder)
/// over a subject's votes. `cold_start` marks a subject with no votes in the
/// context; its ratios are all zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalRatios {
    pub ratios: [f64; 6],
    pub cold_start: bool,
}

impl DirectionalRatios {
    fn from_counts(counts: Option<&[usize; 9]>) -> DirectionalRatios {
        match counts {
            Some(c) => {
                let total: usize = c[..3].iter().sum();
                DirectionalRatios {
                    ratios: DIRECTIONAL.map(|class| c[class.index()] as f64 / total as f64),
                    cold_start: false,
                }
            }
            None => DirectionalRatios {
                ratios: [0.0; 6],
                cold_start: true,
            },
        }
    }
}

/// Lookup tables for Room and History features.
#[derive(Debug, Clone)]
pub struct FeatureContext {
    pub tz: Tz,
    pub room_encoding: RoomEncoding,
    occupants: BTreeMap<String, [usize; 9]>,
    rooms: BTreeMap<String, [usize; 9]>,
    room_clusters: Option<ClusterModel>,
}

impl FeatureContext {
    pub fn new(records: &[FusedRecord], tz: Tz, room_encoding: RoomEncoding) -> Result<FeatureContext> {
        let occupants = class_counts(records, |r| r.vote.occupant_id.as_str())
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let rooms: BTreeMap<String, [usize; 9]> = class_counts(records, |r| r.zone_id.as_str())
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let room_clusters = match room_encoding {
            RoomEncoding::Ratios => None,
            RoomEncoding::ClusterLabel { k, seed, restarts } => {
                let profiles: Vec<TendencyVector> = crate::tendency::room_profiles(records);
                let k = k.min(profiles.len());
                Some(kmeans_fit(&profiles, ClusterSpace::Joint, k, seed, restarts)?)
            }
        };
        Ok(FeatureContext {
            tz,
            room_encoding,
            occupants,
            rooms,
            room_clusters,
        })
    }

    /// Context with only the time zone; every occupant and room is unseen.
    pub fn empty(tz: Tz) -> FeatureContext {
        FeatureContext {
            tz,
            room_encoding: RoomEncoding::Ratios,
            occupants: BTreeMap::new(),
            rooms: BTreeMap::new(),
            room_clusters: None,
        }
    }

    pub fn knows_occupant(&self, occupant_id: &str) -> bool {
        self.occupants.contains_key(occupant_id)
    }

    pub(crate) fn room_values(&self, zone_id: &str) -> Vec<f64> {
        match &self.room_clusters {
            None => encode_room(zone_id, self).ratios.to_vec(),
            Some(model) => match self.rooms.get(zone_id) {
                Some(counts) => {
                    let total: usize = counts[..3].iter().sum();
                    let v = TendencyVector {
                        subject_id: zone_id.to_string(),
                        kind: SubjectKind::Room,
                        ratios: counts.map(|c| c as f64 / total as f64),
                        vote_count: total,
                    };
                    vec![model.assign(&v) as f64]
                }
                None => vec![-1.0],
            },
        }
    }
}

pub fn encode_history(occupant_id: &str, ctx: &FeatureContext) -> DirectionalRatios {
    DirectionalRatios::from_counts(ctx.occupants.get(occupant_id))
}

pub fn encode_room(zone_id: &str, ctx: &FeatureContext) -> DirectionalRatios {
    DirectionalRatios::from_counts(ctx.rooms.get(zone_id))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub vote_id: String,
    pub occupant_id: String,
    pub zone_id: String,
    pub timestamp: Timestamp,
    pub target_dimension: Dimension,
    pub label: Preference,
    pub values: Vec<f64>,
}

/// Rows dropped because a required input was absent. A row missing several
/// inputs is counted under each of them, and once in `excluded`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionStats {
    pub input: usize,
    pub kept: usize,
    pub excluded: usize,
    pub missing_env: usize,
    pub missing_near_body: usize,
    pub missing_heart_rate: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub spec_name: String,
    pub dimension: Dimension,
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
    pub exclusions: ExclusionStats,
}

impl FeatureMatrix {
    pub fn class_labels(&self) -> Vec<String> {
        self.dimension.class_labels().map(String::from).to_vec()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.label.index()).collect()
    }

    pub fn values(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }

    pub fn training_set(&self) -> TrainingSet {
        TrainingSet {
            feature_names: self.feature_names.clone(),
            class_labels: self.class_labels(),
            x: self.values(),
            y: self.labels(),
        }
    }

    /// Rows for which `keep` holds, same columns.
    pub fn filter(&self, keep: impl Fn(&FeatureRow) -> bool) -> FeatureMatrix {
        FeatureMatrix {
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
            ..self.clone()
        }
    }
}

/// Builds rows for `dimension` under `spec`. Fails with
/// [`Error::EmptyMatrix`] when every record is excluded.
pub fn build_matrix(
    records: &[FusedRecord],
    spec: &FeatureSetSpec,
    dimension: Dimension,
    ctx: &FeatureContext,
) -> Result<FeatureMatrix> {
    let mut stats = ExclusionStats {
        input: records.len(),
        ..Default::default()
    };
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        let missing_env = spec.has(FeatureGroup::Env) && r.env.is_none();
        let missing_nb = spec.has(FeatureGroup::NearBody) && r.near_body_temperature.is_none();
        let missing_hr = spec.has(FeatureGroup::HeartRate) && r.heart_rate.is_none();
        stats.missing_env += missing_env as usize;
        stats.missing_near_body += missing_nb as usize;
        stats.missing_heart_rate += missing_hr as usize;
        if missing_env || missing_nb || missing_hr {
            stats.excluded += 1;
            continue;
        }
        let mut values = Vec::with_capacity(24);
        for g in &spec.include {
            match g {
                FeatureGroup::Time => values.extend(encode_time_cyclical(&r.vote.timestamp, ctx.tz)),
                FeatureGroup::Env => {
                    let e = r.env.as_ref().expect("checked above");
                    values.extend([e.temperature, e.humidity, e.noise_level, e.illuminance]);
                }
                FeatureGroup::NearBody => values.push(r.near_body_temperature.expect("checked above").value),
                FeatureGroup::HeartRate => values.push(r.heart_rate.expect("checked above").value),
                FeatureGroup::Room => values.extend(ctx.room_values(&r.zone_id)),
                FeatureGroup::History => values.extend(encode_history(&r.vote.occupant_id, ctx).ratios),
            }
        }
        rows.push(FeatureRow {
            vote_id: r.vote.vote_id.clone(),
            occupant_id: r.vote.occupant_id.clone(),
            zone_id: r.zone_id.clone(),
            timestamp: r.vote.timestamp,
            target_dimension: dimension,
            label: r.preference(dimension),
            values,
        });
    }
    stats.kept = rows.len();
    if rows.is_empty() {
        return Err(Error::EmptyMatrix {
            spec: spec.name.clone(),
            dimension: dimension.to_string(),
        });
    }
    Ok(FeatureMatrix {
        spec_name: spec.name.clone(),
        dimension,
        feature_names: spec.feature_names(&ctx.room_encoding),
        rows,
        exclusions: stats,
    })
}

const MATRIX_META: [&str; 6] = ["vote_id", "occupant_id", "zone_id", "timestamp", "split", "label"];

/// Writes a matrix as CSV; `split[i]` tags row `i` (e.g. "train" / "test").
pub fn write_matrix(path: &Path, matrix: &FeatureMatrix, split: &[&str]) -> Result<()> {
    assert_eq!(split.len(), matrix.rows.len());
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<&str> = MATRIX_META
        .iter()
        .copied()
        .chain(matrix.feature_names.iter().map(String::as_str))
        .collect();
    w.write_record(&header)?;
    for (row, tag) in matrix.rows.iter().zip(split) {
        let mut rec = vec![
            row.vote_id.clone(),
            row.occupant_id.clone(),
            row.zone_id.clone(),
            format_timestamp(&row.timestamp),
            tag.to_string(),
            row.label.label(matrix.dimension).to_string(),
        ];
        rec.extend(row.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a matrix written by [`write_matrix`]; returns it with the split tags.
pub fn read_matrix(path: &Path, spec_name: &str, dimension: Dimension) -> Result<(FeatureMatrix, Vec<String>)> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let bad = |reason: String| Error::MalformedFile {
        path: path.to_path_buf(),
        reason,
    };
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header.len() < MATRIX_META.len() || header[..MATRIX_META.len()] != MATRIX_META {
        return Err(bad("unexpected header".into()));
    }
    let feature_names = header[MATRIX_META.len()..].to_vec();
    let mut rows = Vec::new();
    let mut splits = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let values = rec
            .iter()
            .skip(MATRIX_META.len())
            .map(|v| v.parse::<f64>().map_err(|e| bad(format!("{v:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(FeatureRow {
            vote_id: rec[0].to_string(),
            occupant_id: rec[1].to_string(),
            zone_id: rec[2].to_string(),
            timestamp: parse_timestamp(&rec[3]).map_err(bad)?,
            target_dimension: dimension,
            label: Preference::parse(dimension, &rec[5]).map_err(bad)?,
            values,
        });
        splits.push(rec[4].to_string());
    }
    let n = rows.len();
    Ok((
        FeatureMatrix {
            spec_name: spec_name.to_string(),
            dimension,
            feature_names,
            rows,
            exclusions: ExclusionStats {
                input: n,
                kept: n,
                ..Default::default()
            },
        },
        splits,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{EnvSnapshot, Measured};
    use crate::ingest::FeedbackVote;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn local(y: i32, mo: u32, d: u32, h: u32, mi: u32, s: u32) -> Timestamp {
        DEFAULT_TIMEZONE
            .with_ymd_and_hms(y, mo, d, h, mi, s)
            .unwrap()
            .with_timezone(&Utc)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn cyclical_anchor_points() {
        // 2024-03-04 is a Monday
        let e = encode_time_cyclical(&local(2024, 3, 4, 0, 0, 0), DEFAULT_TIMEZONE);
        assert!(close(e[0], 0.0) && close(e[1], 1.0) && close(e[2], 0.0) && close(e[3], 1.0), "{e:?}");
        let e = encode_time_cyclical(&local(2024, 3, 5, 6, 0, 0), DEFAULT_TIMEZONE);
        assert!(close(e[0], 1.0) && close(e[1], 0.0));
        let e = encode_time_cyclical(&local(2024, 3, 5, 12, 0, 0), DEFAULT_TIMEZONE);
        assert!(close(e[0], 0.0) && close(e[1], -1.0));
    }

    #[test]
    fn timezone_shifts_the_hour() {
        // 04:00Z is noon in Singapore
        let t = Utc.with_ymd_and_hms(2024, 3, 4, 4, 0, 0).unwrap();
        let sg = encode_time_cyclical(&t, DEFAULT_TIMEZONE);
        assert!(close(sg[1], -1.0));
        let utc = encode_time_cyclical(&t, chrono_tz::UTC);
        assert!(close(utc[0], (PI / 3.0).sin()));
    }

    #[test]
    fn midnight_is_continuous() {
        let before = encode_time_cyclical(&local(2024, 3, 10, 23, 59, 59), DEFAULT_TIMEZONE);
        let after = encode_time_cyclical(&local(2024, 3, 11, 0, 0, 1), DEFAULT_TIMEZONE);
        let d: f64 = before.iter().zip(&after).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(d < 0.01, "{d}");
    }

    fn rec(occ: &str, zone: &str, i: i64, thermal: Preference, noise: Preference) -> FusedRecord {
        FusedRecord {
            vote: FeedbackVote {
                vote_id: format!("{occ}{i}"),
                occupant_id: occ.into(),
                timestamp: Utc.timestamp_opt(1_709_500_000 + i * 3600, 0).unwrap(),
                thermal,
                light: Preference::NoChange,
                noise,
                zone_id: None,
            },
            zone_id: zone.into(),
            env: Some(EnvSnapshot {
                sensor_id: "s".into(),
                temperature: 25.0,
                humidity: 60.0,
                noise_level: 45.0,
                illuminance: 300.0,
                reading_age: 0,
            }),
            near_body_temperature: Some(Measured { value: 31.0, sample_age: 0 }),
            heart_rate: None,
        }
    }

    #[test]
    fn history_ratios() {
        use Preference::*;
        let recs: Vec<FusedRecord> = (0..10)
            .map(|i| rec("a", "z", i, if i < 3 { Less } else { NoChange }, NoChange))
            .collect();
        let ctx = FeatureContext::new(&recs, DEFAULT_TIMEZONE, RoomEncoding::Ratios).unwrap();
        let h = encode_history("a", &ctx);
        assert_eq!(h.ratios[0], 0.3);
        assert!(!h.cold_start);
        assert_eq!(encode_history("nobody", &ctx), DirectionalRatios { ratios: [0.0; 6], cold_start: true });

        let quiet = vec![rec("b", "q", 0, NoChange, Less)];
        let ctx = FeatureContext::new(&quiet, DEFAULT_TIMEZONE, RoomEncoding::Ratios).unwrap();
        assert_eq!(encode_room("q", &ctx).ratios[4], 1.0);
        assert_eq!(encode_history("b", &ctx).ratios, [0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn room_ratio_forty_percent() {
        use Preference::*;
        let recs: Vec<FusedRecord> = (0..5)
            .map(|i| rec(&format!("o{i}"), "r", i, if i < 2 { Less } else { More }, NoChange))
            .collect();
        let ctx = FeatureContext::new(&recs, DEFAULT_TIMEZONE, RoomEncoding::Ratios).unwrap();
        assert_eq!(encode_room("r", &ctx).ratios[0], 0.4);
        assert_eq!(encode_room("r", &ctx).ratios[1], 0.6);
    }

    #[test]
    fn exclusions_are_counted() {
        use FeatureGroup::*;
        let mut recs = vec![rec("a", "z", 0, Preference::Less, Preference::NoChange); 3];
        recs[1].env = None;
        recs[2].env = None;
        recs[2].near_body_temperature = None;
        let ctx = FeatureContext::empty(DEFAULT_TIMEZONE);

        let time_only = FeatureSetSpec::new("t", [Time]);
        let m = build_matrix(&recs, &time_only, Dimension::Thermal, &ctx).unwrap();
        assert_eq!(m.rows.len(), 3);
        assert_eq!(m.feature_names, ["hour_sin", "hour_cos", "dow_sin", "dow_cos"]);

        let spec = FeatureSetSpec::new("te", [Env, NearBody]);
        let m = build_matrix(&recs, &spec, Dimension::Thermal, &ctx).unwrap();
        assert_eq!(m.rows.len(), 1);
        assert_eq!(m.exclusions.missing_env, 2);
        assert_eq!(m.exclusions.missing_near_body, 1);
        assert_eq!(m.exclusions.kept + m.exclusions.excluded, m.exclusions.input);
        assert_eq!(m.rows[0].values.len(), m.feature_names.len());

        let hr = FeatureSetSpec::new("hr", [HeartRate]);
        assert!(matches!(build_matrix(&recs, &hr, Dimension::Thermal, &ctx), Err(Error::EmptyMatrix { .. })));
    }

    #[test]
    fn default_feature_sets() {
        use FeatureGroup::*;
        let fs = FeatureSetSpec::defaults();
        assert_eq!(fs.len(), 6);
        assert!(fs.iter().all(|s| s.has(Time)));
        let fs4 = FeatureSetSpec::default_named("fs4").unwrap();
        assert_eq!(fs4.include, [Time, NearBody, HeartRate, Room, History].into_iter().collect());
        assert!(!fs4.has(Env));
        let fs1 = &fs[0];
        assert_eq!(fs1.include, [Time, Env].into_iter().collect());
        assert_eq!(FeatureSetSpec::new("x", [Env]).include.len(), 2);
        assert_eq!(fs[5].feature_names(&RoomEncoding::Ratios).len(), 4 + 4 + 1 + 1 + 6 + 6);
    }

    #[test]
    fn room_cluster_encoding() {
        use Preference::*;
        let mut recs = Vec::new();
        for i in 0..6 {
            recs.push(rec("a", &format!("z{i}"), i, if i < 3 { Less } else { More }, NoChange));
        }
        let enc = RoomEncoding::ClusterLabel { k: 2, seed: 1, restarts: 4 };
        let ctx = FeatureContext::new(&recs, DEFAULT_TIMEZONE, enc).unwrap();
        let spec = FeatureSetSpec::new("r", [FeatureGroup::Room]);
        let m = build_matrix(&recs, &spec, Dimension::Thermal, &ctx).unwrap();
        assert_eq!(m.feature_names.last().unwrap(), "room_cluster");
        let c: Vec<f64> = m.rows.iter().map(|r| *r.values.last().unwrap()).collect();
        assert_eq!(c[0], c[1]);
        assert_ne!(c[0], c[5]);
        assert_eq!(ctx.room_values("elsewhere"), vec![-1.0]);
    }

    #[test]
    fn matrix_csv_round_trip() {
        let recs: Vec<FusedRecord> = (0..4).map(|i| rec("a", "z", i, Preference::More, Preference::NoChange)).collect();
        let ctx = FeatureContext::new(&recs, DEFAULT_TIMEZONE, RoomEncoding::Ratios).unwrap();
        let spec = FeatureSetSpec::default_named("fs5").unwrap();
        let m = build_matrix(&recs, &spec, Dimension::Thermal, &ctx).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_matrix(&p, &m, &["train", "train", "test", "test"]).unwrap();
        let (back, splits) = read_matrix(&p, "fs5", Dimension::Thermal).unwrap();
        assert_eq!(back.rows, m.rows);
        assert_eq!(back.feature_names, m.feature_names);
        assert_eq!(splits, ["train", "train", "test", "test"]);
    }

    proptest! {
        #[test]
        fn time_encodings_lie_on_unit_circles(secs in 0i64..2_000_000_000) {
            let t = Utc.timestamp_opt(secs, 0).unwrap();
            let e = encode_time_cyclical(&t, DEFAULT_TIMEZONE);
            prop_assert!((e[0] * e[0] + e[1] * e[1] - 1.0).abs() < 1e-9);
            prop_assert!((e[2] * e[2] + e[3] * e[3] - 1.0).abs() < 1e-9);
        }
    }
}

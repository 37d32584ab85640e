use std::path::Path;

use chrono::{DateTime, Datelike, Duration, FixedOffset, TimeZone, Timelike, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::models::{fit_on, EvalConfig};
use crate::error::{Error, Result};
use crate::features::{build_matrix, encode_time_cyclical, FeatureContext, FeatureGroup, FeatureSetSpec};
use crate::fusion::FusedRecord;
use crate::preference::Dimension;

const MINUTES_PER_WEEK: f64 = 7.0 * 24.0 * 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastConfig {
    pub grid_minutes: u32,
    /// Votes closer than this (in time of week) count as support.
    pub support_window_minutes: u32,
    /// Add the zone's Room ratios to the Time features.
    pub include_room: bool,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            grid_minutes: 30,
            support_window_minutes: 60,
            include_room: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub timestamp: DateTime<FixedOffset>,
    pub probabilities: Vec<f64>,
    pub support: usize,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneForecast {
    pub zone_id: String,
    pub dimension: Dimension,
    pub class_labels: Vec<String>,
    pub n_votes: usize,
    pub points: Vec<ForecastPoint>,
}

/// Local minutes since Monday 00:00.
pub fn minute_of_week(ts: &DateTime<Utc>, tz: Tz) -> f64 {
    let l = ts.with_timezone(&tz);
    l.weekday().num_days_from_monday() as f64 * 1440.0
        + l.hour() as f64 * 60.0
        + l.minute() as f64
        + l.second() as f64 / 60.0
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % MINUTES_PER_WEEK;
    d.min(MINUTES_PER_WEEK - d)
}

/// The canonical forecast week, Monday to Sunday, starting 2024-01-01 local.
pub fn week_grid(tz: Tz, step_minutes: u32) -> Vec<DateTime<Tz>> {
    let start = tz
        .with_ymd_and_hms(2024, 1, 1, 0, 0, 0)
        .earliest()
        .expect("local midnight exists");
    (0..(MINUTES_PER_WEEK as u32))
        .step_by(step_minutes as usize)
        .map(|m| start + Duration::minutes(m as i64))
        .collect()
}

/// Class distribution over a regular weekly grid for one zone, from a forest
/// trained on all of the zone's votes with Time (and optionally Room)
/// features. Each point carries its vote support; zero support is flagged.
pub fn zone_forecast(
    records: &[FusedRecord],
    zone_id: &str,
    dimension: Dimension,
    cfg: &EvalConfig,
    fc: &ForecastConfig,
) -> Result<ZoneForecast> {
    if fc.grid_minutes == 0 || fc.grid_minutes as f64 > MINUTES_PER_WEEK {
        return Err(Error::InvalidConfig("forecast grid step must be between 1 minute and a week".into()));
    }
    let zone: Vec<FusedRecord> = records.iter().filter(|r| r.zone_id == zone_id).cloned().collect();
    if zone.is_empty() {
        return Err(Error::EmptyZone(zone_id.to_string()));
    }
    let groups = if fc.include_room {
        vec![FeatureGroup::Time, FeatureGroup::Room]
    } else {
        vec![FeatureGroup::Time]
    };
    let spec = FeatureSetSpec::new(format!("forecast_{zone_id}"), groups);
    let ctx = FeatureContext::new(&zone, cfg.tz, cfg.room_encoding)?;
    let matrix = build_matrix(&zone, &spec, dimension, &ctx)?;
    let model = fit_on(&matrix, &cfg.forest)?;

    let vote_minutes: Vec<f64> = zone.iter().map(|r| minute_of_week(&r.vote.timestamp, cfg.tz)).collect();
    let room = fc.include_room.then(|| ctx.room_values(zone_id));
    let window = fc.support_window_minutes as f64;
    let points = week_grid(cfg.tz, fc.grid_minutes)
        .into_iter()
        .map(|ts| {
            let utc = ts.with_timezone(&Utc);
            let mut row = encode_time_cyclical(&utc, cfg.tz).to_vec();
            if let Some(r) = &room {
                row.extend(r);
            }
            let m = minute_of_week(&utc, cfg.tz);
            let support = vote_minutes.iter().filter(|&&v| circular_distance(v, m) < window).count();
            ForecastPoint {
                timestamp: ts.fixed_offset(),
                probabilities: model.predict_proba_row(&row),
                support,
                low_confidence: support == 0,
            }
        })
        .collect();
    Ok(ZoneForecast {
        zone_id: zone_id.to_string(),
        dimension,
        class_labels: model.class_labels.clone(),
        n_votes: zone.len(),
        points,
    })
}

pub fn write_forecast_csv(path: &Path, f: &ZoneForecast) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["timestamp".to_string()];
    header.extend(f.class_labels.iter().cloned());
    header.extend(["support".into(), "low_confidence".into()]);
    w.write_record(&header)?;
    for p in &f.points {
        let mut rec = vec![p.timestamp.to_rfc3339()];
        rec.extend(p.probabilities.iter().map(|v| v.to_string()));
        rec.push(p.support.to_string());
        rec.push(p.low_confidence.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

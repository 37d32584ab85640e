//! Synthetic buildings and occupants with known ground truth.
//!
//! Every vote follows an axis-aligned threshold rule on the environment the
//! fusion step will attach to it, shifted by the occupant's archetype biases
//! and optionally flipped at random. The generated files use the canonical
//! ingest formats.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, TimeZone, Timelike, Utc, Weekday};
use chrono_tz::Tz;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::parse_timezone;
use crate::fusion::{fuse_dataset, FusionConfig};
use crate::ingest::{
    write_localization, write_sensor_readings, write_votes, write_wearable, FeedbackVote, LocalizationFix, Position,
    SensorReading, Timestamp, WearableSample, Zone, ZoneMap,
};
use crate::preference::{Dimension, Preference};

pub const THERMAL_COOLER_ABOVE: f64 = 26.0;
pub const THERMAL_WARMER_BELOW: f64 = 22.0;
pub const LIGHT_DIMMER_ABOVE: f64 = 700.0;
pub const LIGHT_BRIGHTER_BELOW: f64 = 300.0;
pub const NOISE_QUIETER_ABOVE: f64 = 55.0;
pub const NOISE_LOUDER_BELOW: f64 = 35.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub name: String,
    /// Shifts both thermal thresholds, in °C.
    pub thermal_bias: f64,
    /// Shifts both illuminance thresholds, in lux.
    pub light_bias: f64,
    /// Shifts both noise thresholds, in dB.
    pub noise_bias: f64,
    /// Probability of answering a uniformly random other class.
    pub response_noise: f64,
}

impl Archetype {
    pub fn neutral() -> Archetype {
        Archetype {
            name: "neutral".into(),
            thermal_bias: 0.0,
            light_bias: 0.0,
            noise_bias: 0.0,
            response_noise: 0.0,
        }
    }

    /// Three well-separated archetypes.
    pub fn defaults() -> Vec<Archetype> {
        vec![
            Archetype {
                name: "runs_warm".into(),
                thermal_bias: -3.0,
                light_bias: -200.0,
                noise_bias: -6.0,
                response_noise: 0.0,
            },
            Archetype::neutral(),
            Archetype {
                name: "runs_cold".into(),
                thermal_bias: 3.0,
                light_bias: 200.0,
                noise_bias: 6.0,
                response_noise: 0.0,
            },
        ]
    }

    /// The threshold rule for all three dimensions.
    pub fn rule(&self, temperature: f64, illuminance: f64, noise_level: f64, emit_louder: bool) -> [Preference; 3] {
        let three = |v: f64, above: f64, below: f64| {
            if v > above {
                Preference::Less
            } else if v < below {
                Preference::More
            } else {
                Preference::NoChange
            }
        };
        let thermal = three(
            temperature,
            THERMAL_COOLER_ABOVE + self.thermal_bias,
            THERMAL_WARMER_BELOW + self.thermal_bias,
        );
        let light = three(
            illuminance,
            LIGHT_DIMMER_ABOVE + self.light_bias,
            LIGHT_BRIGHTER_BELOW + self.light_bias,
        );
        let louder_below = if emit_louder {
            NOISE_LOUDER_BELOW + self.noise_bias
        } else {
            f64::NEG_INFINITY
        };
        let noise = three(noise_level, NOISE_QUIETER_ABOVE + self.noise_bias, louder_below);
        [thermal, light, noise]
    }
}

/// Per-zone environment schedules. Temperature is a daily sinusoid peaking
/// at `temp_peak_hour`; zone `i` of `n` is offset by
/// `(i - (n-1)/2) * temp_zone_spread`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Environment {
    pub temp_base: f64,
    pub temp_amplitude: f64,
    pub temp_peak_hour: f64,
    pub temp_zone_spread: f64,
    pub temp_noise_sd: f64,
    pub humidity_base: f64,
    pub humidity_noise_sd: f64,
    /// Illuminance is `lux_base + lux_peak * max(0, sin(pi (h - 7) / 12))`.
    pub lux_base: f64,
    pub lux_peak: f64,
    pub lux_noise_sd: f64,
    pub noise_base: f64,
    /// Added on weekdays between 09:00 and 18:00.
    pub noise_office_boost: f64,
    pub noise_burst_probability: f64,
    pub noise_burst_db: f64,
    pub noise_sd: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            temp_base: 24.0,
            temp_amplitude: 4.0,
            temp_peak_hour: 15.0,
            temp_zone_spread: 1.0,
            temp_noise_sd: 0.3,
            humidity_base: 60.0,
            humidity_noise_sd: 2.0,
            lux_base: 200.0,
            lux_peak: 650.0,
            lux_noise_sd: 30.0,
            noise_base: 42.0,
            noise_office_boost: 8.0,
            noise_burst_probability: 0.1,
            noise_burst_db: 15.0,
            noise_sd: 2.0,
        }
    }
}

impl Environment {
    /// A fixed temperature with no noise, everything else default.
    pub fn constant_temperature(t: f64) -> Environment {
        Environment {
            temp_base: t,
            temp_amplitude: 0.0,
            temp_zone_spread: 0.0,
            temp_noise_sd: 0.0,
            ..Default::default()
        }
    }

    fn mean_temperature(&self, zone: usize, n_zones: usize, hour: f64) -> f64 {
        let offset = (zone as f64 - (n_zones as f64 - 1.0) / 2.0) * self.temp_zone_spread;
        self.temp_base + offset + self.temp_amplitude * (2.0 * PI * (hour - self.temp_peak_hour + 6.0) / 24.0).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_occupants: usize,
    pub n_zones: usize,
    pub days: u32,
    pub start_date: NaiveDate,
    pub timezone: String,
    /// Inclusive range of votes per occupant per day.
    pub votes_per_day: (u32, u32),
    /// Votes fall in `[start, end)` local hours.
    pub vote_hours: (u32, u32),
    pub archetypes: Vec<Archetype>,
    /// Relative share of each archetype; empty means equal shares.
    pub archetype_weights: Vec<f64>,
    /// Chance that a vote is cast away from the occupant's home zone.
    pub move_probability: f64,
    pub sensor_interval_minutes: u32,
    /// Chance that the wearable sample for a vote is missing.
    pub wearable_dropout: f64,
    pub emit_louder: bool,
    pub environment: Environment,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_occupants: 30,
            n_zones: 4,
            days: 14,
            start_date: NaiveDate::from_ymd_opt(2024, 3, 4).expect("valid date"),
            timezone: "Asia/Singapore".into(),
            votes_per_day: (5, 15),
            vote_hours: (8, 20),
            archetypes: Archetype::defaults(),
            archetype_weights: Vec::new(),
            move_probability: 0.25,
            sensor_interval_minutes: 5,
            wearable_dropout: 0.0,
            emit_louder: false,
            environment: Environment::default(),
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn with_response_noise(mut self, p: f64) -> SimConfig {
        self.archetypes.iter_mut().for_each(|a| a.response_noise = p);
        self
    }

    pub fn validate(&self) -> Result<Tz> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_occupants == 0 || self.n_zones == 0 || self.days == 0 {
            return bad("n_occupants, n_zones and days must be positive".into());
        }
        let (lo, hi) = self.votes_per_day;
        if lo < 1 || hi > 50 || lo > hi {
            return bad(format!("votes_per_day ({lo}, {hi}) must satisfy 1 <= lo <= hi <= 50"));
        }
        let (h0, h1) = self.vote_hours;
        if h0 >= h1 || h1 > 24 {
            return bad(format!("vote_hours ({h0}, {h1}) must satisfy start < end <= 24"));
        }
        if (hi as u64) > (h1 - h0) as u64 * 3600 {
            return bad("more votes per day than seconds in the voting window".into());
        }
        if self.archetypes.is_empty() {
            return bad("at least one archetype is required".into());
        }
        for a in &self.archetypes {
            if !(0.0..0.5).contains(&a.response_noise) {
                return bad(format!("archetype {:?}: response_noise must be in [0, 0.5)", a.name));
            }
        }
        if !self.archetype_weights.is_empty() {
            if self.archetype_weights.len() != self.archetypes.len() {
                return bad("archetype_weights must have one entry per archetype".into());
            }
            if self.archetype_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
                || self.archetype_weights.iter().sum::<f64>() <= 0.0
            {
                return bad("archetype_weights must be non-negative with a positive sum".into());
            }
        }
        for (name, p) in [("move_probability", self.move_probability), ("wearable_dropout", self.wearable_dropout)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1]"));
            }
        }
        if self.sensor_interval_minutes == 0 {
            return bad("sensor_interval_minutes must be positive".into());
        }
        let e = &self.environment;
        for sd in [e.temp_noise_sd, e.humidity_noise_sd, e.lux_noise_sd, e.noise_sd] {
            if !(sd.is_finite() && sd >= 0.0) {
                return bad("noise standard deviations must be non-negative".into());
            }
        }
        if !(0.0..=1.0).contains(&e.noise_burst_probability) {
            return bad("noise_burst_probability must be in [0, 1]".into());
        }
        parse_timezone(&self.timezone)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupantTruth {
    pub occupant_id: String,
    pub archetype: String,
    pub archetype_index: usize,
    pub home_zone: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub above: f64,
    pub below: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub occupants: Vec<OccupantTruth>,
    pub archetypes: Vec<Archetype>,
    /// Unbiased thresholds per dimension; an archetype adds its bias to both.
    pub rules: BTreeMap<String, Thresholds>,
    pub emit_louder: bool,
}

impl GroundTruth {
    /// Archetype index per occupant, in occupant id order.
    pub fn labels(&self) -> Vec<usize> {
        let mut occ: Vec<&OccupantTruth> = self.occupants.iter().collect();
        occ.sort_by(|a, b| a.occupant_id.cmp(&b.occupant_id));
        occ.iter().map(|o| o.archetype_index).collect()
    }

    pub fn archetype_of(&self, occupant_id: &str) -> Option<&Archetype> {
        self.occupants
            .iter()
            .find(|o| o.occupant_id == occupant_id)
            .map(|o| &self.archetypes[o.archetype_index])
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub votes: Vec<FeedbackVote>,
    pub readings: Vec<SensorReading>,
    pub fixes: Vec<LocalizationFix>,
    pub wearables: Vec<WearableSample>,
    pub zones: ZoneMap,
    pub truth: GroundTruth,
}

fn zone_rect(i: usize) -> (f64, f64, f64, f64) {
    let x0 = 12.0 * i as f64;
    (x0, 0.0, x0 + 10.0, 10.0)
}

fn zone_id(i: usize) -> String {
    format!("z{:02}", i + 1)
}

/// Largest-remainder apportionment of `n` items over `weights`.
fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let missing = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(missing) {
        counts[i] += 1;
    }
    counts
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("validated standard deviation")
}

pub fn simulate(cfg: &SimConfig) -> Result<SimOutput> {
    let tz = cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let env = &cfg.environment;

    let zones = ZoneMap::new(
        (0..cfg.n_zones)
            .map(|i| {
                let (x0, y0, x1, y1) = zone_rect(i);
                Zone {
                    zone_id: zone_id(i),
                    floor: 1,
                    polygon: vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)],
                    label: format!("Zone {}", i + 1),
                }
            })
            .collect(),
    )?;

    let start = tz
        .from_local_datetime(&cfg.start_date.and_hms_opt(0, 0, 0).expect("midnight"))
        .earliest()
        .ok_or_else(|| Error::InvalidConfig("start date midnight does not exist in the time zone".into()))?
        .with_timezone(&Utc);
    let end = start + Duration::days(cfg.days as i64);
    let local_hour = |t: &Timestamp| {
        let l = t.with_timezone(&tz);
        l.hour() as f64 + l.minute() as f64 / 60.0 + l.second() as f64 / 3600.0
    };

    let mut readings = Vec::new();
    let step = Duration::minutes(cfg.sensor_interval_minutes as i64);
    for z in 0..cfg.n_zones {
        let mut t = start;
        while t < end {
            let h = local_hour(&t);
            let l = t.with_timezone(&tz);
            let weekday = !matches!(l.weekday(), Weekday::Sat | Weekday::Sun);
            let temperature = (env.mean_temperature(z, cfg.n_zones, h) + normal(env.temp_noise_sd).sample(&mut rng))
                .clamp(-10.0, 60.0);
            let humidity = (env.humidity_base
                + 8.0 * (2.0 * PI * h / 24.0).cos()
                + normal(env.humidity_noise_sd).sample(&mut rng))
            .clamp(1.0, 99.0);
            let daylight = (PI * (h - 7.0) / 12.0).sin().max(0.0);
            let illuminance = (env.lux_base + env.lux_peak * daylight + normal(env.lux_noise_sd).sample(&mut rng)).max(0.0);
            let mut noise_level = env.noise_base + normal(env.noise_sd).sample(&mut rng);
            if weekday && (9.0..18.0).contains(&h) {
                noise_level += env.noise_office_boost;
            }
            if rng.gen_bool(env.noise_burst_probability) {
                noise_level += env.noise_burst_db;
            }
            readings.push(SensorReading {
                sensor_id: format!("s{:02}", z + 1),
                zone_id: zone_id(z),
                timestamp: t,
                temperature,
                humidity,
                noise_level: noise_level.clamp(0.0, 140.0),
                illuminance,
            });
            t += step;
        }
    }

    let weights = if cfg.archetype_weights.is_empty() {
        vec![1.0; cfg.archetypes.len()]
    } else {
        cfg.archetype_weights.clone()
    };
    let counts = apportion(cfg.n_occupants, &weights);
    let assignment: Vec<usize> = counts.iter().enumerate().flat_map(|(a, &c)| std::iter::repeat_n(a, c)).collect();
    let occupants: Vec<OccupantTruth> = (0..cfg.n_occupants)
        .map(|i| OccupantTruth {
            occupant_id: format!("o{:03}", i + 1),
            archetype: cfg.archetypes[assignment[i]].name.clone(),
            archetype_index: assignment[i],
            home_zone: zone_id(i % cfg.n_zones),
        })
        .collect();

    let mut votes = Vec::new();
    let mut fixes = Vec::new();
    let mut wearables = Vec::new();
    let (h0, h1) = cfg.vote_hours;
    for (i, occ) in occupants.iter().enumerate() {
        let home = i % cfg.n_zones;
        let mut k = 0;
        for day in 0..cfg.days {
            let n = rng.gen_range(cfg.votes_per_day.0..=cfg.votes_per_day.1) as usize;
            let date = cfg.start_date + Duration::days(day as i64);
            let day_start = tz
                .from_local_datetime(&date.and_hms_opt(h0, 0, 0).expect("valid hour"))
                .earliest()
                .ok_or_else(|| Error::InvalidConfig(format!("{date} {h0}:00 does not exist in the time zone")))?
                .with_timezone(&Utc);
            let mut offsets = BTreeSet::new();
            while offsets.len() < n {
                offsets.insert(rng.gen_range(0..(h1 - h0) as i64 * 3600));
            }
            for off in offsets {
                k += 1;
                let t = day_start + Duration::seconds(off);
                let z = if cfg.n_zones > 1 && rng.gen_bool(cfg.move_probability) {
                    let others: Vec<usize> = (0..cfg.n_zones).filter(|&z| z != home).collect();
                    *others.choose(&mut rng).expect("at least one other zone")
                } else {
                    home
                };
                let (x0, y0, x1, y1) = zone_rect(z);
                let (x, y) = (rng.gen_range(x0 + 0.5..x1 - 0.5), rng.gen_range(y0 + 0.5..y1 - 0.5));
                fixes.push(LocalizationFix {
                    occupant_id: occ.occupant_id.clone(),
                    timestamp: t - Duration::seconds(rng.gen_range(0..=60)),
                    position: Position::Coordinates {
                        x: (x * 100.0).round() / 100.0,
                        y: (y * 100.0).round() / 100.0,
                        floor: 1,
                    },
                });
                let wt = t - Duration::seconds(rng.gen_range(0..=120));
                let nbt = 20.0 + 0.45 * env.mean_temperature(z, cfg.n_zones, local_hour(&wt)) + normal(0.3).sample(&mut rng);
                let hr = 70.0 + normal(6.0).sample(&mut rng);
                if !rng.gen_bool(cfg.wearable_dropout) {
                    wearables.push(WearableSample {
                        occupant_id: occ.occupant_id.clone(),
                        timestamp: wt,
                        near_body_temperature: Some(nbt.clamp(10.0, 45.0)),
                        heart_rate: Some(hr.clamp(40.0, 180.0)),
                    });
                }
                votes.push(FeedbackVote {
                    vote_id: format!("{}-{k:04}", occ.occupant_id),
                    occupant_id: occ.occupant_id.clone(),
                    timestamp: t,
                    thermal: Preference::NoChange,
                    light: Preference::NoChange,
                    noise: Preference::NoChange,
                    zone_id: None,
                });
            }
        }
    }

    // label each vote from the snapshot fusion will attach to it
    let (fused, _) = fuse_dataset(&votes, &fixes, &readings, &wearables, &zones, &FusionConfig::default());
    let snapshots: BTreeMap<&str, (f64, f64, f64)> = fused
        .iter()
        .filter_map(|r| {
            r.env
                .as_ref()
                .map(|e| (r.vote.vote_id.as_str(), (e.temperature, e.illuminance, e.noise_level)))
        })
        .collect();
    let mut labels = Vec::with_capacity(votes.len());
    for v in &votes {
        let &(t, lux, db) = snapshots
            .get(v.vote_id.as_str())
            .ok_or_else(|| Error::InvalidConfig(format!("vote {} has no sensor reading in range", v.vote_id)))?;
        let occ_idx = v.occupant_id[1..].parse::<usize>().expect("generated id") - 1;
        let arch = &cfg.archetypes[occupants[occ_idx].archetype_index];
        let mut prefs = arch.rule(t, lux, db, cfg.emit_louder);
        for (d, p) in prefs.iter_mut().enumerate() {
            if arch.response_noise > 0.0 && rng.gen_bool(arch.response_noise) {
                let allowed: Vec<Preference> = Preference::ALL
                    .into_iter()
                    .filter(|&c| c != *p && !(d == Dimension::Noise.index() && c == Preference::More && !cfg.emit_louder))
                    .collect();
                *p = *allowed.choose(&mut rng).expect("another class exists");
            }
        }
        labels.push(prefs);
    }
    for (v, [thermal, light, noise]) in votes.iter_mut().zip(labels) {
        v.thermal = thermal;
        v.light = light;
        v.noise = noise;
    }

    let mut rules = BTreeMap::new();
    rules.insert(
        Dimension::Thermal.to_string(),
        Thresholds {
            above: THERMAL_COOLER_ABOVE,
            below: Some(THERMAL_WARMER_BELOW),
        },
    );
    rules.insert(
        Dimension::Light.to_string(),
        Thresholds {
            above: LIGHT_DIMMER_ABOVE,
            below: Some(LIGHT_BRIGHTER_BELOW),
        },
    );
    rules.insert(
        Dimension::Noise.to_string(),
        Thresholds {
            above: NOISE_QUIETER_ABOVE,
            below: cfg.emit_louder.then_some(NOISE_LOUDER_BELOW),
        },
    );
    Ok(SimOutput {
        votes,
        readings,
        fixes,
        wearables,
        zones,
        truth: GroundTruth {
            seed: cfg.seed,
            occupants,
            archetypes: cfg.archetypes.clone(),
            rules,
            emit_louder: cfg.emit_louder,
        },
    })
}

/// Paths of the files written by [`write_simulation`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimPaths {
    pub votes: PathBuf,
    pub sensors: PathBuf,
    pub localization: PathBuf,
    pub wearable: PathBuf,
    pub zones: PathBuf,
    pub ground_truth: PathBuf,
}

impl SimPaths {
    pub fn in_dir(dir: &Path) -> SimPaths {
        SimPaths {
            votes: dir.join("votes.csv"),
            sensors: dir.join("sensors.csv"),
            localization: dir.join("localization.csv"),
            wearable: dir.join("wearable.csv"),
            zones: dir.join("zones.geojson"),
            ground_truth: dir.join("ground_truth.json"),
        }
    }

    pub fn all(&self) -> [&Path; 6] {
        [
            &self.votes,
            &self.sensors,
            &self.localization,
            &self.wearable,
            &self.zones,
            &self.ground_truth,
        ]
    }
}

pub fn write_simulation(dir: &Path, out: &SimOutput) -> Result<SimPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = SimPaths::in_dir(dir);
    write_votes(&paths.votes, &out.votes)?;
    write_sensor_readings(&paths.sensors, &out.readings)?;
    write_localization(&paths.localization, &out.fixes)?;
    write_wearable(&paths.wearable, &out.wearables)?;
    out.zones.write(&paths.zones)?;
    let mut text = serde_json::to_string_pretty(&out.truth)?;
    text.push('\n');
    std::fs::write(&paths.ground_truth, text).map_err(|e| Error::io(&paths.ground_truth, e))?;
    Ok(paths)
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

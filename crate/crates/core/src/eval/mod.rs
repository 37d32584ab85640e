//! Evaluation protocol: chronological per-occupant splits, micro F1,
//! individual and grouped forests, cold-start curves and zone forecasts.

mod coldstart;
mod forecast;
mod metrics;
mod models;
mod split;

use std::path::Path;

use crate::error::{Error, Result};

pub use coldstart::{
    coldstart_curve, write_coldstart_csv, ColdStartConfig, ColdStartCurve, ColdStartHistory, ColdStartPoint,
    ColdStartReport,
};
pub use forecast::{minute_of_week, week_grid, write_forecast_csv, zone_forecast, ForecastConfig, ForecastPoint, ZoneForecast};
pub use metrics::{accuracy, confusion_matrix, f1_micro, score, ClassScore, Scores};
pub use models::{
    eval_grouped, eval_individual, evaluate_grouped, evaluate_individual, fit_on, prepare, ContextScope, EvalConfig,
    EvalReport, ModelKind, OccupantScore, SkippedOccupant, SplitMatrix,
};
pub use split::{temporal_split, train_count, ExcludedOccupant, OccupantSplit, Side, SplitPlan, MIN_VOTES, TRAIN_FRACTION};

pub fn write_eval_report(path: &Path, reports: &[EvalReport]) -> Result<()> {
    let mut text = serde_json::to_string_pretty(reports)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_eval_report(path: &Path) -> Result<Vec<EvalReport>> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureGroup, FeatureSetSpec};
    use crate::forest::ForestConfig;
    use crate::fusion::{EnvSnapshot, FusedRecord, Measured};
    use crate::ingest::FeedbackVote;
    use crate::preference::{Dimension, Preference};
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    /// Thermal label from a threshold rule on temperature; one vote per hour.
    fn occupant(id: &str, zone: &str, n: usize, t0: i64, temp: impl Fn(usize) -> f64, bias: f64) -> Vec<FusedRecord> {
        (0..n)
            .map(|i| {
                let t = temp(i);
                let thermal = if t > 26.0 + bias {
                    Preference::Less
                } else if t < 22.0 + bias {
                    Preference::More
                } else {
                    Preference::NoChange
                };
                FusedRecord {
                    vote: FeedbackVote {
                        vote_id: format!("{id}-{i:04}"),
                        occupant_id: id.into(),
                        timestamp: Utc.timestamp_opt(1_704_070_800 + t0 + i as i64 * 3_600, 0).unwrap(),
                        thermal,
                        light: Preference::NoChange,
                        noise: Preference::NoChange,
                        zone_id: None,
                    },
                    zone_id: zone.into(),
                    env: Some(EnvSnapshot {
                        sensor_id: format!("s-{zone}"),
                        temperature: t,
                        humidity: 60.0,
                        noise_level: 45.0,
                        illuminance: 300.0,
                        reading_age: 0,
                    }),
                    near_body_temperature: Some(Measured { value: 30.0, sample_age: 0 }),
                    heart_rate: Some(Measured { value: 70.0, sample_age: 0 }),
                }
            })
            .collect()
    }

    fn sweep(i: usize) -> f64 {
        18.0 + ((i * 37) % 120) as f64 / 10.0
    }

    fn cfg(trees: usize) -> EvalConfig {
        EvalConfig {
            forest: ForestConfig {
                n_trees: trees,
                master_seed: 7,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn fs1() -> FeatureSetSpec {
        FeatureSetSpec::default_named("fs1").unwrap()
    }

    #[test]
    fn split_counts() {
        assert_eq!(train_count(10), 6);
        assert_eq!(train_count(5), 3);
        assert_eq!(train_count(7), 5);
        let mut recs = occupant("a", "z", 10, 0, sweep, 0.0);
        recs.extend(occupant("b", "z", 5, 0, sweep, 0.0));
        recs.extend(occupant("c", "z", 4, 0, sweep, 0.0));
        let plan = temporal_split(&recs);
        assert_eq!(plan.occupants["a"].train.len(), 6);
        assert_eq!(plan.occupants["a"].test.len(), 4);
        assert_eq!(plan.occupants["b"].train.len(), 3);
        assert_eq!(plan.excluded, vec![ExcludedOccupant { occupant_id: "c".into(), votes: 4 }]);
        assert_eq!(plan.side("c-0000"), None);
    }

    proptest! {
        #[test]
        fn train_precedes_test(offsets in prop::collection::vec(0i64..1_000_000, 5..60)) {
            let mut recs = occupant("a", "z", offsets.len(), 0, sweep, 0.0);
            for (r, o) in recs.iter_mut().zip(&offsets) {
                r.vote.timestamp = Utc.timestamp_opt(1_704_070_800 + o, 0).unwrap();
            }
            let plan = temporal_split(&recs);
            let ts = |side: Side| recs.iter().filter(|r| plan.side(&r.vote.vote_id) == Some(side)).map(|r| r.vote.timestamp).collect::<Vec<_>>();
            let (train, test) = (ts(Side::Train), ts(Side::Test));
            prop_assert!(train.iter().max().unwrap() <= test.iter().min().unwrap());
            prop_assert_eq!(train.len(), train_count(recs.len()));
        }
    }

    #[test]
    fn individual_rule_oracle() {
        let mut recs = Vec::new();
        for (i, bias) in [-2.0, 0.0, 2.0].into_iter().enumerate() {
            recs.extend(occupant(&format!("o{i}"), "z", 120, 0, sweep, bias));
        }
        let rep = eval_individual(&recs, &fs1(), Dimension::Thermal, &cfg(30)).unwrap();
        assert_eq!(rep.per_occupant.len(), 3);
        for o in &rep.per_occupant {
            assert!(o.f1_micro >= 0.95, "{o:?}");
        }
        let f1s: Vec<f64> = rep.per_occupant.iter().map(|o| o.f1_micro).collect();
        let pooled = rep.f1_micro().unwrap();
        assert!(pooled >= f1s.iter().cloned().fold(1.0, f64::min) && pooled <= f1s.iter().cloned().fold(0.0, f64::max));
        let s = rep.scores.as_ref().unwrap();
        assert_eq!(s.precision_micro, s.f1_micro);
        assert_eq!(s.n, rep.n_test_rows);
    }

    #[test]
    fn single_class_training_gives_constant_predictor() {
        // training period all at 30 C (prefer cooler); test period mixed
        let recs = occupant("a", "z", 10, 0, |i| if i < 6 { 30.0 } else if i < 8 { 30.0 } else { 24.0 }, 0.0);
        let rep = eval_individual(&recs, &fs1(), Dimension::Thermal, &cfg(10)).unwrap();
        assert_eq!(rep.per_occupant[0].f1_micro, 0.5);
    }

    #[test]
    fn one_occupant_grouped_matches_individual() {
        let recs = occupant("a", "z", 40, 0, sweep, 1.0);
        let g = eval_grouped(&recs, &fs1(), Dimension::Thermal, &cfg(20)).unwrap();
        let i = eval_individual(&recs, &fs1(), Dimension::Thermal, &cfg(20)).unwrap();
        assert_eq!(g.scores, i.scores);
        assert_eq!(g.per_occupant, i.per_occupant);
    }

    #[test]
    fn skipped_when_spec_excludes_training_rows() {
        let mut recs = occupant("a", "z", 10, 0, sweep, 0.0);
        recs.extend(occupant("b", "z", 10, 0, sweep, 0.0));
        for r in recs.iter_mut().filter(|r| r.vote.occupant_id == "b").take(6) {
            r.heart_rate = None;
        }
        let spec = FeatureSetSpec::default_named("fs3").unwrap();
        let rep = eval_individual(&recs, &spec, Dimension::Thermal, &cfg(5)).unwrap();
        assert_eq!(rep.skipped, vec![SkippedOccupant { occupant_id: "b".into(), reason: "empty training matrix".into() }]);
        assert_eq!(rep.exclusions.missing_heart_rate, 6);
    }

    #[test]
    fn test_labels_never_reach_the_grouped_model() {
        let mut recs = Vec::new();
        for i in 0..4 {
            recs.extend(occupant(&format!("o{i}"), &format!("z{}", i % 2), 30, i as i64 * 60, sweep, i as f64 - 1.5));
        }
        let spec = FeatureSetSpec::default_named("fs6").unwrap();
        let fit = |recs: &[FusedRecord]| {
            let (_, data) = prepare(recs, &spec, Dimension::Thermal, &cfg(15)).unwrap();
            fit_on(&data.rows_on(Side::Train), &cfg(15).forest).unwrap().to_bytes()
        };
        let before = fit(&recs);
        let plan = temporal_split(&recs);
        let mut perturbed = recs.clone();
        for r in perturbed.iter_mut().filter(|r| plan.side(&r.vote.vote_id) == Some(Side::Test)) {
            r.vote.thermal = Preference::More;
            r.vote.noise = Preference::Less;
        }
        assert_eq!(before, fit(&perturbed));
    }

    #[test]
    fn coldstart_included_limit_equals_grouped() {
        let mut recs = Vec::new();
        for i in 0..4 {
            recs.extend(occupant(&format!("o{i}"), &format!("z{}", i % 2), 25, i as i64 * 60, sweep, 0.0));
        }
        let spec = FeatureSetSpec::new("th", [FeatureGroup::Env, FeatureGroup::Room, FeatureGroup::History]);
        let c = cfg(10);
        let grouped = eval_grouped(&recs, &spec, Dimension::Thermal, &c).unwrap();
        let cs = ColdStartConfig {
            permutations: 3,
            ..Default::default()
        };
        let rep = coldstart_curve(&recs, &spec, Dimension::Thermal, &c, &cs).unwrap();
        assert_eq!(rep.curves.len(), 4);
        for curve in &rep.curves {
            assert_eq!(curve.points.iter().map(|p| p.k).collect::<Vec<_>>(), [1, 2, 3]);
            let last = curve.point(3).unwrap();
            assert_eq!(last.f1_included, grouped.occupant(&curve.occupant_id).unwrap().f1_micro);
        }
        let again = coldstart_curve(&recs, &spec, Dimension::Thermal, &c, &cs).unwrap();
        assert_eq!(rep, again);

        let omit = ColdStartConfig {
            history: ColdStartHistory::Omit,
            k_grid: Some(vec![2, 9]),
            max_targets: Some(1),
            ..cs
        };
        let rep = coldstart_curve(&recs, &spec, Dimension::Thermal, &c, &omit).unwrap();
        assert_eq!(rep.curves.len(), 1);
        assert_eq!(rep.curves[0].points.iter().map(|p| p.k).collect::<Vec<_>>(), [2, 3]);
    }

    #[test]
    fn coldstart_needs_two_occupants() {
        let recs = occupant("a", "z", 10, 0, sweep, 0.0);
        assert!(matches!(
            coldstart_curve(&recs, &fs1(), Dimension::Thermal, &cfg(3), &ColdStartConfig::default()),
            Err(Error::InsufficientOccupants(1))
        ));
    }

    #[test]
    fn forecast_support_and_constant_distribution() {
        // 2024-01-01 is a Monday; votes 09:00-17:00 local on weekdays
        let tz = crate::features::DEFAULT_TIMEZONE;
        let mut recs = Vec::new();
        for day in 0..5 {
            for h in 9..18 {
                let mut r = occupant("a", "office", 1, 0, |_| 24.0, 0.0).remove(0);
                r.vote.vote_id = format!("v{day}-{h}");
                r.vote.timestamp = tz.with_ymd_and_hms(2024, 1, 1 + day, h, 0, 0).unwrap().with_timezone(&Utc);
                recs.push(r);
            }
        }
        let f = zone_forecast(&recs, "office", Dimension::Thermal, &cfg(10), &ForecastConfig::default()).unwrap();
        assert_eq!(f.points.len(), 336);
        for p in &f.points {
            assert_eq!(p.probabilities, vec![0.0, 1.0, 0.0]);
            let h = chrono::Timelike::hour(&p.timestamp);
            if !(7..22).contains(&h) {
                assert_eq!(p.support, 0);
                assert!(p.low_confidence);
            }
        }
        assert_eq!(f.points[18].support, 1); // Monday 09:00
        assert!(matches!(
            zone_forecast(&recs, "lab", Dimension::Thermal, &cfg(10), &ForecastConfig::default()),
            Err(Error::EmptyZone(_))
        ));
    }

    #[test]
    fn report_round_trip() {
        let recs = occupant("a", "z", 20, 0, sweep, 0.0);
        let rep = eval_grouped(&recs, &fs1(), Dimension::Thermal, &cfg(5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("eval_report.json");
        write_eval_report(&p, std::slice::from_ref(&rep)).unwrap();
        assert_eq!(read_eval_report(&p).unwrap(), vec![rep]);
    }
}

use std::collections::BTreeMap;

use chrono_tz::Tz;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{f1_micro, score, Scores};
use super::split::{temporal_split, ExcludedOccupant, Side, SplitPlan};
use crate::error::Result;
use crate::features::{build_matrix, ExclusionStats, FeatureContext, FeatureMatrix, FeatureSetSpec, RoomEncoding};
use crate::forest::{fit_forest, ForestConfig, RandomForestModel};
use crate::fusion::{sort_records, FusedRecord};
use crate::preference::Dimension;

/// Which records feed the Room and History lookup tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextScope {
    #[default]
    TrainingOnly,
    /// Uses test-period votes too. Leaks labels; kept for comparison only.
    AllRecords,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub forest: ForestConfig,
    pub tz: Tz,
    pub room_encoding: RoomEncoding,
    pub context_scope: ContextScope,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            forest: ForestConfig::default(),
            tz: crate::features::DEFAULT_TIMEZONE,
            room_encoding: RoomEncoding::Ratios,
            context_scope: ContextScope::TrainingOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Individual,
    Grouped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupantScore {
    pub occupant_id: String,
    pub n_train: usize,
    pub n_test: usize,
    pub f1_micro: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedOccupant {
    pub occupant_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub feature_set: String,
    pub dimension: Dimension,
    pub model_kind: ModelKind,
    pub n_train_rows: usize,
    pub n_test_rows: usize,
    /// Pooled over every scored occupant; `None` if nobody could be scored.
    pub scores: Option<Scores>,
    pub per_occupant: Vec<OccupantScore>,
    pub skipped: Vec<SkippedOccupant>,
    pub exclusions: ExclusionStats,
    pub excluded_occupants: Vec<ExcludedOccupant>,
}

impl EvalReport {
    pub fn f1_micro(&self) -> Option<f64> {
        self.scores.as_ref().map(|s| s.f1_micro)
    }

    pub fn occupant(&self, id: &str) -> Option<&OccupantScore> {
        self.per_occupant.iter().find(|o| o.occupant_id == id)
    }
}

/// A feature matrix whose rows are tagged train or test.
#[derive(Debug, Clone)]
pub struct SplitMatrix {
    pub matrix: FeatureMatrix,
    pub sides: Vec<Side>,
}

impl SplitMatrix {
    pub fn rows_on(&self, side: Side) -> FeatureMatrix {
        FeatureMatrix {
            rows: self
                .matrix
                .rows
                .iter()
                .zip(&self.sides)
                .filter(|(_, s)| **s == side)
                .map(|(r, _)| r.clone())
                .collect(),
            ..self.matrix.clone()
        }
    }
}

/// Split, build the lookup context, and build the tagged matrix.
pub fn prepare(records: &[FusedRecord], spec: &FeatureSetSpec, dimension: Dimension, cfg: &EvalConfig) -> Result<(SplitPlan, SplitMatrix)> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let plan = temporal_split(&sorted);
    let eligible: Vec<FusedRecord> = plan.tag(&sorted).into_iter().map(|(r, _)| r.clone()).collect();
    let ctx_records = match cfg.context_scope {
        ContextScope::TrainingOnly => plan.records_on(&eligible, Side::Train),
        ContextScope::AllRecords => eligible.clone(),
    };
    let ctx = FeatureContext::new(&ctx_records, cfg.tz, cfg.room_encoding)?;
    let matrix = build_matrix(&eligible, spec, dimension, &ctx)?;
    let sides = matrix
        .rows
        .iter()
        .map(|r| plan.side(&r.vote_id).expect("planned record"))
        .collect();
    Ok((plan, SplitMatrix { matrix, sides }))
}

fn group_by_occupant(m: &FeatureMatrix) -> BTreeMap<&str, Vec<usize>> {
    let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in m.rows.iter().enumerate() {
        out.entry(r.occupant_id.as_str()).or_default().push(i);
    }
    out
}

fn empty_report(m: &FeatureMatrix, kind: ModelKind) -> EvalReport {
    EvalReport {
        feature_set: m.spec_name.clone(),
        dimension: m.dimension,
        model_kind: kind,
        n_train_rows: 0,
        n_test_rows: 0,
        scores: None,
        per_occupant: Vec::new(),
        skipped: Vec::new(),
        exclusions: m.exclusions,
        excluded_occupants: Vec::new(),
    }
}

pub fn fit_on(m: &FeatureMatrix, forest: &ForestConfig) -> Result<RandomForestModel> {
    fit_forest(&m.training_set(), forest)
}

/// One forest on the pooled training rows, scored on the pooled test rows.
pub fn evaluate_grouped(data: &SplitMatrix, forest: &ForestConfig) -> Result<EvalReport> {
    let train = data.rows_on(Side::Train);
    let test = data.rows_on(Side::Test);
    let mut report = empty_report(&data.matrix, ModelKind::Grouped);
    report.n_train_rows = train.rows.len();
    report.n_test_rows = test.rows.len();
    let train_counts: BTreeMap<&str, Vec<usize>> = group_by_occupant(&train);
    let test_groups = group_by_occupant(&test);
    for occ in group_by_occupant(&data.matrix).keys() {
        if !test_groups.contains_key(occ) {
            report.skipped.push(SkippedOccupant {
                occupant_id: occ.to_string(),
                reason: "no test rows".into(),
            });
        }
    }
    if train.rows.is_empty() || test.rows.is_empty() {
        return Ok(report);
    }
    let model = fit_on(&train, forest)?;
    let y_true = test.labels();
    let y_pred = model.predict(&test.values())?;
    for (occ, idx) in &test_groups {
        let t: Vec<usize> = idx.iter().map(|&i| y_true[i]).collect();
        let p: Vec<usize> = idx.iter().map(|&i| y_pred[i]).collect();
        report.per_occupant.push(OccupantScore {
            occupant_id: occ.to_string(),
            n_train: train_counts.get(occ).map_or(0, Vec::len),
            n_test: idx.len(),
            f1_micro: f1_micro(&t, &p, model.n_classes())?,
        });
    }
    report.scores = Some(score(&y_true, &y_pred, &model.class_labels)?);
    Ok(report)
}

/// One forest per occupant on that occupant's training rows. The pooled
/// score concatenates every occupant's test predictions.
pub fn evaluate_individual(data: &SplitMatrix, forest: &ForestConfig) -> Result<EvalReport> {
    let train = data.rows_on(Side::Train);
    let test = data.rows_on(Side::Test);
    let mut report = empty_report(&data.matrix, ModelKind::Individual);
    let train_groups = group_by_occupant(&train);
    let test_groups = group_by_occupant(&test);
    let occupants: Vec<&str> = group_by_occupant(&data.matrix).into_keys().collect();

    let results: Vec<Result<std::result::Result<(OccupantScore, Vec<usize>, Vec<usize>), String>>> = occupants
        .par_iter()
        .map(|occ| {
            let (Some(tr), Some(te)) = (train_groups.get(occ), test_groups.get(occ)) else {
                let reason = if train_groups.contains_key(occ) {
                    "no test rows"
                } else {
                    "empty training matrix"
                };
                return Ok(Err(reason.to_string()));
            };
            let own_train = FeatureMatrix {
                rows: tr.iter().map(|&i| train.rows[i].clone()).collect(),
                ..train.clone()
            };
            let model = fit_on(&own_train, forest)?;
            let x: Vec<Vec<f64>> = te.iter().map(|&i| test.rows[i].values.clone()).collect();
            let t: Vec<usize> = te.iter().map(|&i| test.rows[i].label.index()).collect();
            let p = model.predict(&x)?;
            let s = OccupantScore {
                occupant_id: occ.to_string(),
                n_train: tr.len(),
                n_test: te.len(),
                f1_micro: f1_micro(&t, &p, model.n_classes())?,
            };
            Ok(Ok((s, t, p)))
        })
        .collect();

    let (mut y_true, mut y_pred) = (Vec::new(), Vec::new());
    for (occ, res) in occupants.iter().zip(results) {
        match res? {
            Ok((s, t, p)) => {
                report.n_train_rows += s.n_train;
                report.n_test_rows += s.n_test;
                y_true.extend(t);
                y_pred.extend(p);
                report.per_occupant.push(s);
            }
            Err(reason) => report.skipped.push(SkippedOccupant {
                occupant_id: occ.to_string(),
                reason,
            }),
        }
    }
    if !y_true.is_empty() {
        report.scores = Some(score(&y_true, &y_pred, &data.matrix.class_labels())?);
    }
    Ok(report)
}

pub fn eval_grouped(records: &[FusedRecord], spec: &FeatureSetSpec, dimension: Dimension, cfg: &EvalConfig) -> Result<EvalReport> {
    let (plan, data) = prepare(records, spec, dimension, cfg)?;
    let mut report = evaluate_grouped(&data, &cfg.forest)?;
    report.excluded_occupants = plan.excluded;
    Ok(report)
}

pub fn eval_individual(records: &[FusedRecord], spec: &FeatureSetSpec, dimension: Dimension, cfg: &EvalConfig) -> Result<EvalReport> {
    let (plan, data) = prepare(records, spec, dimension, cfg)?;
    let mut report = evaluate_individual(&data, &cfg.forest)?;
    report.excluded_occupants = plan.excluded;
    Ok(report)
}

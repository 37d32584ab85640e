use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::f1_micro;
use super::models::{fit_on, EvalConfig, SkippedOccupant};
use super::split::{temporal_split, Side};
use crate::error::{Error, Result};
use crate::features::{build_matrix, FeatureContext, FeatureGroup, FeatureSetSpec};
use crate::fusion::{sort_records, FusedRecord};
use crate::preference::Dimension;

/// What the target's History feature looks like when their own votes are
/// left out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColdStartHistory {
    /// All-zero ratios (the target is unknown to the lookup context).
    #[default]
    ZeroFlag,
    /// Drop the History group from excluded runs.
    Omit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColdStartConfig {
    pub permutations: usize,
    pub seed: u64,
    /// Source-set sizes to evaluate; `None` means every k in `1..N`. Values
    /// above `N - 1` are clamped to it.
    pub k_grid: Option<Vec<usize>>,
    /// Target occupants; `None` means all.
    pub targets: Option<Vec<String>>,
    /// Keep only the first `max_targets` targets in id order.
    pub max_targets: Option<usize>,
    pub history: ColdStartHistory,
}

impl Default for ColdStartConfig {
    fn default() -> Self {
        ColdStartConfig {
            permutations: 20,
            seed: 0,
            k_grid: None,
            targets: None,
            max_targets: None,
            history: ColdStartHistory::ZeroFlag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColdStartPoint {
    pub k: usize,
    pub f1_excluded: f64,
    pub f1_included: f64,
    /// Permutations that produced a model for both curves.
    pub permutations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColdStartCurve {
    pub occupant_id: String,
    pub points: Vec<ColdStartPoint>,
}

impl ColdStartCurve {
    pub fn point(&self, k: usize) -> Option<&ColdStartPoint> {
        self.points.iter().find(|p| p.k == k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColdStartReport {
    pub feature_set: String,
    pub dimension: Dimension,
    pub n_occupants: usize,
    pub curves: Vec<ColdStartCurve>,
    pub skipped: Vec<SkippedOccupant>,
}

impl ColdStartReport {
    pub fn curve(&self, occupant_id: &str) -> Option<&ColdStartCurve> {
        self.curves.iter().find(|c| c.occupant_id == occupant_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct JobKey {
    members: Vec<usize>,
    omit_history: bool,
}

/// Cold-start curves: for each target `u` and source-set size `k`, `R`
/// random k-subsets of the other occupants are drawn. The excluded curve
/// trains on the subset's training rows, the included curve adds `u`'s
/// training rows; both score `u`'s test rows. Room and History lookups are
/// built from the training records of whoever is in the training set.
pub fn coldstart_curve(
    records: &[FusedRecord],
    spec: &FeatureSetSpec,
    dimension: Dimension,
    cfg: &EvalConfig,
    cs: &ColdStartConfig,
) -> Result<ColdStartReport> {
    if cs.permutations == 0 {
        return Err(Error::InvalidConfig("cold-start permutations must be at least 1".into()));
    }
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let plan = temporal_split(&sorted);
    let occupants: Vec<String> = plan.occupant_ids().map(String::from).collect();
    let n = occupants.len();
    if n < 2 {
        return Err(Error::InsufficientOccupants(n));
    }
    let index: BTreeMap<&str, usize> = occupants.iter().enumerate().map(|(i, o)| (o.as_str(), i)).collect();
    let mut train: Vec<Vec<&FusedRecord>> = vec![Vec::new(); n];
    let mut test: Vec<Vec<FusedRecord>> = vec![Vec::new(); n];
    for (r, side) in plan.tag(&sorted) {
        let i = index[r.vote.occupant_id.as_str()];
        match side {
            Side::Train => train[i].push(r),
            Side::Test => test[i].push(r.clone()),
        }
    }

    let mut targets: Vec<usize> = match &cs.targets {
        None => (0..n).collect(),
        Some(ids) => ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::InvalidConfig(format!("cold-start target {id:?} has no evaluable votes")))
            })
            .collect::<Result<BTreeSet<usize>>>()?
            .into_iter()
            .collect(),
    };
    if let Some(m) = cs.max_targets {
        targets.truncate(m);
    }
    let ks: Vec<usize> = match &cs.k_grid {
        None => (1..n).collect(),
        Some(grid) => grid
            .iter()
            .copied()
            .filter(|&k| k >= 1)
            .map(|k| k.min(n - 1))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };

    // a target whose test rows are all excluded by the spec cannot be scored
    let probe = FeatureContext::empty(cfg.tz);
    let mut skipped = Vec::new();
    targets.retain(|&u| match build_matrix(&test[u], spec, dimension, &probe) {
        Ok(_) => true,
        Err(Error::EmptyMatrix { .. }) => {
            skipped.push(SkippedOccupant {
                occupant_id: occupants[u].clone(),
                reason: "no test rows".into(),
            });
            false
        }
        Err(_) => true,
    });

    let omit = cs.history == ColdStartHistory::Omit && spec.has(FeatureGroup::History);
    let mut jobs: BTreeMap<JobKey, BTreeSet<usize>> = BTreeMap::new();
    // draws[(u, k)] = per permutation (excluded key, included key)
    let mut draws: BTreeMap<(usize, usize), Vec<(JobKey, JobKey)>> = BTreeMap::new();
    for &u in &targets {
        let others: Vec<usize> = (0..n).filter(|&i| i != u).collect();
        for &k in &ks {
            let mut rng = ChaCha8Rng::seed_from_u64(cs.seed);
            rng.set_stream(((u as u64) << 32) | k as u64);
            let mut perms = Vec::with_capacity(cs.permutations);
            for _ in 0..cs.permutations {
                let mut subset: Vec<usize> = others.choose_multiple(&mut rng, k).copied().collect();
                subset.sort_unstable();
                let excluded = JobKey {
                    members: subset.clone(),
                    omit_history: omit,
                };
                subset.push(u);
                subset.sort_unstable();
                let included = JobKey {
                    members: subset,
                    omit_history: false,
                };
                jobs.entry(excluded.clone()).or_default().insert(u);
                jobs.entry(included.clone()).or_default().insert(u);
                perms.push((excluded, included));
            }
            draws.insert((u, k), perms);
        }
    }
    log::debug!("cold-start: {} distinct training sets", jobs.len());

    let without_history = spec.without(FeatureGroup::History);
    let scored: Vec<Vec<(usize, Option<f64>)>> = jobs
        .par_iter()
        .map(|(key, job_targets)| -> Result<Vec<(usize, Option<f64>)>> {
            let job_spec = if key.omit_history { &without_history } else { spec };
            let mut recs: Vec<&FusedRecord> = key.members.iter().flat_map(|&m| train[m].iter().copied()).collect();
            // canonical order, the same as the pooled grouped model sees
            recs.sort_by(|a, b| {
                (&a.vote.occupant_id, a.vote.timestamp, &a.vote.vote_id).cmp(&(
                    &b.vote.occupant_id,
                    b.vote.timestamp,
                    &b.vote.vote_id,
                ))
            });
            let recs: Vec<FusedRecord> = recs.into_iter().cloned().collect();
            let ctx = FeatureContext::new(&recs, cfg.tz, cfg.room_encoding)?;
            let matrix = match build_matrix(&recs, job_spec, dimension, &ctx) {
                Ok(m) => m,
                Err(Error::EmptyMatrix { .. }) => return Ok(job_targets.iter().map(|&u| (u, None)).collect()),
                Err(e) => return Err(e),
            };
            let model = fit_on(&matrix, &cfg.forest)?;
            job_targets
                .iter()
                .map(|&u| {
                    let t = build_matrix(&test[u], job_spec, dimension, &ctx)?;
                    let pred = model.predict(&t.values())?;
                    Ok((u, Some(f1_micro(&t.labels(), &pred, model.n_classes())?)))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let results: BTreeMap<(&JobKey, usize), Option<f64>> = jobs
        .keys()
        .zip(scored)
        .flat_map(|(key, v)| v.into_iter().map(move |(u, f)| ((key, u), f)))
        .collect();

    let mut curves = Vec::with_capacity(targets.len());
    for &u in &targets {
        let mut points = Vec::with_capacity(ks.len());
        for &k in &ks {
            let (mut ex, mut inc, mut used) = (0.0, 0.0, 0usize);
            for (e, i) in &draws[&(u, k)] {
                if let (Some(fe), Some(fi)) = (results[&(e, u)], results[&(i, u)]) {
                    ex += fe;
                    inc += fi;
                    used += 1;
                }
            }
            if used == 0 {
                log::warn!("cold-start {}: no trainable permutation at k = {k}", occupants[u]);
                continue;
            }
            points.push(ColdStartPoint {
                k,
                f1_excluded: ex / used as f64,
                f1_included: inc / used as f64,
                permutations: used,
            });
        }
        curves.push(ColdStartCurve {
            occupant_id: occupants[u].clone(),
            points,
        });
    }
    Ok(ColdStartReport {
        feature_set: spec.name.clone(),
        dimension,
        n_occupants: n,
        curves,
        skipped,
    })
}

pub fn write_coldstart_csv(path: &Path, reports: &[ColdStartReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["occupant", "dimension", "k", "f1_excluded", "f1_included"])?;
    for rep in reports {
        for c in &rep.curves {
            for p in &c.points {
                w.write_record([
                    c.occupant_id.clone(),
                    rep.dimension.to_string(),
                    p.k.to_string(),
                    p.f1_excluded.to_string(),
                    p.f1_included.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

//! Staged batch runs. Each stage reads the previous stage's artifacts from the
//! run directory and writes its own; `manifest.json` lists every file with
//! its SHA-256 after each stage.

mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{
    ClusterConfig, ColdStartStageConfig, EvaluateConfig, FeaturesConfig, ForecastStageConfig, InputPaths, RunConfig,
    TrainConfig,
};

use crate::error::{Error, Result};
use crate::eval::{
    coldstart_curve, evaluate_grouped, evaluate_individual, fit_on, prepare, write_coldstart_csv, write_eval_report,
    write_forecast_csv, zone_forecast, ExcludedOccupant, Side, SplitMatrix, SplitPlan,
};
use crate::features::{read_matrix, write_matrix, ExclusionStats};
use crate::forest::RandomForestModel;
use crate::fusion::{fuse_dataset, read_fused, write_fused, FusedRecord, FusionStats};
use crate::ingest::{
    load_localization, load_sensor_readings, load_votes, load_wearable, retain_known_zones, write_localization,
    write_rejects, write_sensor_readings, write_votes, write_wearable, Format, Reject, ZoneMap,
};
use crate::preference::Dimension;
use crate::synth::{simulate, write_simulation, SimPaths};
use crate::tendency::{kmeans_fit, room_profiles, vote_ratios, write_tendencies, SubjectKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Simulate,
    Ingest,
    Fuse,
    Cluster,
    Featurize,
    Train,
    Evaluate,
    Coldstart,
    Forecast,
}

impl Stage {
    /// Stages chained by [`run_pipeline`] after input generation.
    pub const CHAIN: [Stage; 8] = [
        Stage::Ingest,
        Stage::Fuse,
        Stage::Cluster,
        Stage::Featurize,
        Stage::Train,
        Stage::Evaluate,
        Stage::Coldstart,
        Stage::Forecast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Ingest => "ingest",
            Stage::Fuse => "fuse",
            Stage::Cluster => "cluster",
            Stage::Featurize => "featurize",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Coldstart => "coldstart",
            Stage::Forecast => "forecast",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        [Stage::Simulate]
            .into_iter()
            .chain(Stage::CHAIN)
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: Stage,
    pub summary: String,
    pub outputs: Vec<PathBuf>,
}

/// Where each stage puts its files, relative to the run directory.
#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn new(root: impl Into<PathBuf>) -> RunLayout {
        RunLayout { root: root.into() }
    }
    pub fn sim_dir(&self) -> PathBuf {
        self.root.join("sim")
    }
    pub fn ingested(&self) -> SimPaths {
        SimPaths::in_dir(&self.root.join("ingested"))
    }
    pub fn ingest_summary(&self) -> PathBuf {
        self.root.join("ingested").join("ingest_summary.json")
    }
    pub fn fused(&self) -> PathBuf {
        self.root.join("fused.csv")
    }
    pub fn fusion_stats(&self) -> PathBuf {
        self.root.join("fusion_stats.json")
    }
    pub fn clusters(&self) -> PathBuf {
        self.root.join("clusters.json")
    }
    pub fn features_dir(&self) -> PathBuf {
        self.root.join("features")
    }
    pub fn features(&self, spec: &str, dim: Dimension) -> PathBuf {
        self.features_dir().join(format!("features_{spec}_{dim}.csv"))
    }
    pub fn features_summary(&self) -> PathBuf {
        self.features_dir().join("features_summary.json")
    }
    pub fn model(&self, spec: &str, dim: Dimension) -> PathBuf {
        self.root.join("models").join(format!("model_{spec}_{dim}.csrf"))
    }
    pub fn eval_report(&self) -> PathBuf {
        self.root.join("eval_report.json")
    }
    pub fn coldstart(&self) -> PathBuf {
        self.root.join("coldstart_curves.csv")
    }
    pub fn forecast(&self, zone: &str, dim: Dimension) -> PathBuf {
        self.root.join("forecasts").join(format!("forecast_{zone}_{dim}.csv"))
    }
    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
}

fn mkdir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        mkdir(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact(path.to_path_buf()))
    }
}

/// Run-relative path with forward slashes.
fn relative(root: &Path, p: &Path) -> String {
    p.strip_prefix(root)
        .unwrap_or(p)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Manifest {
    /// Run-relative path to hex SHA-256.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

/// Hashes every file under the run directory except the manifest itself.
pub fn build_manifest(root: &Path) -> Result<Manifest> {
    let mut files = Vec::new();
    collect_files(root, &mut files)?;
    let manifest_path = RunLayout::new(root).manifest();
    let mut m = Manifest::default();
    for f in files.into_iter().filter(|f| *f != manifest_path) {
        m.files.insert(relative(root, &f), sha256_file(&f)?);
    }
    Ok(m)
}

pub fn write_manifest(root: &Path) -> Result<Manifest> {
    let m = build_manifest(root)?;
    write_json(&RunLayout::new(root).manifest(), &m)?;
    Ok(m)
}

pub fn read_manifest(root: &Path) -> Result<Manifest> {
    read_json(&RunLayout::new(root).manifest())
}

/// Inputs of the run: configured paths, or the generator's output directory.
pub fn input_paths(cfg: &RunConfig) -> Result<InputPaths> {
    if let Some(inputs) = &cfg.inputs {
        return Ok(inputs.clone());
    }
    if cfg.simulate.is_some() {
        let p = SimPaths::in_dir(&RunLayout::new(&cfg.out_dir).sim_dir());
        return Ok(InputPaths {
            votes: p.votes,
            sensors: p.sensors,
            localization: p.localization,
            wearable: p.wearable,
            zones: p.zones,
        });
    }
    Err(Error::InvalidConfig(
        "no inputs: set [inputs] or [simulate] in the config".into(),
    ))
}

fn stage_simulate(cfg: &RunConfig) -> Result<StageSummary> {
    let mut sim = cfg.simulate.clone().unwrap_or_default();
    sim.seed = cfg.seed;
    sim.timezone = cfg.timezone.clone();
    let out = simulate(&sim)?;
    let paths = write_simulation(&RunLayout::new(&cfg.out_dir).sim_dir(), &out)?;
    Ok(StageSummary {
        stage: Stage::Simulate,
        summary: format!(
            "{} occupants, {} votes, {} sensor readings, {} zones",
            out.truth.occupants.len(),
            out.votes.len(),
            out.readings.len(),
            out.zones.zones().len()
        ),
        outputs: paths.all().map(Path::to_path_buf).to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadCounts {
    pub total_rows: usize,
    pub accepted: usize,
    pub rejected: usize,
}

fn counts<T>(total_rows: usize, records: &[T], rejects: &[Reject]) -> LoadCounts {
    LoadCounts {
        total_rows,
        accepted: records.len(),
        rejected: rejects.len(),
    }
}

fn stage_ingest(cfg: &RunConfig) -> Result<StageSummary> {
    let inputs = input_paths(cfg)?;
    for (name, p) in inputs.all() {
        if !p.is_file() {
            return Err(Error::InvalidConfig(format!("{name} input {} does not exist", p.display())));
        }
    }
    let layout = RunLayout::new(&cfg.out_dir);
    let out = layout.ingested();
    mkdir(out.votes.parent().expect("ingested dir"))?;
    let zones = ZoneMap::load(&inputs.zones)?;
    let votes = load_votes(&inputs.votes, Format::from_path(&inputs.votes))?;
    let mut sensors = load_sensor_readings(&inputs.sensors, Format::from_path(&inputs.sensors))?;
    let unknown = retain_known_zones(&mut sensors.records, &zones);
    sensors.rejects.extend(unknown);
    let fixes = load_localization(&inputs.localization, Format::from_path(&inputs.localization))?;
    let wearable = load_wearable(&inputs.wearable, Format::from_path(&inputs.wearable))?;

    write_votes(&out.votes, &votes.records)?;
    write_sensor_readings(&out.sensors, &sensors.records)?;
    write_localization(&out.localization, &fixes.records)?;
    write_wearable(&out.wearable, &wearable.records)?;
    zones.write(&out.zones)?;
    let dir = out.votes.parent().expect("ingested dir");
    let mut outputs = out.all()[..5].iter().map(|p| p.to_path_buf()).collect::<Vec<_>>();
    let mut summary = BTreeMap::new();
    for (name, c, rejects) in [
        ("votes", counts(votes.total_rows, &votes.records, &votes.rejects), &votes.rejects),
        ("sensors", counts(sensors.total_rows, &sensors.records, &sensors.rejects), &sensors.rejects),
        ("localization", counts(fixes.total_rows, &fixes.records, &fixes.rejects), &fixes.rejects),
        ("wearable", counts(wearable.total_rows, &wearable.records, &wearable.rejects), &wearable.rejects),
    ] {
        let p = dir.join(format!("rejects_{name}.csv"));
        write_rejects(&p, rejects)?;
        outputs.push(p);
        summary.insert(name, c);
    }
    write_json(&layout.ingest_summary(), &summary)?;
    outputs.push(layout.ingest_summary());
    let rejected: usize = summary.values().map(|c| c.rejected).sum();
    Ok(StageSummary {
        stage: Stage::Ingest,
        summary: format!(
            "{} votes, {} readings, {} fixes, {} wearable samples, {} zones accepted; {rejected} rows rejected",
            summary["votes"].accepted,
            summary["sensors"].accepted,
            summary["localization"].accepted,
            summary["wearable"].accepted,
            zones.zones().len()
        ),
        outputs,
    })
}

fn stage_fuse(cfg: &RunConfig) -> Result<StageSummary> {
    let layout = RunLayout::new(&cfg.out_dir);
    let inp = layout.ingested();
    for p in &inp.all()[..5] {
        require(p)?;
    }
    let zones = ZoneMap::load(&inp.zones)?;
    let votes = load_votes(&inp.votes, Format::Csv)?.records;
    let readings = load_sensor_readings(&inp.sensors, Format::Csv)?.records;
    let fixes = load_localization(&inp.localization, Format::Csv)?.records;
    let wearables = load_wearable(&inp.wearable, Format::Csv)?.records;
    let (fused, stats) = fuse_dataset(&votes, &fixes, &readings, &wearables, &zones, &cfg.fusion);
    write_fused(&layout.fused(), &fused)?;
    write_json(&layout.fusion_stats(), &stats)?;
    Ok(StageSummary {
        stage: Stage::Fuse,
        summary: format!(
            "{} of {} votes placed in a zone, {} env-matched, {} wearable-matched",
            stats.zone_resolved, stats.total_votes, stats.env_matched, stats.wearable_matched
        ),
        outputs: vec![layout.fused(), layout.fusion_stats()],
    })
}

pub fn read_fusion_stats(root: &Path) -> Result<FusionStats> {
    read_json(&RunLayout::new(root).fusion_stats())
}

fn load_fused(layout: &RunLayout) -> Result<Vec<FusedRecord>> {
    read_fused(&layout.fused())
}

fn stage_cluster(cfg: &RunConfig) -> Result<StageSummary> {
    let layout = RunLayout::new(&cfg.out_dir);
    let fused = load_fused(&layout)?;
    let occupants = vote_ratios(&fused, SubjectKind::Occupant);
    let rooms = room_profiles(&fused);
    let occ_path = cfg.out_dir.join("tendencies_occupants.csv");
    let room_path = cfg.out_dir.join("tendencies_rooms.csv");
    write_tendencies(&occ_path, &occupants)?;
    write_tendencies(&room_path, &rooms)?;
    let model = kmeans_fit(&occupants, cfg.cluster.space, cfg.cluster.k, cfg.seed, cfg.cluster.restarts)?;
    write_json(&layout.clusters(), &model)?;
    let dropped = if model.dropped_classes.is_empty() {
        String::new()
    } else {
        format!(", dropped {}", model.dropped_classes.join(", "))
    };
    Ok(StageSummary {
        stage: Stage::Cluster,
        summary: format!(
            "{} occupants in {} clusters{dropped}; inertia {:.4}",
            occupants.len(),
            model.k,
            model.inertia
        ),
        outputs: vec![occ_path, room_path, layout.clusters()],
    })
}

/// One entry per feature matrix built by `featurize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSummary {
    pub feature_set: String,
    pub dimension: Dimension,
    /// `None` when every record was excluded and no file was written.
    pub file: Option<String>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub exclusions: ExclusionStats,
    pub excluded_occupants: Vec<ExcludedOccupant>,
}

fn stage_featurize(cfg: &RunConfig) -> Result<StageSummary> {
    let layout = RunLayout::new(&cfg.out_dir);
    let fused = load_fused(&layout)?;
    let ecfg = cfg.eval_config()?;
    mkdir(&layout.features_dir())?;
    let mut summaries = Vec::new();
    let mut outputs = Vec::new();
    let mut plan: Option<SplitPlan> = None;
    for spec in &cfg.features.sets {
        for dim in Dimension::ALL {
            match prepare(&fused, spec, dim, &ecfg) {
                Ok((p, data)) => {
                    let path = layout.features(&spec.name, dim);
                    let tags: Vec<&str> = data.sides.iter().map(|s| s.name()).collect();
                    write_matrix(&path, &data.matrix, &tags)?;
                    let train_rows = data.sides.iter().filter(|s| **s == Side::Train).count();
                    summaries.push(MatrixSummary {
                        feature_set: spec.name.clone(),
                        dimension: dim,
                        file: Some(relative(&cfg.out_dir, &path)),
                        train_rows,
                        test_rows: data.sides.len() - train_rows,
                        exclusions: data.matrix.exclusions,
                        excluded_occupants: p.excluded.clone(),
                    });
                    outputs.push(path);
                    plan.get_or_insert(p);
                }
                Err(Error::EmptyMatrix { .. }) => {
                    log::warn!("feature set {} / {dim}: every record excluded", spec.name);
                    summaries.push(MatrixSummary {
                        feature_set: spec.name.clone(),
                        dimension: dim,
                        file: None,
                        train_rows: 0,
                        test_rows: 0,
                        exclusions: ExclusionStats {
                            input: fused.len(),
                            excluded: fused.len(),
                            ..Default::default()
                        },
                        excluded_occupants: Vec::new(),
                    });
                }
                Err(e) => return Err(e),
            }
        }
    }
    let sets_path = layout.features_dir().join("featuresets.json");
    write_json(&sets_path, &cfg.features.sets)?;
    write_json(&layout.features_summary(), &summaries)?;
    outputs.extend([sets_path, layout.features_summary()]);
    if let Some(p) = &plan {
        let path = layout.features_dir().join("split_plan.json");
        write_json(&path, p)?;
        outputs.push(path);
    }
    let written = summaries.iter().filter(|s| s.file.is_some()).count();
    Ok(StageSummary {
        stage: Stage::Featurize,
        summary: format!(
            "{written} of {} feature matrices written ({} feature sets x 3 dimensions)",
            summaries.len(),
            cfg.features.sets.len()
        ),
        outputs,
    })
}

fn read_split_matrix(layout: &RunLayout, spec: &str, dim: Dimension) -> Result<SplitMatrix> {
    let (matrix, tags) = read_matrix(&layout.features(spec, dim), spec, dim)?;
    let sides = tags
        .iter()
        .map(|t| {
            Side::parse(t).ok_or_else(|| Error::MalformedFile {
                path: layout.features(spec, dim),
                reason: format!("unknown split tag {t:?}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SplitMatrix { matrix, sides })
}

fn matrix_summaries(layout: &RunLayout) -> Result<Vec<MatrixSummary>> {
    read_json(&layout.features_summary())
}

fn stage_train(cfg: &RunConfig) -> Result<StageSummary> {
    let layout = RunLayout::new(&cfg.out_dir);
    let summaries = matrix_summaries(&layout)?;
    let ecfg = cfg.eval_config()?;
    let spec = &cfg.train.feature_set;
    let mut outputs = Vec::new();
    let mut described = Vec::new();
    for &dim in &cfg.train.dimensions {
        let entry = summaries.iter().find(|s| &s.feature_set == spec && s.dimension == dim);
        if matches!(entry, Some(MatrixSummary { file: None, .. })) {
            log::warn!("no training rows for {spec} / {dim}; model skipped");
            continue;
        }
        let data = read_split_matrix(&layout, spec, dim)?;
        let train = data.rows_on(Side::Train);
        if train.rows.is_empty() {
            log::warn!("no training rows for {spec} / {dim}; model skipped");
            continue;
        }
        let model = fit_on(&train, &ecfg.forest)?;
        let path = layout.model(spec, dim);
        mkdir(path.parent().expect("models dir"))?;
        model.save(&path)?;
        described.push(format!("{dim} ({} rows)", train.rows.len()));
        outputs.push(path);
    }
    Ok(StageSummary {
        stage: Stage::Train,
        summary: format!(
            "{} grouped {spec} model(s), {} trees each: {}",
            outputs.len(),
            ecfg.forest.n_trees,
            described.join(", ")
        ),
        outputs,
    })
}

pub fn load_model(root: &Path, spec: &str, dim: Dimension) -> Result<RandomForestModel> {
    let path = RunLayout::new(root).model(spec, dim);
    require(&path)?;
    RandomForestModel::load(&path)
}

fn stage_evaluate(cfg: &RunConfig) -> Result<StageSummary> {
    let layout = RunLayout::new(&cfg.out_dir);
    let summaries = matrix_summaries(&layout)?;
    let ecfg = cfg.eval_config()?;
    let mut reports = Vec::new();
    for spec in cfg.evaluated_sets() {
        for &dim in &cfg.evaluate.dimensions {
            let entry = summaries
                .iter()
                .find(|s| s.feature_set == spec.name && s.dimension == dim)
                .ok_or_else(|| Error::MissingArtifact(layout.features(&spec.name, dim)))?;
            if entry.file.is_none() {
                continue;
            }
            let data = read_split_matrix(&layout, &spec.name, dim)?;
            for mut rep in [evaluate_individual(&data, &ecfg.forest)?, evaluate_grouped(&data, &ecfg.forest)?] {
                rep.exclusions = entry.exclusions;
                rep.excluded_occupants = entry.excluded_occupants.clone();
                reports.push(rep);
            }
        }
    }
    write_eval_report(&layout.eval_report(), &reports)?;
    let best: Vec<String> = cfg
        .evaluate
        .dimensions
        .iter()
        .filter_map(|&d| {
            reports
                .iter()
                .filter(|r| r.dimension == d)
                .filter_map(|r| r.f1_micro().map(|f| (f, r)))
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(f, r)| format!("{d} {f:.3} ({} {:?})", r.feature_set, r.model_kind).to_lowercase())
        })
        .collect();
    Ok(StageSummary {
        stage: Stage::Evaluate,
        summary: format!("{} reports; best F1: {}", reports.len(), best.join(", ")),
        outputs: vec![layout.eval_report()],
    })
}

fn stage_coldstart(cfg: &RunConfig) -> Result<StageSummary> {
    let layout = RunLayout::new(&cfg.out_dir);
    let fused = load_fused(&layout)?;
    let ecfg = cfg.eval_config()?;
    let spec = cfg.feature_set(&cfg.coldstart.feature_set)?;
    let settings = cfg.coldstart.settings(cfg.seed);
    let mut reports = Vec::new();
    for &dim in &cfg.coldstart.dimensions {
        match coldstart_curve(&fused, spec, dim, &ecfg, &settings) {
            Ok(r) => reports.push(r),
            Err(Error::EmptyMatrix { .. }) => log::warn!("cold-start {} / {dim}: no rows", spec.name),
            Err(e) => return Err(e),
        }
    }
    write_coldstart_csv(&layout.coldstart(), &reports)?;
    let points: usize = reports.iter().flat_map(|r| &r.curves).map(|c| c.points.len()).sum();
    let targets = reports.first().map_or(0, |r| r.curves.len());
    Ok(StageSummary {
        stage: Stage::Coldstart,
        summary: format!(
            "{points} curve points for {targets} target occupant(s) x {} dimension(s), {} permutations each",
            reports.len(),
            settings.permutations
        ),
        outputs: vec![layout.coldstart()],
    })
}

fn stage_forecast(cfg: &RunConfig) -> Result<StageSummary> {
    let layout = RunLayout::new(&cfg.out_dir);
    let fused = load_fused(&layout)?;
    let ecfg = cfg.eval_config()?;
    let zones: Vec<String> = if cfg.forecast.zones.is_empty() {
        let set: std::collections::BTreeSet<&str> = fused.iter().map(|r| r.zone_id.as_str()).collect();
        set.into_iter().map(String::from).collect()
    } else {
        cfg.forecast.zones.clone()
    };
    let mut outputs = Vec::new();
    let mut flagged = 0;
    let mut total = 0;
    for zone in &zones {
        for &dim in &cfg.forecast.dimensions {
            let f = zone_forecast(&fused, zone, dim, &ecfg, &cfg.forecast.settings)?;
            let path = layout.forecast(zone, dim);
            mkdir(path.parent().expect("forecast dir"))?;
            write_forecast_csv(&path, &f)?;
            flagged += f.points.iter().filter(|p| p.low_confidence).count();
            total += f.points.len();
            outputs.push(path);
        }
    }
    Ok(StageSummary {
        stage: Stage::Forecast,
        summary: format!(
            "{} forecasts over {} zone(s); {flagged} of {total} grid points flagged low-confidence",
            outputs.len(),
            zones.len()
        ),
        outputs,
    })
}

/// Runs one stage and refreshes the manifest.
pub fn run_stage(stage: Stage, cfg: &RunConfig) -> Result<StageSummary> {
    cfg.validate()?;
    mkdir(&cfg.out_dir)?;
    let summary = match stage {
        Stage::Simulate => stage_simulate(cfg),
        Stage::Ingest => stage_ingest(cfg),
        Stage::Fuse => stage_fuse(cfg),
        Stage::Cluster => stage_cluster(cfg),
        Stage::Featurize => stage_featurize(cfg),
        Stage::Train => stage_train(cfg),
        Stage::Evaluate => stage_evaluate(cfg),
        Stage::Coldstart => stage_coldstart(cfg),
        Stage::Forecast => stage_forecast(cfg),
    }?;
    write_manifest(&cfg.out_dir)?;
    Ok(summary)
}

/// Every stage in order, generating inputs first when the config asks for a
/// simulation instead of naming input files.
pub fn run_pipeline(cfg: &RunConfig) -> Result<Vec<StageSummary>> {
    let mut stages = Vec::new();
    if cfg.inputs.is_none() && cfg.simulate.is_some() {
        stages.push(Stage::Simulate);
    }
    stages.extend(Stage::CHAIN);
    let mut out = Vec::new();
    for stage in stages {
        let s = run_stage(stage, cfg)?;
        log::info!("{}: {}", s.stage, s.summary);
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SimConfig;

    fn tiny(dir: &Path) -> RunConfig {
        let mut cfg = RunConfig::from_toml(
            r#"
            [forest]
            n_trees = 5
            [cluster]
            k = 3
            [features]
            sets = [
                { name = "fs1", include = ["time", "env"] },
                { name = "fs4", include = ["time", "near_body", "heart_rate", "room", "history"] },
            ]
            [coldstart]
            permutations = 2
            k_grid = [1, 5]
            max_targets = 2
            dimensions = ["thermal"]
            [forecast]
            zones = ["z01"]
            dimensions = ["thermal"]
            "#,
        )
        .unwrap();
        cfg.out_dir = dir.to_path_buf();
        cfg.simulate = Some(SimConfig {
            n_occupants: 6,
            n_zones: 2,
            days: 4,
            ..Default::default()
        });
        cfg
    }

    #[test]
    fn stages_out_of_order_report_missing_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path());
        for stage in [Stage::Fuse, Stage::Cluster, Stage::Featurize, Stage::Train, Stage::Evaluate, Stage::Coldstart] {
            let err = run_stage(stage, &cfg).unwrap_err();
            assert_eq!(err.kind(), "MissingArtifact", "{stage}: {err}");
        }
        // inputs do not exist yet either
        assert_eq!(run_stage(Stage::Ingest, &cfg).unwrap_err().kind(), "ConfigError");
    }

    #[test]
    fn pipeline_end_to_end_is_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let summaries = run_pipeline(&tiny(a.path())).unwrap();
        assert_eq!(summaries.len(), 9);
        run_pipeline(&tiny(b.path())).unwrap();
        let (ma, mb) = (read_manifest(a.path()).unwrap(), read_manifest(b.path()).unwrap());
        assert_eq!(ma, mb);
        for f in [
            "eval_report.json",
            "clusters.json",
            "coldstart_curves.csv",
            "forecasts/forecast_z01_thermal.csv",
            "models/model_fs4_noise.csrf",
            "features/features_fs1_light.csv",
            "fused.csv",
        ] {
            assert!(ma.files.contains_key(f), "{f} missing from manifest");
        }
        let model = load_model(a.path(), "fs4", Dimension::Thermal).unwrap();
        assert_eq!(model.trees.len(), 5);
    }
}

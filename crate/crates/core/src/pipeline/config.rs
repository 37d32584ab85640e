use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{ColdStartConfig, ColdStartHistory, ContextScope, EvalConfig, ForecastConfig};
use crate::features::{parse_timezone, FeatureSetSpec, RoomEncoding};
use crate::forest::ForestConfig;
use crate::fusion::FusionConfig;
use crate::preference::Dimension;
use crate::synth::SimConfig;
use crate::tendency::ClusterSpace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub votes: PathBuf,
    pub sensors: PathBuf,
    pub localization: PathBuf,
    pub wearable: PathBuf,
    pub zones: PathBuf,
}

impl InputPaths {
    pub fn all(&self) -> [(&'static str, &Path); 5] {
        [
            ("votes", &self.votes),
            ("sensors", &self.sensors),
            ("localization", &self.localization),
            ("wearable", &self.wearable),
            ("zones", &self.zones),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    /// Feature sets to build; the six defaults unless overridden.
    pub sets: Vec<FeatureSetSpec>,
    pub room_encoding: RoomEncoding,
    pub context_scope: ContextScope,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig {
            sets: FeatureSetSpec::defaults(),
            room_encoding: RoomEncoding::Ratios,
            context_scope: ContextScope::TrainingOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub space: ClusterSpace,
    /// With `k` equal to the number of classes in the space, empty classes
    /// shrink it (9 -> 8 when nobody asks for louder).
    pub k: usize,
    pub restarts: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            space: ClusterSpace::Joint,
            k: 9,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub feature_set: String,
    pub dimensions: Vec<Dimension>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            feature_set: "fs4".into(),
            dimensions: Dimension::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Empty means every configured feature set.
    pub feature_sets: Vec<String>,
    pub dimensions: Vec<Dimension>,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            feature_sets: Vec::new(),
            dimensions: Dimension::ALL.to_vec(),
        }
    }
}

/// Cold-start settings for a run. Scaled down from the library defaults
/// (fewer permutations, a sparse k grid, two targets) so a full synthetic
/// run stays within a minute on one core.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColdStartStageConfig {
    pub feature_set: String,
    pub dimensions: Vec<Dimension>,
    pub permutations: usize,
    pub k_grid: Option<Vec<usize>>,
    pub targets: Option<Vec<String>>,
    pub max_targets: Option<usize>,
    pub history: ColdStartHistory,
}

impl Default for ColdStartStageConfig {
    fn default() -> Self {
        ColdStartStageConfig {
            feature_set: "fs4".into(),
            dimensions: Dimension::ALL.to_vec(),
            permutations: 5,
            k_grid: Some(vec![1, 3, 5, 10, 30]),
            targets: None,
            max_targets: Some(2),
            history: ColdStartHistory::ZeroFlag,
        }
    }
}

impl ColdStartStageConfig {
    pub fn settings(&self, seed: u64) -> ColdStartConfig {
        ColdStartConfig {
            permutations: self.permutations,
            seed,
            k_grid: self.k_grid.clone(),
            targets: self.targets.clone(),
            max_targets: self.max_targets,
            history: self.history,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastStageConfig {
    /// Empty means every zone with votes.
    pub zones: Vec<String>,
    pub dimensions: Vec<Dimension>,
    #[serde(flatten)]
    pub settings: ForecastConfig,
}

impl Default for ForecastStageConfig {
    fn default() -> Self {
        ForecastStageConfig {
            zones: Vec::new(),
            dimensions: Dimension::ALL.to_vec(),
            settings: ForecastConfig::default(),
        }
    }
}

/// Everything a run needs. Loaded from TOML; every table is optional.
///
/// `seed` drives the forests, k-means restarts, cold-start permutations and
/// (when `simulate` is given) the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub timezone: String,
    pub inputs: Option<InputPaths>,
    /// Generate inputs into `<out_dir>/sim` when `inputs` is absent.
    pub simulate: Option<SimConfig>,
    pub fusion: FusionConfig,
    pub features: FeaturesConfig,
    pub forest: ForestConfig,
    pub cluster: ClusterConfig,
    pub train: TrainConfig,
    pub evaluate: EvaluateConfig,
    pub coldstart: ColdStartStageConfig,
    pub forecast: ForecastStageConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: PathBuf::from("run"),
            seed: 0,
            timezone: "Asia/Singapore".into(),
            inputs: None,
            simulate: None,
            fusion: FusionConfig::default(),
            features: FeaturesConfig::default(),
            forest: ForestConfig::default(),
            cluster: ClusterConfig::default(),
            train: TrainConfig::default(),
            evaluate: EvaluateConfig::default(),
            coldstart: ColdStartStageConfig::default(),
            forecast: ForecastStageConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative input paths are taken relative to it.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(inputs) = &mut cfg.inputs {
            for p in [
                &mut inputs.votes,
                &mut inputs.sensors,
                &mut inputs.localization,
                &mut inputs.wearable,
                &mut inputs.zones,
            ] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        parse_timezone(&self.timezone)?;
        self.fusion.validate()?;
        self.forest.validate()?;
        if let Some(sim) = &self.simulate {
            sim.validate()?;
        }
        if self.features.sets.is_empty() {
            return Err(Error::InvalidConfig("at least one feature set is required".into()));
        }
        let mut names: Vec<&str> = self.features.sets.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("feature set names must be unique".into()));
        }
        for name in self
            .evaluate
            .feature_sets
            .iter()
            .chain([&self.train.feature_set, &self.coldstart.feature_set])
        {
            self.feature_set(name)?;
        }
        if self.cluster.k == 0 || self.cluster.restarts == 0 {
            return Err(Error::InvalidConfig("cluster k and restarts must be positive".into()));
        }
        Ok(())
    }

    pub fn feature_set(&self, name: &str) -> Result<&FeatureSetSpec> {
        self.features
            .sets
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown feature set {name:?}")))
    }

    pub fn eval_config(&self) -> Result<EvalConfig> {
        Ok(EvalConfig {
            forest: ForestConfig {
                master_seed: self.seed,
                ..self.forest
            },
            tz: parse_timezone(&self.timezone)?,
            room_encoding: match self.features.room_encoding {
                RoomEncoding::ClusterLabel { k, restarts, .. } => RoomEncoding::ClusterLabel {
                    k,
                    seed: self.seed,
                    restarts,
                },
                r => r,
            },
            context_scope: self.features.context_scope,
        })
    }

    pub fn evaluated_sets(&self) -> Vec<&FeatureSetSpec> {
        if self.evaluate.feature_sets.is_empty() {
            self.features.sets.iter().collect()
        } else {
            self.features
                .sets
                .iter()
                .filter(|s| self.evaluate.feature_sets.contains(&s.name))
                .collect()
        }
    }
}

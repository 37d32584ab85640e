//! Bagged CART random forest for multi-class preference prediction.
//!
//! Trees are grown to purity with Gini splits on bootstrap resamples. Tree
//! `i` draws from its own RNG seeded with `master_seed + i`, so training is
//! reproducible regardless of how trees are scheduled across threads.
//!
//! # Model file format
//!
//! Little-endian binary, version 1:
//!
//! ```text
//! magic  "CSRF"            4 bytes
//! version u32              = 1
//! header_len u32, header   JSON: {config, class_labels, feature_names}
//! n_trees u32
//! per tree: n_nodes u32, then per node
//!   tag u8 = 0 (split): feature u32, threshold f64, left u32, right u32
//!   tag u8 = 1 (leaf):  one u32 count per class
//! ```
//!
//! Thresholds are stored bit-exact, so `from_bytes(to_bytes(m)) == m`.

mod tree;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use tree::{gini_impurity, DecisionTree, Node};
use tree::{grow_tree, RankedData, TreeParams};

const MAGIC: &[u8; 4] = b"CSRF";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Count(k) => k.min(n_features),
        };
        k.max(1)
    }
}

impl Serialize for MaxFeatures {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MaxFeatures::Sqrt => s.serialize_str("sqrt"),
            MaxFeatures::All => s.serialize_str("all"),
            MaxFeatures::Count(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for MaxFeatures {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Count(u64),
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "sqrt" => Ok(MaxFeatures::Sqrt),
            Raw::Name(s) if s == "all" => Ok(MaxFeatures::All),
            Raw::Name(s) => Err(de::Error::custom(format!("unknown max_features {s:?}"))),
            Raw::Count(k) => Ok(MaxFeatures::Count(k as usize)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub master_seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 1000,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            master_seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidConfig("min_samples_split must be at least 2".into()));
        }
        if self.max_features == MaxFeatures::Count(0) {
            return Err(Error::InvalidConfig("max_features must be at least 1".into()));
        }
        Ok(())
    }
}

/// Row-major training data. `y[i]` indexes into `class_labels`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub feature_names: Vec<String>,
    pub class_labels: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub config: ForestConfig,
    pub class_labels: Vec<String>,
    pub feature_names: Vec<String>,
    pub trees: Vec<DecisionTree>,
}

pub fn fit_forest(data: &TrainingSet, cfg: &ForestConfig) -> Result<RandomForestModel> {
    cfg.validate()?;
    let n_features = data.feature_names.len();
    if data.x.len() != data.y.len() {
        return Err(Error::LengthMismatch(data.y.len(), data.x.len()));
    }
    if data.x.is_empty() {
        return Err(Error::EmptyDataset("training set".into()));
    }
    if data.class_labels.is_empty() {
        return Err(Error::InvalidConfig("no class labels".into()));
    }
    if let Some(row) = data.x.iter().find(|r| r.len() != n_features) {
        return Err(Error::FeatureMismatch {
            expected: data.feature_names.clone(),
            got: vec![format!("<{} values>", row.len())],
        });
    }
    let ranked = RankedData::new(&data.x, &data.y, n_features, data.class_labels.len())?;
    let distinct = {
        let mut seen = vec![false; data.class_labels.len()];
        data.y.iter().for_each(|&c| seen[c] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if distinct == 1 {
        log::warn!(
            "single-class training labels ({}); the model is a constant predictor",
            data.class_labels[data.y[0]]
        );
    }

    let params = TreeParams {
        min_samples_split: cfg.min_samples_split,
        max_features: cfg.max_features.resolve(n_features),
    };
    let n = ranked.n_rows();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed.wrapping_add(i as u64));
            let sample: Vec<u32> = if cfg.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n as u32)).collect()
            } else {
                (0..n as u32).collect()
            };
            grow_tree(&ranked, sample, params, &mut rng)
        })
        .collect();

    Ok(RandomForestModel {
        config: *cfg,
        class_labels: data.class_labels.clone(),
        feature_names: data.feature_names.clone(),
        trees,
    })
}

/// A single tree on all rows, every feature examined at every node. Used as a
/// reference point for the forest.
pub fn fit_single_tree(data: &TrainingSet, min_samples_split: usize) -> Result<DecisionTree> {
    let n_features = data.feature_names.len();
    let ranked = RankedData::new(&data.x, &data.y, n_features, data.class_labels.len())?;
    let params = TreeParams {
        min_samples_split,
        max_features: n_features.max(1),
    };
    let sample = (0..data.x.len() as u32).collect();
    Ok(grow_tree(&ranked, sample, params, &mut ChaCha8Rng::seed_from_u64(0)))
}

fn argmax(p: &[f64]) -> usize {
    // first maximum wins, i.e. ties go to the earlier class
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

impl RandomForestModel {
    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    fn check_rows(&self, rows: &[Vec<f64>]) -> Result<()> {
        match rows.iter().find(|r| r.len() != self.feature_names.len()) {
            Some(r) => Err(Error::FeatureMismatch {
                expected: self.feature_names.clone(),
                got: vec![format!("<{} values>", r.len())],
            }),
            None => Ok(()),
        }
    }

    /// Verifies that `names` matches the model's features in order.
    pub fn check_features(&self, names: &[String]) -> Result<()> {
        if names != self.feature_names.as_slice() {
            return Err(Error::FeatureMismatch {
                expected: self.feature_names.clone(),
                got: names.to_vec(),
            });
        }
        Ok(())
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes()];
        for tree in &self.trees {
            tree.accumulate_proba(row, &mut acc);
        }
        let n = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// Mean over trees of each leaf's normalized class counts.
    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_rows(rows)?;
        Ok(rows.par_iter().map(|r| self.predict_proba_row(r)).collect())
    }

    /// Class index per row; argmax ties go to the earlier class.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        Ok(self.predict_proba(rows)?.iter().map(|p| argmax(p)).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        #[derive(Serialize)]
        struct Header<'a> {
            config: &'a ForestConfig,
            class_labels: &'a [String],
            feature_names: &'a [String],
        }
        let header = serde_json::to_vec(&Header {
            config: &self.config,
            class_labels: &self.class_labels,
            feature_names: &self.feature_names,
        })
        .expect("header serializes");
        let mut out = Vec::with_capacity(16 + header.len() + self.trees.len() * 256);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.trees.len() as u32).to_le_bytes());
        for tree in &self.trees {
            out.extend_from_slice(&(tree.nodes.len() as u32).to_le_bytes());
            for node in &tree.nodes {
                match node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        out.push(0);
                        out.extend_from_slice(&(*feature as u32).to_le_bytes());
                        out.extend_from_slice(&threshold.to_le_bytes());
                        out.extend_from_slice(&(*left as u32).to_le_bytes());
                        out.extend_from_slice(&(*right as u32).to_le_bytes());
                    }
                    Node::Leaf { counts } => {
                        out.push(1);
                        for c in counts {
                            out.extend_from_slice(&c.to_le_bytes());
                        }
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<RandomForestModel> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(r.bad("bad magic"));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::ModelVersion(version));
        }
        let header_len = r.u32()? as usize;
        #[derive(Deserialize)]
        struct Header {
            config: ForestConfig,
            class_labels: Vec<String>,
            feature_names: Vec<String>,
        }
        let header: Header = serde_json::from_slice(r.take(header_len)?)?;
        let n_classes = header.class_labels.len();
        let n_trees = r.u32()? as usize;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let n_nodes = r.u32()? as usize;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let node = match r.take(1)?[0] {
                    0 => Node::Split {
                        feature: r.u32()? as usize,
                        threshold: f64::from_le_bytes(r.take(8)?.try_into().unwrap()),
                        left: r.u32()? as usize,
                        right: r.u32()? as usize,
                    },
                    1 => Node::Leaf {
                        counts: (0..n_classes).map(|_| r.u32()).collect::<Result<_>>()?,
                    },
                    _ => return Err(r.bad("unknown node tag")),
                };
                if let Node::Split { feature, left, right, .. } = node {
                    if feature >= header.feature_names.len() || left >= n_nodes || right >= n_nodes {
                        return Err(r.bad("node index out of range"));
                    }
                }
                nodes.push(node);
            }
            trees.push(DecisionTree { nodes });
        }
        if r.pos != bytes.len() {
            return Err(r.bad("trailing bytes"));
        }
        Ok(RandomForestModel {
            config: header.config,
            class_labels: header.class_labels,
            feature_names: header.feature_names,
            trees,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<RandomForestModel> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        RandomForestModel::from_bytes(&bytes)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn bad(&self, reason: &str) -> Error {
        Error::MalformedFile {
            path: "<model>".into(),
            reason: format!("{reason} at byte {}", self.pos),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.bad("unexpected end of model")),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(x: Vec<Vec<f64>>, y: Vec<usize>, n_classes: usize) -> TrainingSet {
        TrainingSet {
            feature_names: (0..x[0].len()).map(|i| format!("f{i}")).collect(),
            class_labels: (0..n_classes).map(|i| format!("c{i}")).collect(),
            x,
            y,
        }
    }

    fn small_cfg(n_trees: usize) -> ForestConfig {
        ForestConfig { n_trees, ..Default::default() }
    }

    #[test]
    fn single_class_is_constant_predictor() {
        let data = set(vec![vec![1.0], vec![2.0], vec![3.0]], vec![1, 1, 1], 3);
        let model = fit_forest(&data, &small_cfg(10)).unwrap();
        let p = model.predict_proba(&[vec![0.0], vec![100.0]]).unwrap();
        assert_eq!(p, vec![vec![0.0, 1.0, 0.0]; 2]);
        assert_eq!(model.predict(&[vec![5.0]]).unwrap(), vec![1]);
    }

    #[test]
    fn leaf_fractions_become_probabilities() {
        // one feature, constant: no split possible, leaf [3, 1]
        let data = set(vec![vec![0.0]; 4], vec![0, 0, 0, 1], 2);
        let cfg = ForestConfig { n_trees: 3, bootstrap: false, ..Default::default() };
        let model = fit_forest(&data, &cfg).unwrap();
        assert_eq!(model.predict_proba(&[vec![0.0]]).unwrap()[0], vec![0.75, 0.25]);
    }

    #[test]
    fn argmax_ties_go_to_first_class() {
        let data = set(vec![vec![0.0]; 2], vec![0, 1], 2);
        let cfg = ForestConfig { n_trees: 1, bootstrap: false, ..Default::default() };
        let model = fit_forest(&data, &cfg).unwrap();
        assert_eq!(model.predict_proba(&[vec![0.0]]).unwrap()[0], vec![0.5, 0.5]);
        assert_eq!(model.predict(&[vec![0.0]]).unwrap(), vec![0]);
    }

    #[test]
    fn feature_mismatch() {
        let data = set(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0, 1], 2);
        let model = fit_forest(&data, &small_cfg(2)).unwrap();
        assert!(matches!(model.predict(&[vec![0.0]]), Err(Error::FeatureMismatch { .. })));
        assert!(model.check_features(&["f1".into(), "f0".into()]).is_err());
        assert!(model.check_features(&["f0".into(), "f1".into()]).is_ok());
    }

    #[test]
    fn config_validation() {
        let data = set(vec![vec![0.0], vec![1.0]], vec![0, 1], 2);
        assert!(fit_forest(&data, &ForestConfig { n_trees: 0, ..Default::default() }).is_err());
        assert!(fit_forest(&data, &ForestConfig { min_samples_split: 1, ..Default::default() }).is_err());
        let one_row = set(vec![vec![0.0]], vec![0], 2);
        let model = fit_forest(&one_row, &small_cfg(1)).unwrap();
        assert_eq!(model.predict(&[vec![5.0]]).unwrap(), vec![0]);
        let mut empty = set(vec![vec![0.0]], vec![0], 2);
        (empty.x, empty.y) = (vec![], vec![]);
        assert!(matches!(fit_forest(&empty, &small_cfg(1)), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(20), 4);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::Count(50).resolve(8), 8);
        let json = serde_json::to_string(&ForestConfig::default()).unwrap();
        assert!(json.contains("\"max_features\":\"sqrt\""));
        let back: ForestConfig = serde_json::from_str(r#"{"max_features": 3}"#).unwrap();
        assert_eq!(back.max_features, MaxFeatures::Count(3));
        assert_eq!(back.n_trees, 1000);
    }

    #[test]
    fn truncated_model_is_rejected() {
        let data = set(vec![vec![0.0], vec![1.0]], vec![0, 1], 2);
        let bytes = fit_forest(&data, &small_cfg(2)).unwrap().to_bytes();
        assert!(RandomForestModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong = bytes.clone();
        wrong[4] = 9;
        assert!(matches!(RandomForestModel::from_bytes(&wrong), Err(Error::ModelVersion(9))));
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },

    #[error("duplicate vote id {0:?}")]
    DuplicateVoteId(String),

    #[error("no valid rows in {0}")]
    EmptyDataset(String),

    #[error("invalid zone map: {0}")]
    InvalidZoneMap(String),

    #[error("point ({x}, {y}) on floor {floor} is contained by equal-area zones {zones:?}")]
    AmbiguousZone {
        x: f64,
        y: f64,
        floor: i32,
        zones: Vec<String>,
    },

    #[error("degenerate clustering input: {0}")]
    DegenerateInput(String),

    #[error("gini impurity of an empty node")]
    EmptyNode,

    #[error("feature matrix {spec}/{dimension} has no rows after exclusions")]
    EmptyMatrix { spec: String, dimension: String },

    #[error("feature mismatch: model expects {expected:?}, got {got:?}")]
    FeatureMismatch {
        expected: Vec<String>,
        got: Vec<String>,
    },

    #[error("length mismatch: {0} true labels vs {1} predictions")]
    LengthMismatch(usize, usize),

    #[error("label {0} is outside the class set")]
    UnknownClass(usize),

    #[error("cold-start needs at least 2 occupants, found {0}")]
    InsufficientOccupants(usize),

    #[error("zone {0:?} has no votes")]
    EmptyZone(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("missing artifact {0} (run the producing stage first)")]
    MissingArtifact(PathBuf),

    #[error("unsupported model format version {0}")]
    ModelVersion(u32),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable name, used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedFile { .. } => "MalformedFile",
            Error::DuplicateVoteId(_) => "DuplicateVoteId",
            Error::EmptyDataset(_) => "EmptyDataset",
            Error::InvalidZoneMap(_) => "InvalidZoneMap",
            Error::AmbiguousZone { .. } => "AmbiguousZone",
            Error::DegenerateInput(_) => "DegenerateInput",
            Error::EmptyNode => "EmptyNode",
            Error::EmptyMatrix { .. } => "EmptyMatrix",
            Error::FeatureMismatch { .. } => "FeatureMismatch",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::UnknownClass(_) => "UnknownClass",
            Error::InsufficientOccupants(_) => "InsufficientOccupants",
            Error::EmptyZone(_) => "EmptyZone",
            Error::InvalidConfig(_) => "ConfigError",
            Error::MissingArtifact(_) => "MissingArtifact",
            Error::ModelVersion(_) => "ModelVersion",
            Error::Io { .. } => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

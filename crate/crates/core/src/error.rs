use std::fmt;

/// Pipeline stage a failure originated in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Load,
    MineRules,
    CorrectCategorical,
    CorrectNumeric,
    Prune,
    Normalize,
    SelectFeatures,
    Boost,
    Evaluate,
    Predict,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Load => "load",
            Stage::MineRules => "mine-rules",
            Stage::CorrectCategorical => "correct-categorical",
            Stage::CorrectNumeric => "correct-numeric",
            Stage::Prune => "prune",
            Stage::Normalize => "normalize",
            Stage::SelectFeatures => "select-features",
            Stage::Boost => "boost",
            Stage::Evaluate => "evaluate",
            Stage::Predict => "predict",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}: expected {expected} fields, found {found}")]
    Arity {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    ParseNumber {
        row: usize,
        column: String,
        value: String,
    },

    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },

    #[error("record {record} violates the schema: {reason}")]
    Conformance { record: usize, reason: String },

    #[error("class `{label}` has {count} records, fewer than the {k} folds requested")]
    TooFewPerClass {
        label: String,
        count: usize,
        k: usize,
    },

    #[error("empty string passed to the normalized edit distance")]
    EmptyString,

    #[error("column `{0}` is constant; it cannot be partitioned or normalized")]
    ConstantColumn(String),

    #[error("column `{column}` has a missing value in record {record}")]
    MissingValue { record: usize, column: String },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("linear SVM needs at least two classes in its training data")]
    SingleClass,

    #[error("invalid feature mask: {0}")]
    Mask(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, stage: Stage) -> Error {
        match self {
            tagged @ Error::Stage { .. } => tagged,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// Stage tag of a pipeline failure, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}

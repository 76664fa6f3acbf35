//! Base classifiers behind one train/predict interface. Every model sees
//! only the features its [`FeatureMask`] selects.

mod fuzzy_grid;
mod knn;
mod mask;
mod naive_bayes;
mod svm;
mod tree;

pub use fuzzy_grid::{FuzzyGrid, FuzzyParams, GridRule};
pub use knn::{Knn, KnnParams};
pub use mask::FeatureMask;
pub use naive_bayes::{NaiveBayes, NaiveBayesParams};
pub use svm::{
    objective as svm_objective, train_binary as svm_train_binary, Hyperplane, LinearSvm, SvmParams,
};
pub use tree::{DecisionTree, Node, TreeParams};

pub(crate) use knn::nearest;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{AttributeKind, Cell, Dataset, Record, Schema};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    NaiveBayes,
    Knn,
    DecisionTree,
    Svm,
    Fuzzy,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::NaiveBayes,
        ClassifierKind::Knn,
        ClassifierKind::DecisionTree,
        ClassifierKind::Svm,
        ClassifierKind::Fuzzy,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "naive_bayes",
            ClassifierKind::Knn => "knn",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Fuzzy => "fuzzy",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A classifier kind together with its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierConfig {
    NaiveBayes(NaiveBayesParams),
    Knn(KnnParams),
    DecisionTree(TreeParams),
    Svm(SvmParams),
    Fuzzy(FuzzyParams),
}

impl ClassifierConfig {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierConfig::NaiveBayes(_) => ClassifierKind::NaiveBayes,
            ClassifierConfig::Knn(_) => ClassifierKind::Knn,
            ClassifierConfig::DecisionTree(_) => ClassifierKind::DecisionTree,
            ClassifierConfig::Svm(_) => ClassifierKind::Svm,
            ClassifierConfig::Fuzzy(_) => ClassifierKind::Fuzzy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self {
            ClassifierConfig::NaiveBayes(p) if !(p.var_floor > 0.0 && p.var_floor.is_finite()) => {
                bad(format!(
                    "naive_bayes.var_floor must be positive, got {}",
                    p.var_floor
                ))
            }
            ClassifierConfig::Knn(p) if p.k == 0 => bad("knn.k must be at least 1".into()),
            ClassifierConfig::DecisionTree(p) if p.max_depth == 0 || p.min_leaf == 0 => {
                bad("decision_tree.max_depth and min_leaf must be at least 1".into())
            }
            ClassifierConfig::Svm(p) if p.epochs == 0 => {
                bad("svm.epochs must be at least 1".into())
            }
            ClassifierConfig::Svm(p)
                if !(p.regularization > 0.0 && p.regularization.is_finite()) =>
            {
                bad(format!(
                    "svm.regularization must be positive, got {}",
                    p.regularization
                ))
            }
            ClassifierConfig::Fuzzy(p) if p.regions_ok() => Ok(()),
            ClassifierConfig::Fuzzy(p) => bad(format!(
                "fuzzy.regions_per_column must be in 2..=9, got {}",
                p.regions_per_column
            )),
            _ => Ok(()),
        }
    }
}

impl FuzzyParams {
    fn regions_ok(&self) -> bool {
        (2..=9).contains(&self.regions_per_column)
    }
}

/// Hyperparameters for all five kinds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierParams {
    pub naive_bayes: NaiveBayesParams,
    pub knn: KnnParams,
    pub decision_tree: TreeParams,
    pub svm: SvmParams,
    pub fuzzy: FuzzyParams,
}

impl ClassifierParams {
    pub fn config(&self, kind: ClassifierKind) -> ClassifierConfig {
        match kind {
            ClassifierKind::NaiveBayes => ClassifierConfig::NaiveBayes(self.naive_bayes.clone()),
            ClassifierKind::Knn => ClassifierConfig::Knn(self.knn.clone()),
            ClassifierKind::DecisionTree => {
                ClassifierConfig::DecisionTree(self.decision_tree.clone())
            }
            ClassifierKind::Svm => ClassifierConfig::Svm(self.svm.clone()),
            ClassifierKind::Fuzzy => ClassifierConfig::Fuzzy(self.fuzzy.clone()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ClassifierKind::ALL
            .iter()
            .try_for_each(|&k| self.config(k).validate())
    }
}

/// Maps the non-class attributes of a record to a numeric vector.
/// Categorical values become codes into a sorted codebook built from
/// training data; unseen values get the code one past the end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    columns: Vec<usize>,
    names: Vec<String>,
    codebooks: Vec<Option<Vec<String>>>,
}

impl Encoder {
    pub fn fit(ds: &Dataset) -> Self {
        let columns = ds.schema.feature_columns();
        let names = columns
            .iter()
            .map(|&c| ds.schema.name(c).to_string())
            .collect();
        let codebooks = columns
            .iter()
            .map(|&c| {
                (ds.schema.kind(c) == AttributeKind::Categorical).then(|| {
                    let set: BTreeSet<&str> = ds
                        .records
                        .iter()
                        .filter_map(|r| r.cells[c].as_text())
                        .collect();
                    set.into_iter().map(String::from).collect()
                })
            })
            .collect();
        Encoder {
            columns,
            names,
            codebooks,
        }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Known-code count per feature for categorical features.
    pub fn categories(&self) -> Vec<Option<usize>> {
        self.codebooks
            .iter()
            .map(|b| b.as_ref().map(Vec::len))
            .collect()
    }

    /// Encodes feature `f` of `record`; `None` when the cell is missing.
    fn encode_one(&self, record: &Record, f: usize) -> Option<f64> {
        let cell = &record.cells[self.columns[f]];
        match (&self.codebooks[f], cell) {
            (_, Cell::Missing) => None,
            (Some(book), Cell::Text(s)) => Some(book.binary_search(s).unwrap_or(book.len()) as f64),
            (Some(book), Cell::Num(_)) => Some(book.len() as f64),
            (None, c) => c.as_num(),
        }
    }

    /// Encoded values of the `selected` features.
    pub fn encode(&self, record: &Record, selected: &[usize], index: usize) -> Result<Vec<f64>> {
        selected
            .iter()
            .map(|&f| {
                self.encode_one(record, f)
                    .ok_or_else(|| Error::MissingValue {
                        record: index,
                        column: self.names[f].clone(),
                    })
            })
            .collect()
    }
}

/// A complete dataset encoded once, for repeated training on column subsets.
#[derive(Clone, Debug)]
pub struct FeatureTable {
    pub encoder: Encoder,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_labels: usize,
}

impl FeatureTable {
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        let encoder = Encoder::fit(ds);
        let all: Vec<usize> = (0..encoder.len()).collect();
        let rows = ds
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| encoder.encode(r, &all, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureTable {
            encoder,
            rows,
            labels: ds.labels()?,
            n_labels: ds.schema.n_labels(),
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows restricted to `selected` features, in that order.
    pub fn project(&self, selected: &[usize], indices: &[usize]) -> Vec<Vec<f64>> {
        indices
            .iter()
            .map(|&i| selected.iter().map(|&f| self.rows[i][f]).collect())
            .collect()
    }
}

/// Fitted parameters of one base classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelState {
    NaiveBayes(NaiveBayes),
    Knn(Knn),
    DecisionTree(DecisionTree),
    Svm(LinearSvm),
    Fuzzy(FuzzyGrid),
}

impl ModelState {
    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            ModelState::NaiveBayes(m) => m.predict(x),
            ModelState::Knn(m) => m.predict(x),
            ModelState::DecisionTree(m) => m.predict(x),
            ModelState::Svm(m) => m.predict(x),
            ModelState::Fuzzy(m) => m.predict(x),
        }
    }
}

/// Fits `cfg` on already-projected rows. `categories` describes the
/// projected columns.
pub fn fit_rows(
    cfg: &ClassifierConfig,
    rows: &[Vec<f64>],
    labels: &[usize],
    n_labels: usize,
    categories: &[Option<usize>],
) -> Result<ModelState> {
    if rows.is_empty() {
        return Err(Error::InsufficientData(
            "cannot train on an empty dataset".into(),
        ));
    }
    Ok(match cfg {
        ClassifierConfig::NaiveBayes(p) => {
            ModelState::NaiveBayes(NaiveBayes::fit(rows, labels, n_labels, categories, p))
        }
        ClassifierConfig::Knn(p) => ModelState::Knn(Knn::fit(rows, labels, n_labels, p)),
        ClassifierConfig::DecisionTree(p) => {
            ModelState::DecisionTree(DecisionTree::fit(rows, labels, n_labels, p))
        }
        ClassifierConfig::Svm(p) => ModelState::Svm(LinearSvm::fit(rows, labels, n_labels, p)?),
        ClassifierConfig::Fuzzy(p) => ModelState::Fuzzy(FuzzyGrid::fit(rows, labels, n_labels, p)?),
    })
}

/// Fits on the rows of `table` listed in `indices`, using `mask` features.
pub fn fit_table(
    cfg: &ClassifierConfig,
    table: &FeatureTable,
    mask: &FeatureMask,
    indices: &[usize],
) -> Result<TrainedModel> {
    mask.check_len(table.encoder.len())?;
    let selected = mask.selected();
    let rows = table.project(&selected, indices);
    let labels: Vec<usize> = indices.iter().map(|&i| table.labels[i]).collect();
    let cats = table.encoder.categories();
    let cats: Vec<Option<usize>> = selected.iter().map(|&f| cats[f]).collect();
    let state = fit_rows(cfg, &rows, &labels, table.n_labels, &cats)?;
    Ok(TrainedModel {
        config: cfg.clone(),
        mask: mask.clone(),
        encoder: table.encoder.clone(),
        state,
    })
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A fitted classifier with the mask and encoding it was trained with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub config: ClassifierConfig,
    pub mask: FeatureMask,
    pub encoder: Encoder,
    pub state: ModelState,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    model: TrainedModel,
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        self.config.kind()
    }

    /// Label index for `record`. Only mask-selected cells are read.
    pub fn predict(&self, record: &Record) -> Result<usize> {
        self.predict_at(record, 0)
    }

    /// As [`predict`](Self::predict), reporting `index` as the record number on error.
    pub fn predict_at(&self, record: &Record, index: usize) -> Result<usize> {
        let x = self.encoder.encode(record, &self.mask.selected(), index)?;
        Ok(self.state.predict(&x))
    }

    pub fn predict_label<'s>(&self, record: &Record, schema: &'s Schema) -> Result<&'s str> {
        Ok(&schema.class_labels()[self.predict(record)?])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument {
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                doc.version
            )));
        }
        Ok(doc.model)
    }
}

/// Trains `cfg` on a complete dataset using the `mask` features.
pub fn train(cfg: &ClassifierConfig, ds: &Dataset, mask: &FeatureMask) -> Result<TrainedModel> {
    cfg.validate()?;
    mask.check_len(ds.schema.feature_count())?;
    if ds.is_empty() {
        return Err(Error::InsufficientData(
            "cannot train on an empty dataset".into(),
        ));
    }
    let table = FeatureTable::from_dataset(ds)?;
    let all: Vec<usize> = (0..table.len()).collect();
    fit_table(cfg, &table, mask, &all)
}

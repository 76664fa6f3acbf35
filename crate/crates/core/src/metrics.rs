//! Confusion matrices, accuracy, specificity, sensitivity, Cohen's kappa,
//! and cross-validated evaluation of the full pipeline and of plain
//! single-classifier baselines.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{fit_table, ClassifierKind, ClassifierParams, FeatureMask, FeatureTable};
use crate::cleanse::{self, zscore_apply, zscore_fit};
use crate::config::RshConfig;
use crate::ensemble::train_rsh;
use crate::error::{Error, Result, Stage, StageExt};
use crate::rng;
use crate::rulemine;
use crate::tabular::{stratified_kfold, Dataset};

/// Two-class confusion counts for a chosen positive label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn from_predictions(pred: &[usize], truth: &[usize], positive: usize) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::InsufficientData(format!(
                "{} predictions for {} labels",
                pred.len(),
                truth.len()
            )));
        }
        let mut cm = ConfusionMatrix::default();
        for (&p, &t) in pred.iter().zip(truth) {
            cm.record(p == positive, t == positive);
        }
        Ok(cm)
    }

    pub fn record(&mut self, predicted_positive: bool, actually_positive: bool) {
        match (predicted_positive, actually_positive) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
            fn_: self.fn_ + other.fn_,
        }
    }

    pub fn scores(&self) -> Scores {
        Scores {
            accuracy: accuracy(self),
            specificity: specificity(self),
            sensitivity: sensitivity(self),
            kappa: kappa(self),
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// (tp + tn) / N
pub fn accuracy(cm: &ConfusionMatrix) -> Option<f64> {
    ratio(cm.tp + cm.tn, cm.total())
}

/// tn / (tn + fp)
pub fn specificity(cm: &ConfusionMatrix) -> Option<f64> {
    ratio(cm.tn, cm.tn + cm.fp)
}

/// tp / (tp + fn)
pub fn sensitivity(cm: &ConfusionMatrix) -> Option<f64> {
    ratio(cm.tp, cm.tp + cm.fn_)
}

/// Cohen's kappa `(P(A) − P(E)) / (1 − P(E))` with the two-class chance
/// agreement `P(E) = [(tp+fn)(tp+fp) + (tn+fp)(tn+fn)] / N²`. Undefined
/// when `N = 0` or `P(E) = 1`.
pub fn kappa(cm: &ConfusionMatrix) -> Option<f64> {
    let n = cm.total();
    if n == 0 {
        return None;
    }
    let (tp, fp, tn, fn_) = (cm.tp as u128, cm.fp as u128, cm.tn as u128, cm.fn_ as u128);
    let nn = (n as u128) * (n as u128);
    let chance = (tp + fn_) * (tp + fp) + (tn + fp) * (tn + fn_);
    if chance == nn {
        return None;
    }
    // (P(A) − P(E)) / (1 − P(E)) = (N·(tp+tn) − chance) / (N² − chance)
    let num = n as f64 * (tp + tn) as f64 - chance as f64;
    Some(num / (nn - chance) as f64)
}

/// Serde adapter writing `None` as the string `"undefined"`.
mod undefined {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_str("undefined"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(Some(x)),
            Repr::Text(t) if t == "undefined" => Ok(None),
            Repr::Text(t) => Err(de::Error::custom(format!(
                "expected a number or \"undefined\", got {t:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    #[serde(with = "undefined")]
    pub accuracy: Option<f64>,
    #[serde(with = "undefined")]
    pub specificity: Option<f64>,
    #[serde(with = "undefined")]
    pub sensitivity: Option<f64>,
    #[serde(with = "undefined")]
    pub kappa: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub kind: ClassifierKind,
    pub mask: FeatureMask,
    pub selected_features: Vec<String>,
    pub subset_size: usize,
    pub boosting_level: usize,
    pub ranks: Vec<f64>,
    pub selection_fitness: f64,
    /// The member alone on this fold's predictable test records.
    pub test_confusion: ConfusionMatrix,
    pub test_scores: Scores,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub train_records: usize,
    pub retained_records: usize,
    pub test_records: usize,
    /// Input indices of test records still missing a required feature
    /// after repair; excluded from the confusion matrix.
    pub unpredictable: Vec<usize>,
    pub confusion: ConfusionMatrix,
    pub scores: Scores,
    pub members: Vec<MemberSummary>,
}

/// Published reference values printed next to the measured ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub accuracy: f64,
    pub specificity: f64,
    pub sensitivity: f64,
    pub kappa: f64,
    pub retained_records: usize,
}

impl Default for Reference {
    fn default() -> Self {
        Reference {
            accuracy: 0.9127,
            specificity: 0.9006,
            sensitivity: 0.9181,
            kappa: 0.953,
            retained_records: 731,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub kind: ClassifierKind,
    pub confusion: ConfusionMatrix,
    pub scores: Scores,
    pub fold_accuracy: Vec<f64>,
    #[serde(with = "undefined")]
    pub reference_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub seed: u64,
    pub folds: usize,
    pub positive_label: String,
    pub input_records: usize,
    /// Records kept when the whole input is cleansed at once.
    pub retained_records: usize,
    pub pruned_records: usize,
    pub confusion: ConfusionMatrix,
    pub scores: Scores,
    pub unpredictable_records: usize,
    pub fold_summaries: Vec<FoldSummary>,
    pub reference: Reference,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub baselines: Option<Vec<BaselineSummary>>,
}

const TAG_FOLDS: u64 = 0xf01d5;
const TAG_TRAIN: u64 = 0x7a1a;

/// Outer stratified k-fold evaluation of the full pipeline on raw data.
/// `positive` is the label index treated as positive.
pub fn cross_validate(
    raw: &Dataset,
    cfg: &RshConfig,
    k: usize,
    seed: u64,
    positive: usize,
) -> Result<EvalSummary> {
    cfg.validate()?;
    if positive >= raw.schema.n_labels() {
        return Err(Error::Config(format!(
            "positive label index {positive} out of range"
        )));
    }
    let folds =
        stratified_kfold(raw, k, rng::derive_seed(seed, &[TAG_FOLDS])).stage(Stage::Evaluate)?;

    let book = rulemine::mine(raw, &cfg.rulemine).stage(Stage::MineRules)?;
    let whole = cleanse::cleanse(raw, &book, &cfg.correction)?;
    let retained = whole.data.len();

    let fold_summaries = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| -> Result<FoldSummary> {
            let model = train_rsh(
                &fold.train,
                cfg,
                rng::derive_seed(seed, &[TAG_TRAIN, f as u64]),
            )?;
            let mut confusion = ConfusionMatrix::default();
            let mut member_cm = vec![ConfusionMatrix::default(); model.members.len()];
            let mut unpredictable = Vec::new();
            for (j, record) in fold.test.records.iter().enumerate() {
                let truth = fold.test.label(j)? == positive;
                let fixed =
                    cleanse::repair_record(record, &fold.test, &model.rules, &cfg.correction);
                match model.member_votes(&fixed, j) {
                    Ok(votes) => {
                        let ranks: Vec<f64> = model
                            .members
                            .iter()
                            .map(|m| m.rounds.iter().map(|r| r.rank).sum())
                            .collect();
                        let label = crate::ensemble::majority_vote(&votes, &ranks);
                        confusion.record(label == positive, truth);
                        for (cm, &v) in member_cm.iter_mut().zip(&votes) {
                            cm.record(v == positive, truth);
                        }
                    }
                    Err(Error::MissingValue { .. }) => unpredictable.push(fold.test_indices[j]),
                    Err(e) => return Err(e.at(Stage::Predict)),
                }
            }
            let members = model
                .selection
                .iter()
                .zip(&member_cm)
                .map(|(s, cm)| MemberSummary {
                    kind: s.kind,
                    mask: s.mask.clone(),
                    selected_features: s.selected_features.clone(),
                    subset_size: s.mask.count(),
                    boosting_level: s.boosting_level,
                    ranks: s.ranks.clone(),
                    selection_fitness: s.selection.fitness,
                    test_confusion: *cm,
                    test_scores: cm.scores(),
                })
                .collect();
            Ok(FoldSummary {
                fold: f,
                train_records: fold.train.len(),
                retained_records: model.training_records.len(),
                test_records: fold.test.len(),
                unpredictable,
                confusion,
                scores: confusion.scores(),
                members,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let confusion = fold_summaries
        .iter()
        .fold(ConfusionMatrix::default(), |acc, f| acc.add(&f.confusion));
    Ok(EvalSummary {
        seed,
        folds: k,
        positive_label: raw.schema.class_labels()[positive].clone(),
        input_records: raw.len(),
        retained_records: retained,
        pruned_records: raw.len() - retained,
        confusion,
        scores: confusion.scores(),
        unpredictable_records: fold_summaries.iter().map(|f| f.unpredictable.len()).sum(),
        fold_summaries,
        reference: Reference::default(),
        baselines: None,
    })
}

/// Reference accuracies of the plain classifiers on raw data.
pub fn baseline_reference(kind: ClassifierKind) -> Option<f64> {
    match kind {
        ClassifierKind::NaiveBayes => Some(0.7640),
        ClassifierKind::Knn => Some(0.7103),
        ClassifierKind::DecisionTree => Some(0.7588),
        ClassifierKind::Svm => Some(0.7693),
        ClassifierKind::Fuzzy => None,
    }
}

/// Plain classifiers on all features of a complete dataset: k-fold CV,
/// z-scores fitted on each training split, no cleansing, no boosting.
pub fn baselines(
    raw: &Dataset,
    params: &ClassifierParams,
    kinds: &[ClassifierKind],
    k: usize,
    seed: u64,
    positive: usize,
) -> Result<Vec<BaselineSummary>> {
    params.validate()?;
    let folds =
        stratified_kfold(raw, k, rng::derive_seed(seed, &[TAG_FOLDS])).stage(Stage::Evaluate)?;
    let mask = FeatureMask::all(raw.schema.feature_count());
    let per_fold = folds
        .par_iter()
        .map(|fold| -> Result<Vec<ConfusionMatrix>> {
            let norm = zscore_fit(&fold.train).stage(Stage::Normalize)?;
            let train = FeatureTable::from_dataset(&zscore_apply(&fold.train, &norm))
                .stage(Stage::Normalize)?;
            let test = zscore_apply(&fold.test, &norm);
            let all: Vec<usize> = (0..train.len()).collect();
            kinds
                .iter()
                .map(|&kind| {
                    let model = fit_table(&params.config(kind), &train, &mask, &all)
                        .stage(Stage::Evaluate)?;
                    let mut cm = ConfusionMatrix::default();
                    for (j, r) in test.records.iter().enumerate() {
                        let p = model.predict_at(r, j).stage(Stage::Predict)?;
                        cm.record(p == positive, test.label(j)? == positive);
                    }
                    Ok(cm)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(kinds
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let confusion = per_fold
                .iter()
                .fold(ConfusionMatrix::default(), |a, f| a.add(&f[i]));
            BaselineSummary {
                kind,
                confusion,
                scores: confusion.scores(),
                fold_accuracy: per_fold
                    .iter()
                    .map(|f| accuracy(&f[i]).unwrap_or(0.0))
                    .collect(),
                reference_accuracy: baseline_reference(kind),
            }
        })
        .collect())
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{:.2}", 100.0 * x))
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.3}"))
}

/// Fixed-width text report of an evaluation.
pub fn render_table(s: &EvalSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}-fold cross-validation, seed {}, positive class {}",
        s.folds, s.seed, s.positive_label
    );
    let _ = writeln!(
        out,
        "records: {} input, {} retained after cleansing, {} pruned, {} test records unpredictable",
        s.input_records, s.retained_records, s.pruned_records, s.unpredictable_records
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<16} {:>8} {:>8} {:>10} {:>12} {:>8}",
        "model", "records", "accuracy", "specificity", "sensitivity", "kappa"
    );
    let line = |out: &mut String, name: &str, records: String, sc: &Scores| {
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>8} {:>10} {:>12} {:>8}",
            name,
            records,
            pct(sc.accuracy),
            pct(sc.specificity),
            pct(sc.sensitivity),
            num(sc.kappa)
        );
    };
    line(&mut out, "rsh", s.retained_records.to_string(), &s.scores);
    let r = &s.reference;
    line(
        &mut out,
        "rsh (reference)",
        r.retained_records.to_string(),
        &Scores {
            accuracy: Some(r.accuracy),
            specificity: Some(r.specificity),
            sensitivity: Some(r.sensitivity),
            kappa: Some(r.kappa),
        },
    );

    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<16} {:>8} {:>8} {:>10} {:>12} {:>8}  {}",
        "member", "subset", "boosting", "accuracy", "sensitivity", "kappa", "masks by fold"
    );
    for kind in ClassifierKind::ALL {
        let ms: Vec<&MemberSummary> = s
            .fold_summaries
            .iter()
            .flat_map(|f| f.members.iter().filter(move |m| m.kind == kind))
            .collect();
        if ms.is_empty() {
            continue;
        }
        let cm = ms
            .iter()
            .fold(ConfusionMatrix::default(), |a, m| a.add(&m.test_confusion));
        let mean_size = ms.iter().map(|m| m.subset_size as f64).sum::<f64>() / ms.len() as f64;
        let masks: Vec<String> = ms.iter().map(|m| m.mask.to_string()).collect();
        let _ = writeln!(
            out,
            "{:<16} {:>8.1} {:>8} {:>10} {:>12} {:>8}  {}",
            kind.name(),
            mean_size,
            ms[0].boosting_level,
            pct(accuracy(&cm)),
            pct(sensitivity(&cm)),
            num(kappa(&cm)),
            masks.join(" ")
        );
    }

    if let Some(bs) = &s.baselines {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>10} {:>12} {:>8} {:>10}",
            "baseline", "accuracy", "specificity", "sensitivity", "kappa", "reference"
        );
        for b in bs {
            let _ = writeln!(
                out,
                "{:<16} {:>8} {:>10} {:>12} {:>8} {:>10}",
                b.kind.name(),
                pct(b.scores.accuracy),
                pct(b.scores.specificity),
                pct(b.scores.sensitivity),
                num(b.scores.kappa),
                pct(b.reference_accuracy)
            );
        }
    }

    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "kappa = (P(A) - P(E)) / (1 - P(E)), P(A) = (TP+TN)/N, P(E) = [(TP+FN)(TP+FP) + (TN+FP)(TN+FN)]/N^2."
    );
    let _ = writeln!(
        out,
        "Reference rows are fixed published values, not results of this run; their kappa of 0.953 \
         is not attainable at 91.27% accuracy for any two-class matrix."
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(tp: u64, fp: u64, tn: u64, fn_: u64) -> ConfusionMatrix {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    #[test]
    fn worked_example() {
        let m = cm(40, 15, 35, 10);
        assert_eq!(accuracy(&m), Some(0.75));
        assert_eq!(sensitivity(&m), Some(0.8));
        assert_eq!(specificity(&m), Some(0.7));
        assert_eq!(kappa(&m), Some(0.5));
    }

    #[test]
    fn element_wise_tally() {
        let m = ConfusionMatrix::from_predictions(&[1, 1, 0, 0], &[1, 0, 1, 0], 1).unwrap();
        assert_eq!(m, cm(1, 1, 1, 1));
        assert_eq!(
            ConfusionMatrix::from_predictions(&[0; 3], &[1; 3], 1).unwrap(),
            cm(0, 0, 0, 3)
        );
        assert!(ConfusionMatrix::from_predictions(&[0], &[0, 1], 1).is_err());
    }

    #[test]
    fn degenerate_cases_are_undefined() {
        let all_pos = cm(5, 0, 0, 0);
        assert_eq!(specificity(&all_pos), None);
        assert_eq!(kappa(&all_pos), None);
        assert_eq!(accuracy(&all_pos), Some(1.0));
        assert_eq!(kappa(&cm(3, 0, 4, 0)), Some(1.0));
        assert_eq!(kappa(&cm(0, 0, 0, 0)), None);
        // P(A) = P(E) = 0.5
        assert_eq!(kappa(&cm(25, 25, 25, 25)), Some(0.0));
    }

    #[test]
    fn undefined_serializes_as_text() {
        let s = cm(5, 0, 0, 0).scores();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"accuracy":1.0,"specificity":"undefined","sensitivity":1.0,"kappa":"undefined"}"#
        );
        let back: Scores = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::to_string(&cm(1, 2, 3, 4))
            .unwrap()
            .contains("\"fn\":4"));
    }
}

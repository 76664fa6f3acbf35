//! Local boosting of each base classifier, the rank-weighted vote inside a
//! boosted member, the majority vote across members, and the end-to-end
//! training pipeline.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{
    fit_rows, nearest, ClassifierConfig, ClassifierKind, Encoder, FeatureMask, FeatureTable,
    ModelState,
};
use crate::cleanse::{
    self, repair_record, zscore_apply, zscore_fit, CorrectionReport, NormalizationParams,
};
use crate::config::RshConfig;
use crate::error::{Error, Result, Stage, StageExt};
use crate::featsel::{evolve, GaOutcome};
use crate::rng;
use crate::rulemine::{self, RuleBook};
use crate::tabular::{Dataset, Record, Schema};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoostRounds {
    pub naive_bayes: usize,
    pub knn: usize,
    pub decision_tree: usize,
    pub svm: usize,
    pub fuzzy: usize,
}

impl Default for BoostRounds {
    fn default() -> Self {
        BoostRounds {
            naive_bayes: 4,
            knn: 3,
            decision_tree: 5,
            svm: 3,
            fuzzy: 3,
        }
    }
}

impl BoostRounds {
    pub fn get(&self, kind: ClassifierKind) -> usize {
        match kind {
            ClassifierKind::NaiveBayes => self.naive_bayes,
            ClassifierKind::Knn => self.knn,
            ClassifierKind::DecisionTree => self.decision_tree,
            ClassifierKind::Svm => self.svm,
            ClassifierKind::Fuzzy => self.fuzzy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoostConfig {
    pub rounds_per_kind: BoostRounds,
    pub neighbor_count: usize,
    pub weight_up: f64,
    pub weight_down: f64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            rounds_per_kind: BoostRounds::default(),
            neighbor_count: 5,
            weight_up: 2.0,
            weight_down: 0.5,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        for kind in ClassifierKind::ALL {
            if self.rounds_per_kind.get(kind) == 0 {
                return Err(Error::Config(format!(
                    "boost.rounds_per_kind.{kind} must be at least 1"
                )));
            }
        }
        if self.neighbor_count == 0 {
            return Err(Error::Config(
                "boost.neighbor_count must be at least 1".into(),
            ));
        }
        if !(self.weight_up > 1.0 && self.weight_up.is_finite()) {
            return Err(Error::Config(format!(
                "boost.weight_up must exceed 1, got {}",
                self.weight_up
            )));
        }
        if !(self.weight_down > 0.0 && self.weight_down < 1.0) {
            return Err(Error::Config(format!(
                "boost.weight_down must be in (0, 1), got {}",
                self.weight_down
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub state: ModelState,
    /// Accuracy on the full training set.
    pub rank: f64,
}

/// One base classifier kind boosted over several rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedMember {
    pub config: ClassifierConfig,
    pub mask: FeatureMask,
    pub encoder: Encoder,
    pub normalization: NormalizationParams,
    pub rounds: Vec<BoostRound>,
}

/// Instance weights before the first round and after each round.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoostTrace {
    pub weights: Vec<Vec<f64>>,
    /// Per round: which training instances that round misclassified.
    pub misclassified: Vec<Vec<bool>>,
}

const MAX_RESAMPLES: u64 = 16;

/// Local boosting on a complete, normalized feature table.
pub fn local_boost(
    cfg: &ClassifierConfig,
    table: &FeatureTable,
    mask: &FeatureMask,
    normalization: &NormalizationParams,
    rounds: usize,
    boost: &BoostConfig,
    seed: u64,
) -> Result<(BoostedMember, BoostTrace)> {
    boost.validate()?;
    mask.check_len(table.encoder.len())?;
    let n = table.len();
    if n < boost.neighbor_count + 1 {
        return Err(Error::InsufficientData(format!(
            "boosting needs more than {} records, got {n}",
            boost.neighbor_count
        )));
    }
    let rounds = rounds.max(1);
    let selected = mask.selected();
    let all: Vec<usize> = (0..n).collect();
    let rows = table.project(&selected, &all);
    let cats = table.encoder.categories();
    let cats: Vec<Option<usize>> = selected.iter().map(|&f| cats[f]).collect();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| nearest(&rows, &rows[i], boost.neighbor_count, Some(i)))
        .collect();

    let mut weights = vec![1.0 / n as f64; n];
    let mut trace = BoostTrace {
        weights: vec![weights.clone()],
        misclassified: Vec::new(),
    };
    let mut fitted = Vec::with_capacity(rounds);
    for round in 0..rounds {
        let dist =
            WeightedIndex::new(&weights).map_err(|e| Error::InsufficientData(e.to_string()))?;
        let mut attempt = 0;
        let state = loop {
            let mut r = rng::stream(seed, &[round as u64, attempt]);
            let sample: Vec<usize> = (0..n).map(|_| dist.sample(&mut r)).collect();
            let x: Vec<Vec<f64>> = sample.iter().map(|&i| rows[i].clone()).collect();
            let y: Vec<usize> = sample.iter().map(|&i| table.labels[i]).collect();
            match fit_rows(cfg, &x, &y, table.n_labels, &cats) {
                Err(Error::SingleClass) if attempt + 1 < MAX_RESAMPLES => attempt += 1,
                other => break other?,
            }
        };
        let wrong: Vec<bool> = rows
            .iter()
            .zip(&table.labels)
            .map(|(x, &y)| state.predict(x) != y)
            .collect();
        let correct = wrong.iter().filter(|&&w| !w).count();
        fitted.push(BoostRound {
            state,
            rank: correct as f64 / n as f64,
        });
        reweight(&mut weights, &wrong, &neighbours, boost);
        trace.weights.push(weights.clone());
        trace.misclassified.push(wrong);
    }
    Ok((
        BoostedMember {
            config: cfg.clone(),
            mask: mask.clone(),
            encoder: table.encoder.clone(),
            normalization: normalization.clone(),
            rounds: fitted,
        },
        trace,
    ))
}

/// One boosting weight update followed by renormalization. A misclassified
/// instance is up-weighted when a strict majority of its neighbours are
/// also misclassified and down-weighted otherwise; correctly classified
/// instances are down-weighted.
pub fn reweight(
    weights: &mut [f64],
    wrong: &[bool],
    neighbours: &[Vec<usize>],
    boost: &BoostConfig,
) {
    for i in 0..weights.len() {
        let factor = if wrong[i] {
            let bad = neighbours[i].iter().filter(|&&j| wrong[j]).count();
            if 2 * bad > neighbours[i].len() {
                boost.weight_up
            } else {
                boost.weight_down
            }
        } else {
            boost.weight_down
        };
        weights[i] *= factor;
    }
    let total: f64 = weights.iter().sum();
    for w in weights {
        *w /= total;
    }
}

impl BoostedMember {
    pub fn kind(&self) -> ClassifierKind {
        self.config.kind()
    }

    /// Per-round predictions for a record that is already normalized.
    pub fn round_votes(&self, normalized: &Record, index: usize) -> Result<Vec<usize>> {
        let x = self
            .encoder
            .encode(normalized, &self.mask.selected(), index)?;
        Ok(self.rounds.iter().map(|r| r.state.predict(&x)).collect())
    }

    /// Rank-weighted vote over rounds for a cleansed, unnormalized record.
    pub fn predict(&self, record: &Record) -> Result<usize> {
        self.predict_at(record, 0)
    }

    pub fn predict_at(&self, record: &Record, index: usize) -> Result<usize> {
        let votes = self.round_votes(&self.normalization.apply_record(record), index)?;
        let ranks: Vec<f64> = self.rounds.iter().map(|r| r.rank).collect();
        Ok(rank_weighted_vote(&votes, &ranks))
    }
}

/// Label maximizing the summed rank of rounds voting for it. Ties go to
/// the label of the highest-ranked round among the tied labels, then to
/// the lowest label.
pub fn rank_weighted_vote(votes: &[usize], ranks: &[f64]) -> usize {
    let n_labels = votes.iter().copied().max().map_or(1, |m| m + 1);
    let mut score = vec![0.0; n_labels];
    for (&v, &r) in votes.iter().zip(ranks) {
        score[v] += r;
    }
    let top = score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..n_labels).filter(|&l| score[l] == top).collect();
    if tied.len() == 1 {
        return tied[0];
    }
    let mut best: Option<(f64, usize)> = None;
    for (&v, &r) in votes.iter().zip(ranks) {
        if tied.contains(&v) && best.is_none_or(|(br, bl)| r > br || (r == br && v < bl)) {
            best = Some((r, v));
        }
    }
    best.map_or(tied[0], |(_, l)| l)
}

/// Plain majority over member votes; ties go to the highest summed
/// member rank, then the lowest label.
pub fn majority_vote(votes: &[usize], member_ranks: &[f64]) -> usize {
    let n_labels = votes.iter().copied().max().map_or(1, |m| m + 1);
    let mut count = vec![0usize; n_labels];
    let mut rank = vec![0.0; n_labels];
    for (&v, &r) in votes.iter().zip(member_ranks) {
        count[v] += 1;
        rank[v] += r;
    }
    let mut best = 0;
    for l in 1..n_labels {
        if count[l] > count[best] || (count[l] == count[best] && rank[l] > rank[best]) {
            best = l;
        }
    }
    best
}

/// Feature selection outcome and boosting levels of one member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub kind: ClassifierKind,
    pub mask: FeatureMask,
    pub selected_features: Vec<String>,
    pub boosting_level: usize,
    pub ranks: Vec<f64>,
    pub selection: GaOutcome,
}

pub const RSH_FORMAT_VERSION: u32 = 1;

/// The trained five-member ensemble with everything needed to replay it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RshModel {
    pub version: u32,
    pub seed: u64,
    pub schema: Schema,
    pub config: RshConfig,
    pub rules: RuleBook,
    pub members: Vec<BoostedMember>,
    pub reports: Vec<CorrectionReport>,
    pub selection: Vec<MemberReport>,
    /// Input indices of the records kept after cleansing.
    pub training_records: Vec<usize>,
    /// Ensemble predictions for `training_records`, in the same order.
    pub training_predictions: Vec<usize>,
}

/// Seed tags for the pipeline's random streams.
const TAG_SELECT: u64 = 0x5e1ec7;
const TAG_BOOST: u64 = 0xb0057;

/// Training data after rule mining, cleansing and normalization.
struct Prepared {
    rules: RuleBook,
    reports: Vec<CorrectionReport>,
    training_records: Vec<usize>,
    clean: Dataset,
    normalization: NormalizationParams,
    normalized: Dataset,
}

fn prepare(raw: &Dataset, cfg: &RshConfig) -> Result<Prepared> {
    cfg.validate()?;
    raw.validate().stage(Stage::Load)?;
    let rules = rulemine::mine(raw, &cfg.rulemine).stage(Stage::MineRules)?;
    let (repaired, mut reports) = cleanse::repair(raw, &rules, &cfg.correction);
    let (clean, prune_report) = cleanse::prune_incomplete(&repaired, &cfg.correction);
    let pruned: BTreeSet<usize> = prune_report.pruned.iter().copied().collect();
    let training_records: Vec<usize> = (0..raw.len()).filter(|i| !pruned.contains(i)).collect();
    reports.push(prune_report);
    if clean.is_empty() {
        return Err(Error::InsufficientData("every record was pruned".into()).at(Stage::Prune));
    }
    let normalization = zscore_fit(&clean).stage(Stage::Normalize)?;
    let normalized = zscore_apply(&clean, &normalization);
    Ok(Prepared {
        rules,
        reports,
        training_records,
        clean,
        normalization,
        normalized,
    })
}

fn select_kind(
    kind: ClassifierKind,
    normalized: &Dataset,
    cfg: &RshConfig,
    seed: u64,
) -> Result<GaOutcome> {
    let k = kind.index() as u64;
    evolve(
        &cfg.classifiers.config(kind),
        normalized,
        &cfg.ga,
        rng::derive_seed(seed, &[TAG_SELECT, k]),
    )
    .stage(Stage::SelectFeatures)
}

/// Feature selection alone: the masks [`train_rsh`] would pick with the same
/// seed, in [`ClassifierKind::ALL`] order.
pub fn select_features(
    raw: &Dataset,
    cfg: &RshConfig,
    seed: u64,
) -> Result<Vec<(ClassifierKind, GaOutcome)>> {
    let prep = prepare(raw, cfg)?;
    ClassifierKind::ALL
        .par_iter()
        .map(|&kind| Ok((kind, select_kind(kind, &prep.normalized, cfg, seed)?)))
        .collect()
}

/// Names of the features a mask selects.
pub fn feature_names(schema: &Schema, mask: &FeatureMask) -> Vec<String> {
    let columns = schema.feature_columns();
    mask.selected()
        .into_iter()
        .map(|f| schema.name(columns[f]).to_string())
        .collect()
}

/// Rule mining, cleansing, normalization, per-kind feature selection and
/// per-kind local boosting.
pub fn train_rsh(raw: &Dataset, cfg: &RshConfig, seed: u64) -> Result<RshModel> {
    let Prepared {
        rules,
        reports,
        training_records,
        clean,
        normalization,
        normalized,
    } = prepare(raw, cfg)?;
    let table = FeatureTable::from_dataset(&normalized).stage(Stage::Normalize)?;

    let built = ClassifierKind::ALL
        .par_iter()
        .map(|&kind| {
            let selection = select_kind(kind, &normalized, cfg, seed)?;
            let rounds = cfg.boost.rounds_per_kind.get(kind);
            let (member, _) = local_boost(
                &cfg.classifiers.config(kind),
                &table,
                &selection.mask,
                &normalization,
                rounds,
                &cfg.boost,
                rng::derive_seed(seed, &[TAG_BOOST, kind.index() as u64]),
            )
            .stage(Stage::Boost)?;
            let report = MemberReport {
                kind,
                mask: selection.mask.clone(),
                selected_features: feature_names(&raw.schema, &selection.mask),
                boosting_level: rounds,
                ranks: member.rounds.iter().map(|r| r.rank).collect(),
                selection,
            };
            Ok((member, report))
        })
        .collect::<Result<Vec<_>>>()?;
    let (members, selection): (Vec<_>, Vec<_>) = built.into_iter().unzip();

    let mut model = RshModel {
        version: RSH_FORMAT_VERSION,
        seed,
        schema: raw.schema.clone(),
        config: cfg.clone(),
        rules,
        members,
        reports,
        selection,
        training_records,
        training_predictions: Vec::new(),
    };
    model.training_predictions = clean
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| model.predict_at(r, i))
        .collect::<Result<_>>()
        .stage(Stage::Predict)?;
    Ok(model)
}

impl RshModel {
    /// Member votes for a cleansed, unnormalized record.
    pub fn member_votes(&self, record: &Record, index: usize) -> Result<Vec<usize>> {
        self.members
            .iter()
            .map(|m| m.predict_at(record, index))
            .collect()
    }

    /// Ensemble label for a cleansed, unnormalized record.
    pub fn predict(&self, record: &Record) -> Result<usize> {
        self.predict_at(record, 0)
    }

    pub fn predict_at(&self, record: &Record, index: usize) -> Result<usize> {
        let votes = self.member_votes(record, index)?;
        let ranks: Vec<f64> = self
            .members
            .iter()
            .map(|m| m.rounds.iter().map(|r| r.rank).sum())
            .collect();
        Ok(majority_vote(&votes, &ranks))
    }

    /// Repairs a raw record with the model's rules, then predicts.
    pub fn predict_raw(&self, record: &Record, index: usize) -> Result<usize> {
        let fixed = repair_record(
            record,
            &Dataset::empty(self.schema.clone()),
            &self.rules,
            &self.config.correction,
        );
        self.predict_at(&fixed, index)
    }

    /// Names of the required features that are MISSING in `record`.
    pub fn missing_required(&self, record: &Record) -> Vec<String> {
        let columns = self.schema.feature_columns();
        self.required_features()
            .selected()
            .into_iter()
            .map(|f| columns[f])
            .filter(|&c| record.cells[c].is_missing())
            .map(|c| self.schema.name(c).to_string())
            .collect()
    }

    /// Union of the member masks.
    pub fn required_features(&self) -> FeatureMask {
        self.members
            .iter()
            .map(|m| m.mask.clone())
            .reduce(|a, b| a.union(&b))
            .expect("five members")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: RshModel = serde_json::from_str(s)?;
        if model.version != RSH_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                model.version
            )));
        }
        if model.members.len() != ClassifierKind::ALL.len() {
            return Err(Error::Config(format!(
                "model has {} members, expected 5",
                model.members.len()
            )));
        }
        Ok(model)
    }
}

//! Context-dependent attribute correction, residual-record pruning and
//! z-score normalization.
//!
//! Class labels are never altered by any stage here.

mod categorical;
mod levenshtein;
mod normalize;
mod numeric;
mod report;

pub use categorical::correct_categorical;
pub use levenshtein::{lev_dist, norm_lev};
pub use normalize::{zscore_apply, zscore_fit, ColumnStats, NormalizationParams};
pub use numeric::{correct_numeric, region_spans};
pub use report::{CellChange, ChangeKind, CorrectionReport, RuleRef, UnresolvedCell};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage, StageExt};
use crate::rulemine::RuleBook;
use crate::tabular::{Dataset, Record};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectionConfig {
    /// Normalized edit distance below which a categorical value is repaired.
    pub lev_threshold: f64,
    /// Records with more missing cells than this after correction are removed.
    pub prune_policy: usize,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        CorrectionConfig {
            lev_threshold: 0.2,
            prune_policy: 0,
        }
    }
}

impl CorrectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lev_threshold > 0.0 && self.lev_threshold < 1.0) {
            return Err(Error::Config(format!(
                "lev_threshold must be in (0, 1), got {}",
                self.lev_threshold
            )));
        }
        Ok(())
    }
}

/// Drops records whose missing-cell count exceeds `cfg.prune_policy`;
/// survivors keep their order.
pub fn prune_incomplete(ds: &Dataset, cfg: &CorrectionConfig) -> (Dataset, CorrectionReport) {
    let mut report = CorrectionReport::new("prune", ds.len());
    let mut kept = Vec::with_capacity(ds.len());
    for (i, r) in ds.records.iter().enumerate() {
        if r.missing_count() > cfg.prune_policy {
            report.pruned.push(i);
        } else {
            kept.push(r.clone());
        }
    }
    (ds.with_records(kept), report.finish(0))
}

/// Output of the full cleansing sequence.
#[derive(Clone, Debug)]
pub struct Cleansed {
    pub data: Dataset,
    pub reports: Vec<CorrectionReport>,
}

/// Categorical correction, then numeric correction, then pruning.
pub fn cleanse(ds: &Dataset, book: &RuleBook, cfg: &CorrectionConfig) -> Result<Cleansed> {
    cfg.validate().stage(Stage::CorrectCategorical)?;
    let (repaired, r1) = repair(ds, book, cfg);
    let (pruned, r3) = prune_incomplete(&repaired, cfg);
    let mut reports = r1;
    reports.push(r3);
    Ok(Cleansed {
        data: pruned,
        reports,
    })
}

/// Both correction passes without pruning.
pub fn repair(
    ds: &Dataset,
    book: &RuleBook,
    cfg: &CorrectionConfig,
) -> (Dataset, Vec<CorrectionReport>) {
    let (step1, r1) = correct_categorical(ds, &book.crisp, cfg);
    let (step2, r2) = correct_numeric(&step1, &book.fuzzy, &book.regions);
    (step2, vec![r1, r2])
}

/// Prediction-time repair of a single record.
pub fn repair_record(
    record: &Record,
    template: &Dataset,
    book: &RuleBook,
    cfg: &CorrectionConfig,
) -> Record {
    let one = template.with_records(vec![record.clone()]);
    let (fixed, _) = repair(&one, book, cfg);
    fixed
        .records
        .into_iter()
        .next()
        .expect("one record in, one out")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulemine::{AssociationRule, FuzzyRegion, FuzzyRule, Item, Shoulder};
    use crate::tabular::{Attribute, Cell, Schema};

    fn cat_schema() -> Schema {
        Schema::new(
            vec![
                Attribute::categorical("A"),
                Attribute::categorical("B"),
                Attribute::categorical("C"),
                Attribute::categorical("class"),
            ],
            3,
            vec!["k".into()],
        )
        .unwrap()
    }

    fn row(a: &str, b: &str, c: Option<&str>) -> Record {
        Record::new(vec![
            Cell::text(a),
            Cell::text(b),
            c.map_or(Cell::Missing, Cell::text),
            Cell::text("k"),
        ])
    }

    fn diabetic_rule() -> AssociationRule {
        AssociationRule {
            antecedent: vec![Item::new(0, "x"), Item::new(1, "y")],
            consequent: Item::new(2, "diabetic"),
            support: 10,
            antecedent_support: 11,
            confidence: 10.0 / 11.0,
        }
    }

    #[test]
    fn typo_is_repaired() {
        let ds = Dataset::new(cat_schema(), vec![row("x", "y", Some("diabetc"))]).unwrap();
        let (out, rep) = correct_categorical(&ds, &[diabetic_rule()], &CorrectionConfig::default());
        assert_eq!(out.records[0].cells[2], Cell::text("diabetic"));
        assert_eq!(rep.changes.len(), 1);
        assert_eq!(rep.changes[0].kind, ChangeKind::Repaired);
        assert!((rep.changes[0].evidence - 0.5 * (1.0 / 7.0 + 1.0 / 8.0)).abs() < 1e-15);
        assert!(rep.is_consistent());
    }

    #[test]
    fn genuine_disagreement_is_kept() {
        let ds = Dataset::new(cat_schema(), vec![row("x", "y", Some("healthy"))]).unwrap();
        let (out, rep) = correct_categorical(&ds, &[diabetic_rule()], &CorrectionConfig::default());
        assert_eq!(out, ds);
        assert!(rep.changes.is_empty());
        assert_eq!(rep.unresolved.len(), 1);
    }

    #[test]
    fn consistent_record_is_untouched() {
        let ds = Dataset::new(
            cat_schema(),
            vec![row("x", "y", Some("diabetic")), row("q", "y", Some("zz"))],
        )
        .unwrap();
        let (out, rep) = correct_categorical(&ds, &[diabetic_rule()], &CorrectionConfig::default());
        assert_eq!(out, ds);
        assert!(rep.changes.is_empty() && rep.unresolved.is_empty());
        assert_eq!(rep.untouched_cells, rep.examined_cells);
    }

    #[test]
    fn missing_cell_filled_by_most_confident_rule() {
        let mut weak = diabetic_rule();
        weak.antecedent = vec![Item::new(0, "x")];
        weak.consequent = Item::new(2, "other");
        weak.confidence = 0.8;
        let ds = Dataset::new(cat_schema(), vec![row("x", "y", None)]).unwrap();
        let (out, rep) =
            correct_categorical(&ds, &[weak, diabetic_rule()], &CorrectionConfig::default());
        assert_eq!(out.records[0].cells[2], Cell::text("diabetic"));
        assert_eq!(rep.changes[0].kind, ChangeKind::Filled);
        assert_eq!(rep.changes[0].rule, RuleRef::Crisp(1));
    }

    fn num_schema() -> Schema {
        Schema::new(
            vec![
                Attribute::numeric("glucose"),
                Attribute::numeric("insulin"),
                Attribute::categorical("class"),
            ],
            2,
            vec!["k".into()],
        )
        .unwrap()
    }

    fn fixture_regions() -> Vec<FuzzyRegion> {
        let tri = |column, label: &str, l, p, r, shoulder| FuzzyRegion {
            column,
            label: label.into(),
            left: l,
            peak: p,
            right: r,
            shoulder,
        };
        vec![
            tri(0, "low", 50.0, 50.0, 150.0, Shoulder::Left),
            tri(0, "high", 50.0, 150.0, 150.0, Shoulder::Right),
            tri(1, "low", 0.0, 0.0, 400.0, Shoulder::Left),
            tri(1, "high", 0.0, 400.0, 400.0, Shoulder::Right),
        ]
    }

    #[test]
    fn missing_insulin_takes_winning_peak() {
        let regions = fixture_regions();
        let rules = vec![
            FuzzyRule {
                antecedent: vec![1],
                consequent: 3,
                cardinality: 3.2,
                antecedent_cardinality: 4.0,
                confidence: 0.8,
            },
            FuzzyRule {
                antecedent: vec![0],
                consequent: 2,
                cardinality: 3.0,
                antecedent_cardinality: 4.0,
                confidence: 0.75,
            },
        ];
        // glucose 140: high = 0.9, low = 0.1
        let ds = Dataset::new(
            num_schema(),
            vec![Record::new(vec![
                Cell::Num(140.0),
                Cell::Missing,
                Cell::text("k"),
            ])],
        )
        .unwrap();
        let (out, rep) = correct_numeric(&ds, &rules, &regions);
        assert_eq!(out.records[0].cells[1], Cell::Num(400.0));
        assert!((rep.changes[0].evidence - 0.72).abs() < 1e-12);
        assert_eq!(rep.changes[0].rule, RuleRef::Fuzzy(0));
    }

    #[test]
    fn clean_numeric_record_unchanged_and_zero_score_logged() {
        let regions = fixture_regions();
        let rules = vec![FuzzyRule {
            antecedent: vec![1],
            consequent: 3,
            cardinality: 3.0,
            antecedent_cardinality: 3.0,
            confidence: 1.0,
        }];
        let ds = Dataset::new(
            num_schema(),
            vec![
                Record::new(vec![Cell::Num(100.0), Cell::Num(20.0), Cell::text("k")]),
                // glucose at the low shoulder: high membership 0
                Record::new(vec![Cell::Num(50.0), Cell::Missing, Cell::text("k")]),
            ],
        )
        .unwrap();
        let (out, rep) = correct_numeric(&ds, &rules, &regions);
        assert_eq!(out, ds);
        assert!(rep.changes.is_empty());
        assert_eq!(rep.unresolved.len(), 1);
        assert_eq!(rep.unresolved[0].record, 1);
    }

    #[test]
    fn out_of_span_value_is_suspicious() {
        let regions = fixture_regions();
        let rules = vec![FuzzyRule {
            antecedent: vec![1],
            consequent: 3,
            cardinality: 3.0,
            antecedent_cardinality: 3.0,
            confidence: 1.0,
        }];
        let ds = Dataset::new(
            num_schema(),
            vec![Record::new(vec![
                Cell::Num(150.0),
                Cell::Num(-5.0),
                Cell::text("k"),
            ])],
        )
        .unwrap();
        let (out, _) = correct_numeric(&ds, &rules, &regions);
        assert_eq!(out.records[0].cells[1], Cell::Num(400.0));
    }

    #[test]
    fn prune_by_policy() {
        let ds = Dataset::new(
            num_schema(),
            vec![
                Record::new(vec![Cell::Num(1.0), Cell::Num(2.0), Cell::text("k")]),
                Record::new(vec![Cell::Num(1.0), Cell::Missing, Cell::text("k")]),
                Record::new(vec![Cell::Num(3.0), Cell::Num(2.0), Cell::text("k")]),
            ],
        )
        .unwrap();
        let (out, rep) = prune_incomplete(&ds, &CorrectionConfig::default());
        assert_eq!(out.len(), 2);
        assert_eq!(rep.pruned, vec![1]);
        assert_eq!(out.records[1].cells[0], Cell::Num(3.0));
        assert!(rep.is_consistent());
        let lenient = CorrectionConfig {
            prune_policy: 1,
            ..Default::default()
        };
        assert_eq!(prune_incomplete(&ds, &lenient).0.len(), 3);
    }

    #[test]
    fn threshold_validation() {
        assert!(CorrectionConfig {
            lev_threshold: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(CorrectionConfig {
            lev_threshold: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}

use std::cmp::Ordering;

use crate::rulemine::AssociationRule;
use crate::tabular::{AttributeKind, Cell, Dataset};

use super::levenshtein::norm_lev;
use super::report::{CellChange, ChangeKind, CorrectionReport, RuleRef, UnresolvedCell};
use super::CorrectionConfig;

/// Higher confidence, then higher support, then lower index.
fn rule_order(rules: &[AssociationRule], a: usize, b: usize) -> Ordering {
    rules[b]
        .confidence
        .total_cmp(&rules[a].confidence)
        .then(rules[b].support.cmp(&rules[a].support))
        .then(a.cmp(&b))
}

/// Repairs categorical cells that disagree with a matching validation rule.
///
/// Rules are matched against the record as it was read, so corrections in
/// one column never feed rule matching for another column of the same
/// record. A present value is replaced by the consequent with the smallest
/// normalized edit distance when that distance is below the threshold; a
/// missing value takes the consequent of the most confident matching rule.
/// The class column is never touched.
pub fn correct_categorical(
    ds: &Dataset,
    rules: &[AssociationRule],
    cfg: &CorrectionConfig,
) -> (Dataset, CorrectionReport) {
    let schema = &ds.schema;
    let columns = schema.columns_of_kind(AttributeKind::Categorical);
    let mut report = CorrectionReport::new("correct-categorical", ds.len());
    let mut out = ds.records.clone();

    for (i, record) in ds.records.iter().enumerate() {
        for &c in &columns {
            let matching: Vec<usize> = rules
                .iter()
                .enumerate()
                .filter(|(_, r)| r.consequent.column == c && r.covers(&record.cells))
                .map(|(k, _)| k)
                .collect();
            if matching.is_empty() {
                continue;
            }
            let current = match &record.cells[c] {
                Cell::Text(s) if !s.is_empty() => Some(s.as_str()),
                _ => None,
            };
            let Some(value) = current else {
                let best = *matching
                    .iter()
                    .min_by(|&&a, &&b| rule_order(rules, a, b))
                    .expect("non-empty");
                let new = Cell::text(rules[best].consequent.value.clone());
                out[i].cells[c] = new.clone();
                report.changes.push(CellChange {
                    record: i,
                    column: schema.name(c).to_string(),
                    old: record.cells[c].clone(),
                    new,
                    kind: ChangeKind::Filled,
                    rule: RuleRef::Crisp(best),
                    evidence: rules[best].confidence,
                });
                continue;
            };
            let scored: Vec<(usize, f64)> = matching
                .iter()
                .map(|&k| {
                    let target = rules[k].consequent.value.as_str();
                    let d = if target == value {
                        0.0
                    } else {
                        norm_lev(value, target).unwrap_or(f64::INFINITY)
                    };
                    (k, d)
                })
                .collect();
            let &(best, dist) = scored
                .iter()
                .min_by(|a, b| {
                    a.1.total_cmp(&b.1)
                        .then_with(|| rule_order(rules, a.0, b.0))
                })
                .expect("non-empty");
            let target = &rules[best].consequent.value;
            if target == value {
                continue;
            }
            if dist < cfg.lev_threshold {
                let new = Cell::text(target.clone());
                out[i].cells[c] = new.clone();
                report.changes.push(CellChange {
                    record: i,
                    column: schema.name(c).to_string(),
                    old: record.cells[c].clone(),
                    new,
                    kind: ChangeKind::Repaired,
                    rule: RuleRef::Crisp(best),
                    evidence: dist,
                });
            } else {
                report.unresolved.push(UnresolvedCell {
                    record: i,
                    column: schema.name(c).to_string(),
                    value: record.cells[c].clone(),
                    reason: format!("closest rule consequent `{target}` at distance {dist}"),
                });
            }
        }
    }
    let examined = ds.len() * columns.len();
    (ds.with_records(out), report.finish(examined))
}

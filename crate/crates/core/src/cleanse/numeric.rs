use std::collections::BTreeMap;

use crate::rulemine::{FuzzyRegion, FuzzyRule};
use crate::tabular::{Cell, Dataset};

use super::report::{CellChange, ChangeKind, CorrectionReport, RuleRef, UnresolvedCell};

/// Observed span `[left of lowest region, right of highest region]` per column.
pub fn region_spans(regions: &[FuzzyRegion]) -> BTreeMap<usize, (f64, f64)> {
    let mut spans: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for r in regions {
        let e = spans
            .entry(r.column)
            .or_insert((f64::INFINITY, f64::NEG_INFINITY));
        e.0 = e.0.min(r.left);
        e.1 = e.1.max(r.right);
    }
    spans
}

fn is_suspicious(cell: &Cell, span: (f64, f64)) -> bool {
    match cell {
        Cell::Num(v) => *v < span.0 || *v > span.1,
        _ => true,
    }
}

/// Fills suspicious numeric cells (missing, or outside the column's region
/// span) with the peak of the best-scoring fuzzy rule consequent.
///
/// A rule targeting the cell's column scores `confidence × min antecedent
/// membership`, with memberships taken from the record's other cells;
/// suspicious antecedent cells count as membership 0. Ties prefer higher
/// confidence, then higher cardinality, then the lower rule index.
pub fn correct_numeric(
    ds: &Dataset,
    rules: &[FuzzyRule],
    regions: &[FuzzyRegion],
) -> (Dataset, CorrectionReport) {
    let schema = &ds.schema;
    let spans = region_spans(regions);
    let mut report = CorrectionReport::new("correct-numeric", ds.len());
    let mut out = ds.records.clone();

    for (i, record) in ds.records.iter().enumerate() {
        let suspicious: BTreeMap<usize, bool> = spans
            .iter()
            .map(|(&c, &span)| (c, is_suspicious(&record.cells[c], span)))
            .collect();
        let membership = |r: usize| -> f64 {
            let reg = &regions[r];
            if suspicious[&reg.column] {
                return 0.0;
            }
            record.cells[reg.column]
                .as_num()
                .map_or(0.0, |x| reg.membership(x))
        };
        for (&c, _) in suspicious.iter().filter(|(_, &s)| s) {
            let best = rules
                .iter()
                .enumerate()
                .filter(|(_, r)| regions[r.consequent].column == c)
                .map(|(k, r)| {
                    let m = r
                        .antecedent
                        .iter()
                        .map(|&a| membership(a))
                        .fold(f64::INFINITY, f64::min);
                    (k, r.confidence * m)
                })
                .min_by(|a, b| {
                    b.1.total_cmp(&a.1)
                        .then(rules[b.0].confidence.total_cmp(&rules[a.0].confidence))
                        .then(rules[b.0].cardinality.total_cmp(&rules[a.0].cardinality))
                        .then(a.0.cmp(&b.0))
                });
            match best {
                Some((k, score)) if score > 0.0 => {
                    let new = Cell::Num(regions[rules[k].consequent].peak);
                    out[i].cells[c] = new.clone();
                    report.changes.push(CellChange {
                        record: i,
                        column: schema.name(c).to_string(),
                        old: record.cells[c].clone(),
                        new,
                        kind: ChangeKind::Filled,
                        rule: RuleRef::Fuzzy(k),
                        evidence: score,
                    });
                }
                _ => report.unresolved.push(UnresolvedCell {
                    record: i,
                    column: schema.name(c).to_string(),
                    value: record.cells[c].clone(),
                    reason: "no applicable fuzzy rule".into(),
                }),
            }
        }
    }
    let examined = ds.len() * spans.len();
    (ds.with_records(out), report.finish(examined))
}

use serde::{Deserialize, Serialize};

use crate::tabular::Cell;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleRef {
    Crisp(usize),
    Fuzzy(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    /// A present value replaced by a close rule consequent.
    Repaired,
    /// A missing or out-of-span value replaced.
    Filled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellChange {
    pub record: usize,
    pub column: String,
    pub old: Cell,
    pub new: Cell,
    pub kind: ChangeKind,
    pub rule: RuleRef,
    /// Edit distance for repairs, rule confidence for categorical fills,
    /// rule score for numeric fills.
    pub evidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnresolvedCell {
    pub record: usize,
    pub column: String,
    pub value: Cell,
    pub reason: String,
}

/// Audit trail of one cleansing stage. Record indices refer to the stage's
/// input dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub stage: String,
    pub input_records: usize,
    pub examined_cells: usize,
    pub corrected_cells: usize,
    pub untouched_cells: usize,
    pub pruned_records: usize,
    pub retained_records: usize,
    pub changes: Vec<CellChange>,
    pub unresolved: Vec<UnresolvedCell>,
    pub pruned: Vec<usize>,
}

impl CorrectionReport {
    pub(crate) fn new(stage: &str, input_records: usize) -> Self {
        CorrectionReport {
            stage: stage.to_string(),
            input_records,
            examined_cells: 0,
            corrected_cells: 0,
            untouched_cells: 0,
            pruned_records: 0,
            retained_records: input_records,
            changes: Vec::new(),
            unresolved: Vec::new(),
            pruned: Vec::new(),
        }
    }

    pub(crate) fn finish(mut self, examined: usize) -> Self {
        self.examined_cells = examined;
        self.corrected_cells = self.changes.len();
        self.untouched_cells = examined - self.corrected_cells;
        self.pruned_records = self.pruned.len();
        self.retained_records = self.input_records - self.pruned_records;
        self
    }

    /// Checks the summary counts against the logs.
    pub fn is_consistent(&self) -> bool {
        self.corrected_cells == self.changes.len()
            && self.corrected_cells + self.untouched_cells == self.examined_cells
            && self.pruned_records == self.pruned.len()
            && self.pruned_records + self.retained_records == self.input_records
    }
}

//! Validation-rule mining: crisp association rules over categorical columns
//! and fuzzy association rules over numeric columns.
//!
//! Rules carry one consequent and at most three antecedents. The fuzzy side
//! applies the same 3+1 bound, which caps mined itemsets at four regions.

mod apriori;
mod fuzzy;

pub use apriori::{apriori, generate_rules, AssociationRule, FrequentItemset, Item};
pub use fuzzy::{
    build_regions, fuzzy_apriori, fuzzy_rules, fuzzy_rules_observed, membership_table, partition,
    FuzzyItemset, FuzzyMineConfig, FuzzyRegion, FuzzyRule, Shoulder,
};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{AttributeKind, Dataset};

pub const MAX_ITEMSET_LEN: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RuleMineConfig {
    /// Minimum record count of a frequent crisp itemset.
    pub min_support: usize,
    pub min_confidence: f64,
    pub fuzzy: FuzzyMineConfig,
}

impl Default for RuleMineConfig {
    fn default() -> Self {
        RuleMineConfig {
            min_support: 2,
            min_confidence: 0.8,
            fuzzy: FuzzyMineConfig::default(),
        }
    }
}

impl RuleMineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_support == 0 {
            return Err(Error::Config("min_support must be at least 1".into()));
        }
        if !(self.min_confidence > 0.0 && self.min_confidence <= 1.0) {
            return Err(Error::Config(format!(
                "min_confidence must be in (0, 1], got {}",
                self.min_confidence
            )));
        }
        self.fuzzy.validate()
    }
}

/// Mined validation rules plus the fuzzy regions they refer to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleBook {
    pub columns: Vec<String>,
    pub regions: Vec<FuzzyRegion>,
    pub crisp: Vec<AssociationRule>,
    pub fuzzy: Vec<FuzzyRule>,
}

impl RuleBook {
    pub fn empty(columns: Vec<String>) -> Self {
        RuleBook {
            columns,
            regions: Vec::new(),
            crisp: Vec::new(),
            fuzzy: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Human-readable `column=label` for a region index.
    pub fn describe_region(&self, r: usize) -> String {
        let reg = &self.regions[r];
        format!("{}={}", self.columns[reg.column], reg.label)
    }
}

/// Mines both rule families from the non-class columns of `ds`. Numeric
/// columns with fewer than two distinct observed values get no regions.
pub fn mine(ds: &Dataset, cfg: &RuleMineConfig) -> Result<RuleBook> {
    cfg.validate()?;
    let columns: Vec<String> = ds
        .schema
        .attributes()
        .iter()
        .map(|a| a.name.clone())
        .collect();
    let mut book = RuleBook::empty(columns);

    let categorical = ds.schema.columns_of_kind(AttributeKind::Categorical);
    if !categorical.is_empty() {
        let sets = apriori(ds, &categorical, cfg.min_support)?;
        book.crisp = generate_rules(&sets, cfg.min_confidence);
    }

    for c in ds.schema.columns_of_kind(AttributeKind::Numeric) {
        let distinct: BTreeSet<u64> = ds
            .records
            .iter()
            .filter_map(|r| r.cells[c].as_num())
            .map(f64::to_bits)
            .collect();
        if distinct.len() < 2 {
            continue;
        }
        book.regions
            .extend(build_regions(ds, c, cfg.fuzzy.regions_per_column)?);
    }
    if !book.regions.is_empty() {
        let sets = fuzzy_apriori(ds, &book.regions, &cfg.fuzzy)?;
        book.fuzzy = fuzzy_rules_observed(ds, &book.regions, &sets, cfg.fuzzy.lambda);
    }
    Ok(book)
}

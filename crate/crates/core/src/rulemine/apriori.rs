use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{AttributeKind, Cell, Dataset};

use super::MAX_ITEMSET_LEN;

/// `column = value` for a categorical column.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Item {
    pub column: usize,
    pub value: String,
}

impl Item {
    pub fn new(column: usize, value: impl Into<String>) -> Self {
        Item {
            column,
            value: value.into(),
        }
    }
}

/// Items are sorted by column; at most one item per column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequentItemset {
    pub items: Vec<Item>,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: Vec<Item>,
    pub consequent: Item,
    /// Support of antecedent ∪ consequent.
    pub support: usize,
    pub antecedent_support: usize,
    pub confidence: f64,
}

impl AssociationRule {
    pub fn covers(&self, cells: &[Cell]) -> bool {
        self.antecedent
            .iter()
            .all(|it| cells[it.column].as_text() == Some(it.value.as_str()))
    }
}

/// Level-wise frequent itemset mining over categorical columns.
///
/// Each record is a transaction holding one item per non-missing column in
/// `columns`. Returns every itemset of 1 to 4 items whose support is at least
/// `min_support`, ordered by size and then lexicographically.
pub fn apriori(
    ds: &Dataset,
    columns: &[usize],
    min_support: usize,
) -> Result<Vec<FrequentItemset>> {
    if columns.is_empty() {
        return Err(Error::Config(
            "apriori needs at least one categorical column".into(),
        ));
    }
    if min_support == 0 {
        return Err(Error::Config("min_support must be at least 1".into()));
    }
    for &c in columns {
        if c >= ds.schema.len() || ds.schema.kind(c) != AttributeKind::Categorical {
            return Err(Error::Config(format!(
                "column {c} is not a categorical column"
            )));
        }
    }
    let mut columns = columns.to_vec();
    columns.sort_unstable();
    columns.dedup();

    // Intern items; ids follow (column, value) order so a sorted id list is
    // also sorted by column.
    let mut distinct: Vec<Item> = ds
        .records
        .iter()
        .flat_map(|r| {
            columns
                .iter()
                .filter_map(move |&c| r.cells[c].as_text().map(|v| Item::new(c, v)))
        })
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    distinct.sort();
    let id_of: HashMap<&Item, u32> = distinct
        .iter()
        .enumerate()
        .map(|(i, it)| (it, i as u32))
        .collect();
    let item_col: Vec<usize> = distinct.iter().map(|it| it.column).collect();

    // transaction[c] = item id present in column c
    let transactions: Vec<Vec<Option<u32>>> = ds
        .records
        .iter()
        .map(|r| {
            let mut t = vec![None; ds.schema.len()];
            for &c in &columns {
                if let Some(v) = r.cells[c].as_text() {
                    t[c] = Some(id_of[&Item::new(c, v)]);
                }
            }
            t
        })
        .collect();

    let support = |set: &[u32]| -> usize {
        transactions
            .iter()
            .filter(|t| set.iter().all(|&id| t[item_col[id as usize]] == Some(id)))
            .count()
    };

    let mut out: Vec<(Vec<u32>, usize)> = Vec::new();
    let mut level: Vec<(Vec<u32>, usize)> = (0..distinct.len() as u32)
        .map(|id| (vec![id], support(&[id])))
        .filter(|(_, s)| *s >= min_support)
        .collect();

    let mut size = 1;
    while !level.is_empty() {
        out.extend(level.iter().cloned());
        if size == MAX_ITEMSET_LEN {
            break;
        }
        let frequent: HashSet<&[u32]> = level.iter().map(|(s, _)| s.as_slice()).collect();
        let mut next = Vec::new();
        for (i, (a, _)) in level.iter().enumerate() {
            for (b, _) in &level[i + 1..] {
                if a[..size - 1] != b[..size - 1] {
                    continue;
                }
                let (la, lb) = (a[size - 1], b[size - 1]);
                if item_col[la as usize] == item_col[lb as usize] {
                    continue;
                }
                let mut cand = a.clone();
                cand.push(lb);
                let all_subsets_frequent = (0..cand.len()).all(|skip| {
                    let sub: Vec<u32> = cand
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != skip)
                        .map(|(_, &x)| x)
                        .collect();
                    frequent.contains(sub.as_slice())
                });
                if all_subsets_frequent {
                    let s = support(&cand);
                    if s >= min_support {
                        next.push((cand, s));
                    }
                }
            }
        }
        level = next;
        size += 1;
    }

    let mut result: Vec<FrequentItemset> = out
        .into_iter()
        .map(|(ids, support)| FrequentItemset {
            items: ids
                .iter()
                .map(|&id| distinct[id as usize].clone())
                .collect(),
            support,
        })
        .collect();
    result.sort_by(|x, y| {
        x.items
            .len()
            .cmp(&y.items.len())
            .then_with(|| x.items.cmp(&y.items))
    });
    Ok(result)
}

/// Rules with a single consequent and 1 to 3 antecedents from every
/// frequent itemset of size two or more. Antecedent supports are looked up
/// among `itemsets`; itemsets whose subsets are absent yield no rules.
pub fn generate_rules(itemsets: &[FrequentItemset], min_confidence: f64) -> Vec<AssociationRule> {
    let support_of: BTreeMap<&[Item], usize> = itemsets
        .iter()
        .map(|s| (s.items.as_slice(), s.support))
        .collect();
    let mut rules = Vec::new();
    for set in itemsets.iter().filter(|s| s.items.len() >= 2) {
        for j in 0..set.items.len() {
            let antecedent: Vec<Item> = set
                .items
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, it)| it.clone())
                .collect();
            let Some(&ant_support) = support_of.get(antecedent.as_slice()) else {
                continue;
            };
            if ant_support == 0 {
                continue;
            }
            let confidence = set.support as f64 / ant_support as f64;
            if confidence >= min_confidence {
                rules.push(AssociationRule {
                    antecedent,
                    consequent: set.items[j].clone(),
                    support: set.support,
                    antecedent_support: ant_support,
                    confidence,
                });
            }
        }
    }
    rules
}

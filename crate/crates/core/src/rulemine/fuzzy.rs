use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{AttributeKind, Dataset};

use super::MAX_ITEMSET_LEN;

/// Which side of a region stays at full membership past its peak.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shoulder {
    None,
    Left,
    Right,
}

/// A labelled triangular membership function over one numeric column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRegion {
    pub column: usize,
    pub label: String,
    pub left: f64,
    pub peak: f64,
    pub right: f64,
    pub shoulder: Shoulder,
}

impl FuzzyRegion {
    pub fn membership(&self, x: f64) -> f64 {
        if x == self.peak {
            1.0
        } else if x < self.peak {
            if self.shoulder == Shoulder::Left {
                1.0
            } else if x <= self.left {
                0.0
            } else {
                (x - self.left) / (self.peak - self.left)
            }
        } else if self.shoulder == Shoulder::Right {
            1.0
        } else if x >= self.right {
            0.0
        } else {
            (self.right - x) / (self.right - self.peak)
        }
    }
}

fn region_labels(n: usize) -> Vec<String> {
    match n {
        2 => vec!["low".into(), "high".into()],
        3 => vec!["low".into(), "mid".into(), "high".into()],
        5 => ["very-low", "low", "mid", "high", "very-high"]
            .map(String::from)
            .to_vec(),
        _ => (0..n).map(|i| format!("r{i}")).collect(),
    }
}

/// Uniform triangular partition of `values`' span into `n` regions with
/// shoulder-shaped end regions.
pub fn partition(column: usize, values: &[f64], n: usize, name: &str) -> Result<Vec<FuzzyRegion>> {
    if n < 2 {
        return Err(Error::Config(format!(
            "regions_per_column must be at least 2, got {n}"
        )));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo < hi) {
        return Err(Error::ConstantColumn(name.to_string()));
    }
    let peaks: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    Ok(region_labels(n)
        .into_iter()
        .enumerate()
        .map(|(i, label)| FuzzyRegion {
            column,
            label,
            left: peaks[i.saturating_sub(1)],
            peak: peaks[i],
            right: peaks[(i + 1).min(n - 1)],
            shoulder: match i {
                0 => Shoulder::Left,
                _ if i == n - 1 => Shoulder::Right,
                _ => Shoulder::None,
            },
        })
        .collect())
}

/// Fuzzy regions for a numeric column, spanning its observed [min, max].
pub fn build_regions(ds: &Dataset, column: usize, n: usize) -> Result<Vec<FuzzyRegion>> {
    if column >= ds.schema.len() || ds.schema.kind(column) != AttributeKind::Numeric {
        return Err(Error::Config(format!("column {column} is not numeric")));
    }
    let values: Vec<f64> = ds
        .records
        .iter()
        .filter_map(|r| r.cells[column].as_num())
        .collect();
    partition(column, &values, n, ds.schema.name(column))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FuzzyMineConfig {
    /// Minimum scalar cardinality of a large itemset.
    pub alpha: f64,
    /// Minimum rule confidence (inclusive).
    pub lambda: f64,
    pub regions_per_column: usize,
    /// Keep only the highest-cardinality region of each column when
    /// forming candidate itemsets.
    pub dominant_region_only: bool,
}

impl Default for FuzzyMineConfig {
    fn default() -> Self {
        FuzzyMineConfig {
            alpha: 2.5,
            lambda: 0.7,
            regions_per_column: 3,
            dominant_region_only: true,
        }
    }
}

impl FuzzyMineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::Config(format!(
                "lambda must be in (0, 1], got {}",
                self.lambda
            )));
        }
        if self.regions_per_column < 2 {
            return Err(Error::Config(format!(
                "regions_per_column must be at least 2, got {}",
                self.regions_per_column
            )));
        }
        Ok(())
    }
}

/// Region indices (into the region list the itemset was mined from),
/// sorted by column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyItemset {
    pub regions: Vec<usize>,
    pub cardinality: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub antecedent: Vec<usize>,
    pub consequent: usize,
    /// Cardinality of antecedent ∪ consequent.
    pub cardinality: f64,
    pub antecedent_cardinality: f64,
    pub confidence: f64,
}

/// `memberships[r][i]`: membership of record `i` in region `r`, 0 when the
/// cell is missing.
pub fn membership_table(ds: &Dataset, regions: &[FuzzyRegion]) -> Vec<Vec<f64>> {
    regions
        .iter()
        .map(|reg| {
            ds.records
                .iter()
                .map(|r| {
                    r.cells[reg.column]
                        .as_num()
                        .map_or(0.0, |x| reg.membership(x))
                })
                .collect()
        })
        .collect()
}

/// Σ over records of the minimum member membership.
fn cardinality(table: &[Vec<f64>], set: &[usize], n_records: usize) -> f64 {
    (0..n_records)
        .map(|i| {
            set.iter()
                .map(|&r| table[r][i])
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Level-wise fuzzy itemset mining: returns every itemset (one region per
/// column, up to four regions) with scalar cardinality ≥ alpha.
pub fn fuzzy_apriori(
    ds: &Dataset,
    regions: &[FuzzyRegion],
    cfg: &FuzzyMineConfig,
) -> Result<Vec<FuzzyItemset>> {
    cfg.validate()?;
    Ok(large_itemsets(
        ds,
        regions,
        cfg.alpha,
        cfg.dominant_region_only,
    ))
}

/// Core of [`fuzzy_apriori`] without config validation, so thresholds of
/// zero can be probed. Itemsets with zero cardinality are never returned.
pub(crate) fn large_itemsets(
    ds: &Dataset,
    regions: &[FuzzyRegion],
    alpha: f64,
    dominant_only: bool,
) -> Vec<FuzzyItemset> {
    let n = ds.len();
    let table = membership_table(ds, regions);
    let passes = |c: f64| c >= alpha && c > 0.0;

    let mut singles: Vec<(usize, f64)> = (0..regions.len())
        .map(|r| (r, table[r].iter().sum::<f64>()))
        .collect();
    if dominant_only {
        let mut best: Vec<(usize, usize, f64)> = Vec::new(); // (column, region, card)
        for &(r, c) in &singles {
            let col = regions[r].column;
            match best.iter_mut().find(|b| b.0 == col) {
                Some(b) if c > b.2 => *b = (col, r, c),
                Some(_) => {}
                None => best.push((col, r, c)),
            }
        }
        singles = best.into_iter().map(|(_, r, c)| (r, c)).collect();
    }
    singles.retain(|&(_, c)| passes(c));
    singles.sort_by_key(|&(r, _)| (regions[r].column, r));

    let mut out: Vec<FuzzyItemset> = Vec::new();
    let mut level: Vec<FuzzyItemset> = singles
        .into_iter()
        .map(|(r, c)| FuzzyItemset {
            regions: vec![r],
            cardinality: c,
        })
        .collect();
    let mut size = 1;
    while !level.is_empty() {
        out.extend(level.iter().cloned());
        if size == MAX_ITEMSET_LEN {
            break;
        }
        let large: HashSet<&[usize]> = level.iter().map(|s| s.regions.as_slice()).collect();
        let mut next = Vec::new();
        for (i, a) in level.iter().enumerate() {
            for b in &level[i + 1..] {
                if a.regions[..size - 1] != b.regions[..size - 1] {
                    continue;
                }
                let (la, lb) = (a.regions[size - 1], b.regions[size - 1]);
                if regions[la].column >= regions[lb].column {
                    continue;
                }
                let mut cand = a.regions.clone();
                cand.push(lb);
                let closed = (0..cand.len()).all(|skip| {
                    let sub: Vec<usize> = cand
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != skip)
                        .map(|(_, &x)| x)
                        .collect();
                    large.contains(sub.as_slice())
                });
                if !closed {
                    continue;
                }
                let c = cardinality(&table, &cand, n);
                if passes(c) {
                    next.push(FuzzyItemset {
                        regions: cand,
                        cardinality: c,
                    });
                }
            }
        }
        level = next;
        size += 1;
    }
    out
}

/// Rules with one consequent region and 1 to 3 antecedent regions whose
/// confidence card(antecedent ∪ consequent) / card(antecedent) is ≥ lambda.
pub fn fuzzy_rules(itemsets: &[FuzzyItemset], lambda: f64) -> Vec<FuzzyRule> {
    let card_of: std::collections::BTreeMap<&[usize], f64> = itemsets
        .iter()
        .map(|s| (s.regions.as_slice(), s.cardinality))
        .collect();
    let mut rules = Vec::new();
    for set in itemsets.iter().filter(|s| s.regions.len() >= 2) {
        for j in 0..set.regions.len() {
            let antecedent: Vec<usize> = set
                .regions
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &r)| r)
                .collect();
            let Some(&ant) = card_of.get(antecedent.as_slice()) else {
                continue;
            };
            if ant <= 0.0 {
                continue;
            }
            let confidence = (set.cardinality / ant).min(1.0);
            if confidence >= lambda {
                rules.push(FuzzyRule {
                    antecedent,
                    consequent: set.regions[j],
                    cardinality: set.cardinality,
                    antecedent_cardinality: ant,
                    confidence,
                });
            }
        }
    }
    rules
}

/// As [`fuzzy_rules`], but each rule's antecedent cardinality only counts
/// records where the consequent's column is observed, so missing cells in
/// the target column do not dilute confidence. Identical to
/// [`fuzzy_rules`] on complete data.
pub fn fuzzy_rules_observed(
    ds: &Dataset,
    regions: &[FuzzyRegion],
    itemsets: &[FuzzyItemset],
    lambda: f64,
) -> Vec<FuzzyRule> {
    let table = membership_table(ds, regions);
    let observed: Vec<Vec<bool>> = (0..ds.schema.len())
        .map(|c| {
            ds.records
                .iter()
                .map(|r| !r.cells[c].is_missing())
                .collect()
        })
        .collect();
    let mut rules = Vec::new();
    for set in itemsets.iter().filter(|s| s.regions.len() >= 2) {
        for j in 0..set.regions.len() {
            let antecedent: Vec<usize> = set
                .regions
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &r)| r)
                .collect();
            let seen = &observed[regions[set.regions[j]].column];
            let ant: f64 = (0..ds.len())
                .map(|i| {
                    if seen[i] {
                        antecedent
                            .iter()
                            .map(|&r| table[r][i])
                            .fold(f64::INFINITY, f64::min)
                    } else {
                        0.0
                    }
                })
                .sum();
            if ant <= 0.0 {
                continue;
            }
            let confidence = (set.cardinality / ant).min(1.0);
            if confidence >= lambda {
                rules.push(FuzzyRule {
                    antecedent,
                    consequent: set.regions[j],
                    cardinality: set.cardinality,
                    antecedent_cardinality: ant,
                    confidence,
                });
            }
        }
    }
    rules
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Attribute, Cell, Record, Schema};

    fn region(column: usize, l: f64, p: f64, r: f64) -> FuzzyRegion {
        FuzzyRegion {
            column,
            label: "t".into(),
            left: l,
            peak: p,
            right: r,
            shoulder: Shoulder::None,
        }
    }

    fn numeric_ds(cols: usize, rows: &[Vec<Option<f64>>]) -> Dataset {
        let mut attrs: Vec<Attribute> = (0..cols)
            .map(|c| Attribute::numeric(format!("x{c}")))
            .collect();
        attrs.push(Attribute::categorical("class"));
        let schema = Schema::new(attrs, cols, vec!["k".into()]).unwrap();
        let recs = rows
            .iter()
            .map(|row| {
                let mut cells: Vec<Cell> = row
                    .iter()
                    .map(|v| v.map_or(Cell::Missing, Cell::Num))
                    .collect();
                cells.push(Cell::text("k"));
                Record::new(cells)
            })
            .collect();
        Dataset::new(schema, recs).unwrap()
    }

    #[test]
    fn three_regions_over_zero_to_ten() {
        let ds = numeric_ds(1, &[vec![Some(0.0)], vec![Some(10.0)], vec![Some(3.0)]]);
        let regs = build_regions(&ds, 0, 3).unwrap();
        let peaks: Vec<f64> = regs.iter().map(|r| r.peak).collect();
        assert_eq!(peaks, vec![0.0, 5.0, 10.0]);
        assert_eq!(regs[1].label, "mid");
        assert!((regs[1].membership(7.0) - 0.6).abs() < 1e-15);
        for r in &regs {
            assert_eq!(r.membership(r.peak), 1.0);
        }
        // shoulders stay at 1 beyond the span
        assert_eq!(regs[0].membership(-4.0), 1.0);
        assert_eq!(regs[2].membership(12.0), 1.0);
        assert_eq!(regs[1].membership(12.0), 0.0);
        for k in 0..=100 {
            let x = k as f64 / 10.0;
            let s: f64 = regs.iter().map(|r| r.membership(x)).sum();
            assert!((s - 1.0).abs() < 1e-9, "x={x} sum={s}");
        }
    }

    #[test]
    fn constant_column_is_rejected() {
        let ds = numeric_ds(1, &[vec![Some(2.0)], vec![Some(2.0)], vec![None]]);
        assert!(matches!(
            build_regions(&ds, 0, 3),
            Err(Error::ConstantColumn(_))
        ));
        let ds = numeric_ds(1, &[vec![Some(1.0)], vec![Some(2.0)]]);
        assert!(build_regions(&ds, 0, 1).is_err());
    }

    #[test]
    fn single_region_cardinality_below_alpha() {
        // memberships 0.6, 0.8, 0.3 in region (0, 10, 20)
        let ds = numeric_ds(1, &[vec![Some(6.0)], vec![Some(8.0)], vec![Some(3.0)]]);
        let regs = vec![region(0, 0.0, 10.0, 20.0)];
        assert!(large_itemsets(&ds, &regs, 2.5, false).is_empty());
        let sets = large_itemsets(&ds, &regs, 1.0, false);
        assert!((sets[0].cardinality - 1.7).abs() < 1e-12);
    }

    #[test]
    fn pair_cardinality_is_min_then_sum() {
        // (0.9, 0.4) and (0.5, 0.7)
        let ds = numeric_ds(2, &[vec![Some(9.0), Some(4.0)], vec![Some(5.0), Some(7.0)]]);
        let regs = vec![region(0, 0.0, 10.0, 20.0), region(1, 0.0, 10.0, 20.0)];
        let sets = large_itemsets(&ds, &regs, 0.1, false);
        let pair = sets.iter().find(|s| s.regions == vec![0, 1]).unwrap();
        assert!((pair.cardinality - 0.9).abs() < 1e-12);
    }

    #[test]
    fn zero_alpha_keeps_every_nonzero_itemset() {
        let ds = numeric_ds(
            2,
            &[vec![Some(1.0), Some(30.0)], vec![Some(2.0), Some(25.0)]],
        );
        // region 2 never fires for column 1
        let regs = vec![
            region(0, 0.0, 1.0, 3.0),
            region(1, 20.0, 30.0, 40.0),
            region(1, 40.0, 50.0, 60.0),
        ];
        let sets = large_itemsets(&ds, &regs, 0.0, false);
        let got: Vec<Vec<usize>> = sets.iter().map(|s| s.regions.clone()).collect();
        assert_eq!(got, vec![vec![0], vec![1], vec![0, 1]]);
    }

    #[test]
    fn missing_cells_contribute_nothing() {
        let ds = numeric_ds(1, &[vec![None], vec![Some(10.0)]]);
        let regs = vec![region(0, 0.0, 10.0, 20.0)];
        let sets = large_itemsets(&ds, &regs, 0.5, false);
        assert_eq!(sets[0].cardinality, 1.0);
    }

    #[test]
    fn rule_confidence_from_cardinalities() {
        let sets = vec![
            FuzzyItemset {
                regions: vec![0],
                cardinality: 4.0,
            },
            FuzzyItemset {
                regions: vec![3],
                cardinality: 3.5,
            },
            FuzzyItemset {
                regions: vec![0, 3],
                cardinality: 3.2,
            },
        ];
        let rules = fuzzy_rules(&sets, 0.7);
        let g_to_i = rules
            .iter()
            .find(|r| r.antecedent == vec![0] && r.consequent == 3)
            .unwrap();
        assert!((g_to_i.confidence - 0.8).abs() < 1e-12);
        // 3.2 / 3.5 = 0.914 also kept
        assert_eq!(rules.len(), 2);
        assert!(fuzzy_rules(&sets, 0.95).is_empty());

        let equal = vec![
            FuzzyItemset {
                regions: vec![0],
                cardinality: 2.0,
            },
            FuzzyItemset {
                regions: vec![1],
                cardinality: 5.0,
            },
            FuzzyItemset {
                regions: vec![0, 1],
                cardinality: 2.0,
            },
        ];
        let rules = fuzzy_rules(&equal, 1.0);
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].confidence, 1.0);
    }

    #[test]
    fn missing_consequent_does_not_dilute_confidence() {
        // x1 is missing in half the records; where present it always agrees with x0
        let rows: Vec<Vec<Option<f64>>> = (0..8)
            .map(|i| vec![Some(10.0), if i % 2 == 0 { Some(10.0) } else { None }])
            .collect();
        let ds = numeric_ds(2, &rows);
        let regs = vec![region(0, 0.0, 10.0, 20.0), region(1, 0.0, 10.0, 20.0)];
        let sets = large_itemsets(&ds, &regs, 0.5, false);
        let plain = fuzzy_rules(&sets, 0.1);
        let x0_to_x1 = |rules: &[FuzzyRule]| {
            rules
                .iter()
                .find(|r| r.consequent == 1)
                .map(|r| r.confidence)
        };
        assert_eq!(x0_to_x1(&plain), Some(0.5));
        let observed = fuzzy_rules_observed(&ds, &regs, &sets, 0.1);
        assert_eq!(x0_to_x1(&observed), Some(1.0));

        let complete = numeric_ds(
            2,
            &[
                vec![Some(9.0), Some(4.0)],
                vec![Some(5.0), Some(7.0)],
                vec![Some(2.0), Some(8.0)],
            ],
        );
        let sets = large_itemsets(&complete, &regs, 0.1, false);
        assert_eq!(
            fuzzy_rules_observed(&complete, &regs, &sets, 0.1),
            fuzzy_rules(&sets, 0.1)
        );
    }

    #[test]
    fn dominant_region_pruning_keeps_one_region_per_column() {
        let rows: Vec<Vec<Option<f64>>> = [1.0, 1.5, 2.0, 9.0]
            .iter()
            .map(|&x| vec![Some(x)])
            .collect();
        let ds = numeric_ds(1, &rows);
        let regs = build_regions(&ds, 0, 3).unwrap();
        let sets = large_itemsets(&ds, &regs, 0.1, true);
        assert_eq!(sets.len(), 1);
        assert_eq!(regs[sets[0].regions[0]].label, "low");
        assert_eq!(large_itemsets(&ds, &regs, 0.1, false).len(), 3);
    }

    #[test]
    fn config_validation() {
        assert!(FuzzyMineConfig::default().validate().is_ok());
        let bad = FuzzyMineConfig {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = FuzzyMineConfig {
            lambda: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = FuzzyMineConfig {
            regions_per_column: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rulemine::{partition, FuzzyRegion};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FuzzyParams {
    pub regions_per_column: usize,
}

impl Default for FuzzyParams {
    fn default() -> Self {
        FuzzyParams {
            regions_per_column: 3,
        }
    }
}

/// One grid cell: a region index per feature, a class and a weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRule {
    pub regions: Vec<usize>,
    pub class: usize,
    pub weight: f64,
}

/// Grid fuzzy-rule classifier. Every feature is partitioned over its
/// training span; each combination of regions that some training record
/// activates becomes a rule whose class maximizes the summed product
/// membership, weighted by how clearly that class dominates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyGrid {
    /// Empty for a constant feature, which then has one flat region.
    partitions: Vec<Vec<FuzzyRegion>>,
    /// Sorted by `regions`.
    rules: Vec<GridRule>,
    default_class: usize,
}

fn activations(partitions: &[Vec<FuzzyRegion>], x: &[f64]) -> Vec<Vec<(usize, f64)>> {
    partitions
        .iter()
        .zip(x)
        .map(|(p, &v)| {
            if p.is_empty() {
                vec![(0, 1.0)]
            } else {
                p.iter()
                    .enumerate()
                    .map(|(i, r)| (i, r.membership(v)))
                    .filter(|&(_, m)| m > 0.0)
                    .collect()
            }
        })
        .collect()
}

/// Calls `f` for every region combination with nonzero product membership.
fn for_each_cell(act: &[Vec<(usize, f64)>], mut f: impl FnMut(&[usize], f64)) {
    if act.iter().any(Vec::is_empty) {
        return;
    }
    let d = act.len();
    let mut pos = vec![0usize; d];
    let mut key = vec![0usize; d];
    loop {
        let mut mu = 1.0;
        for j in 0..d {
            let (r, m) = act[j][pos[j]];
            key[j] = r;
            mu *= m;
        }
        f(&key, mu);
        let mut j = d;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            pos[j] += 1;
            if pos[j] < act[j].len() {
                break;
            }
            pos[j] = 0;
        }
    }
}

impl FuzzyGrid {
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[usize],
        n_labels: usize,
        params: &FuzzyParams,
    ) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut partitions = Vec::with_capacity(d);
        for f in 0..d {
            let col: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo < hi {
                partitions.push(partition(
                    f,
                    &col,
                    params.regions_per_column,
                    &format!("feature {f}"),
                )?);
            } else {
                partitions.push(Vec::new());
            }
        }

        let mut class_counts = vec![0usize; n_labels];
        let mut sums: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
        for (x, &y) in rows.iter().zip(labels) {
            class_counts[y] += 1;
            for_each_cell(&activations(&partitions, x), |key, mu| {
                sums.entry(key.to_vec())
                    .or_insert_with(|| vec![0.0; n_labels])[y] += mu;
            });
        }

        let mut rules: Vec<GridRule> = sums
            .into_iter()
            .filter_map(|(regions, beta)| {
                let total: f64 = beta.iter().sum();
                let mut class = 0;
                for (c, &b) in beta.iter().enumerate() {
                    if b > beta[class] {
                        class = c;
                    }
                }
                let others = if n_labels > 1 {
                    (total - beta[class]) / (n_labels - 1) as f64
                } else {
                    0.0
                };
                let weight = (beta[class] - others) / total;
                (weight > 0.0).then_some(GridRule {
                    regions,
                    class,
                    weight,
                })
            })
            .collect();
        rules.sort_by(|a, b| a.regions.cmp(&b.regions));

        let mut default_class = 0;
        for (c, &n) in class_counts.iter().enumerate() {
            if n > class_counts[default_class] {
                default_class = c;
            }
        }
        Ok(FuzzyGrid {
            partitions,
            rules,
            default_class,
        })
    }

    pub fn rules(&self) -> &[GridRule] {
        &self.rules
    }

    /// Single winning rule by membership × weight; ties go to the lower
    /// class. With no firing rule, the training majority class.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut best: Option<(f64, usize)> = None;
        for_each_cell(&activations(&self.partitions, x), |key, mu| {
            if let Ok(i) = self
                .rules
                .binary_search_by(|r| r.regions.as_slice().cmp(key))
            {
                let r = &self.rules[i];
                let s = mu * r.weight;
                let better = match best {
                    None => true,
                    Some((bs, bc)) => s > bs || (s == bs && r.class < bc),
                };
                if better {
                    best = Some((s, r.class));
                }
            }
        });
        best.map_or(self.default_class, |(_, c)| c)
    }
}

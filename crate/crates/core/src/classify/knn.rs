use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` rows nearest to `x`, nearest first; distance ties go
/// to the lower row index. `skip` excludes one row (the query itself).
pub(crate) fn nearest(rows: &[Vec<f64>], x: &[f64], k: usize, skip: Option<usize>) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != skip)
        .map(|(i, r)| (squared_distance(r, x), i))
        .collect();
    let k = k.min(d.len());
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() && k > 0 {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_unstable_by(cmp);
    d.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Euclidean k-nearest-neighbours majority vote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    n_labels: usize,
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl Knn {
    pub fn fit(rows: &[Vec<f64>], labels: &[usize], n_labels: usize, params: &KnnParams) -> Self {
        Knn {
            k: params.k,
            n_labels,
            rows: rows.to_vec(),
            labels: labels.to_vec(),
        }
    }

    /// Vote ties go to the tied label whose member is nearest.
    pub fn predict(&self, x: &[f64]) -> usize {
        let neigh = nearest(&self.rows, x, self.k, None);
        let mut votes = vec![0usize; self.n_labels];
        for &i in &neigh {
            votes[self.labels[i]] += 1;
        }
        let top = votes.iter().copied().max().unwrap_or(0);
        neigh
            .iter()
            .map(|&i| self.labels[i])
            .find(|&l| votes[l] == top)
            .unwrap_or(0)
    }
}

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 6,
            min_leaf: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        label: usize,
    },
    /// `x[feature] <= threshold` goes to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary CART tree with Gini impurity; nodes live in an arena, root at 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (l, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = l;
        }
    }
    best
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [usize],
    n_labels: usize,
    params: &'a TreeParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_labels];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    /// Lowest weighted child impurity; ties keep the earlier feature and
    /// the lower threshold.
    fn best_split(&self, idx: &[usize], parent: f64) -> Option<(usize, f64)> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        let total = self.counts(idx);
        let d = self.rows[idx[0]].len();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..d {
            order.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]).then(a.cmp(&b)));
            let mut left = vec![0usize; self.n_labels];
            for pos in 0..n - 1 {
                left[self.labels[order[pos]]] += 1;
                let nl = pos + 1;
                let nr = n - nl;
                let (a, b) = (self.rows[order[pos]][f], self.rows[order[pos + 1]][f]);
                if a == b || nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let imp = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                if best.is_none_or(|(bi, _, _)| imp < bi) {
                    let mid = a + (b - a) / 2.0;
                    best = Some((imp, f, mid));
                }
            }
        }
        best.filter(|&(imp, _, _)| imp < parent)
            .map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            label: majority(&counts),
        });
        let parent = gini(&counts, idx.len());
        if depth >= self.params.max_depth || parent == 0.0 || idx.len() < 2 {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(idx, parent) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.rows[i][feature] <= threshold);
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    pub fn fit(rows: &[Vec<f64>], labels: &[usize], n_labels: usize, params: &TreeParams) -> Self {
        let mut b = Builder {
            rows,
            labels,
            n_labels,
            params,
            nodes: Vec::new(),
        };
        let idx: Vec<usize> = (0..rows.len()).collect();
        if idx.is_empty() {
            return DecisionTree {
                nodes: vec![Node::Leaf { label: 0 }],
            };
        }
        b.grow(&idx, 0);
        DecisionTree { nodes: b.nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { label } => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmParams {
    pub epochs: usize,
    pub regularization: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            epochs: 200,
            regularization: 1e-3,
        }
    }
}

/// One binary hyperplane `w·x + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub w: Vec<f64>,
    pub b: f64,
}

impl Hyperplane {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b
    }
}

/// `λ/2 ‖w‖² + mean(max(0, 1 − y (w·x + b)))`
pub fn objective(h: &Hyperplane, rows: &[Vec<f64>], y: &[f64], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * h.w.iter().map(|w| w * w).sum::<f64>();
    let hinge: f64 = rows
        .iter()
        .zip(y)
        .map(|(x, &yi)| (1.0 - yi * h.score(x)).max(0.0))
        .sum();
    reg + hinge / rows.len() as f64
}

/// Full-batch sub-gradient descent on the regularized hinge loss.
///
/// Epoch `t` tries the step `1/(λt)` (capped at twice the last accepted
/// step) and halves it until the objective does not increase, so the
/// objective is non-increasing across epochs. Returns the hyperplane and
/// the objective after each epoch.
pub fn train_binary(rows: &[Vec<f64>], y: &[f64], params: &SvmParams) -> (Hyperplane, Vec<f64>) {
    let d = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    let lambda = params.regularization;
    let mut h = Hyperplane {
        w: vec![0.0; d],
        b: 0.0,
    };
    let mut loss = objective(&h, rows, y, lambda);
    let mut trace = Vec::with_capacity(params.epochs);
    let mut last_step = f64::INFINITY;
    for t in 1..=params.epochs {
        let mut gw: Vec<f64> = h.w.iter().map(|w| lambda * w).collect();
        let mut gb = 0.0;
        for (x, &yi) in rows.iter().zip(y) {
            if yi * h.score(x) < 1.0 {
                for (g, v) in gw.iter_mut().zip(x) {
                    *g -= yi * v / n;
                }
                gb -= yi / n;
            }
        }
        let mut step = (1.0 / (lambda * t as f64)).min(2.0 * last_step);
        let mut accepted = false;
        for _ in 0..60 {
            let cand = Hyperplane {
                w: h.w.iter().zip(&gw).map(|(w, g)| w - step * g).collect(),
                b: h.b - step * gb,
            };
            let l = objective(&cand, rows, y, lambda);
            if l <= loss {
                h = cand;
                loss = l;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if accepted {
            last_step = step;
        }
        trace.push(loss);
    }
    (h, trace)
}

/// Linear SVM; one-vs-rest when there are more than two labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    n_labels: usize,
    /// Binary: a single plane scoring label 1. One-vs-rest: one plane per
    /// label present in training (`None` for absent labels).
    planes: Vec<Option<Hyperplane>>,
}

impl LinearSvm {
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[usize],
        n_labels: usize,
        params: &SvmParams,
    ) -> Result<Self> {
        let mut present = vec![false; n_labels];
        for &l in labels {
            present[l] = true;
        }
        if present.iter().filter(|&&p| p).count() < 2 {
            return Err(Error::SingleClass);
        }
        let planes = if n_labels == 2 {
            let y: Vec<f64> = labels
                .iter()
                .map(|&l| if l == 1 { 1.0 } else { -1.0 })
                .collect();
            vec![Some(train_binary(rows, &y, params).0)]
        } else {
            (0..n_labels)
                .map(|c| {
                    present[c].then(|| {
                        let y: Vec<f64> = labels
                            .iter()
                            .map(|&l| if l == c { 1.0 } else { -1.0 })
                            .collect();
                        train_binary(rows, &y, params).0
                    })
                })
                .collect()
        };
        Ok(LinearSvm { n_labels, planes })
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        if self.n_labels == 2 {
            let s = self.planes[0].as_ref().expect("binary plane").score(x);
            return usize::from(s > 0.0);
        }
        let mut best = (f64::NEG_INFINITY, 0);
        for (c, p) in self.planes.iter().enumerate() {
            if let Some(p) = p {
                let s = p.score(x);
                if s > best.0 {
                    best = (s, c);
                }
            }
        }
        best.1
    }
}

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NaiveBayesParams {
    pub var_floor: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams { var_floor: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Likelihood {
    Gaussian {
        mean: f64,
        var: f64,
    },
    /// Log probabilities per category code; the last slot is "unseen".
    Categorical {
        log_p: Vec<f64>,
    },
}

/// Gaussian naive Bayes over numeric features, add-one smoothed
/// frequencies over categorical ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    log_prior: Vec<Option<f64>>,
    /// `[class][feature]`
    likelihoods: Vec<Vec<Likelihood>>,
}

impl NaiveBayes {
    /// `categories[f]` is `Some(k)` for a categorical feature with `k` known codes.
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[usize],
        n_labels: usize,
        categories: &[Option<usize>],
        params: &NaiveBayesParams,
    ) -> Self {
        let n = rows.len() as f64;
        let d = categories.len();
        let mut log_prior = Vec::with_capacity(n_labels);
        let mut likelihoods = Vec::with_capacity(n_labels);
        for c in 0..n_labels {
            let members: Vec<&Vec<f64>> = rows
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == c)
                .map(|(r, _)| r)
                .collect();
            let m = members.len() as f64;
            log_prior.push((m > 0.0).then(|| (m / n).ln()));
            let per_feature = (0..d)
                .map(|f| match categories[f] {
                    Some(k) => {
                        let mut counts = vec![0.0; k + 1];
                        for r in &members {
                            counts[(r[f] as usize).min(k)] += 1.0;
                        }
                        let denom = m + (k + 1) as f64;
                        Likelihood::Categorical {
                            log_p: counts.iter().map(|&x| ((x + 1.0) / denom).ln()).collect(),
                        }
                    }
                    None => {
                        if members.is_empty() {
                            return Likelihood::Gaussian {
                                mean: 0.0,
                                var: 1.0,
                            };
                        }
                        let mean = members.iter().map(|r| r[f]).sum::<f64>() / m;
                        let var = members.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / m;
                        Likelihood::Gaussian {
                            mean,
                            var: var.max(params.var_floor),
                        }
                    }
                })
                .collect();
            likelihoods.push(per_feature);
        }
        NaiveBayes {
            log_prior,
            likelihoods,
        }
    }

    fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        self.log_prior
            .iter()
            .zip(&self.likelihoods)
            .map(|(prior, feats)| match prior {
                None => f64::NEG_INFINITY,
                Some(p) => {
                    p + feats
                        .iter()
                        .zip(x)
                        .map(|(lk, &v)| match lk {
                            Likelihood::Gaussian { mean, var } => {
                                -0.5 * ((2.0 * std::f64::consts::PI * var).ln()
                                    + (v - mean).powi(2) / var)
                            }
                            Likelihood::Categorical { log_p } => {
                                log_p[(v as usize).min(log_p.len() - 1)]
                            }
                        })
                        .sum::<f64>()
                }
            })
            .collect()
    }

    /// Class posteriors, summing to one.
    pub fn posteriors(&self, x: &[f64]) -> Vec<f64> {
        let lj = self.log_joint(x);
        let max = lj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = lj.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / total).collect()
    }

    /// Most probable class; ties go to the lowest label index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let lj = self.log_joint(x);
        let mut best = 0;
        for (c, &v) in lj.iter().enumerate() {
            if v > lj[best] {
                best = c;
            }
        }
        best
    }
}

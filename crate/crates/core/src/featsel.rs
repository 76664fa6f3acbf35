//! Genetic-algorithm wrapper feature selection.
//!
//! Chromosomes are [`FeatureMask`]s; fitness is the inner stratified
//! cross-validated accuracy of the classifier the mask is selected for.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{fit_table, ClassifierConfig, FeatureMask, FeatureTable};
use crate::error::{Error, Result};
use crate::rng;
use crate::tabular::{stratified_fold_indices, Dataset};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub population_size: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub generations: usize,
    pub tournament_size: usize,
    pub elite_count: usize,
    pub inner_folds: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 100,
            p_crossover: 0.75,
            p_mutation: 0.03,
            generations: 30,
            tournament_size: 2,
            elite_count: 1,
            inner_folds: 5,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "ga.{name} must be in [0, 1], got {p}"
                )))
            }
        };
        prob("p_crossover", self.p_crossover)?;
        prob("p_mutation", self.p_mutation)?;
        if self.population_size < 2 {
            return Err(Error::Config(
                "ga.population_size must be at least 2".into(),
            ));
        }
        if self.elite_count >= self.population_size {
            return Err(Error::Config(
                "ga.elite_count must be below population_size".into(),
            ));
        }
        if self.tournament_size == 0 {
            return Err(Error::Config(
                "ga.tournament_size must be at least 1".into(),
            ));
        }
        if self.inner_folds < 2 {
            return Err(Error::Config("ga.inner_folds must be at least 2".into()));
        }
        Ok(())
    }
}

/// Best and mean fitness of one generation's population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_mask: FeatureMask,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaOutcome {
    pub mask: FeatureMask,
    pub fitness: f64,
    /// Generation 0 is the initial population.
    pub trace: Vec<GenerationStats>,
    /// Distinct masks whose fitness was computed.
    pub evaluations: usize,
}

/// Inner cross-validation splits over a feature table, reused for every mask.
pub struct FitnessContext<'a> {
    cfg: &'a ClassifierConfig,
    table: &'a FeatureTable,
    /// `(train, test)` index lists.
    splits: Vec<(Vec<usize>, Vec<usize>)>,
}

impl<'a> FitnessContext<'a> {
    pub fn new(
        cfg: &'a ClassifierConfig,
        table: &'a FeatureTable,
        label_names: &[String],
        folds: usize,
        seed: u64,
    ) -> Result<Self> {
        let tests = stratified_fold_indices(&table.labels, label_names, folds, seed)?;
        let splits = tests
            .into_iter()
            .map(|test| {
                let mut in_test = vec![false; table.len()];
                for &i in &test {
                    in_test[i] = true;
                }
                let train = (0..table.len()).filter(|&i| !in_test[i]).collect();
                (train, test)
            })
            .collect();
        Ok(FitnessContext { cfg, table, splits })
    }

    /// Mean test accuracy over the inner folds.
    pub fn evaluate(&self, mask: &FeatureMask) -> Result<f64> {
        let selected = mask.selected();
        let mut total = 0.0;
        for (train, test) in &self.splits {
            let model = fit_table(self.cfg, self.table, mask, train)?;
            let rows = self.table.project(&selected, test);
            let correct = rows
                .iter()
                .zip(test)
                .filter(|(x, &i)| model.state.predict(x) == self.table.labels[i])
                .count();
            total += correct as f64 / test.len() as f64;
        }
        Ok(total / self.splits.len() as f64)
    }
}

/// Wrapper fitness of `mask` for `cfg` on a complete dataset.
pub fn fitness(
    mask: &FeatureMask,
    cfg: &ClassifierConfig,
    ds: &Dataset,
    ga: &GaConfig,
    seed: u64,
) -> Result<f64> {
    let table = FeatureTable::from_dataset(ds)?;
    mask.check_len(table.encoder.len())?;
    FitnessContext::new(
        cfg,
        &table,
        ds.schema.class_labels(),
        ga.inner_folds,
        inner_seed(seed),
    )?
    .evaluate(mask)
}

fn inner_seed(seed: u64) -> u64 {
    rng::derive_seed(seed, &[0x1f01d])
}

/// Higher fitness first, then fewer features, then lower mask order.
fn rank(a: (&FeatureMask, f64), b: (&FeatureMask, f64)) -> Ordering {
    b.1.total_cmp(&a.1)
        .then(a.0.count().cmp(&b.0.count()))
        .then(a.0.cmp(b.0))
}

fn random_population(n_features: usize, size: usize, seed: u64) -> Vec<FeatureMask> {
    (0..size)
        .map(|i| {
            let mut r = rng::stream(seed, &[0, i as u64]);
            let bits = (0..n_features).map(|_| r.random_bool(0.5)).collect();
            FeatureMask::repaired(bits, &mut r)
        })
        .collect()
}

/// Runs the GA from a random initial population.
pub fn evolve(cfg: &ClassifierConfig, ds: &Dataset, ga: &GaConfig, seed: u64) -> Result<GaOutcome> {
    let initial = random_population(ds.schema.feature_count(), ga.population_size, seed);
    evolve_from(cfg, ds, ga, seed, initial)
}

/// Runs the GA from the given initial population.
pub fn evolve_from(
    cfg: &ClassifierConfig,
    ds: &Dataset,
    ga: &GaConfig,
    seed: u64,
    initial: Vec<FeatureMask>,
) -> Result<GaOutcome> {
    ga.validate()?;
    cfg.validate()?;
    if initial.len() != ga.population_size {
        return Err(Error::Config(format!(
            "initial population has {} masks, expected {}",
            initial.len(),
            ga.population_size
        )));
    }
    let n = ds.schema.feature_count();
    for m in &initial {
        m.check_len(n)?;
    }
    let table = FeatureTable::from_dataset(ds)?;
    let ctx = FitnessContext::new(
        cfg,
        &table,
        ds.schema.class_labels(),
        ga.inner_folds,
        inner_seed(seed),
    )?;

    let mut memo: BTreeMap<FeatureMask, f64> = BTreeMap::new();
    let mut population = initial;
    let mut trace = Vec::with_capacity(ga.generations + 1);
    let mut best: Option<(FeatureMask, f64)> = None;

    for generation in 0..=ga.generations {
        if generation > 0 {
            population = breed(&population, &memo, ga, seed, generation);
        }
        let fresh: BTreeSet<&FeatureMask> = population
            .iter()
            .filter(|m| !memo.contains_key(*m))
            .collect();
        let scored = fresh
            .into_par_iter()
            .map(|m| ctx.evaluate(m).map(|f| (m.clone(), f)))
            .collect::<Result<Vec<_>>>()?;
        memo.extend(scored);

        let fit: Vec<f64> = population.iter().map(|m| memo[m]).collect();
        let top = (0..population.len())
            .min_by(|&a, &b| rank((&population[a], fit[a]), (&population[b], fit[b])))
            .expect("non-empty population");
        let gen_best = (population[top].clone(), fit[top]);
        if best
            .as_ref()
            .is_none_or(|(m, f)| rank((&gen_best.0, gen_best.1), (m, *f)) == Ordering::Less)
        {
            best = Some(gen_best.clone());
        }
        trace.push(GenerationStats {
            generation,
            best_fitness: gen_best.1,
            mean_fitness: fit.iter().sum::<f64>() / fit.len() as f64,
            best_mask: gen_best.0,
        });
    }

    let (mask, fitness) = best.expect("at least one generation");
    Ok(GaOutcome {
        mask,
        fitness,
        trace,
        evaluations: memo.len(),
    })
}

fn tournament<R: Rng>(
    pop: &[FeatureMask],
    memo: &BTreeMap<FeatureMask, f64>,
    size: usize,
    r: &mut R,
) -> usize {
    let mut winner = r.random_range(0..pop.len());
    for _ in 1..size {
        let c = r.random_range(0..pop.len());
        if rank((&pop[c], memo[&pop[c]]), (&pop[winner], memo[&pop[winner]])) == Ordering::Less {
            winner = c;
        }
    }
    winner
}

/// Next generation: elites copied unchanged, the rest bred in pairs, each
/// pair from its own random stream.
fn breed(
    pop: &[FeatureMask],
    memo: &BTreeMap<FeatureMask, f64>,
    ga: &GaConfig,
    seed: u64,
    generation: usize,
) -> Vec<FeatureMask> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| rank((&pop[a], memo[&pop[a]]), (&pop[b], memo[&pop[b]])));
    let mut next: Vec<FeatureMask> = order[..ga.elite_count]
        .iter()
        .map(|&i| pop[i].clone())
        .collect();
    let n = pop[0].len();
    let mut pair = 0u64;
    while next.len() < ga.population_size {
        let mut r = rng::stream(seed, &[1, generation as u64, pair]);
        pair += 1;
        let a = pop[tournament(pop, memo, ga.tournament_size, &mut r)]
            .bits()
            .to_vec();
        let b = pop[tournament(pop, memo, ga.tournament_size, &mut r)]
            .bits()
            .to_vec();
        let (mut c1, mut c2) = (a.clone(), b.clone());
        if n > 1 && r.random_bool(ga.p_crossover) {
            let point = r.random_range(1..n);
            c1 = a[..point].iter().chain(&b[point..]).copied().collect();
            c2 = b[..point].iter().chain(&a[point..]).copied().collect();
        }
        for child in [c1, c2] {
            if next.len() == ga.population_size {
                break;
            }
            let bits = child
                .into_iter()
                .map(|bit| bit ^ r.random_bool(ga.p_mutation))
                .collect();
            next.push(FeatureMask::repaired(bits, &mut r));
        }
    }
    next
}

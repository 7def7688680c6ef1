//! Steady-state messy genetic algorithm over variable-length selectors.
//!
//! All random draws come from one seeded stream consumed in a fixed order.
//! Instance solves run in parallel but are merged in instance order, so a
//! seed fully determines the result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::csp::DEFAULT_BUDGET;
use crate::error::{Error, Result};
use crate::model::{solve_instance, Distance, Domain, Rule, Selector, Sense, SolveOutcome};
use crate::transform::TransformSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Standard deviation of the condition perturbation.
    pub mutation_sigma: f64,
    pub cycles: usize,
    pub min_rules: usize,
    pub max_rules: usize,
    pub seed: u64,
    /// Cost limit per instance solve.
    pub budget: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 20,
            crossover_rate: 1.0,
            mutation_rate: 0.1,
            mutation_sigma: 0.1,
            cycles: 100,
            min_rules: 2,
            max_rules: 30,
            seed: 0,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let rate = |name: &str, r: f64| {
            if (0.0..=1.0).contains(&r) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {r}")))
            }
        };
        rate("crossover_rate", self.crossover_rate)?;
        rate("mutation_rate", self.mutation_rate)?;
        if !(self.mutation_sigma.is_finite() && self.mutation_sigma >= 0.0) {
            return Err(Error::Config("mutation_sigma must be finite and >= 0".into()));
        }
        if self.population_size < 2 {
            return Err(Error::Config("population_size must be at least 2".into()));
        }
        if self.cycles == 0 {
            return Err(Error::Config("cycles must be at least 1".into()));
        }
        if self.min_rules == 0 || self.min_rules > self.max_rules {
            return Err(Error::Config(format!(
                "rule bounds must satisfy 1 <= min_rules <= max_rules, got {}..{}",
                self.min_rules, self.max_rules
            )));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be positive".into()));
        }
        Ok(())
    }
}

/// Training objective of one selector over a full training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub total: f64,
    pub solved: usize,
    pub sense: Sense,
}

impl Fitness {
    pub fn worst(sense: Sense) -> Self {
        Fitness {
            total: sense.worst(),
            solved: 0,
            sense,
        }
    }

    pub fn is_better_than(&self, other: &Fitness) -> bool {
        self.sense.better(self.total, other.total)
    }
}

fn random_rule<R: Rng + ?Sized>(features: usize, heuristics: usize, rng: &mut R) -> Rule {
    Rule {
        condition: (0..features).map(|_| rng.random::<f64>()).collect(),
        action: rng.random_range(0..heuristics),
    }
}

fn check_shape(features: usize, heuristics: usize) -> Result<()> {
    if features == 0 || heuristics == 0 {
        return Err(Error::invalid(
            "selectors need at least one feature and one heuristic",
        ));
    }
    Ok(())
}

pub fn init_population<R: Rng + ?Sized>(
    config: &GaConfig,
    features: usize,
    heuristics: usize,
    rng: &mut R,
) -> Result<Vec<Selector>> {
    config.validate()?;
    check_shape(features, heuristics)?;
    Ok((0..config.population_size)
        .map(|_| {
            let n = rng.random_range(config.min_rules..=config.max_rules);
            Selector {
                rules: (0..n).map(|_| random_rule(features, heuristics, rng)).collect(),
            }
        })
        .collect())
}

/// Cut-and-splice at fixed points: `p1[..cut1] ++ p2[cut2..]` and `p2[..cut2] ++ p1[cut1..]`.
pub fn splice(p1: &[Rule], p2: &[Rule], cut1: usize, cut2: usize) -> (Vec<Rule>, Vec<Rule>) {
    let c1 = p1[..cut1].iter().chain(&p2[cut2..]).cloned().collect();
    let c2 = p2[..cut2].iter().chain(&p1[cut1..]).cloned().collect();
    (c1, c2)
}

/// Truncates to `max_rules` or pads with random rules up to `min_rules`.
pub fn clamp_rules<R: Rng + ?Sized>(
    mut rules: Vec<Rule>,
    config: &GaConfig,
    features: usize,
    heuristics: usize,
    rng: &mut R,
) -> Selector {
    rules.truncate(config.max_rules);
    while rules.len() < config.min_rules {
        rules.push(random_rule(features, heuristics, rng));
    }
    Selector { rules }
}

pub fn crossover<R: Rng + ?Sized>(
    p1: &Selector,
    p2: &Selector,
    config: &GaConfig,
    features: usize,
    heuristics: usize,
    rng: &mut R,
) -> Result<(Selector, Selector)> {
    if p1.is_empty() || p2.is_empty() {
        return Err(Error::invalid("crossover parents must have rules"));
    }
    let cut1 = rng.random_range(0..=p1.len());
    let cut2 = rng.random_range(0..=p2.len());
    let (c1, c2) = splice(&p1.rules, &p2.rules, cut1, cut2);
    Ok((
        clamp_rules(c1, config, features, heuristics, rng),
        clamp_rules(c2, config, features, heuristics, rng),
    ))
}

/// Each rule mutates with probability `rate`: a fair coin chooses between a
/// Gaussian nudge of one condition value and a fresh uniform action.
pub fn mutate<R: Rng + ?Sized>(
    selector: &mut Selector,
    rate: f64,
    sigma: f64,
    heuristics: usize,
    rng: &mut R,
) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::invalid(format!("mutation rate {rate} outside [0, 1]")));
    }
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::invalid(format!("mutation sigma {sigma}: {e}")))?;
    for rule in &mut selector.rules {
        if rng.random::<f64>() >= rate {
            continue;
        }
        if rng.random_bool(0.5) && !rule.condition.is_empty() {
            let j = rng.random_range(0..rule.condition.len());
            let v = rule.condition[j] + noise.sample(rng);
            rule.condition[j] = v.clamp(0.0, 1.0);
        } else {
            rule.action = rng.random_range(0..heuristics);
        }
    }
    Ok(())
}

/// Solves every instance in parallel; results are in instance order.
pub fn solve_all<D, M>(
    selector: &Selector,
    instances: &[D::Instance],
    domain: &D,
    transform: Option<&TransformSpec>,
    metric: &M,
    budget: u64,
) -> Vec<Result<SolveOutcome>>
where
    D: Domain,
    M: Distance + Sync + ?Sized,
{
    instances
        .par_iter()
        .map(|inst| solve_instance(selector, inst, domain, transform, metric, budget))
        .collect()
}

/// Sums the domain's fitness term over the training set. Any solve error
/// yields the worst possible fitness.
pub fn evaluate<D, M>(
    selector: &Selector,
    instances: &[D::Instance],
    domain: &D,
    transform: Option<&TransformSpec>,
    metric: &M,
    budget: u64,
) -> Fitness
where
    D: Domain,
    M: Distance + Sync + ?Sized,
{
    let sense = domain.sense();
    if instances.is_empty() {
        return Fitness::worst(sense);
    }
    let mut fitness = Fitness {
        total: 0.0,
        solved: 0,
        sense,
    };
    for outcome in solve_all(selector, instances, domain, transform, metric, budget) {
        let Ok(outcome) = outcome else {
            return Fitness::worst(sense);
        };
        fitness.total += domain.fitness_term(&outcome, budget);
        fitness.solved += usize::from(outcome.solved);
    }
    fitness
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    /// Best-ever fitness total after this cycle.
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_rule_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingResult {
    pub best: Selector,
    pub best_fitness: Fitness,
    /// Cycle 0 is the initial population.
    pub history: Vec<CycleRecord>,
}

impl TrainingResult {
    pub fn history_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for record in &self.history {
            w.serialize(record)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::invalid(format!("csv buffer: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

fn best_index(fitness: &[Fitness]) -> usize {
    let mut best = 0;
    for (i, f) in fitness.iter().enumerate().skip(1) {
        if f.is_better_than(&fitness[best]) {
            best = i;
        }
    }
    best
}

/// Last of the equally worst members.
fn worst_index(fitness: &[Fitness]) -> usize {
    let mut worst = 0;
    for (i, f) in fitness.iter().enumerate().skip(1) {
        if !f.is_better_than(&fitness[worst]) {
            worst = i;
        }
    }
    worst
}

fn tournament<R: Rng + ?Sized>(fitness: &[Fitness], rng: &mut R) -> usize {
    let a = rng.random_range(0..fitness.len());
    let b = rng.random_range(0..fitness.len());
    if fitness[b].is_better_than(&fitness[a]) {
        b
    } else {
        a
    }
}

fn record(cycle: usize, population: &[Selector], fitness: &[Fitness], best: usize) -> CycleRecord {
    CycleRecord {
        cycle,
        best_fitness: fitness[best].total,
        mean_fitness: fitness.iter().map(|f| f.total).sum::<f64>() / fitness.len() as f64,
        best_rule_count: population[best].len(),
    }
}

pub fn train<D, M>(
    config: &GaConfig,
    domain: &D,
    instances: &[D::Instance],
    transform: Option<&TransformSpec>,
    metric: &M,
) -> Result<TrainingResult>
where
    D: Domain,
    M: Distance + Sync + ?Sized,
{
    config.validate()?;
    if instances.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let (features, heuristics) = (domain.feature_count(), domain.heuristic_count());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let eval = |s: &Selector| evaluate(s, instances, domain, transform, metric, config.budget);

    let mut population = init_population(config, features, heuristics, &mut rng)?;
    let mut fitness: Vec<Fitness> = population.iter().map(eval).collect();
    let mut best = best_index(&fitness);
    let mut history = vec![record(0, &population, &fitness, best)];

    for cycle in 1..=config.cycles {
        let p1 = tournament(&fitness, &mut rng);
        let p2 = tournament(&fitness, &mut rng);
        let (mut c1, mut c2) = if rng.random::<f64>() < config.crossover_rate {
            crossover(
                &population[p1],
                &population[p2],
                config,
                features,
                heuristics,
                &mut rng,
            )?
        } else {
            (population[p1].clone(), population[p2].clone())
        };
        for child in [&mut c1, &mut c2] {
            mutate(
                child,
                config.mutation_rate,
                config.mutation_sigma,
                heuristics,
                &mut rng,
            )?;
        }
        let (f1, f2) = rayon::join(|| eval(&c1), || eval(&c2));
        let mut children = [(c1, f1), (c2, f2)];
        if children[1].1.is_better_than(&children[0].1) {
            children.swap(0, 1);
        }
        for (child, f) in children {
            let worst = worst_index(&fitness);
            if f.is_better_than(&fitness[worst]) {
                population[worst] = child;
                fitness[worst] = f;
            }
        }
        best = best_index(&fitness);
        history.push(record(cycle, &population, &fitness, best));
    }

    Ok(TrainingResult {
        best: population[best].clone(),
        best_fitness: fitness[best],
        history,
    })
}

//! Experiment orchestration: splits, scenario setups, baselines, training
//! runs, statistics and report files.

mod config;
mod load;
mod report;
pub mod seed;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{DomainKind, ExperimentConfig, Scenario, Seeding};
pub use load::{load_instances, InstanceSet};
pub use report::{write_experiment, write_vat_set};

use crate::error::{Error, Result};
use crate::ga::{solve_all, train, CycleRecord, GaConfig};
use crate::kernel::{default_gamma, KernelSpec, Metric};
use crate::model::{
    heuristic_trajectory, run_heuristic, synthetic_oracle, Domain, FeatureVector, MetricKind,
    Metrics, Selector, Sense, SolveOutcome,
};
use crate::stats::{summarize, wilcoxon_rank_sum, wilcoxon_signed_rank, Direction, SampleSummary, TestResult};
use crate::transform::{TransformKind, TransformSpec};
use seed::{derive_seed, TAG_CELL, TAG_SPLIT};

/// Transform and distance used by one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSetup {
    pub scenario: Scenario,
    pub transform: TransformSpec,
    pub metric: Metric,
}

impl ScenarioSetup {
    /// The transform to hand to the solver; `None` for identity so raw
    /// features reach the selector untouched.
    pub fn transform(&self) -> Option<&TransformSpec> {
        (self.transform.kind != TransformKind::Identity).then_some(&self.transform)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let setup: ScenarioSetup = serde_json::from_str(text)?;
        setup.transform.validate()?;
        if let Metric::Kernel(k) = &setup.metric {
            k.validate()?;
        }
        Ok(setup)
    }
}

/// Builds a scenario's transform (fitted on `rows` where needed) and metric.
pub fn build_scenario(
    scenario: Scenario,
    rows: &[FeatureVector],
    feature_count: usize,
) -> Result<ScenarioSetup> {
    let fit = |kind| TransformSpec::fit(kind, rows);
    let rbf = || -> Result<Metric> { Ok(Metric::Kernel(KernelSpec::rbf(default_gamma(feature_count)?)?)) };
    let (transform, metric) = match scenario {
        Scenario::O => (TransformSpec::identity(), Metric::Euclidean),
        Scenario::L => (fit(TransformKind::Linear)?, Metric::Euclidean),
        Scenario::S => (fit(TransformKind::SShaped)?, Metric::Euclidean),
        Scenario::E => (TransformSpec::exponential(5.0), Metric::Euclidean),
        Scenario::K => (TransformSpec::identity(), rbf()?),
        Scenario::KL => (fit(TransformKind::Linear)?, rbf()?),
        Scenario::KS => (fit(TransformKind::SShaped)?, rbf()?),
    };
    Ok(ScenarioSetup {
        scenario,
        transform,
        metric,
    })
}

/// Training-set size: `round(fraction * count)` with halves rounded up.
pub fn train_size(count: usize, fraction: f64) -> usize {
    (fraction * count as f64 + 0.5).floor() as usize
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded uniform sample without replacement for training; the rest is the
/// test set. Both index lists are ascending.
pub fn split_instances(
    count: usize,
    fraction: f64,
    train_count: Option<usize>,
    seed: u64,
) -> Result<Split> {
    let k = train_count.unwrap_or_else(|| train_size(count, fraction));
    if k == 0 {
        return Err(Error::Config(format!(
            "{count} instances at fraction {fraction} leave no training instance"
        )));
    }
    if k >= count {
        return Err(Error::Config(format!(
            "training size {k} leaves no test instance out of {count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = sample(&mut rng, count, k).into_vec();
    train.sort_unstable();
    let mut in_train = vec![false; count];
    for &i in &train {
        in_train[i] = true;
    }
    let test = (0..count).filter(|&i| !in_train[i]).collect();
    Ok(Split { train, test })
}

/// Feature snapshots along every standalone heuristic's run on each instance.
pub fn training_rows<D: Domain>(
    domain: &D,
    instances: &[D::Instance],
    budget: u64,
) -> Result<Vec<FeatureVector>> {
    let per_instance: Vec<Vec<FeatureVector>> = instances
        .par_iter()
        .map(|inst| {
            let mut rows = Vec::new();
            for h in 0..domain.heuristic_count() {
                rows.extend(heuristic_trajectory(h, inst, domain, budget)?);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub name: String,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub heuristics: Vec<BaselineRow>,
    pub oracle: BaselineRow,
    pub oracle_choices: Vec<usize>,
    /// `per_instance[i][h]`: heuristic `h` on instance `i`.
    pub per_instance: Vec<Vec<SolveOutcome>>,
}

/// Standalone heuristic results and the synthetic oracle over `instances`.
pub fn compute_baselines<D: Domain>(
    domain: &D,
    instances: &[D::Instance],
    budget: u64,
) -> Result<Baselines> {
    let per_instance: Vec<Vec<SolveOutcome>> = instances
        .par_iter()
        .map(|inst| {
            (0..domain.heuristic_count())
                .map(|h| run_heuristic(h, inst, domain, budget))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let heuristics = domain
        .heuristic_names()
        .iter()
        .enumerate()
        .map(|(h, name)| {
            let column: Vec<SolveOutcome> = per_instance.iter().map(|row| row[h]).collect();
            BaselineRow {
                name: name.to_string(),
                metrics: Metrics::from_outcomes(&column),
            }
        })
        .collect();
    let oracle = synthetic_oracle(&per_instance, domain.sense())?;
    Ok(Baselines {
        heuristics,
        oracle: BaselineRow {
            name: "oracle".into(),
            metrics: oracle.metrics,
        },
        oracle_choices: oracle.choices,
        per_instance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: Scenario,
    pub repetition: usize,
    pub seed: u64,
    pub train_fitness: f64,
    pub selector: Selector,
    /// Test-set metrics over the instances that solved without error.
    pub metrics: Metrics,
    /// Test instances whose solve returned an error.
    pub failures: usize,
    pub history: Vec<CycleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: Scenario,
    pub metric: MetricKind,
    pub summary: SampleSummary,
}

/// One-tailed test of a scenario against scenario O on one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: Scenario,
    pub metric: MetricKind,
    /// Tail tested for the scenario relative to O.
    pub direction: Direction,
    pub test: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub domain: String,
    pub heuristic_names: Vec<String>,
    pub split: Split,
    pub setups: Vec<ScenarioSetup>,
    pub baselines: Baselines,
    /// Scenario-major, then repetition order.
    pub runs: Vec<RunRecord>,
    pub summaries: Vec<ScenarioSummary>,
    pub comparisons: Vec<Comparison>,
    /// Initial-state features of the training instances, for VAT output.
    pub vat_points: Vec<FeatureVector>,
    /// Oracle-best heuristic per training instance.
    pub vat_groups: Vec<usize>,
}

impl ExperimentResult {
    /// A metric across repetitions of one scenario, in repetition order.
    pub fn metric_values(&self, scenario: Scenario, kind: MetricKind) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.scenario == scenario)
            .map(|r| r.metrics.get(kind))
            .collect()
    }

    pub fn setup(&self, scenario: Scenario) -> Option<&ScenarioSetup> {
        self.setups.iter().find(|s| s.scenario == scenario)
    }
}

/// Seed of repetition `rep` in `scenario`.
pub fn cell_seed(master: u64, seeding: Seeding, scenario: Scenario, rep: usize) -> u64 {
    match seeding {
        Seeding::Paired => derive_seed(master, &[TAG_CELL, rep as u64]),
        Seeding::Independent => derive_seed(master, &[TAG_CELL, scenario.code(), rep as u64]),
    }
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

fn dedup_scenarios(list: &[Scenario]) -> Vec<Scenario> {
    let mut out: Vec<Scenario> = Vec::new();
    for &s in list {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Runs the full scenario x repetition matrix. Report files are written
/// separately by [`write_experiment`].
pub fn run_experiment<D>(
    config: &ExperimentConfig,
    domain: &D,
    instances: &[D::Instance],
) -> Result<ExperimentResult>
where
    D: Domain,
    D::Instance: Clone,
{
    config.validate()?;
    let budget = config.budget();
    let split = if config.evaluate_on_training {
        let all: Vec<usize> = (0..instances.len()).collect();
        if all.is_empty() {
            return Err(Error::Config("no instances".into()));
        }
        Split {
            train: all.clone(),
            test: all,
        }
    } else {
        split_instances(
            instances.len(),
            config.train_fraction,
            config.train_count,
            derive_seed(config.seed, &[TAG_SPLIT]),
        )?
    };
    let train_set = pick(instances, &split.train);
    let test_set = pick(instances, &split.test);

    let rows = training_rows(domain, &train_set, budget)?;
    let scenarios = dedup_scenarios(&config.scenarios);
    let setups: Vec<ScenarioSetup> = scenarios
        .iter()
        .map(|&s| build_scenario(s, &rows, domain.feature_count()))
        .collect::<Result<_>>()?;

    let baselines = compute_baselines(domain, &test_set, budget)?;

    let cells: Vec<(usize, usize)> = (0..setups.len())
        .flat_map(|s| (0..config.repetitions).map(move |r| (s, r)))
        .collect();
    let runs: Vec<RunRecord> = cells
        .par_iter()
        .map(|&(s, rep)| {
            let setup = &setups[s];
            let seed = cell_seed(config.seed, config.seeding, setup.scenario, rep);
            let ga = GaConfig {
                seed,
                budget,
                ..config.ga.clone()
            };
            let trained = train(&ga, domain, &train_set, setup.transform(), &setup.metric)?;
            let results = solve_all(
                &trained.best,
                &test_set,
                domain,
                setup.transform(),
                &setup.metric,
                budget,
            );
            let failures = results.iter().filter(|r| r.is_err()).count();
            let outcomes: Vec<SolveOutcome> = results.into_iter().flatten().collect();
            Ok(RunRecord {
                scenario: setup.scenario,
                repetition: rep,
                seed,
                train_fitness: trained.best_fitness.total,
                selector: trained.best,
                metrics: Metrics::from_outcomes(&outcomes),
                failures,
                history: trained.history,
            })
        })
        .collect::<Result<_>>()?;

    let mut result = ExperimentResult {
        config: config.clone(),
        domain: domain.name().to_string(),
        heuristic_names: domain.heuristic_names().iter().map(|s| s.to_string()).collect(),
        split,
        setups,
        baselines,
        runs,
        summaries: Vec::new(),
        comparisons: Vec::new(),
        vat_points: Vec::new(),
        vat_groups: Vec::new(),
    };

    let metrics = domain.comparison_metrics();
    for &s in &scenarios {
        for &(kind, _) in &metrics {
            result.summaries.push(ScenarioSummary {
                scenario: s,
                metric: kind,
                summary: summarize(&result.metric_values(s, kind))?,
            });
        }
    }
    if scenarios.contains(&Scenario::O) && config.repetitions >= 3 {
        for &s in scenarios.iter().filter(|&&s| s != Scenario::O) {
            for &(kind, sense) in &metrics {
                let direction = match sense {
                    Sense::Maximize => Direction::Greater,
                    Sense::Minimize => Direction::Less,
                };
                let base = result.metric_values(Scenario::O, kind);
                let other = result.metric_values(s, kind);
                let test = if config.paired_test {
                    wilcoxon_signed_rank(&base, &other, direction)?
                } else {
                    wilcoxon_rank_sum(&base, &other, direction)?
                };
                result.comparisons.push(Comparison {
                    scenario: s,
                    metric: kind,
                    direction,
                    test,
                });
            }
        }
    }

    if config.vat {
        result.vat_points = train_set
            .iter()
            .map(|inst| domain.features(inst, &domain.initial_state(inst)))
            .collect();
        let train_baselines = compute_baselines(domain, &train_set, budget)?;
        result.vat_groups = train_baselines.oracle_choices;
    }
    Ok(result)
}

/// Dispatches [`run_experiment`] on a loaded instance set.
pub fn run_loaded(config: &ExperimentConfig, set: &InstanceSet) -> Result<ExperimentResult> {
    use crate::domains::{csp::CspDomain, knapsack::KnapsackDomain, partition::PartitionDomain};
    if set.kind() != config.domain {
        return Err(Error::Config(format!(
            "config domain {} does not match {} instances",
            config.domain,
            set.kind()
        )));
    }
    match set {
        InstanceSet::Csp(v) => run_experiment(config, &CspDomain, v),
        InstanceSet::Knapsack(v) => run_experiment(config, &KnapsackDomain, v),
        InstanceSet::Partition(v) => run_experiment(config, &PartitionDomain, v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::partition::{reference_instances, PartitionDomain};

    #[test]
    fn split_sizes() {
        let s = split_instances(322, 0.05, None, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (16, 306));
        let s = split_instances(600, 0.05, None, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (30, 570));
        assert_eq!(split_instances(600, 0.05, None, 1).unwrap(), s);
        assert_ne!(split_instances(600, 0.05, None, 2).unwrap(), s);
        assert_eq!(train_size(10, 0.25), 3);
        assert!(split_instances(5, 0.05, None, 0).is_err());
        assert!(split_instances(5, 0.5, Some(5), 0).is_err());
        assert_eq!(split_instances(5, 0.05, Some(2), 0).unwrap().train.len(), 2);
    }

    #[test]
    fn scenario_setups() {
        let rows: Vec<FeatureVector> = [[0.0; 8], [1.0; 8]]
            .iter()
            .map(|r| FeatureVector::new(r.to_vec()).unwrap())
            .collect();
        let o = build_scenario(Scenario::O, &rows, 8).unwrap();
        assert_eq!(o.metric, Metric::Euclidean);
        assert!(o.transform().is_none());
        let k = build_scenario(Scenario::K, &rows, 8).unwrap();
        assert_eq!(k.metric, Metric::Kernel(KernelSpec::Rbf { gamma: 0.125 }));
        let ks = build_scenario(Scenario::KS, &rows, 8).unwrap();
        assert_eq!(ks.transform.kind, TransformKind::SShaped);
        assert_eq!(ks.transform.params.len(), 8);
        assert!(matches!(ks.metric, Metric::Kernel(KernelSpec::Rbf { .. })));
        let e = build_scenario(Scenario::E, &[], 8).unwrap();
        assert_eq!(e.transform.kind, TransformKind::Exponential);
        assert!(build_scenario(Scenario::L, &[], 8).is_err());
    }

    #[test]
    fn reference_partition_baselines() {
        let inst = reference_instances();
        let config = ExperimentConfig {
            evaluate_on_training: true,
            scenarios: vec![Scenario::O],
            repetitions: 1,
            budget: Some(1000),
            ga: GaConfig {
                cycles: 5,
                ..GaConfig::default()
            },
            ..ExperimentConfig::new(DomainKind::Partition)
        };
        let r = run_experiment(&config, &PartitionDomain, &inst).unwrap();
        let q: Vec<Vec<f64>> = r
            .baselines
            .per_instance
            .iter()
            .map(|row| row.iter().map(|o| o.objective).collect())
            .collect();
        assert_eq!(q, vec![vec![0.0, 0.0], vec![15.0, 1.0], vec![14.0, 6.0]]);
        assert_eq!(r.baselines.oracle.metrics.objective_total, 7.0);
        assert_eq!(r.runs.len(), 1);
        assert!(r.comparisons.is_empty());
    }

    #[test]
    fn cell_seeds() {
        let a = cell_seed(3, Seeding::Paired, Scenario::O, 2);
        assert_eq!(a, cell_seed(3, Seeding::Paired, Scenario::KS, 2));
        assert_ne!(
            cell_seed(3, Seeding::Independent, Scenario::O, 2),
            cell_seed(3, Seeding::Independent, Scenario::K, 2)
        );
    }
}

//! Python bindings: instance sets for the three domains, selectors,
//! transforms, kernels, training, experiments and the rank tests.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hyperselect::domains::csp::{generate_csp_set, parse_csp, CspDomain};
use hyperselect::domains::knapsack::{
    generate_knapsack, Item, KnapsackClass, KnapsackDomain, KnapsackInstance,
};
use hyperselect::domains::partition::{PartitionDomain, PartitionInstance};
use hyperselect::ga::{solve_all, train, GaConfig};
use hyperselect::harness::{
    build_scenario, compute_baselines, load_instances, run_loaded, training_rows,
    write_experiment, DomainKind, ExperimentConfig, InstanceSet, Scenario, ScenarioSetup,
};
use hyperselect::kernel::{kernel_distance_sq, kernel_eval};
use hyperselect::stats::{self, Direction, TestResult};
use hyperselect::{
    select_action, Domain, FeatureVector, KernelSpec, Metric, Metrics, Rule, Selector,
    SolveOutcome, TransformKind, TransformSpec,
};

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for hyperselect::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(|e| match e {
            hyperselect::Error::Io { .. } => PyIOError::new_err(e.to_string()),
            other => PyValueError::new_err(other.to_string()),
        })
    }
}

macro_rules! dispatch {
    ($set:expr, |$domain:ident, $insts:ident| $body:expr) => {
        match $set {
            InstanceSet::Csp($insts) => {
                let $domain = &CspDomain;
                $body
            }
            InstanceSet::Knapsack($insts) => {
                let $domain = &KnapsackDomain;
                $body
            }
            InstanceSet::Partition($insts) => {
                let $domain = &PartitionDomain;
                $body
            }
        }
    };
}

fn kernel_spec(kind: &str, gamma: Option<f64>, degree: Option<u32>) -> PyResult<KernelSpec> {
    match kind {
        "linear" => Ok(KernelSpec::Linear),
        "rbf" => KernelSpec::rbf(gamma.unwrap_or(1.0)).py(),
        "polynomial" => KernelSpec::polynomial(degree.unwrap_or(2)).py(),
        other => Err(PyValueError::new_err(format!("unknown kernel `{other}`"))),
    }
}

fn metric(name: &str, gamma: Option<f64>, degree: Option<u32>) -> PyResult<Metric> {
    match name {
        "euclidean" => Ok(Metric::Euclidean),
        kind => Ok(Metric::Kernel(kernel_spec(kind, gamma, degree)?)),
    }
}

fn direction(alternative: &str) -> PyResult<Direction> {
    match alternative {
        "greater" => Ok(Direction::Greater),
        "less" => Ok(Direction::Less),
        other => Err(PyValueError::new_err(format!(
            "alternative must be `greater` or `less`, got `{other}`"
        ))),
    }
}

/// A rule list mapping feature points to heuristic indices.
#[pyclass(name = "Selector", module = "pyhyperselect", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySelector {
    inner: Selector,
}

#[pymethods]
impl PySelector {
    /// `rules` is a list of `(condition, heuristic)` pairs with conditions in `[0, 1]`.
    #[new]
    fn new(rules: Vec<(Vec<f64>, usize)>) -> PyResult<Self> {
        let rules = rules
            .into_iter()
            .map(|(c, a)| Rule::new(c, a))
            .collect::<hyperselect::Result<_>>()
            .py()?;
        Ok(PySelector {
            inner: Selector::new(rules).py()?,
        })
    }

    #[staticmethod]
    fn constant(feature_count: usize, heuristic: usize) -> Self {
        PySelector {
            inner: Selector::constant(feature_count, heuristic),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PySelector {
            inner: Selector::from_json(text).py()?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    #[getter]
    fn rules(&self) -> Vec<(Vec<f64>, usize)> {
        self.inner
            .rules
            .iter()
            .map(|r| (r.condition.clone(), r.action))
            .collect()
    }

    /// Heuristic of the nearest rule to `features`.
    #[pyo3(signature = (features, metric_name = "euclidean", gamma = None))]
    fn select(&self, features: Vec<f64>, metric_name: &str, gamma: Option<f64>) -> PyResult<usize> {
        let m = metric(metric_name, gamma, None)?;
        let f = FeatureVector::new(features).py()?;
        select_action(&self.inner, &f, &m).py()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Selector({} rules)", self.inner.len())
    }
}

/// An explicit feature transformation.
#[pyclass(name = "Transform", module = "pyhyperselect", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTransform {
    inner: TransformSpec,
}

#[pymethods]
impl PyTransform {
    /// Fits `linear` or `s_shaped` bounds on the rows of a feature matrix.
    #[staticmethod]
    fn fit(kind: &str, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let kind = match kind {
            "linear" => TransformKind::Linear,
            "s_shaped" => TransformKind::SShaped,
            "identity" => TransformKind::Identity,
            "exponential" => TransformKind::Exponential,
            other => return Err(PyValueError::new_err(format!("unknown transform `{other}`"))),
        };
        Ok(PyTransform {
            inner: TransformSpec::fit(kind, &rows).py()?,
        })
    }

    #[staticmethod]
    fn identity() -> Self {
        PyTransform {
            inner: TransformSpec::identity(),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (steepness = 5.0))]
    fn exponential(steepness: f64) -> Self {
        PyTransform {
            inner: TransformSpec::exponential(steepness),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyTransform {
            inner: TransformSpec::from_json(text).py()?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    fn apply(&self, values: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply_values(&values).py()
    }

    #[getter]
    fn kind(&self) -> String {
        format!("{:?}", self.inner.kind)
    }
}

/// Scenario transform plus rule-matching metric.
#[pyclass(name = "Setup", module = "pyhyperselect", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySetup {
    inner: ScenarioSetup,
}

#[pymethods]
impl PySetup {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PySetup {
            inner: ScenarioSetup::from_json(text).py()?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    #[getter]
    fn scenario(&self) -> &'static str {
        self.inner.scenario.label()
    }

    #[getter]
    fn metric(&self) -> &'static str {
        self.inner.metric.label()
    }

    #[getter]
    fn transform(&self) -> PyTransform {
        PyTransform {
            inner: self.inner.transform.clone(),
        }
    }
}

#[pyclass(name = "Outcome", module = "pyhyperselect", frozen, get_all)]
struct PyOutcome {
    solved: bool,
    timed_out: bool,
    steps: u64,
    cost: u64,
    objective: f64,
}

#[pymethods]
impl PyOutcome {
    fn __repr__(&self) -> String {
        format!(
            "Outcome(solved={}, timed_out={}, cost={}, objective={})",
            self.solved, self.timed_out, self.cost, self.objective
        )
    }
}

impl From<SolveOutcome> for PyOutcome {
    fn from(o: SolveOutcome) -> Self {
        PyOutcome {
            solved: o.solved,
            timed_out: o.timed_out,
            steps: o.steps,
            cost: o.cost,
            objective: o.objective,
        }
    }
}

#[pyclass(name = "Metrics", module = "pyhyperselect", frozen, get_all)]
struct PyMetrics {
    instances: usize,
    success_rate: f64,
    adjusted_cost: u64,
    total_cost: u64,
    objective_total: f64,
}

#[pymethods]
impl PyMetrics {
    fn __repr__(&self) -> String {
        format!(
            "Metrics(instances={}, sr={}, acc={}, cc={}, objective={})",
            self.instances, self.success_rate, self.adjusted_cost, self.total_cost, self.objective_total
        )
    }
}

impl From<Metrics> for PyMetrics {
    fn from(m: Metrics) -> Self {
        PyMetrics {
            instances: m.instances,
            success_rate: m.success_rate,
            adjusted_cost: m.adjusted_cost,
            total_cost: m.total_cost,
            objective_total: m.objective_total,
        }
    }
}

/// Result of training one selector.
#[pyclass(name = "Trained", module = "pyhyperselect", frozen, get_all)]
struct PyTrained {
    selector: Py<PySelector>,
    setup: Py<PySetup>,
    fitness: f64,
    solved: usize,
    /// `(cycle, best_fitness, mean_fitness, best_rule_count)` per cycle.
    history: Vec<(usize, f64, f64, usize)>,
}

fn solve_with<D: Domain>(
    domain: &D,
    insts: &[D::Instance],
    selector: &Selector,
    setup: &ScenarioSetup,
    budget: u64,
) -> PyResult<Vec<PyOutcome>> {
    selector
        .validate(domain.feature_count(), domain.heuristic_count())
        .py()?;
    solve_all(selector, insts, domain, setup.transform(), &setup.metric, budget)
        .into_iter()
        .map(|r| r.map(PyOutcome::from).py())
        .collect()
}

fn train_with<D: Domain>(
    domain: &D,
    insts: &[D::Instance],
    scenario: Scenario,
    ga: &GaConfig,
) -> hyperselect::Result<(ScenarioSetup, hyperselect::ga::TrainingResult)> {
    let rows = training_rows(domain, insts, ga.budget)?;
    let setup = build_scenario(scenario, &rows, domain.feature_count())?;
    let trained = train(ga, domain, insts, setup.transform(), &setup.metric)?;
    Ok((setup, trained))
}

/// Instances of one domain.
#[pyclass(name = "Instances", module = "pyhyperselect", frozen, skip_from_py_object)]
struct PyInstances {
    inner: InstanceSet,
}

#[pymethods]
impl PyInstances {
    /// Loads files or directories; `domain` is `csp`, `knapsack` or `partition`.
    #[staticmethod]
    fn load(domain: &str, paths: Vec<PathBuf>) -> PyResult<Self> {
        let kind: DomainKind = domain.parse().py()?;
        Ok(PyInstances {
            inner: load_instances(kind, &paths).py()?,
        })
    }

    #[staticmethod]
    fn partition(instances: Vec<Vec<u64>>) -> PyResult<Self> {
        let v = instances
            .into_iter()
            .map(PartitionInstance::new)
            .collect::<hyperselect::Result<_>>()
            .py()?;
        Ok(PyInstances {
            inner: InstanceSet::Partition(v),
        })
    }

    /// Each instance is `(capacity, [(profit, weight), ...])`.
    #[staticmethod]
    fn knapsack(instances: Vec<(u64, Vec<(u64, u64)>)>) -> PyResult<Self> {
        let v = instances
            .into_iter()
            .map(|(capacity, items)| {
                let items = items
                    .into_iter()
                    .map(|(profit, weight)| Item { profit, weight })
                    .collect();
                KnapsackInstance::new(capacity, items)
            })
            .collect::<hyperselect::Result<_>>()
            .py()?;
        Ok(PyInstances {
            inner: InstanceSet::Knapsack(v),
        })
    }

    /// Parses CSP documents (JSON or XCSP XML).
    #[staticmethod]
    fn csp(texts: Vec<String>) -> PyResult<Self> {
        let v = texts
            .iter()
            .map(|t| parse_csp(t))
            .collect::<hyperselect::Result<_>>()
            .py()?;
        Ok(PyInstances {
            inner: InstanceSet::Csp(v),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (count, items, class_name = "uncorrelated", range = 1000, seed = 0))]
    fn generate_knapsack(
        count: usize,
        items: usize,
        class_name: &str,
        range: u64,
        seed: u64,
    ) -> PyResult<Self> {
        let class: KnapsackClass = class_name.parse().py()?;
        if range == 0 {
            return Err(PyValueError::new_err("range must be positive"));
        }
        Ok(PyInstances {
            inner: InstanceSet::Knapsack(generate_knapsack(count, items, class, range, seed)),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (count, variables, domain_size, density, tightness, seed = 0))]
    fn generate_csp(
        count: usize,
        variables: usize,
        domain_size: usize,
        density: f64,
        tightness: f64,
        seed: u64,
    ) -> PyResult<Self> {
        if variables == 0 || domain_size == 0 {
            return Err(PyValueError::new_err("variables and domain_size must be positive"));
        }
        Ok(PyInstances {
            inner: InstanceSet::Csp(generate_csp_set(
                count,
                variables,
                domain_size,
                density,
                tightness,
                seed,
            )),
        })
    }

    #[getter]
    fn domain(&self) -> String {
        self.inner.kind().to_string()
    }

    #[getter]
    fn heuristic_names(&self) -> Vec<&'static str> {
        dispatch!(&self.inner, |d, _i| d.heuristic_names().to_vec())
    }

    #[getter]
    fn feature_count(&self) -> usize {
        dispatch!(&self.inner, |d, _i| d.feature_count())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Features of the initial state of instance `index`.
    fn features(&self, index: usize) -> PyResult<Vec<f64>> {
        if index >= self.inner.len() {
            return Err(PyValueError::new_err(format!("index {index} out of range")));
        }
        Ok(dispatch!(&self.inner, |d, insts| {
            let inst = &insts[index];
            d.features(inst, &d.initial_state(inst)).into_inner()
        }))
    }

    /// Runs one standalone heuristic on every instance.
    #[pyo3(signature = (heuristic, budget = None))]
    fn run_heuristic(&self, py: Python<'_>, heuristic: usize, budget: Option<u64>) -> PyResult<Vec<PyOutcome>> {
        let budget = budget.unwrap_or(GaConfig::default().budget);
        let set = &self.inner;
        let out: hyperselect::Result<Vec<SolveOutcome>> = py.detach(|| {
            dispatch!(set, |d, insts| insts
                .iter()
                .map(|i| hyperselect::run_heuristic(heuristic, i, d, budget))
                .collect())
        });
        Ok(out.py()?.into_iter().map(PyOutcome::from).collect())
    }

    /// Solves every instance with `selector`; `setup` defaults to scenario O.
    #[pyo3(signature = (selector, setup = None, budget = None))]
    fn solve(
        &self,
        py: Python<'_>,
        selector: &PySelector,
        setup: Option<&PySetup>,
        budget: Option<u64>,
    ) -> PyResult<Vec<PyOutcome>> {
        let budget = budget.unwrap_or(GaConfig::default().budget);
        let setup = match setup {
            Some(s) => s.inner.clone(),
            None => build_scenario(Scenario::O, &[], 1).py()?,
        };
        let (set, sel) = (&self.inner, &selector.inner);
        py.detach(|| dispatch!(set, |d, insts| solve_with(d, insts, sel, &setup, budget)))
    }

    /// Standalone heuristic metrics, the synthetic oracle and its per-instance choices.
    #[pyo3(signature = (budget = None))]
    fn baselines<'py>(&self, py: Python<'py>, budget: Option<u64>) -> PyResult<Bound<'py, PyDict>> {
        let budget = budget.unwrap_or(GaConfig::default().budget);
        let set = &self.inner;
        let b = py
            .detach(|| dispatch!(set, |d, insts| compute_baselines(d, insts, budget)))
            .py()?;
        let out = PyDict::new(py);
        let heuristics = PyDict::new(py);
        for row in b.heuristics {
            heuristics.set_item(row.name, PyMetrics::from(row.metrics))?;
        }
        out.set_item("heuristics", heuristics)?;
        out.set_item("oracle", PyMetrics::from(b.oracle.metrics))?;
        out.set_item("oracle_choices", b.oracle_choices)?;
        Ok(out)
    }

    /// Trains a selector for `scenario` (O, L, E, S, K, K+L or K+S).
    #[pyo3(signature = (scenario = "O", seed = 0, cycles = 100, population = 20, budget = None, min_rules = 2, max_rules = 30))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        &self,
        py: Python<'_>,
        scenario: &str,
        seed: u64,
        cycles: usize,
        population: usize,
        budget: Option<u64>,
        min_rules: usize,
        max_rules: usize,
    ) -> PyResult<PyTrained> {
        let scenario: Scenario = scenario.parse().py()?;
        let mut ga = GaConfig {
            seed,
            cycles,
            population_size: population,
            min_rules,
            max_rules,
            ..GaConfig::default()
        };
        if let Some(b) = budget {
            ga.budget = b;
        }
        ga.validate().py()?;
        let set = &self.inner;
        let (setup, trained) = py
            .detach(|| dispatch!(set, |d, insts| train_with(d, insts, scenario, &ga)))
            .py()?;
        Ok(PyTrained {
            selector: Py::new(py, PySelector { inner: trained.best })?,
            setup: Py::new(py, PySetup { inner: setup })?,
            fitness: trained.best_fitness.total,
            solved: trained.best_fitness.solved,
            history: trained
                .history
                .iter()
                .map(|c| (c.cycle, c.best_fitness, c.mean_fitness, c.best_rule_count))
                .collect(),
        })
    }

    fn __repr__(&self) -> String {
        format!("Instances({}, {})", self.inner.kind(), self.inner.len())
    }
}

#[pyfunction]
#[pyo3(signature = (kind, a, b, gamma = None, degree = None))]
fn kernel(kind: &str, a: Vec<f64>, b: Vec<f64>, gamma: Option<f64>, degree: Option<u32>) -> PyResult<f64> {
    kernel_eval(&kernel_spec(kind, gamma, degree)?, &a, &b).py()
}

/// Squared kernel-induced distance `K(a,a) - 2K(a,b) + K(b,b)`.
#[pyfunction]
#[pyo3(signature = (kind, a, b, gamma = None, degree = None))]
fn kernel_distance(kind: &str, a: Vec<f64>, b: Vec<f64>, gamma: Option<f64>, degree: Option<u32>) -> PyResult<f64> {
    kernel_distance_sq(&kernel_spec(kind, gamma, degree)?, &a, &b).py()
}

fn test_dict<'py>(py: Python<'py>, t: TestResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("statistic", t.statistic)?;
    d.set_item("z", t.z)?;
    d.set_item("p_value", t.p_value)?;
    d.set_item("degenerate", t.degenerate)?;
    Ok(d)
}

/// One-tailed rank-sum test; `greater` asks whether `b` tends to exceed `a`.
#[pyfunction]
#[pyo3(signature = (a, b, alternative = "greater"))]
fn wilcoxon_rank_sum<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>, alternative: &str) -> PyResult<Bound<'py, PyDict>> {
    test_dict(py, stats::wilcoxon_rank_sum(&a, &b, direction(alternative)?).py()?)
}

#[pyfunction]
#[pyo3(signature = (a, b, alternative = "greater"))]
fn wilcoxon_signed_rank<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>, alternative: &str) -> PyResult<Bound<'py, PyDict>> {
    test_dict(py, stats::wilcoxon_signed_rank(&a, &b, direction(alternative)?).py()?)
}

#[pyfunction]
fn summarize<'py>(py: Python<'py>, sample: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let s = stats::summarize(&sample).py()?;
    let d = PyDict::new(py);
    d.set_item("n", s.n)?;
    d.set_item("mean", s.mean)?;
    d.set_item("sd", s.sd)?;
    d.set_item("median", s.median)?;
    d.set_item("min", s.min)?;
    d.set_item("max", s.max)?;
    d.set_item("lower_quartile", s.lower_quartile)?;
    d.set_item("upper_quartile", s.upper_quartile)?;
    d.set_item("mild_outliers", s.mild_outliers)?;
    d.set_item("extreme_outliers", s.extreme_outliers)?;
    Ok(d)
}

/// Runs the experiment described by a TOML config and optionally writes the report tree.
#[pyfunction]
#[pyo3(signature = (config_path, out_dir = None, seed = None, repetitions = None))]
fn run_experiment<'py>(
    py: Python<'py>,
    config_path: PathBuf,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    repetitions: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut config = ExperimentConfig::load(&config_path).py()?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(r) = repetitions {
        config.repetitions = r;
    }
    let result = py
        .detach(|| {
            let set = load_instances(config.domain, &config.instances)?;
            let result = run_loaded(&config, &set)?;
            if let Some(dir) = &out_dir {
                write_experiment(&result, dir)?;
            }
            Ok(result)
        })
        .py()?;
    let out = PyDict::new(py);
    let runs = PyDict::new(py);
    for s in &result.config.scenarios {
        let per_run: Vec<Py<PyMetrics>> = result
            .runs
            .iter()
            .filter(|r| r.scenario == *s)
            .map(|r| Py::new(py, PyMetrics::from(r.metrics)))
            .collect::<PyResult<_>>()?;
        runs.set_item(s.label(), per_run)?;
    }
    out.set_item("runs", runs)?;
    let p = PyDict::new(py);
    for c in &result.comparisons {
        p.set_item(format!("{}:{}", c.scenario.label(), c.metric.label()), c.test.p_value)?;
    }
    out.set_item("p_values", p)?;
    out.set_item("oracle", PyMetrics::from(result.baselines.oracle.metrics))?;
    out.set_item("train", result.split.train.clone())?;
    out.set_item("test", result.split.test.clone())?;
    Ok(out)
}

#[pymodule]
fn pyhyperselect(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySelector>()?;
    m.add_class::<PyTransform>()?;
    m.add_class::<PySetup>()?;
    m.add_class::<PyOutcome>()?;
    m.add_class::<PyMetrics>()?;
    m.add_class::<PyTrained>()?;
    m.add_class::<PyInstances>()?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_distance, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon_rank_sum, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon_signed_rank, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

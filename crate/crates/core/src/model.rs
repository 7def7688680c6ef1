//! Selector representation, nearest-rule dispatch and the per-instance solve loop.
//!
//! A [`Selector`] is an ordered list of [`Rule`]s. At every step of a solve the
//! domain reports the current problem state as a [`FeatureVector`], the vector
//! is optionally passed through a [`TransformSpec`], and the action of the rule
//! whose condition is closest under the chosen [`Distance`] is applied.

use std::cmp::Ordering;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::TransformSpec;

/// Real-valued description of a problem state. All values are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "feature {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(FeatureVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        FeatureVector::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(v: FeatureVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub condition: Vec<f64>,
    pub action: usize,
}

impl Rule {
    pub fn new(condition: Vec<f64>, action: usize) -> Result<Self> {
        let rule = Rule { condition, action };
        rule.check_condition()?;
        Ok(rule)
    }

    fn check_condition(&self) -> Result<()> {
        match self
            .condition
            .iter()
            .find(|v| !(0.0..=1.0).contains(*v))
        {
            Some(v) => Err(Error::invalid(format!(
                "rule condition value {v} outside [0, 1]"
            ))),
            None => Ok(()),
        }
    }
}

/// An ordered rule list; the evolved individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selector {
    pub rules: Vec<Rule>,
}

impl Selector {
    pub fn new(rules: Vec<Rule>) -> Result<Self> {
        let selector = Selector { rules };
        selector.check_shape()?;
        Ok(selector)
    }

    /// Single-rule selector that always applies `action`.
    pub fn constant(feature_count: usize, action: usize) -> Self {
        Selector {
            rules: vec![Rule {
                condition: vec![0.5; feature_count],
                action,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Length of every rule condition.
    pub fn condition_len(&self) -> Option<usize> {
        self.rules.first().map(|r| r.condition.len())
    }

    fn check_shape(&self) -> Result<()> {
        let Some(width) = self.condition_len() else {
            return Err(Error::invalid("selector has no rules"));
        };
        for (i, rule) in self.rules.iter().enumerate() {
            if rule.condition.len() != width {
                return Err(Error::invalid(format!(
                    "rule {i} has condition length {}, expected {width}",
                    rule.condition.len()
                )));
            }
            rule.check_condition()?;
        }
        Ok(())
    }

    /// Checks the selector against a domain's feature and heuristic counts.
    pub fn validate(&self, feature_count: usize, heuristic_count: usize) -> Result<()> {
        self.check_shape()?;
        if self.condition_len() != Some(feature_count) {
            return Err(Error::invalid(format!(
                "selector conditions have length {:?}, domain has {feature_count} features",
                self.condition_len()
            )));
        }
        if let Some(rule) = self.rules.iter().find(|r| r.action >= heuristic_count) {
            return Err(Error::invalid(format!(
                "action {} out of range for {heuristic_count} heuristics",
                rule.action
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let selector: Selector = serde_json::from_str(text)?;
        selector.check_shape()?;
        Ok(selector)
    }
}

/// Distance used to find the nearest rule.
pub trait Distance {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64;
}

impl<F> Distance for F
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self(a, b)
    }
}

/// Returns the action of the closest rule; the first rule wins exact ties.
pub fn select_action<D: Distance + ?Sized>(
    selector: &Selector,
    features: &[f64],
    metric: &D,
) -> Result<usize> {
    let mut best: Option<(f64, usize)> = None;
    for rule in &selector.rules {
        if rule.condition.len() != features.len() {
            return Err(Error::invalid(format!(
                "feature vector has length {}, rule condition has {}",
                features.len(),
                rule.condition.len()
            )));
        }
        let d = metric.distance(&rule.condition, features);
        match best {
            Some((bd, _)) if d >= bd => {}
            _ => best = Some((d, rule.action)),
        }
    }
    best.map(|(_, a)| a)
        .ok_or_else(|| Error::invalid("selector has no rules"))
}

/// Whether larger or smaller objective values are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        }
    }

    /// Ordering where `Less` means "better".
    pub fn rank(self, a: f64, b: f64) -> Ordering {
        match self {
            Sense::Minimize => a.total_cmp(&b),
            Sense::Maximize => b.total_cmp(&a),
        }
    }

    /// Worst possible value, used for failed evaluations.
    pub fn worst(self) -> f64 {
        match self {
            Sense::Minimize => f64::INFINITY,
            Sense::Maximize => f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    /// The solve loop reached a finished state within budget.
    pub solved: bool,
    pub steps: u64,
    /// Domain cost: consistency checks for CSP, applied actions elsewhere.
    pub cost: u64,
    pub objective: f64,
    pub timed_out: bool,
}

/// The contract each problem domain implements.
///
/// Every method must be deterministic for a given instance/state pair and
/// `apply` must strictly advance the state.
pub trait Domain: Sync {
    type Instance: Sync;
    type State: Clone;

    fn name(&self) -> &'static str;

    fn feature_count(&self) -> usize;

    fn heuristic_names(&self) -> &'static [&'static str];

    fn heuristic_count(&self) -> usize {
        self.heuristic_names().len()
    }

    fn sense(&self) -> Sense;

    fn initial_state(&self, instance: &Self::Instance) -> Self::State;

    fn features(&self, instance: &Self::Instance, state: &Self::State) -> FeatureVector;

    fn apply(
        &self,
        instance: &Self::Instance,
        state: &mut Self::State,
        action: usize,
    ) -> Result<()>;

    fn finished(&self, instance: &Self::Instance, state: &Self::State) -> bool;

    fn cost(&self, state: &Self::State) -> u64;

    fn objective(&self, instance: &Self::Instance, state: &Self::State) -> f64;

    /// Contribution of one outcome to a training fitness total.
    fn fitness_term(&self, outcome: &SolveOutcome, _budget: u64) -> f64 {
        outcome.objective
    }

    /// Metrics compared between scenarios, with the direction of improvement.
    fn comparison_metrics(&self) -> Vec<(MetricKind, Sense)> {
        vec![(MetricKind::Objective, self.sense())]
    }
}

/// Aggregate metrics reported per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    SuccessRate,
    AdjustedCost,
    TotalCost,
    Objective,
}

impl MetricKind {
    pub fn label(self) -> &'static str {
        match self {
            MetricKind::SuccessRate => "sr",
            MetricKind::AdjustedCost => "acc",
            MetricKind::TotalCost => "cc",
            MetricKind::Objective => "objective",
        }
    }
}

fn run_loop<D, F>(
    domain: &D,
    instance: &D::Instance,
    budget: u64,
    mut choose: F,
    mut observe: impl FnMut(&D::State),
) -> Result<SolveOutcome>
where
    D: Domain + ?Sized,
    F: FnMut(&D::State) -> Result<usize>,
{
    if budget == 0 {
        return Err(Error::invalid("budget must be positive"));
    }
    let mut state = domain.initial_state(instance);
    let mut steps = 0u64;
    let mut solved = false;
    let mut timed_out = false;
    loop {
        observe(&state);
        if domain.finished(instance, &state) {
            solved = true;
            break;
        }
        let action = choose(&state)?;
        if domain.apply(instance, &mut state, action).is_err() {
            break;
        }
        steps += 1;
        if domain.cost(&state) > budget {
            timed_out = true;
            break;
        }
    }
    Ok(SolveOutcome {
        solved,
        steps,
        cost: domain.cost(&state),
        objective: domain.objective(instance, &state),
        timed_out,
    })
}

/// Solves one instance, re-deriving the action from fresh features before every step.
///
/// `transform = None` feeds raw features to the selector.
pub fn solve_instance<D, M>(
    selector: &Selector,
    instance: &D::Instance,
    domain: &D,
    transform: Option<&TransformSpec>,
    metric: &M,
    budget: u64,
) -> Result<SolveOutcome>
where
    D: Domain + ?Sized,
    M: Distance + ?Sized,
{
    run_loop(
        domain,
        instance,
        budget,
        |state| {
            let raw = domain.features(instance, state);
            match transform {
                Some(spec) => select_action(selector, &spec.apply(&raw)?, metric),
                None => select_action(selector, &raw, metric),
            }
        },
        |_| {},
    )
}

/// Solves one instance applying the same heuristic at every step.
pub fn run_heuristic<D>(
    heuristic: usize,
    instance: &D::Instance,
    domain: &D,
    budget: u64,
) -> Result<SolveOutcome>
where
    D: Domain + ?Sized,
{
    if heuristic >= domain.heuristic_count() {
        return Err(Error::invalid(format!(
            "heuristic {heuristic} out of range for {} heuristics",
            domain.heuristic_count()
        )));
    }
    run_loop(domain, instance, budget, |_| Ok(heuristic), |_| {})
}

/// Feature snapshots of every state visited by a standalone heuristic run.
pub fn heuristic_trajectory<D>(
    heuristic: usize,
    instance: &D::Instance,
    domain: &D,
    budget: u64,
) -> Result<Vec<FeatureVector>>
where
    D: Domain + ?Sized,
{
    let mut snapshots = Vec::new();
    run_loop(
        domain,
        instance,
        budget,
        |_| Ok(heuristic),
        |state| snapshots.push(domain.features(instance, state)),
    )?;
    Ok(snapshots)
}

/// Aggregate metrics over a set of outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub instances: usize,
    /// Fraction of instances finished within budget.
    pub success_rate: f64,
    /// Cost summed over instances that did not time out.
    pub adjusted_cost: u64,
    /// Cost summed over all instances.
    pub total_cost: u64,
    pub objective_total: f64,
}

impl Metrics {
    pub fn from_outcomes(outcomes: &[SolveOutcome]) -> Self {
        let completed = outcomes.iter().filter(|o| o.solved).count();
        Metrics {
            instances: outcomes.len(),
            success_rate: if outcomes.is_empty() {
                0.0
            } else {
                completed as f64 / outcomes.len() as f64
            },
            adjusted_cost: outcomes
                .iter()
                .filter(|o| !o.timed_out)
                .map(|o| o.cost)
                .sum(),
            total_cost: outcomes.iter().map(|o| o.cost).sum(),
            objective_total: outcomes.iter().map(|o| o.objective).sum(),
        }
    }

    pub fn get(&self, kind: MetricKind) -> f64 {
        match kind {
            MetricKind::SuccessRate => self.success_rate,
            MetricKind::AdjustedCost => self.adjusted_cost as f64,
            MetricKind::TotalCost => self.total_cost as f64,
            MetricKind::Objective => self.objective_total,
        }
    }
}

/// Orders outcomes best-first: finished outcomes dominate unfinished ones,
/// then the objective decides under `sense`.
pub fn compare_outcomes(a: &SolveOutcome, b: &SolveOutcome, sense: Sense) -> Ordering {
    b.solved
        .cmp(&a.solved)
        .then_with(|| sense.rank(a.objective, b.objective))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Index of the chosen heuristic per instance.
    pub choices: Vec<usize>,
    pub outcomes: Vec<SolveOutcome>,
    pub metrics: Metrics,
}

/// Picks the best standalone heuristic per instance in hindsight.
///
/// `per_instance[i][h]` is the outcome of heuristic `h` on instance `i`.
pub fn synthetic_oracle(per_instance: &[Vec<SolveOutcome>], sense: Sense) -> Result<OracleResult> {
    if per_instance.is_empty() {
        return Err(Error::invalid("oracle needs at least one instance"));
    }
    let width = per_instance[0].len();
    if width == 0 || per_instance.iter().any(|row| row.len() != width) {
        return Err(Error::invalid(
            "every heuristic must have an outcome on every instance",
        ));
    }
    let mut choices = Vec::with_capacity(per_instance.len());
    let mut outcomes = Vec::with_capacity(per_instance.len());
    for row in per_instance {
        let mut best = 0;
        for h in 1..row.len() {
            if compare_outcomes(&row[h], &row[best], sense) == Ordering::Less {
                best = h;
            }
        }
        choices.push(best);
        outcomes.push(row[best]);
    }
    let metrics = Metrics::from_outcomes(&outcomes);
    Ok(OracleResult {
        choices,
        outcomes,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    fn max_min() -> Selector {
        Selector::new(vec![
            Rule::new(vec![0.0], 0).unwrap(),
            Rule::new(vec![0.5], 1).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn nearest_rule_picks_expected_heuristic() {
        let s = max_min();
        assert_eq!(select_action(&s, &[0.22], &euclid).unwrap(), 0);
        assert_eq!(select_action(&s, &[0.43], &euclid).unwrap(), 1);
    }

    #[test]
    fn exact_tie_goes_to_first_rule() {
        let s = Selector::new(vec![
            Rule::new(vec![0.3], 4).unwrap(),
            Rule::new(vec![0.3], 7).unwrap(),
        ])
        .unwrap();
        assert_eq!(select_action(&s, &[0.3], &euclid).unwrap(), 4);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = select_action(&max_min(), &[0.1, 0.2], &euclid).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn selector_json_shape() {
        let json = max_min().to_json().unwrap();
        assert_eq!(
            json,
            r#"{"rules":[{"condition":[0.0],"action":0},{"condition":[0.5],"action":1}]}"#
        );
        assert_eq!(Selector::from_json(&json).unwrap(), max_min());
    }

    #[test]
    fn selector_invariants_enforced() {
        assert!(Selector::new(vec![]).is_err());
        assert!(Rule::new(vec![1.2], 0).is_err());
        let ragged = Selector {
            rules: vec![
                Rule::new(vec![0.1], 0).unwrap(),
                Rule::new(vec![0.1, 0.2], 0).unwrap(),
            ],
        };
        assert!(ragged.validate(1, 2).is_err());
        assert!(max_min().validate(1, 1).is_err());
        assert!(max_min().validate(1, 2).is_ok());
        assert!(Selector::from_json(r#"{"rules":[{"condition":[2.0],"action":0}]}"#).is_err());
    }

    #[test]
    fn feature_vector_rejects_non_finite() {
        assert!(FeatureVector::new(vec![0.1, f64::NAN]).is_err());
        assert!(FeatureVector::new(vec![f64::INFINITY]).is_err());
        assert_eq!(FeatureVector::new(vec![0.5]).unwrap().as_slice(), &[0.5]);
    }

    fn outcome(solved: bool, cost: u64) -> SolveOutcome {
        SolveOutcome {
            solved,
            steps: 1,
            cost,
            objective: cost as f64,
            timed_out: !solved,
        }
    }

    #[test]
    fn oracle_picks_min_cost() {
        let r = synthetic_oracle(&[vec![outcome(true, 10), outcome(true, 7)]], Sense::Minimize)
            .unwrap();
        assert_eq!(r.choices, vec![1]);
        assert_eq!(r.metrics.total_cost, 7);
    }

    #[test]
    fn oracle_prefers_solved() {
        let r = synthetic_oracle(&[vec![outcome(false, 5), outcome(true, 99)]], Sense::Minimize)
            .unwrap();
        assert_eq!(r.choices, vec![1]);
    }

    #[test]
    fn oracle_rejects_empty_and_ragged() {
        assert!(synthetic_oracle(&[], Sense::Minimize).is_err());
        assert!(synthetic_oracle(
            &[vec![outcome(true, 1)], vec![outcome(true, 1), outcome(true, 2)]],
            Sense::Minimize
        )
        .is_err());
    }

    #[test]
    fn metrics_mixed_outcomes() {
        let m = Metrics::from_outcomes(&[outcome(true, 10), outcome(false, 50)]);
        assert_eq!(m.total_cost, 60);
        assert_eq!(m.adjusted_cost, 10);
        assert_eq!(m.success_rate, 0.5);
    }
}

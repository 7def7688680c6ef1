//! Binary extensional CSPs solved by chronological backtracking, where the
//! selector picks the variable-ordering heuristic before every assignment.

mod features;
mod search;
mod xcsp;

use std::collections::BTreeMap;
use std::collections::HashMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Domain, FeatureVector, MetricKind, Metrics, Sense, SolveOutcome};

pub use features::{csp_features, kappa, CspFeatures, TIGHTNESS_CAP};
pub use search::{choose_variable, CspState, Frame, SearchStatus};
pub use xcsp::parse_xcsp;

pub const DOM: usize = 0;
pub const DEG: usize = 1;
pub const KAPPA: usize = 2;
pub const WDEG: usize = 3;

/// Consistency-check budget used when none is configured.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub domain: Vec<i64>,
}

/// Binary constraint over `scope.0 < scope.1`, stored as a conflict table
/// indexed by value positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub scope: (usize, usize),
    width: usize,
    table: Vec<bool>,
    conflict_count: usize,
}

impl Constraint {
    pub fn conflicts(&self, first: usize, second: usize) -> bool {
        self.table[first * self.width + second]
    }

    pub fn conflict_count(&self) -> usize {
        self.conflict_count
    }

    /// Fraction of value pairs in conflict.
    pub fn tightness(&self) -> f64 {
        if self.table.is_empty() {
            0.0
        } else {
            self.conflict_count as f64 / self.table.len() as f64
        }
    }

    pub fn other(&self, v: usize) -> usize {
        if self.scope.0 == v {
            self.scope.1
        } else {
            self.scope.0
        }
    }

    /// Conflict check with `v` taking value index `value` and `other(v)` taking `other_value`.
    pub fn violated_by(&self, v: usize, value: usize, other_value: usize) -> bool {
        if v == self.scope.0 {
            self.conflicts(value, other_value)
        } else {
            self.conflicts(other_value, value)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CspInstance {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    /// Per variable: `(neighbour, constraint index)` ascending by constraint index.
    adjacency: Vec<Vec<(usize, usize)>>,
    pair_index: HashMap<(usize, usize), usize>,
}

/// Conflict tuples for one scope, given as domain values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictSpec {
    pub scope: [usize; 2],
    pub conflicts: Vec<[i64; 2]>,
}

impl CspInstance {
    /// Builds an instance; constraints sharing an unordered scope are merged
    /// by taking the union of their conflicts.
    pub fn new(variables: Vec<Variable>, constraints: Vec<ConflictSpec>) -> Result<Self> {
        let n = variables.len();
        let positions: Vec<HashMap<i64, usize>> = variables
            .iter()
            .map(|v| v.domain.iter().enumerate().map(|(i, &x)| (x, i)).collect())
            .collect();
        for (i, (var, pos)) in variables.iter().zip(&positions).enumerate() {
            if pos.len() != var.domain.len() {
                return Err(Error::invalid(format!(
                    "variable {i} (`{}`) has duplicate domain values",
                    var.name
                )));
            }
        }

        let mut merged: BTreeMap<(usize, usize), Vec<bool>> = BTreeMap::new();
        let mut order: Vec<(usize, usize)> = Vec::new();
        for (ci, spec) in constraints.iter().enumerate() {
            let [a, b] = spec.scope;
            if a >= n || b >= n {
                return Err(Error::invalid(format!(
                    "constraint {ci} references a variable outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::invalid(format!(
                    "constraint {ci} is not binary (scope [{a}, {a}])"
                )));
            }
            let (lo, hi, swap) = if a < b { (a, b, false) } else { (b, a, true) };
            let width = variables[hi].domain.len();
            let table = merged.entry((lo, hi)).or_insert_with(|| {
                order.push((lo, hi));
                vec![false; variables[lo].domain.len() * width]
            });
            for (ti, &[x, y]) in spec.conflicts.iter().enumerate() {
                let (xa, yb) = if swap { (y, x) } else { (x, y) };
                let (Some(&pa), Some(&pb)) = (positions[lo].get(&xa), positions[hi].get(&yb))
                else {
                    return Err(Error::invalid(format!(
                        "constraint {ci}, tuple {ti} ({x}, {y}) uses a value outside the domains"
                    )));
                };
                table[pa * width + pb] = true;
            }
        }

        let mut adjacency = vec![Vec::new(); n];
        let mut pair_index = HashMap::new();
        let constraints: Vec<Constraint> = order
            .into_iter()
            .enumerate()
            .map(|(ci, scope)| {
                let table = merged.remove(&scope).expect("scope recorded");
                adjacency[scope.0].push((scope.1, ci));
                adjacency[scope.1].push((scope.0, ci));
                pair_index.insert(scope, ci);
                Constraint {
                    scope,
                    width: variables[scope.1].domain.len(),
                    conflict_count: table.iter().filter(|&&c| c).count(),
                    table,
                }
            })
            .collect();
        Ok(CspInstance {
            variables,
            constraints,
            adjacency,
            pair_index,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    pub fn domain_size(&self, v: usize) -> usize {
        self.variables[v].domain.len()
    }

    /// `(neighbour, constraint index)` pairs of `v`, ascending by constraint index.
    pub fn neighbours(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn constraint_between(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.pair_index.get(&key).copied()
    }

    pub fn to_spec(&self) -> CspDocument {
        CspDocument {
            variables: self.variables.clone(),
            constraints: self
                .constraints
                .iter()
                .map(|c| {
                    let (a, b) = c.scope;
                    let mut conflicts = Vec::with_capacity(c.conflict_count);
                    for (i, &x) in self.variables[a].domain.iter().enumerate() {
                        for (j, &y) in self.variables[b].domain.iter().enumerate() {
                            if c.conflicts(i, j) {
                                conflicts.push([x, y]);
                            }
                        }
                    }
                    ConflictSpec {
                        scope: [a, b],
                        conflicts,
                    }
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_spec())?)
    }
}

/// Canonical JSON document layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CspDocument {
    pub variables: Vec<Variable>,
    #[serde(default)]
    pub constraints: Vec<ConflictSpec>,
}

pub fn parse_csp_json(text: &str) -> Result<CspInstance> {
    let doc: CspDocument = serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("line {}", e.line()), e.to_string()))?;
    CspInstance::new(doc.variables, doc.constraints)
}

/// Canonical JSON when the document starts with `{`, XCSP otherwise.
pub fn parse_csp(text: &str) -> Result<CspInstance> {
    if text.trim_start().starts_with('{') {
        parse_csp_json(text)
    } else {
        parse_xcsp(text)
    }
}

/// Random binary CSP with exactly `round(density * n(n-1)/2)` constraints,
/// each forbidding `round(tightness * d^2)` value pairs.
pub fn generate_random_csp<R: Rng + ?Sized>(
    variables: usize,
    domain_size: usize,
    density: f64,
    tightness: f64,
    rng: &mut R,
) -> CspInstance {
    let vars: Vec<Variable> = (0..variables)
        .map(|i| Variable {
            name: format!("x{i}"),
            domain: (0..domain_size as i64).collect(),
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..variables)
        .flat_map(|a| (a + 1..variables).map(move |b| (a, b)))
        .collect();
    let n_cons = ((density.clamp(0.0, 1.0) * pairs.len() as f64).round() as usize).min(pairs.len());
    let cells = domain_size * domain_size;
    let n_conf = ((tightness.clamp(0.0, 1.0) * cells as f64).round() as usize).min(cells);
    let mut chosen = sample(rng, pairs.len(), n_cons).into_vec();
    chosen.sort_unstable();
    let constraints = chosen
        .into_iter()
        .map(|p| {
            let (a, b) = pairs[p];
            let mut tuples = sample(rng, cells, n_conf).into_vec();
            tuples.sort_unstable();
            ConflictSpec {
                scope: [a, b],
                conflicts: tuples
                    .into_iter()
                    .map(|t| [(t / domain_size) as i64, (t % domain_size) as i64])
                    .collect(),
            }
        })
        .collect();
    CspInstance::new(vars, constraints).expect("generated instance is valid")
}

/// Seeded batch of `count` random instances sharing one parameter set.
pub fn generate_csp_set(
    count: usize,
    variables: usize,
    domain_size: usize,
    density: f64,
    tightness: f64,
    seed: u64,
) -> Vec<CspInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| generate_random_csp(variables, domain_size, density, tightness, &mut rng))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CspMetrics {
    /// Consistency checks over every instance.
    pub cc: u64,
    /// Consistency checks over instances that finished within budget.
    pub acc: u64,
    pub success_rate: f64,
}

pub fn csp_metrics(outcomes: &[SolveOutcome]) -> Result<CspMetrics> {
    if outcomes.is_empty() {
        return Err(Error::invalid("no outcomes to summarise"));
    }
    let m = Metrics::from_outcomes(outcomes);
    Ok(CspMetrics {
        cc: m.total_cost,
        acc: m.adjusted_cost,
        success_rate: m.success_rate,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CspDomain;

impl Domain for CspDomain {
    type Instance = CspInstance;
    type State = CspState;

    fn name(&self) -> &'static str {
        "csp"
    }

    fn feature_count(&self) -> usize {
        8
    }

    fn heuristic_names(&self) -> &'static [&'static str] {
        &["dom", "deg", "kappa", "wdeg"]
    }

    fn sense(&self) -> Sense {
        Sense::Minimize
    }

    fn initial_state(&self, instance: &CspInstance) -> CspState {
        CspState::new(instance)
    }

    fn features(&self, instance: &CspInstance, state: &CspState) -> FeatureVector {
        FeatureVector::new(csp_features(instance, state).to_vec()).expect("finite features")
    }

    fn apply(&self, instance: &CspInstance, state: &mut CspState, action: usize) -> Result<()> {
        let var = choose_variable(instance, state, action)
            .ok_or_else(|| Error::Domain("no unassigned variable".into()))?;
        state.step(instance, var)
    }

    fn finished(&self, _: &CspInstance, state: &CspState) -> bool {
        state.status() != SearchStatus::Searching
    }

    fn cost(&self, state: &CspState) -> u64 {
        state.cc()
    }

    fn objective(&self, _: &CspInstance, state: &CspState) -> f64 {
        state.cc() as f64
    }

    /// Failed or timed-out runs are charged the whole budget.
    fn fitness_term(&self, outcome: &SolveOutcome, budget: u64) -> f64 {
        if outcome.solved {
            outcome.cost as f64
        } else {
            budget as f64
        }
    }

    fn comparison_metrics(&self) -> Vec<(MetricKind, Sense)> {
        vec![
            (MetricKind::SuccessRate, Sense::Maximize),
            (MetricKind::AdjustedCost, Sense::Minimize),
        ]
    }
}

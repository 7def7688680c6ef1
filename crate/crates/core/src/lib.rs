//! Rule-based selection hyper-heuristics.
//!
//! A [`Selector`] maps a problem-state feature vector to a low-level
//! heuristic through its nearest rule. Distances may be measured after a
//! feature [`transform`] and through a [`kernel`] metric. Selectors are
//! trained by a messy steady-state genetic algorithm in [`ga`] and compared
//! with the rank-sum test in [`stats`].

pub mod domains;
pub mod error;
pub mod ga;
pub mod harness;
pub mod kernel;
pub mod model;
pub mod stats;
pub mod transform;

pub use error::{Error, Result};
pub use kernel::{KernelSpec, Metric};
pub use model::{
    run_heuristic, select_action, solve_instance, synthetic_oracle, Domain, FeatureVector,
    MetricKind, Metrics, Rule, Selector, Sense, SolveOutcome,
};
pub use transform::{TransformKind, TransformSpec};

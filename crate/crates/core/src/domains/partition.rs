//! Two-subset number partitioning.
//!
//! All items start in the first subset; each action moves one item to the
//! second subset. A run ends once the second subset holds at least half of
//! the total value. Quality is the absolute difference of subset sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Domain, FeatureVector, Sense};

pub const MAX_LOAD: usize = 0;
pub const MIN_LOAD: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct PartitionInstance {
    items: Vec<u64>,
}

impl PartitionInstance {
    pub fn new(items: Vec<u64>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::invalid("partition instance needs at least one item"));
        }
        if items.contains(&0) {
            return Err(Error::invalid("partition items must be positive"));
        }
        Ok(PartitionInstance { items })
    }

    pub fn items(&self) -> &[u64] {
        &self.items
    }

    pub fn total(&self) -> u64 {
        self.items.iter().sum()
    }
}

impl TryFrom<Vec<u64>> for PartitionInstance {
    type Error = Error;

    fn try_from(items: Vec<u64>) -> Result<Self> {
        PartitionInstance::new(items)
    }
}

impl From<PartitionInstance> for Vec<u64> {
    fn from(p: PartitionInstance) -> Self {
        p.items
    }
}

/// Parses either one JSON integer array or an array of arrays.
pub fn parse_partition_json(text: &str) -> Result<Vec<PartitionInstance>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Doc {
        One(PartitionInstance),
        Many(Vec<PartitionInstance>),
    }
    match serde_json::from_str::<Doc>(text)? {
        Doc::One(p) => Ok(vec![p]),
        Doc::Many(v) => Ok(v),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionState {
    pub subset1: Vec<u64>,
    pub subset2: Vec<u64>,
    sum1: u64,
    sum2: u64,
}

impl PartitionState {
    pub fn new(instance: &PartitionInstance) -> Self {
        PartitionState {
            subset1: instance.items.clone(),
            subset2: Vec::new(),
            sum1: instance.total(),
            sum2: 0,
        }
    }

    /// `|sum(subset1) - sum(subset2)|`
    pub fn quality(&self) -> u64 {
        self.sum1.abs_diff(self.sum2)
    }

    /// Share of the total value held by the second subset.
    pub fn feature_f1(&self) -> f64 {
        let total = self.sum1 + self.sum2;
        if total == 0 {
            return 0.0;
        }
        self.sum2 as f64 / total as f64
    }

    pub fn finished(&self) -> bool {
        // sum2 / total >= 1/2, in integers
        2 * self.sum2 >= self.sum1 + self.sum2
    }

    /// Position in `subset1` of the item a heuristic would move.
    pub fn pick(&self, heuristic: usize) -> Option<usize> {
        let it = self.subset1.iter().enumerate();
        match heuristic {
            // ties go to the first occurrence
            MAX_LOAD => it.fold(None, |best: Option<(usize, u64)>, (i, &v)| match best {
                Some((_, bv)) if v <= bv => best,
                _ => Some((i, v)),
            }),
            MIN_LOAD => it.fold(None, |best: Option<(usize, u64)>, (i, &v)| match best {
                Some((_, bv)) if v >= bv => best,
                _ => Some((i, v)),
            }),
            _ => None,
        }
        .map(|(i, _)| i)
    }

    pub fn move_item(&mut self, heuristic: usize) -> Result<()> {
        if heuristic > MIN_LOAD {
            return Err(Error::invalid(format!("unknown partition heuristic {heuristic}")));
        }
        let Some(pos) = self.pick(heuristic) else {
            return Err(Error::Domain("subset 1 is empty".into()));
        };
        let v = self.subset1.remove(pos);
        self.sum1 -= v;
        self.sum2 += v;
        self.subset2.push(v);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PartitionDomain;

impl Domain for PartitionDomain {
    type Instance = PartitionInstance;
    type State = PartitionState;

    fn name(&self) -> &'static str {
        "partition"
    }

    fn feature_count(&self) -> usize {
        1
    }

    fn heuristic_names(&self) -> &'static [&'static str] {
        &["max_load", "min_load"]
    }

    fn sense(&self) -> Sense {
        Sense::Minimize
    }

    fn initial_state(&self, instance: &PartitionInstance) -> PartitionState {
        PartitionState::new(instance)
    }

    fn features(&self, _: &PartitionInstance, state: &PartitionState) -> FeatureVector {
        FeatureVector::new(vec![state.feature_f1()]).expect("share is finite")
    }

    fn apply(&self, _: &PartitionInstance, state: &mut PartitionState, action: usize) -> Result<()> {
        state.move_item(action)
    }

    fn finished(&self, _: &PartitionInstance, state: &PartitionState) -> bool {
        state.finished()
    }

    fn cost(&self, state: &PartitionState) -> u64 {
        state.subset2.len() as u64
    }

    fn objective(&self, _: &PartitionInstance, state: &PartitionState) -> f64 {
        state.quality() as f64
    }
}

/// The three worked instances used as ground truth throughout the tests.
pub fn reference_instances() -> [PartitionInstance; 3] {
    [
        PartitionInstance::new(vec![10, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]).unwrap(),
        PartitionInstance::new(vec![10, 9, 8, 1, 1, 2, 2, 1, 1, 1, 1, 1, 1]).unwrap(),
        PartitionInstance::new(vec![10, 3, 4, 2, 10, 10, 1, 1, 1, 1, 1, 1, 1]).unwrap(),
    ]
}

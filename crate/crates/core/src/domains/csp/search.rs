use super::{kappa, CspInstance, DEG, DOM, KAPPA, WDEG};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Searching,
    /// Every variable holds a consistent value.
    Solved,
    /// The search tree was exhausted: the instance is unsatisfiable.
    Exhausted,
}

/// A variable on the assignment stack and the next value position to try.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub var: usize,
    pub next_value: usize,
}

/// Depth-first backtracking state with backward checking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CspState {
    assignment: Vec<Option<usize>>,
    stack: Vec<Frame>,
    weights: Vec<u64>,
    cc: u64,
    unassigned: usize,
    status: SearchStatus,
}

impl CspState {
    pub fn new(instance: &CspInstance) -> Self {
        let n = instance.variable_count();
        CspState {
            assignment: vec![None; n],
            stack: Vec::new(),
            weights: vec![1; instance.constraints().len()],
            cc: 0,
            unassigned: n,
            status: if n == 0 {
                SearchStatus::Solved
            } else {
                SearchStatus::Searching
            },
        }
    }

    pub fn cc(&self) -> u64 {
        self.cc
    }

    pub fn status(&self) -> SearchStatus {
        self.status
    }

    /// Value position assigned to each variable.
    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn is_assigned(&self, v: usize) -> bool {
        self.assignment[v].is_some()
    }

    pub fn unassigned_count(&self) -> usize {
        self.unassigned
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    /// Assigned variables, most recent last.
    pub fn stack(&self) -> &[Frame] {
        &self.stack
    }

    /// Branches on `var`, then keeps trying values and backtracking until
    /// some variable receives a consistent value or the tree is exhausted.
    pub fn step(&mut self, instance: &CspInstance, var: usize) -> Result<()> {
        if self.status != SearchStatus::Searching {
            return Err(Error::Domain("search already finished".into()));
        }
        if var >= self.assignment.len() || self.assignment[var].is_some() {
            return Err(Error::invalid(format!("variable {var} is not unassigned")));
        }
        self.stack.push(Frame {
            var,
            next_value: 0,
        });
        self.advance(instance);
        Ok(())
    }

    fn advance(&mut self, instance: &CspInstance) {
        loop {
            let Some(&Frame { var, next_value }) = self.stack.last() else {
                self.status = SearchStatus::Exhausted;
                return;
            };
            let size = instance.domain_size(var);
            let mut value = next_value;
            while value < size {
                let ok = self.consistent(instance, var, value);
                value += 1;
                if ok {
                    self.stack.last_mut().expect("frame").next_value = value;
                    self.assignment[var] = Some(value - 1);
                    self.unassigned -= 1;
                    if self.unassigned == 0 {
                        self.status = SearchStatus::Solved;
                    }
                    return;
                }
            }
            self.stack.pop();
            if let Some(prev) = self.stack.last() {
                self.assignment[prev.var] = None;
                self.unassigned += 1;
            }
        }
    }

    /// Checks `var = value` against every assigned neighbour in constraint
    /// order, stopping at the first violation. Each evaluation is one check.
    fn consistent(&mut self, instance: &CspInstance, var: usize, value: usize) -> bool {
        for &(other, ci) in instance.neighbours(var) {
            let Some(other_value) = self.assignment[other] else {
                continue;
            };
            self.cc += 1;
            if instance.constraints()[ci].violated_by(var, value, other_value) {
                self.weights[ci] += 1;
                return false;
            }
        }
        true
    }
}

/// Picks the next variable for heuristic `h`; ties go to the lowest index.
///
/// DOM takes the smallest domain, DEG the most constraints to unassigned
/// variables, WDEG the largest summed weight of those constraints, and
/// KAPPA the variable whose removal leaves the least constrained subproblem.
pub fn choose_variable(instance: &CspInstance, state: &CspState, h: usize) -> Option<usize> {
    let free = (0..instance.variable_count()).filter(|&v| !state.is_assigned(v));
    let live = |v: usize| {
        instance
            .neighbours(v)
            .iter()
            .filter(|(o, _)| !state.is_assigned(*o))
    };
    // minimise a score; scores within `eps` count as equal and keep the first
    let argmin = |eps: f64, scores: &mut dyn Iterator<Item = (usize, f64)>| {
        let mut best: Option<(usize, f64)> = None;
        for (v, s) in scores {
            if best.is_none_or(|(_, b)| s < b - eps * b.abs().max(1.0)) {
                best = Some((v, s));
            }
        }
        best.map(|(v, _)| v)
    };
    match h {
        DOM => argmin(0.0, &mut free.map(|v| (v, instance.domain_size(v) as f64))),
        DEG => argmin(0.0, &mut free.map(|v| (v, -(live(v).count() as f64)))),
        WDEG => argmin(0.0, &mut free.map(|v| {
            let w: u64 = live(v).map(|&(_, ci)| state.weights()[ci]).sum();
            (v, -(w as f64))
        })),
        KAPPA => {
            let mask: Vec<bool> = (0..instance.variable_count())
                .map(|v| !state.is_assigned(v))
                .collect();
            let (num, den) = kappa::parts(instance, &mask);
            // the residual is found by subtraction, so rounding noise must not break ties
            argmin(1e-12, &mut free.map(|v| {
                let own: f64 = live(v)
                    .map(|&(_, ci)| kappa::constraint_term(&instance.constraints()[ci]))
                    .sum();
                let dom = kappa::domain_term(instance.domain_size(v));
                (v, kappa::ratio(num - own, den - dom))
            }))
        }
        _ => None,
    }
}

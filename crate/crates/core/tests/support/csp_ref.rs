//! Independent recursive CSP solver working directly on raw conflict
//! lists, shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::HashSet;

use hyperselect::domains::csp::{
    choose_variable, ConflictSpec, CspInstance, CspState, SearchStatus, Variable, DEG, DOM, KAPPA,
    WDEG,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Raw problem: domain sizes plus constraints `(a, b, conflicting (i, j) pairs)`.
#[derive(Clone)]
pub struct Raw {
    pub sizes: Vec<usize>,
    pub cons: Vec<(usize, usize, HashSet<(usize, usize)>)>,
}

pub fn random_raw(rng: &mut ChaCha8Rng) -> Raw {
    let n = rng.random_range(2..=6);
    let sizes: Vec<usize> = (0..n).map(|_| rng.random_range(1..=4)).collect();
    let density = rng.random_range(0.2..=1.0);
    let tightness = rng.random_range(0.1..=0.7);
    let mut cons = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(density) {
                let mut set = HashSet::new();
                for i in 0..sizes[a] {
                    for j in 0..sizes[b] {
                        if rng.random_bool(tightness) {
                            set.insert((i, j));
                        }
                    }
                }
                // shuffle scope orientation so both storage directions are exercised
                if rng.random_bool(0.5) {
                    cons.push((a, b, set));
                } else {
                    cons.push((b, a, set.into_iter().map(|(i, j)| (j, i)).collect()));
                }
            }
        }
    }
    // random constraint order
    for i in (1..cons.len()).rev() {
        let j = rng.random_range(0..=i);
        cons.swap(i, j);
    }
    Raw { sizes, cons }
}

pub fn to_instance(raw: &Raw) -> CspInstance {
    let vars = raw
        .sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| Variable {
            name: format!("x{i}"),
            domain: (0..s as i64).map(|v| 10 * v - 7).collect(),
        })
        .collect();
    let specs = raw
        .cons
        .iter()
        .map(|(a, b, set)| {
            let mut conflicts: Vec<[i64; 2]> = set
                .iter()
                .map(|&(i, j)| [10 * i as i64 - 7, 10 * j as i64 - 7])
                .collect();
            conflicts.sort();
            ConflictSpec {
                scope: [*a, *b],
                conflicts,
            }
        })
        .collect();
    CspInstance::new(vars, specs).unwrap()
}

struct Reference<'a> {
    raw: &'a Raw,
    assign: Vec<Option<usize>>,
    weights: Vec<u64>,
    cc: u64,
}

impl Reference<'_> {
    fn involves(&self, c: usize, v: usize) -> Option<usize> {
        let (a, b, _) = &self.raw.cons[c];
        if *a == v {
            Some(*b)
        } else if *b == v {
            Some(*a)
        } else {
            None
        }
    }

    fn conflict(&self, c: usize, v: usize, val: usize, other_val: usize) -> bool {
        let (a, _, set) = &self.raw.cons[c];
        if *a == v {
            set.contains(&(val, other_val))
        } else {
            set.contains(&(other_val, val))
        }
    }

    fn tightness(&self, c: usize) -> f64 {
        let (a, b, set) = &self.raw.cons[c];
        set.len() as f64 / (self.raw.sizes[*a] * self.raw.sizes[*b]) as f64
    }

    fn kappa_without(&self, skip: usize) -> f64 {
        let inside = |v: usize| v != skip && self.assign[v].is_none();
        let mut num = 0.0;
        for c in 0..self.raw.cons.len() {
            let (a, b, _) = &self.raw.cons[c];
            if inside(*a) && inside(*b) {
                let p = self.tightness(c);
                num += if p >= 1.0 { 52.0 } else { -(1.0 - p).log2() };
            }
        }
        let den: f64 = (0..self.raw.sizes.len())
            .filter(|&v| inside(v))
            .map(|v| (self.raw.sizes[v] as f64).log2())
            .sum();
        if den <= 1e-12 {
            0.0
        } else {
            (num / den).max(0.0)
        }
    }

    fn choose(&self, h: usize) -> usize {
        let free: Vec<usize> = (0..self.raw.sizes.len())
            .filter(|&v| self.assign[v].is_none())
            .collect();
        let live = |v: usize| -> Vec<usize> {
            (0..self.raw.cons.len())
                .filter(|&c| {
                    self.involves(c, v)
                        .is_some_and(|o| self.assign[o].is_none())
                })
                .collect()
        };
        let score = |v: usize| -> f64 {
            match h {
                DOM => self.raw.sizes[v] as f64,
                DEG => -(live(v).len() as f64),
                WDEG => -(live(v).iter().map(|&c| self.weights[c]).sum::<u64>() as f64),
                KAPPA => self.kappa_without(v),
                _ => unreachable!(),
            }
        };
        let mut best = free[0];
        let mut best_score = score(best);
        for &v in &free[1..] {
            let s = score(v);
            if s < best_score - 1e-9 {
                best = v;
                best_score = s;
            }
        }
        best
    }

    /// Constraint indices in the instance's order: order of first appearance.
    fn search(&mut self, h: usize) -> bool {
        if self.assign.iter().all(Option::is_some) {
            return true;
        }
        let v = self.choose(h);
        for val in 0..self.raw.sizes[v] {
            let mut ok = true;
            for c in 0..self.raw.cons.len() {
                let Some(o) = self.involves(c, v) else { continue };
                let Some(ov) = self.assign[o] else { continue };
                self.cc += 1;
                if self.conflict(c, v, val, ov) {
                    self.weights[c] += 1;
                    ok = false;
                    break;
                }
            }
            if ok {
                self.assign[v] = Some(val);
                if self.search(h) {
                    return true;
                }
                self.assign[v] = None;
            }
        }
        false
    }
}

pub fn reference_run(raw: &Raw, h: usize) -> (bool, u64, Vec<u64>) {
    let mut r = Reference {
        raw,
        assign: vec![None; raw.sizes.len()],
        weights: vec![1; raw.cons.len()],
        cc: 0,
    };
    let solved = r.search(h);
    (solved, r.cc, r.weights)
}

pub fn satisfiable(raw: &Raw) -> bool {
    let n = raw.sizes.len();
    let total: usize = raw.sizes.iter().product();
    (0..total).any(|mut code| {
        let mut vals = vec![0; n];
        for v in 0..n {
            vals[v] = code % raw.sizes[v];
            code /= raw.sizes[v];
        }
        raw.cons
            .iter()
            .all(|(a, b, set)| !set.contains(&(vals[*a], vals[*b])))
    })
}

pub fn run_engine(inst: &CspInstance, h: usize) -> CspState {
    let mut s = CspState::new(inst);
    while s.status() == SearchStatus::Searching {
        let v = choose_variable(inst, &s, h).unwrap();
        s.step(inst, v).unwrap();
    }
    s
}

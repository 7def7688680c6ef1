//! 0/1 knapsack packed greedily one item per action.
//!
//! The candidate set is every unpacked item that still fits. Features are
//! computed over the candidates and normalised by the candidates' maxima, so
//! the divisors move as the knapsack fills.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Domain, FeatureVector, Sense, SolveOutcome};

pub const MAX_PROFIT: usize = 0;
pub const MIN_WEIGHT: usize = 1;
pub const BEST_RATIO: usize = 2;
pub const DEFAULT_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub profit: u64,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    pub capacity: u64,
    pub items: Vec<Item>,
}

impl KnapsackInstance {
    pub fn new(capacity: u64, items: Vec<Item>) -> Result<Self> {
        if let Some(i) = items.iter().position(|it| it.profit == 0 || it.weight == 0) {
            return Err(Error::invalid(format!(
                "item {i} must have positive profit and weight"
            )));
        }
        Ok(KnapsackInstance { capacity, items })
    }

    /// Plain text form: item count, capacity, then one `profit weight` line per item.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n{}\n", self.items.len(), self.capacity);
        for it in &self.items {
            let _ = writeln!(out, "{} {}", it.profit, it.weight);
        }
        out
    }
}

fn parse_u64(token: &str, line: usize, what: &str) -> Result<u64> {
    token
        .trim()
        .parse::<u64>()
        .map_err(|_| Error::parse(format!("line {line}"), format!("invalid {what} `{token}`")))
}

/// Parses the plain text form written by [`KnapsackInstance::to_text`].
pub fn parse_knapsack(text: &str) -> Result<KnapsackInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, first) = lines
        .next()
        .ok_or_else(|| Error::parse("line 1", "empty document"))?;
    let count = parse_u64(first, ln, "item count")? as usize;
    let (ln, second) = lines
        .next()
        .ok_or_else(|| Error::parse(format!("line {}", ln + 1), "missing capacity"))?;
    let capacity = parse_u64(second, ln, "capacity")?;
    let mut items = Vec::with_capacity(count);
    for (ln, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                format!("line {ln}"),
                "expected `profit weight`",
            ));
        }
        let profit = parse_u64(fields[0], ln, "profit")?;
        let weight = parse_u64(fields[1], ln, "weight")?;
        if profit == 0 || weight == 0 {
            return Err(Error::parse(
                format!("line {ln}"),
                "profit and weight must be positive",
            ));
        }
        items.push(Item { profit, weight });
    }
    if items.len() != count {
        return Err(Error::parse(
            "end of document",
            format!("declared {count} items, found {}", items.len()),
        ));
    }
    KnapsackInstance::new(capacity, items)
}

/// Parses a Pisinger benchmark file: blocks of `name`, `n N`, `c C`, `z Z`,
/// `time T`, then `index,profit,weight,x` lines, each block closed by dashes.
pub fn parse_pisinger(text: &str) -> Result<Vec<(String, KnapsackInstance)>> {
    let mut out = Vec::new();
    let mut name: Option<String> = None;
    let mut declared: Option<usize> = None;
    let mut capacity: Option<u64> = None;
    let mut items = Vec::new();
    let mut flush = |name: &mut Option<String>,
                     declared: &mut Option<usize>,
                     capacity: &mut Option<u64>,
                     items: &mut Vec<Item>,
                     ln: usize|
     -> Result<()> {
        let Some(n) = name.take() else { return Ok(()) };
        let cap = capacity
            .take()
            .ok_or_else(|| Error::parse(format!("line {ln}"), format!("{n}: missing capacity")))?;
        if let Some(d) = declared.take() {
            if d != items.len() {
                return Err(Error::parse(
                    format!("line {ln}"),
                    format!("{n}: declared {d} items, found {}", items.len()),
                ));
            }
        }
        out.push((n, KnapsackInstance::new(cap, std::mem::take(items))?));
        Ok(())
    };
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        last = ln;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with("---") {
            flush(&mut name, &mut declared, &mut capacity, &mut items, ln)?;
            continue;
        }
        if name.is_none() {
            name = Some(line.to_string());
            continue;
        }
        if let Some(rest) = line.strip_prefix("n ") {
            declared = Some(parse_u64(rest, ln, "item count")? as usize);
        } else if let Some(rest) = line.strip_prefix("c ") {
            capacity = Some(parse_u64(rest, ln, "capacity")?);
        } else if line.starts_with("z ") || line.starts_with("time ") {
            continue;
        } else {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() < 3 {
                return Err(Error::parse(
                    format!("line {ln}"),
                    "expected `index,profit,weight[,x]`",
                ));
            }
            let profit = parse_u64(fields[1], ln, "profit")?;
            let weight = parse_u64(fields[2], ln, "weight")?;
            if profit == 0 || weight == 0 {
                return Err(Error::parse(
                    format!("line {ln}"),
                    "profit and weight must be positive",
                ));
            }
            items.push(Item { profit, weight });
        }
    }
    flush(&mut name, &mut declared, &mut capacity, &mut items, last)?;
    Ok(out)
}

/// Loads either the plain or the Pisinger text format.
pub fn parse_knapsack_any(text: &str) -> Result<Vec<KnapsackInstance>> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty());
    match first {
        Some(l) if l.parse::<u64>().is_ok() => Ok(vec![parse_knapsack(text)?]),
        _ => Ok(parse_pisinger(text)?.into_iter().map(|(_, k)| k).collect()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackingState {
    pub packed: Vec<usize>,
    pub remaining_capacity: u64,
    /// Unpacked items that fit, ascending by index.
    pub candidates: Vec<usize>,
    pub profit: u64,
}

impl PackingState {
    pub fn new(instance: &KnapsackInstance) -> Self {
        let candidates = (0..instance.items.len())
            .filter(|&i| instance.items[i].weight <= instance.capacity)
            .collect();
        PackingState {
            packed: Vec::new(),
            remaining_capacity: instance.capacity,
            candidates,
            profit: 0,
        }
    }

    pub fn finished(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn pack(&mut self, instance: &KnapsackInstance, item: usize) -> Result<()> {
        let Ok(pos) = self.candidates.binary_search(&item) else {
            return Err(Error::invalid(format!("item {item} is not a packing candidate")));
        };
        self.candidates.remove(pos);
        let it = instance.items[item];
        self.remaining_capacity -= it.weight;
        self.profit += it.profit;
        self.packed.push(item);
        let cap = self.remaining_capacity;
        self.candidates.retain(|&i| instance.items[i].weight <= cap);
        Ok(())
    }

    /// Item chosen by `heuristic`; ties go to the lowest index.
    pub fn pick(&self, instance: &KnapsackInstance, heuristic: usize) -> Option<usize> {
        let items = &instance.items;
        let better = |a: usize, b: usize| -> Ordering {
            let (x, y) = (items[a], items[b]);
            match heuristic {
                MAX_PROFIT => y.profit.cmp(&x.profit),
                MIN_WEIGHT => x.weight.cmp(&y.weight),
                // x.p / x.w > y.p / y.w without division
                BEST_RATIO => (y.profit as u128 * x.weight as u128)
                    .cmp(&(x.profit as u128 * y.weight as u128)),
                _ => Ordering::Equal,
            }
        };
        if heuristic > DEFAULT_ORDER {
            return None;
        }
        let mut best = *self.candidates.first()?;
        for &c in &self.candidates[1..] {
            if better(c, best) == Ordering::Less {
                best = c;
            }
        }
        Some(best)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn population_sd(v: &[f64], m: f64) -> f64 {
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Seven features over the candidate items: profit mean, median and standard
/// deviation over the max candidate profit, the same for weight, and the
/// profit/weight Pearson correlation shifted to `(r + 1) / 2`.
pub fn knapsack_features(instance: &KnapsackInstance, state: &PackingState) -> Vec<f64> {
    if state.candidates.is_empty() {
        return vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5];
    }
    let p: Vec<f64> = state
        .candidates
        .iter()
        .map(|&i| instance.items[i].profit as f64)
        .collect();
    let w: Vec<f64> = state
        .candidates
        .iter()
        .map(|&i| instance.items[i].weight as f64)
        .collect();
    let pmax = p.iter().cloned().fold(0.0, f64::max);
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    let (pm, wm) = (mean(&p), mean(&w));
    let (psd, wsd) = (population_sd(&p, pm), population_sd(&w, wm));
    let r = if psd > 0.0 && wsd > 0.0 {
        let cov = p
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - pm) * (b - wm))
            .sum::<f64>()
            / p.len() as f64;
        (cov / (psd * wsd)).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    vec![
        pm / pmax,
        median(&p) / pmax,
        psd / pmax,
        wm / wmax,
        median(&w) / wmax,
        wsd / wmax,
        (r + 1.0) / 2.0,
    ]
}

pub fn total_profit(outcomes: &[SolveOutcome]) -> f64 {
    outcomes.iter().map(|o| o.objective).sum()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct KnapsackDomain;

impl Domain for KnapsackDomain {
    type Instance = KnapsackInstance;
    type State = PackingState;

    fn name(&self) -> &'static str {
        "knapsack"
    }

    fn feature_count(&self) -> usize {
        7
    }

    fn heuristic_names(&self) -> &'static [&'static str] {
        &["max_profit", "min_weight", "best_ratio", "default_order"]
    }

    fn sense(&self) -> Sense {
        Sense::Maximize
    }

    fn initial_state(&self, instance: &KnapsackInstance) -> PackingState {
        PackingState::new(instance)
    }

    fn features(&self, instance: &KnapsackInstance, state: &PackingState) -> FeatureVector {
        FeatureVector::new(knapsack_features(instance, state)).expect("finite features")
    }

    fn apply(
        &self,
        instance: &KnapsackInstance,
        state: &mut PackingState,
        action: usize,
    ) -> Result<()> {
        let item = state
            .pick(instance, action)
            .ok_or_else(|| Error::Domain("no item can be packed".into()))?;
        state.pack(instance, item)
    }

    fn finished(&self, _: &KnapsackInstance, state: &PackingState) -> bool {
        state.finished()
    }

    fn cost(&self, state: &PackingState) -> u64 {
        state.packed.len() as u64
    }

    fn objective(&self, _: &KnapsackInstance, state: &PackingState) -> f64 {
        state.profit as f64
    }
}

/// Correlation classes of the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnapsackClass {
    Uncorrelated,
    WeaklyCorrelated,
    StronglyCorrelated,
}

impl std::str::FromStr for KnapsackClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uncorrelated" => Ok(KnapsackClass::Uncorrelated),
            "weakly_correlated" | "weak" => Ok(KnapsackClass::WeaklyCorrelated),
            "strongly_correlated" | "strong" => Ok(KnapsackClass::StronglyCorrelated),
            other => Err(Error::Config(format!("unknown knapsack class `{other}`"))),
        }
    }
}

/// Seeded batch of `count` instances. Instance `h` (1-based) gets capacity
/// `h / (count + 1)` of its total weight; coefficients are drawn from `1..=range`.
pub fn generate_knapsack(
    count: usize,
    items: usize,
    class: KnapsackClass,
    range: u64,
    seed: u64,
) -> Vec<KnapsackInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = (range / 10).max(1);
    (1..=count)
        .map(|h| {
            let items: Vec<Item> = (0..items)
                .map(|_| {
                    let weight = rng.random_range(1..=range);
                    let profit = match class {
                        KnapsackClass::Uncorrelated => rng.random_range(1..=range),
                        KnapsackClass::WeaklyCorrelated => {
                            let lo = weight.saturating_sub(spread).max(1);
                            rng.random_range(lo..=weight + spread)
                        }
                        KnapsackClass::StronglyCorrelated => weight + spread,
                    };
                    Item { profit, weight }
                })
                .collect();
            let total: u64 = items.iter().map(|i| i.weight).sum();
            let capacity = (h as u128 * total as u128 / (count as u128 + 1)) as u64;
            KnapsackInstance { capacity, items }
        })
        .collect()
}

//! State features computed over the subproblem of unassigned variables.

use super::{CspInstance, CspState};
use crate::stats::quantile;

/// Penalty for a constraint forbidding every pair: `-log2(f64::EPSILON)`.
pub const TIGHTNESS_CAP: f64 = 52.0;

/// Constrainedness `kappa = sum_c -log2(1 - p_c) / sum_v log2 |D_v|`.
pub mod kappa {
    use super::super::{Constraint, CspInstance};
    use super::TIGHTNESS_CAP;

    pub fn constraint_term(c: &Constraint) -> f64 {
        let p = c.tightness();
        if p >= 1.0 {
            TIGHTNESS_CAP
        } else {
            -(1.0 - p).log2()
        }
    }

    pub fn domain_term(size: usize) -> f64 {
        if size == 0 {
            0.0
        } else {
            (size as f64).log2()
        }
    }

    /// Zero when the domains carry no information (all sizes <= 1).
    pub fn ratio(num: f64, den: f64) -> f64 {
        if den <= 1e-12 {
            0.0
        } else {
            (num / den).max(0.0)
        }
    }

    /// Numerator and denominator restricted to variables with `mask[v]`.
    pub fn parts(instance: &CspInstance, mask: &[bool]) -> (f64, f64) {
        let num = instance
            .constraints()
            .iter()
            .filter(|c| mask[c.scope.0] && mask[c.scope.1])
            .map(constraint_term)
            .sum();
        let den = (0..instance.variable_count())
            .filter(|&v| mask[v])
            .map(|v| domain_term(instance.domain_size(v)))
            .sum();
        (num, den)
    }

    pub fn of(instance: &CspInstance, mask: &[bool]) -> f64 {
        let (num, den) = parts(instance, mask);
        ratio(num, den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CspFeatures {
    pub p1: f64,
    pub p2: f64,
    pub clustering: f64,
    pub uq_p1: f64,
    pub lq_p1: f64,
    pub uq_p2: f64,
    pub lq_p2: f64,
    pub kappa: f64,
}

impl CspFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.p1,
            self.p2,
            self.clustering,
            self.uq_p1,
            self.lq_p1,
            self.uq_p2,
            self.lq_p2,
            self.kappa,
        ]
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    quantile(sorted, q).unwrap_or(0.0)
}

/// Variables in the feature view: the unassigned ones, topped up with the most
/// recently assigned variables while fewer than two remain.
fn view_mask(instance: &CspInstance, state: &CspState) -> Vec<bool> {
    let mut mask: Vec<bool> = (0..instance.variable_count())
        .map(|v| !state.is_assigned(v))
        .collect();
    let mut count = state.unassigned_count();
    for frame in state.stack().iter().rev() {
        if count >= 2 {
            break;
        }
        if !mask[frame.var] {
            mask[frame.var] = true;
            count += 1;
        }
    }
    mask
}

pub fn csp_features(instance: &CspInstance, state: &CspState) -> CspFeatures {
    let mask = view_mask(instance, state);
    let members: Vec<usize> = (0..mask.len()).filter(|&v| mask[v]).collect();
    let n = members.len();

    let live: Vec<usize> = (0..instance.constraints().len())
        .filter(|&ci| {
            let (a, b) = instance.constraints()[ci].scope;
            mask[a] && mask[b]
        })
        .collect();

    let pairs = n * n.saturating_sub(1) / 2;
    let p1 = if pairs == 0 {
        0.0
    } else {
        live.len() as f64 / pairs as f64
    };

    let mut tightness: Vec<f64> = live
        .iter()
        .map(|&ci| instance.constraints()[ci].tightness())
        .collect();
    let p2 = if tightness.is_empty() {
        0.0
    } else {
        tightness.iter().sum::<f64>() / tightness.len() as f64
    };
    tightness.sort_by(f64::total_cmp);

    let mut densities = Vec::with_capacity(n);
    let mut clustering_sum = 0.0;
    for &v in &members {
        let nbrs: Vec<usize> = instance
            .neighbours(v)
            .iter()
            .map(|&(o, _)| o)
            .filter(|&o| mask[o])
            .collect();
        let k = nbrs.len();
        densities.push(if n > 1 { k as f64 / (n - 1) as f64 } else { 0.0 });
        if k >= 2 {
            let mut links = 0usize;
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    if instance.constraint_between(a, b).is_some() {
                        links += 1;
                    }
                }
            }
            clustering_sum += links as f64 / (k * (k - 1) / 2) as f64;
        }
    }
    densities.sort_by(f64::total_cmp);

    CspFeatures {
        p1,
        p2,
        clustering: if n == 0 { 0.0 } else { clustering_sum / n as f64 },
        uq_p1: quantile_sorted(&densities, 0.75),
        lq_p1: quantile_sorted(&densities, 0.25),
        uq_p2: quantile_sorted(&tightness, 0.75),
        lq_p2: quantile_sorted(&tightness, 0.25),
        kappa: kappa::of(instance, &mask),
    }
}

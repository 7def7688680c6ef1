//! Kernel functions and the kernel-induced squared distance
//! `K(a, a) - 2 K(a, b) + K(b, b)` used as an alternative rule metric.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Distance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Polynomial { degree: u32 },
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        let spec = KernelSpec::Rbf { gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn polynomial(degree: u32) -> Result<Self> {
        let spec = KernelSpec::Polynomial { degree };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::invalid(format!("rbf gamma must be positive, got {gamma}")))
            }
            KernelSpec::Polynomial { degree: 0 } => {
                Err(Error::invalid("polynomial degree must be at least 1"))
            }
            _ => Ok(()),
        }
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "vector lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn eval_unchecked(spec: &KernelSpec, a: &[f64], b: &[f64]) -> f64 {
    match *spec {
        KernelSpec::Linear => dot(a, b),
        KernelSpec::Polynomial { degree } => (dot(a, b) + 1.0).powi(degree as i32),
        KernelSpec::Rbf { gamma } => (-gamma * squared_euclidean(a, b)).exp(),
    }
}

fn distance_sq_unchecked(spec: &KernelSpec, a: &[f64], b: &[f64]) -> f64 {
    let d = eval_unchecked(spec, a, a) - 2.0 * eval_unchecked(spec, a, b)
        + eval_unchecked(spec, b, b);
    // round-off can push identical inputs slightly below zero
    d.max(0.0)
}

pub fn kernel_eval(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    Ok(eval_unchecked(spec, a, b))
}

pub fn kernel_distance_sq(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    Ok(distance_sq_unchecked(spec, a, b))
}

/// `1 / feature_count`.
pub fn default_gamma(feature_count: usize) -> Result<f64> {
    if feature_count == 0 {
        return Err(Error::invalid("feature count must be at least 1"));
    }
    Ok(1.0 / feature_count as f64)
}

/// Rule-matching metric: plain squared Euclidean distance or a kernel distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Kernel(KernelSpec),
}

impl Metric {
    pub fn label(&self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Kernel(KernelSpec::Linear) => "linear",
            Metric::Kernel(KernelSpec::Polynomial { .. }) => "polynomial",
            Metric::Kernel(KernelSpec::Rbf { .. }) => "rbf",
        }
    }
}

impl Distance for Metric {
    /// Squared distances: argmin-equivalent to the unsquared ones.
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => squared_euclidean(a, b),
            Metric::Kernel(spec) => distance_sq_unchecked(spec, a, b),
        }
    }
}

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMatrix {
    pub size: usize,
    pub values: Vec<f64>,
}

impl PairwiseMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }
}

/// `matrix[i][j] = metric(points[i], points[j])`, rows computed in parallel.
pub fn pairwise_matrix<P, M>(points: &[P], metric: &M) -> Result<PairwiseMatrix>
where
    P: AsRef<[f64]> + Sync,
    M: Distance + Sync + ?Sized,
{
    let Some(first) = points.first() else {
        return Err(Error::invalid("pairwise matrix needs at least one point"));
    };
    let width = first.as_ref().len();
    if let Some(i) = points.iter().position(|p| p.as_ref().len() != width) {
        return Err(Error::invalid(format!(
            "point {i} has length {}, expected {width}",
            points[i].as_ref().len()
        )));
    }
    let n = points.len();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = points[i].as_ref();
            points.iter().map(move |b| metric.distance(a, b.as_ref()))
        })
        .collect();
    Ok(PairwiseMatrix { size: n, values })
}

/// Stable reordering of points so that equal group labels are contiguous.
pub fn group_order<G: Ord>(groups: &[G]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| groups[a].cmp(&groups[b]));
    order
}

/// Grey levels for a distance matrix: `255 * d / max(d)`, so identical points are black.
pub fn vat_pixels(matrix: &PairwiseMatrix) -> Vec<u8> {
    let max = matrix.values.iter().cloned().fold(0.0f64, f64::max);
    matrix
        .values
        .iter()
        .map(|&d| {
            if max > 0.0 {
                (255.0 * d / max).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect()
}

/// Binary (P5) PGM encoding of a square grey image.
pub fn encode_pgm(size: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{size} {size}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn matrix_csv(matrix: &PairwiseMatrix) -> String {
    let mut out = String::new();
    for i in 0..matrix.size {
        let row: Vec<String> = matrix.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Writes `<stem>.pgm` and `<stem>.csv` for the group-sorted pairwise matrix.
pub fn write_vat<P, G, M>(
    points: &[P],
    groups: &[G],
    metric: &M,
    dir: &Path,
    stem: &str,
) -> Result<PairwiseMatrix>
where
    P: AsRef<[f64]> + Sync,
    G: Ord,
    M: Distance + Sync + ?Sized,
{
    if points.len() < 2 {
        return Err(Error::invalid("VAT output needs at least two points"));
    }
    if groups.len() != points.len() {
        return Err(Error::invalid("one group label per point is required"));
    }
    let order = group_order(groups);
    let sorted: Vec<&[f64]> = order.iter().map(|&i| points[i].as_ref()).collect();
    let matrix = pairwise_matrix(&sorted, metric)?;

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let pgm_path = dir.join(format!("{stem}.pgm"));
    let mut file = fs::File::create(&pgm_path).map_err(|e| Error::io(&pgm_path, e))?;
    file.write_all(&encode_pgm(matrix.size, &vat_pixels(&matrix)))
        .map_err(|e| Error::io(&pgm_path, e))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    fs::write(&csv_path, matrix_csv(&matrix)).map_err(|e| Error::io(&csv_path, e))?;
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kernel_examples() {
        let rbf = KernelSpec::rbf(0.5).unwrap();
        assert_eq!(kernel_eval(&rbf, &[0.3, 0.9], &[0.3, 0.9]).unwrap(), 1.0);
        assert_eq!(
            kernel_eval(&KernelSpec::Linear, &[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            11.0
        );
        let v = kernel_eval(&rbf, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(v, (-1f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.367879, epsilon = 1e-6);
        let p = KernelSpec::polynomial(2).unwrap();
        assert_eq!(kernel_eval(&p, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 144.0);
        assert!(kernel_eval(&rbf, &[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn distance_examples() {
        let rbf = KernelSpec::rbf(0.5).unwrap();
        for spec in [rbf, KernelSpec::Linear, KernelSpec::Polynomial { degree: 3 }] {
            assert_eq!(kernel_distance_sq(&spec, &[0.2, 0.7], &[0.2, 0.7]).unwrap(), 0.0);
        }
        let d = kernel_distance_sq(&rbf, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(d, 2.0 - 2.0 * (-1f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(d, 1.264241, epsilon = 1e-6);
        let lin = kernel_distance_sq(&KernelSpec::Linear, &[1.0, 2.0], &[4.0, -2.0]).unwrap();
        assert_abs_diff_eq!(lin, 25.0, epsilon = 1e-12);
    }

    #[test]
    fn gamma_and_validation() {
        assert_eq!(default_gamma(8).unwrap(), 0.125);
        assert_eq!(default_gamma(2).unwrap(), 0.5);
        assert_eq!(default_gamma(1).unwrap(), 1.0);
        assert!(default_gamma(0).is_err());
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::rbf(f64::NAN).is_err());
        assert!(KernelSpec::polynomial(0).is_err());
    }

    #[test]
    fn pairwise_small_cases() {
        let one = pairwise_matrix(&[[0.4, 0.1]], &Metric::Euclidean).unwrap();
        assert_eq!(one.values, vec![0.0]);
        let two = pairwise_matrix(&[[0.4, 0.1], [0.4, 0.1]], &Metric::Euclidean).unwrap();
        assert_eq!(two.values, vec![0.0; 4]);
        let ragged: Vec<Vec<f64>> = vec![vec![0.0], vec![0.0, 1.0]];
        assert!(pairwise_matrix(&ragged, &Metric::Euclidean).is_err());
        let empty: Vec<Vec<f64>> = vec![];
        assert!(pairwise_matrix(&empty, &Metric::Euclidean).is_err());
    }

    #[test]
    fn pairwise_matches_recompute() {
        let pts = [[0.1, 0.9, 0.3], [0.5, 0.5, 0.5], [0.95, 0.05, 0.7]];
        let metric = Metric::Kernel(KernelSpec::Rbf { gamma: 1.0 / 3.0 });
        let m = pairwise_matrix(&pts, &metric).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let g: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                let expect = 2.0 - 2.0 * (-g / 3.0).exp();
                assert_abs_diff_eq!(m.get(i, j), expect, epsilon = 1e-12);
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn serde_shapes() {
        let m = Metric::Kernel(KernelSpec::Rbf { gamma: 0.5 });
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"metric":"kernel","kind":"rbf","gamma":0.5}"#);
        assert_eq!(serde_json::from_str::<Metric>(&json).unwrap(), m);
    }

    #[test]
    fn pgm_header() {
        let bytes = encode_pgm(2, &[0, 10, 10, 0]);
        assert_eq!(&bytes[..11], b"P5\n2 2\n255\n");
        assert_eq!(&bytes[11..], &[0, 10, 10, 0]);
    }
}

//! Explicit feature transformations.
//!
//! Linear and S-shaped transforms are fitted per feature from training data
//! as a midpoint `M` and half-width `W`, so that the training range
//! `[M - W, M + W]` spreads over the unit interval. The exponential transform
//! has no fitted parameters and only a steepness `K`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FeatureVector;

pub const DEFAULT_STEEPNESS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Identity,
    Linear,
    SShaped,
    Exponential,
}

/// Midpoint and half-width of one feature's training range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Bounds {
    pub mid: f64,
    pub half_width: f64,
}

impl From<[f64; 2]> for Bounds {
    fn from([mid, half_width]: [f64; 2]) -> Self {
        Bounds { mid, half_width }
    }
}

impl From<Bounds> for [f64; 2] {
    fn from(b: Bounds) -> Self {
        [b.mid, b.half_width]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub kind: TransformKind,
    #[serde(default)]
    pub params: Vec<Bounds>,
    #[serde(rename = "K", default = "default_steepness")]
    pub steepness: f64,
}

fn default_steepness() -> f64 {
    DEFAULT_STEEPNESS
}

/// Per-column bounds of a training matrix (rows are state snapshots).
pub fn fit_bounds<R: AsRef<[f64]>>(rows: &[R]) -> Result<Vec<Bounds>> {
    let Some(first) = rows.first() else {
        return Err(Error::invalid("cannot fit bounds on an empty matrix"));
    };
    let width = first.as_ref().len();
    let mut lo = vec![f64::INFINITY; width];
    let mut hi = vec![f64::NEG_INFINITY; width];
    for (r, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != width {
            return Err(Error::invalid(format!(
                "row {r} has {} columns, expected {width}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid(format!("row {r}, column {j} is not finite")));
            }
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    Ok(lo
        .into_iter()
        .zip(hi)
        .map(|(lo, hi)| Bounds {
            mid: (hi + lo) / 2.0,
            half_width: (hi - lo) / 2.0,
        })
        .collect())
}

/// Clamped linear map of `[mid - w, mid + w]` onto `[0, 1]`. Zero width maps to 0.5.
pub fn apply_linear(x: f64, mid: f64, half_width: f64) -> f64 {
    if half_width <= 0.0 {
        return 0.5;
    }
    ((x - mid + half_width) / (2.0 * half_width)).clamp(0.0, 1.0)
}

/// Logistic curve centred on `mid` reaching ~0.0025/0.9975 at the range ends.
/// Zero width maps to 0.5.
pub fn apply_s_shaped(x: f64, mid: f64, half_width: f64) -> f64 {
    if half_width <= 0.0 {
        return 0.5;
    }
    1.0 - 1.0 / (1.0 + (6.0 * (x - mid) / half_width).exp())
}

pub fn apply_exponential(x: f64, steepness: f64) -> f64 {
    let e = (-steepness * x).exp();
    1.0 - 2.0 * (e - (-steepness).exp()) / (1.0 + e)
}

impl TransformSpec {
    pub fn identity() -> Self {
        TransformSpec {
            kind: TransformKind::Identity,
            params: Vec::new(),
            steepness: DEFAULT_STEEPNESS,
        }
    }

    pub fn exponential(steepness: f64) -> Self {
        TransformSpec {
            kind: TransformKind::Exponential,
            params: Vec::new(),
            steepness,
        }
    }

    /// Fits a linear or S-shaped transform; other kinds ignore `rows`.
    pub fn fit<R: AsRef<[f64]>>(kind: TransformKind, rows: &[R]) -> Result<Self> {
        let params = match kind {
            TransformKind::Linear | TransformKind::SShaped => fit_bounds(rows)?,
            TransformKind::Identity | TransformKind::Exponential => Vec::new(),
        };
        if let Some(b) = params.iter().find(|b| b.half_width < 0.0) {
            return Err(Error::invalid(format!("negative half-width {}", b.half_width)));
        }
        Ok(TransformSpec {
            kind,
            params,
            steepness: DEFAULT_STEEPNESS,
        })
    }

    pub fn apply_values(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self.kind {
            TransformKind::Identity => Ok(v.to_vec()),
            TransformKind::Exponential => Ok(v
                .iter()
                .map(|&x| apply_exponential(x, self.steepness))
                .collect()),
            TransformKind::Linear | TransformKind::SShaped => {
                if self.params.len() != v.len() {
                    return Err(Error::invalid(format!(
                        "transform fitted on {} features, got {}",
                        self.params.len(),
                        v.len()
                    )));
                }
                let f = if self.kind == TransformKind::Linear {
                    apply_linear
                } else {
                    apply_s_shaped
                };
                Ok(v.iter()
                    .zip(&self.params)
                    .map(|(&x, b)| f(x, b.mid, b.half_width))
                    .collect())
            }
        }
    }

    pub fn apply(&self, v: &FeatureVector) -> Result<FeatureVector> {
        if self.kind == TransformKind::Identity {
            return Ok(v.clone());
        }
        FeatureVector::new(self.apply_values(v)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: TransformSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.iter().any(|b| b.half_width < 0.0) {
            return Err(Error::invalid("half-width must be non-negative"));
        }
        if !self.steepness.is_finite() {
            return Err(Error::invalid("steepness must be finite"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// The published form, singular at mid = 0.
    fn s_shaped_published(x: f64, m: f64, w: f64) -> f64 {
        1.0 - 1.0 / (1.0 + ((6.0 * m / w) * (x / m - 1.0)).exp())
    }

    #[test]
    fn fit_examples() {
        let b = fit_bounds(&[[0.2], [0.6]]).unwrap();
        assert_abs_diff_eq!(b[0].mid, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(b[0].half_width, 0.2, epsilon = 1e-15);
        let b = fit_bounds(&[[0.3], [0.3]]).unwrap();
        assert_eq!((b[0].mid, b[0].half_width), (0.3, 0.0));
        let b = fit_bounds(&[[0.0], [1.0]]).unwrap();
        assert_eq!((b[0].mid, b[0].half_width), (0.5, 0.5));
        assert!(fit_bounds::<[f64; 1]>(&[]).is_err());
        assert!(fit_bounds(&[[f64::NAN]]).is_err());
    }

    #[test]
    fn linear_examples() {
        assert_eq!(apply_linear(0.4, 0.4, 0.2), 0.5);
        assert_abs_diff_eq!(apply_linear(0.6, 0.4, 0.2), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(apply_linear(0.2, 0.4, 0.2), 0.0, epsilon = 1e-12);
        // (0.7 - 0.4 + 0.2) / 0.4 = 1.25 before clamping
        assert_eq!(apply_linear(0.7, 0.4, 0.2), 1.0);
        assert_eq!(apply_linear(123.0, 0.3, 0.0), 0.5);
    }

    #[test]
    fn s_shaped_examples() {
        assert_eq!(apply_s_shaped(0.4, 0.4, 0.2), 0.5);
        let top = 1.0 - 1.0 / (1.0 + 6f64.exp());
        assert_abs_diff_eq!(apply_s_shaped(0.6, 0.4, 0.2), top, epsilon = 1e-12);
        assert_abs_diff_eq!(top, 0.997527, epsilon = 1e-6);
        assert_abs_diff_eq!(apply_s_shaped(0.2, 0.4, 0.2), 1.0 - top, epsilon = 1e-12);
        assert_eq!(apply_s_shaped(0.9, 0.0, 0.0), 0.5);
        // defined at mid = 0
        assert_eq!(apply_s_shaped(0.0, 0.0, 0.5), 0.5);
    }

    #[test]
    fn exponential_examples() {
        assert_abs_diff_eq!(apply_exponential(1.0, 5.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(apply_exponential(0.0, 5.0), (-5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(apply_exponential(0.0, 5.0), 0.0067379, epsilon = 1e-7);
        // 1 - 2 (e^-2.5 - e^-5) / (1 + e^-2.5)
        let direct = 1.0 - 2.0 * ((-2.5f64).exp() - (-5f64).exp()) / (1.0 + (-2.5f64).exp());
        assert_abs_diff_eq!(apply_exponential(0.5, 5.0), direct, epsilon = 1e-15);
        assert_abs_diff_eq!(direct, 0.860738, epsilon = 1e-6);
    }

    #[test]
    fn spec_application() {
        let v = FeatureVector::new(vec![0.25, 3.0]).unwrap();
        assert_eq!(TransformSpec::identity().apply(&v).unwrap(), v);

        let lin = TransformSpec::fit(TransformKind::Linear, &[[0.0], [1.0]]).unwrap();
        let out = lin.apply(&FeatureVector::new(vec![0.25]).unwrap()).unwrap();
        assert_eq!(out.as_slice(), &[0.25]);

        let s = TransformSpec::fit(TransformKind::SShaped, &[[0.2], [0.6]]).unwrap();
        let out = s.apply(&FeatureVector::new(vec![0.4]).unwrap()).unwrap();
        assert_abs_diff_eq!(out[0], 0.5, epsilon = 1e-12);

        assert!(lin.apply(&v).is_err());
    }

    #[test]
    fn json_layout() {
        let spec = TransformSpec::fit(TransformKind::Linear, &[[0.2, 0.0], [0.6, 1.0]]).unwrap();
        let json = spec.to_json().unwrap();
        assert!(json.starts_with(r#"{"kind":"linear","params":[[0.4"#));
        assert!(json.ends_with(r#""K":5.0}"#));
        assert_eq!(TransformSpec::from_json(&json).unwrap(), spec);
        let parsed = TransformSpec::from_json(r#"{"kind":"s_shaped","params":[[0.5,0.1]],"K":5}"#)
            .unwrap();
        assert_eq!(parsed.kind, TransformKind::SShaped);
        assert!(TransformSpec::from_json(r#"{"kind":"linear","params":[[0.5,-0.1]]}"#).is_err());
    }

    proptest! {
        #[test]
        fn ranges_and_monotonicity(
            x1 in -2.0f64..3.0, x2 in -2.0f64..3.0,
            m in -1.0f64..2.0, w in 0.001f64..2.0,
        ) {
            let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
            let l = apply_linear(lo, m, w);
            prop_assert!((0.0..=1.0).contains(&l));
            prop_assert!(l <= apply_linear(hi, m, w));
            let s = apply_s_shaped(lo, m, w);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!(s <= apply_s_shaped(hi, m, w));
        }

        #[test]
        fn exponential_range_on_unit_interval(x1 in 0.0f64..=1.0, x2 in 0.0f64..=1.0) {
            let e1 = apply_exponential(x1, 5.0);
            prop_assert!(e1 >= (-5f64).exp() - 1e-15 && e1 <= 1.0 + 1e-15);
            if x1 < x2 {
                prop_assert!(e1 < apply_exponential(x2, 5.0));
            }
        }

        #[test]
        fn s_shaped_matches_published_form(
            x in -1.0f64..2.0,
            m in prop_oneof![-2.0f64..-0.05, 0.05f64..2.0],
            w in 0.05f64..2.0,
        ) {
            prop_assert!((apply_s_shaped(x, m, w) - s_shaped_published(x, m, w)).abs() < 1e-12);
        }

        #[test]
        fn fitted_endpoints(a in -5.0f64..5.0, span in 0.01f64..5.0) {
            let (lo, hi) = (a, a + span);
            let spec = fit_bounds(&[[lo], [(lo + hi) / 2.0], [hi]]).unwrap();
            let b = spec[0];
            prop_assert!(apply_linear(lo, b.mid, b.half_width).abs() < 1e-12);
            prop_assert!((apply_linear(hi, b.mid, b.half_width) - 1.0).abs() < 1e-12);
            prop_assert!((apply_s_shaped(lo, b.mid, b.half_width) - 0.002473).abs() < 1e-6);
            prop_assert!((apply_s_shaped(hi, b.mid, b.half_width) - 0.997527).abs() < 1e-6);
        }
    }
}

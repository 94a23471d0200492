//! Deterministic directions f = Σ_j f_j ξ_j used for S-transforms, Girsanov
//! translations and adaptedness probes. Either given by coordinates or
//! projected from a smooth bump supported on [a, b].

use crate::basis::{lambda_pow, xi_row};
use crate::error::{Error, Result};
use crate::quadrature::integrate_refined;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    coeffs: Vec<f64>,
}

impl TestFunction {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > crate::basis::MAX_K {
            return Err(Error::Config(format!(
                "test function needs 1..={} coordinates, got {}",
                crate::basis::MAX_K,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("test function coordinates must be finite".into()));
        }
        Ok(TestFunction { coeffs })
    }

    /// L²-project the C^∞ bump height·exp(1 − 1/(1−x²)), x = (2t−a−b)/(b−a),
    /// onto the first K basis elements.
    pub fn bump(k: usize, a: f64, b: f64, height: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && height.is_finite()) || a < 0.0 || b <= a {
            return Err(Error::Config(format!(
                "bump needs 0 <= a < b and finite height, got a={a}, b={b}, height={height}"
            )));
        }
        let mut coeffs = vec![0.0; k];
        let width0 = ((b - a) / 8.0).min(0.25);
        let mut xi = vec![0.0; k];
        for (j, slot) in coeffs.iter_mut().enumerate() {
            let (v, _) = integrate_refined(a, b, width0, 16, 1e-13, 10, |t| {
                xi_row(t, &mut xi).expect("bump support is nonnegative");
                bump_value(t, a, b, height) * xi[j]
            })?;
            *slot = v;
        }
        TestFunction::from_coeffs(coeffs)
    }

    pub fn k(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Projected value Σ_j f_j ξ_j(t).
    pub fn value(&self, t: f64) -> Result<f64> {
        let mut xi = vec![0.0; self.coeffs.len()];
        xi_row(t, &mut xi)?;
        Ok(self.coeffs.iter().zip(&xi).map(|(c, x)| c * x).sum())
    }

    /// |f|_q² = Σ_j λ_j^{2q} f_j².
    pub fn norm_sq(&self, q: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| lambda_pow(j, 2.0 * q) * c * c)
            .sum()
    }

    pub fn norm(&self, q: f64) -> f64 {
        self.norm_sq(q).sqrt()
    }

    /// Coordinates of A^p f: (λ_j^p f_j)_j.
    pub fn scaled_coeffs(&self, p: f64) -> Vec<f64> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| lambda_pow(j, p) * c)
            .collect()
    }

    /// Parse from JSON: either {"coeffs": [...]} or
    /// {"bump": {"a":…, "b":…, "height":…}} projected onto K coordinates.
    pub fn from_json(v: &serde_json::Value, k: usize) -> Result<Self> {
        let spec: TestFnSpec = serde_json::from_value(v.clone())
            .map_err(|e| Error::Config(format!("bad test function spec: {e}")))?;
        match spec {
            TestFnSpec::Coeffs { coeffs } => {
                if coeffs.len() > k {
                    return Err(Error::Config(format!(
                        "test function has {} coordinates but K = {k}",
                        coeffs.len()
                    )));
                }
                let mut padded = coeffs;
                padded.resize(k, 0.0);
                TestFunction::from_coeffs(padded)
            }
            TestFnSpec::Bump { bump } => TestFunction::bump(k, bump.a, bump.b, bump.height),
        }
    }
}

/// The raw bump before projection; zero outside (a, b).
pub fn bump_value(t: f64, a: f64, b: f64, height: f64) -> f64 {
    let x = (2.0 * t - a - b) / (b - a);
    if x.abs() >= 1.0 {
        return 0.0;
    }
    height * (1.0 - 1.0 / (1.0 - x * x)).exp()
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TestFnSpec {
    Coeffs { coeffs: Vec<f64> },
    Bump { bump: BumpSpec },
}

#[derive(Serialize, Deserialize)]
struct BumpSpec {
    a: f64,
    b: f64,
    height: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn norms_weight_by_lambda() {
        let f = TestFunction::from_coeffs(vec![1.0, 0.0, 2.0]).unwrap();
        // |f|_q² = 1.5^{2q} + 4·3.5^{2q}
        assert_relative_eq!(f.norm_sq(0.0), 5.0, max_relative = 1e-15);
        assert_relative_eq!(
            f.norm_sq(1.0),
            1.5f64.powi(2) + 4.0 * 3.5f64.powi(2),
            max_relative = 1e-14
        );
        let s = f.scaled_coeffs(-1.0);
        assert_relative_eq!(s[0], 1.0 / 1.5, max_relative = 1e-15);
        assert_relative_eq!(s[2], 2.0 / 3.5, max_relative = 1e-15);
    }

    #[test]
    fn bump_projection_l2_residuals() {
        // ∫ bump² over [a,b] vs Σ f_j². Convergence in K is slow (the bump's
        // edge singularities cost roughly exp(−c k^{1/4}) per coefficient);
        // residuals are pinned to independently computed values.
        let (a, b, h) = (0.5, 2.5, 1.0);
        let (l2, _) = integrate_refined(a, b, 0.25, 16, 1e-13, 10, |t| {
            bump_value(t, a, b, h).powi(2)
        })
        .unwrap();
        assert_relative_eq!(l2, 0.9833808129127182, max_relative = 1e-10);
        let f16 = TestFunction::bump(16, a, b, h).unwrap();
        let f48 = TestFunction::bump(48, a, b, h).unwrap();
        let r16 = l2 - f16.norm_sq(0.0);
        let r48 = l2 - f48.norm_sq(0.0);
        assert_relative_eq!(r16, 5.322658e-2, max_relative = 1e-5);
        assert_relative_eq!(r48, 1.059790e-2, max_relative = 1e-5);
        assert!(r48 > 0.0 && r16 > r48, "Bessel + monotone: r16={r16}, r48={r48}");
    }

    #[test]
    fn value_sums_the_projected_series() {
        let (a, b, h) = (0.5, 2.5, 0.8);
        let f = TestFunction::bump(64, a, b, h).unwrap();
        let mut xi = vec![0.0; 64];
        for t in [0.9, 1.5, 2.1] {
            xi_row(t, &mut xi).unwrap();
            let manual: f64 = f.coeffs().iter().zip(&xi).map(|(c, x)| c * x).sum();
            assert_relative_eq!(f.value(t).unwrap(), manual, max_relative = 1e-13);
            // the K=64 projection tracks the bump only loosely
            assert_abs_diff_eq!(f.value(t).unwrap(), bump_value(t, a, b, h), epsilon = 0.08);
        }
    }

    #[test]
    fn json_forms() {
        let v: serde_json::Value = serde_json::json!({"coeffs": [1.0, -0.5]});
        let f = TestFunction::from_json(&v, 4).unwrap();
        assert_eq!(f.coeffs(), &[1.0, -0.5, 0.0, 0.0]);
        let v2: serde_json::Value = serde_json::json!({"bump": {"a": 0.5, "b": 1.5, "height": 1.0}});
        let g = TestFunction::from_json(&v2, 8).unwrap();
        assert_eq!(g.k(), 8);
        assert!(g.norm(0.0) > 0.0);
        let bad: serde_json::Value = serde_json::json!({"nope": 3});
        assert!(TestFunction::from_json(&bad, 4).is_err());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(TestFunction::bump(8, -1.0, 1.0, 1.0).is_err());
        assert!(TestFunction::bump(8, 2.0, 1.0, 1.0).is_err());
        assert!(TestFunction::from_coeffs(vec![]).is_err());
        assert!(TestFunction::from_coeffs(vec![f64::NAN]).is_err());
    }
}

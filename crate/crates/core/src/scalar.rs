//! Scalar test nonlinearities φ: ℝ → ℝ with first and second derivatives,
//! plus Hermite projection of φ(c + σG) against a standard Gaussian.

use crate::error::{Error, Result};
use crate::quadrature::{ln_factorial, GaussHermite};
use std::fmt;
use std::sync::Arc;

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ScalarFn {
    name: String,
    f: Scalar,
    d1: Scalar,
    d2: Scalar,
    /// sup |φ| < ∞; unbounded functions need `growth_degree` for sampling paths.
    pub bounded: bool,
    /// Polynomial growth exponent m with |φ(x)| ≤ C(1+|x|^m), if declared.
    pub growth_degree: Option<u32>,
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFn")
            .field("name", &self.name)
            .field("bounded", &self.bounded)
            .field("growth_degree", &self.growth_degree)
            .finish()
    }
}

impl ScalarFn {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        bounded: bool,
        growth_degree: Option<u32>,
    ) -> Self {
        ScalarFn {
            name: name.into(),
            f: Arc::new(f),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            bounded,
            growth_degree,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }

    pub fn d2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }

    pub fn cos() -> Self {
        Self::new("cos", f64::cos, |x| -x.sin(), |x| -x.cos(), true, Some(0))
    }

    pub fn sin() -> Self {
        Self::new("sin", f64::sin, f64::cos, |x| -x.sin(), true, Some(0))
    }

    pub fn tanh() -> Self {
        Self::new(
            "tanh",
            f64::tanh,
            |x| 1.0 - x.tanh().powi(2),
            |x| {
                let t = x.tanh();
                -2.0 * t * (1.0 - t * t)
            },
            true,
            Some(0),
        )
    }

    pub fn identity() -> Self {
        Self::new("id", |x| x, |_| 1.0, |_| 0.0, false, Some(1))
    }

    pub fn square() -> Self {
        Self::new("sq", |x| x * x, |x| 2.0 * x, |_| 2.0, false, Some(2))
    }

    pub fn poly(coeffs: Vec<f64>) -> Self {
        let degree = coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .map(|d| d as u32)
            .unwrap_or(0);
        let d1c = differentiate(&coeffs);
        let d2c = differentiate(&d1c);
        let name = format!(
            "poly:{}",
            coeffs
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        let (c0, c1, c2) = (coeffs, d1c, d2c);
        Self::new(
            name,
            move |x| horner(&c0, x),
            move |x| horner(&c1, x),
            move |x| horner(&c2, x),
            degree == 0,
            Some(degree),
        )
    }

    /// Registry lookup: `cos`, `sin`, `tanh`, `id`, `sq`, `poly:c0,c1,...`.
    pub fn by_name(spec: &str) -> Result<Self> {
        match spec {
            "cos" => Ok(Self::cos()),
            "sin" => Ok(Self::sin()),
            "tanh" => Ok(Self::tanh()),
            "id" => Ok(Self::identity()),
            "sq" | "x2" => Ok(Self::square()),
            _ => {
                if let Some(rest) = spec.strip_prefix("poly:") {
                    let coeffs: std::result::Result<Vec<f64>, _> =
                        rest.split(',').map(|s| s.trim().parse::<f64>()).collect();
                    match coeffs {
                        Ok(c) if !c.is_empty() => Ok(Self::poly(c)),
                        _ => Err(Error::Config(format!("bad polynomial spec {spec:?}"))),
                    }
                } else {
                    Err(Error::Config(format!("unknown scalar function {spec:?}")))
                }
            }
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn differentiate(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

/// Coefficients e_n = E[φ(c + σG) He_n(G)] / n! for n = 0..=d_max, so that
/// φ(c + σG) = Σ_n e_n He_n(G) in L²(γ). Quadrature order is chosen from
/// d_max and any declared polynomial growth; smooth non-polynomial φ get a
/// generous fixed order.
pub fn hermite_projection(phi: &ScalarFn, c: f64, sigma: f64, d_max: usize) -> Result<Vec<f64>> {
    let poly_deg = phi.growth_degree.filter(|_| phi.name().starts_with("poly"));
    let order = match poly_deg {
        // integrand degree ≤ deg + d_max must satisfy ≤ 2n−1
        Some(d) => ((d as usize + d_max) / 2 + 2).max(24),
        None => (2 * d_max + 16).max(64),
    };
    hermite_projection_at(phi, c, sigma, d_max, order)
}

/// Same projection with an explicit quadrature order, for callers carrying
/// their own accuracy contract.
pub fn hermite_projection_at(
    phi: &ScalarFn,
    c: f64,
    sigma: f64,
    d_max: usize,
    order: usize,
) -> Result<Vec<f64>> {
    if !(c.is_finite() && sigma.is_finite()) || sigma < 0.0 {
        return Err(Error::Domain(format!(
            "hermite projection needs finite c and sigma >= 0, got c={c}, sigma={sigma}"
        )));
    }
    if order == 0 || order > 256 {
        return Err(Error::Config(format!(
            "Gauss-Hermite order must be in 1..=256, got {order}"
        )));
    }
    let mut out = vec![0.0; d_max + 1];
    if sigma == 0.0 {
        out[0] = phi.eval(c);
        return Ok(out);
    }
    let gh = GaussHermite::cached(order);
    let mut he = vec![0.0; d_max + 1];
    for (&x, &w) in gh.nodes.iter().zip(&gh.weights) {
        let fx = phi.eval(c + sigma * x);
        crate::chaos::hermite_values(x, &mut he);
        for n in 0..=d_max {
            out[n] += w * fx * he[n];
        }
    }
    for (n, v) in out.iter_mut().enumerate() {
        *v *= (-ln_factorial(n)).exp();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn registry_derivatives() {
        let t = ScalarFn::by_name("tanh").unwrap();
        let x = 0.37;
        let h = 1e-5;
        let fd1 = (t.eval(x + h) - t.eval(x - h)) / (2.0 * h);
        let fd2 = (t.eval(x + h) - 2.0 * t.eval(x) + t.eval(x - h)) / (h * h);
        assert_abs_diff_eq!(t.d1(x), fd1, epsilon = 1e-9);
        assert_abs_diff_eq!(t.d2(x), fd2, epsilon = 1e-5);
    }

    #[test]
    fn poly_spec_and_growth() {
        // 1 − 2x + 3x³
        let p = ScalarFn::by_name("poly:1,-2,0,3").unwrap();
        assert_relative_eq!(p.eval(2.0), 1.0 - 4.0 + 24.0, epsilon = 1e-14);
        assert_relative_eq!(p.d1(2.0), -2.0 + 36.0, epsilon = 1e-14);
        assert_relative_eq!(p.d2(2.0), 36.0, epsilon = 1e-14);
        assert_eq!(p.growth_degree, Some(3));
        assert!(!p.bounded);
        assert!(ScalarFn::by_name("poly:").is_err());
        assert!(ScalarFn::by_name("nope").is_err());
    }

    #[test]
    fn projection_of_square_is_exact() {
        // (c + σG)² = c² + σ² + 2cσ He₁ + σ² He₂
        let e = hermite_projection(&ScalarFn::square(), 0.7, 1.3, 4).unwrap();
        assert_relative_eq!(e[0], 0.49 + 1.69, epsilon = 1e-13);
        assert_relative_eq!(e[1], 2.0 * 0.7 * 1.3, epsilon = 1e-13);
        assert_relative_eq!(e[2], 1.69, epsilon = 1e-13);
        assert_abs_diff_eq!(e[3], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(e[4], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn projection_of_cos_matches_closed_form() {
        // cos(σG): E[cos(σG)He_{2m}(G)] = (−1)^m σ^{2m} e^{−σ²/2}
        let sigma = 0.9;
        let e = hermite_projection(&ScalarFn::cos(), 0.0, sigma, 6).unwrap();
        let damp = (-sigma * sigma / 2.0).exp();
        for m in 0..=3 {
            let expect = (-1.0f64).powi(m as i32) * sigma.powi(2 * m) * damp
                * (-ln_factorial(2 * m as usize)).exp();
            assert_relative_eq!(e[2 * m as usize], expect, max_relative = 1e-12);
            if 2 * m + 1 <= 6 {
                assert_abs_diff_eq!(e[2 * m as usize + 1], 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn projection_degenerate_sigma() {
        let e = hermite_projection(&ScalarFn::cos(), 1.1, 0.0, 3).unwrap();
        assert_eq!(e, vec![1.1f64.cos(), 0.0, 0.0, 0.0]);
    }
}

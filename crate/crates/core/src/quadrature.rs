//! Gauss quadrature rules used throughout the engine.
//!
//! Gauss–Legendre nodes come from Newton iteration on the Legendre recurrence
//! (machine-precision, deterministic); Gauss–Hermite nodes target the
//! probabilists' weight so that `E[f(G)] = Σ w_i f(x_i)` for standard normal G.

use crate::error::{Error, Result};
use std::sync::{Mutex, OnceLock};

/// Nodes and weights on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Build an n-point rule. Newton iteration on P_n with the usual
    /// cosine initial guess converges in a handful of steps for n ≤ 128.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1 && n <= 256, "unsupported Gauss-Legendre order {n}");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_pair(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared rule of the given order (rules are immutable once built).
    pub fn cached(n: usize) -> &'static GaussLegendre {
        static CACHE: OnceLock<Mutex<std::collections::HashMap<usize, &'static GaussLegendre>>> =
            OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(std::collections::HashMap::new()));
        let mut map = cache.lock().unwrap();
        map.entry(n)
            .or_insert_with(|| Box::leak(Box::new(GaussLegendre::new(n))))
    }

    /// Integrate f over [a, b] with a single panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule: fixed panel width, accumulated left to right.
pub fn integrate_panels<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    width: f64,
    order: usize,
    mut f: F,
) -> f64 {
    debug_assert!(b >= a && width > 0.0);
    let rule = GaussLegendre::cached(order);
    let n_panels = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / n_panels as f64;
    let mut acc = 0.0;
    for i in 0..n_panels {
        acc += rule.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, &mut f);
    }
    acc
}

/// Composite rule refined by panel halving until two successive passes agree
/// to `tol` (absolute). Returns (value, last delta).
pub fn integrate_refined<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    width0: f64,
    order: usize,
    tol: f64,
    max_refines: usize,
    mut f: F,
) -> Result<(f64, f64)> {
    let mut width = width0;
    let mut prev = integrate_panels(a, b, width, order, &mut f);
    let mut last = f64::INFINITY;
    for _ in 0..max_refines {
        width *= 0.5;
        let next = integrate_panels(a, b, width, order, &mut f);
        last = (next - prev).abs();
        prev = next;
        if last <= tol {
            return Ok((prev, last));
        }
    }
    Err(Error::QuadratureStall {
        tol,
        refinements: max_refines,
        last,
    })
}

/// Probabilists' Gauss–Hermite rule: `E[f(G)] ≈ Σ w_i f(x_i)`, G ~ N(0,1).
/// Exact for polynomials of degree ≤ 2n − 1.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1 && n <= 256, "unsupported Gauss-Hermite order {n}");
        // Roots of He_n: bisection on sign changes over [0, sqrt(4n+2)+1].
        // O(n^2) once per order; rules are cached.
        let positive = hermite_roots_bisect(n);
        assert_eq!(positive.len(), n / 2, "Hermite root search failed at order {n}");
        let mut nodes: Vec<f64> = Vec::with_capacity(n);
        for &x in positive.iter().rev() {
            nodes.push(-x);
        }
        if n % 2 == 1 {
            nodes.push(0.0);
        }
        nodes.extend(positive.iter());
        // w_i = n! / (n^2 He_{n-1}(x_i)^2) for the unit-mass Gaussian weight
        let weights: Vec<f64> = nodes
            .iter()
            .map(|&x| {
                let h = hermite_value(n - 1, x);
                (ln_factorial(n) - 2.0 * (n as f64).ln() - 2.0 * h.abs().ln()).exp()
            })
            .collect();
        GaussHermite { nodes, weights }
    }

    pub fn cached(n: usize) -> &'static GaussHermite {
        static CACHE: OnceLock<Mutex<std::collections::HashMap<usize, &'static GaussHermite>>> =
            OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(std::collections::HashMap::new()));
        let mut map = cache.lock().unwrap();
        map.entry(n)
            .or_insert_with(|| Box::leak(Box::new(GaussHermite::new(n))))
    }

    /// E[f(G)] for standard normal G.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// (He_n(x), He_n'(x)).
fn hermite_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = x * p1 - k as f64 * p0;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * p0)
}

fn hermite_value(n: usize, x: f64) -> f64 {
    hermite_pair(n, x).0
}

fn hermite_roots_bisect(n: usize) -> Vec<f64> {
    // Largest root of He_n is below sqrt(4n + 2) (probabilists' scaling).
    let hi = (4.0 * n as f64 + 2.0).sqrt() + 1.0;
    let steps = 20_000;
    let mut roots = Vec::new();
    let mut prev_x = 0.0;
    let mut prev_v = hermite_value(n, 0.0);
    if prev_v == 0.0 {
        prev_x = 1e-9;
        prev_v = hermite_value(n, prev_x);
    }
    for i in 1..=steps {
        let x = hi * i as f64 / steps as f64;
        let v = hermite_value(n, x);
        if prev_v * v < 0.0 {
            let (mut a, mut b) = (prev_x, x);
            let (mut fa, _) = (prev_v, v);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = hermite_value(n, m);
                if fa * fm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_x = x;
        prev_v = v;
    }
    roots
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(16);
        // degree 31 is the highest exact degree for a 16-point rule
        let val = rule.integrate(0.0, 1.0, |x| 32.0 * x.powi(31));
        assert_abs_diff_eq!(val, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn legendre_weights_sum_to_two() {
        for n in [4, 8, 16, 32, 64] {
            let rule = GaussLegendre::new(n);
            let s: f64 = rule.weights.iter().sum();
            assert_abs_diff_eq!(s, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn refined_composite_reaches_tolerance() {
        let (val, err) = integrate_refined(0.0, 10.0, 0.5, 16, 1e-12, 12, |x: f64| (-x).exp())
            .expect("refinement should converge");
        assert!(err <= 1e-12);
        assert_abs_diff_eq!(val, 1.0 - (-10.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn hermite_matches_gaussian_moments() {
        for n in [8, 21, 40, 64] {
            let rule = GaussHermite::new(n);
            let m0 = rule.expect(|_| 1.0);
            let m2 = rule.expect(|x| x * x);
            let m4 = rule.expect(|x| x.powi(4));
            assert_abs_diff_eq!(m0, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m2, 1.0, epsilon = 1e-11);
            assert_abs_diff_eq!(m4, 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn hermite_handles_analytic_integrand() {
        // E[cos G] = e^{-1/2}
        let rule = GaussHermite::new(40);
        assert_abs_diff_eq!(rule.expect(|x| x.cos()), (-0.5f64).exp(), epsilon = 1e-13);
    }
}

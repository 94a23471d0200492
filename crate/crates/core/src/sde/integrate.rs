//! Scalar ODE integrators for the pathwise V equation: classical RK4 with a
//! fixed step and an adaptive Dormand–Prince 5(4) pair. Both integrate
//! between prescribed output times so state is recorded exactly on the grid.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4,
    Rk45,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4.
    pub rk4_step: f64,
    /// Relative/absolute tolerances for RK45 step control.
    pub rtol: f64,
    pub atol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk45,
            rk4_step: 1e-3,
            rtol: 1e-8,
            atol: 1e-12,
        }
    }
}

/// Integrate v' = f(s, v) from times[0] through times.last(), returning v at
/// every listed time (times must be strictly increasing).
pub fn integrate_at<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    v0: f64,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    if times.len() < 2 {
        return Ok(vec![v0; times.len()]);
    }
    let mut out = Vec::with_capacity(times.len());
    out.push(v0);
    let mut v = v0;
    for w in times.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            return Err(Error::Config(format!(
                "output times must increase: {a} then {b}"
            )));
        }
        v = match cfg.method {
            Method::Rk4 => rk4_span(&mut f, v, a, b, cfg.rk4_step)?,
            Method::Rk45 => rk45_span(&mut f, v, a, b, cfg.rtol, cfg.atol)?,
        };
        out.push(v);
    }
    Ok(out)
}

fn check_state(s: f64, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::Domain(format!(
            "ODE state became non-finite at s = {s:.6}"
        )));
    }
    Ok(())
}

fn rk4_span<F: FnMut(f64, f64) -> f64>(
    f: &mut F,
    mut v: f64,
    a: f64,
    b: f64,
    h: f64,
) -> Result<f64> {
    let steps = ((b - a) / h).ceil().max(1.0) as usize;
    let h = (b - a) / steps as f64;
    let mut s = a;
    for _ in 0..steps {
        let k1 = f(s, v);
        let k2 = f(s + 0.5 * h, v + 0.5 * h * k1);
        let k3 = f(s + 0.5 * h, v + 0.5 * h * k2);
        let k4 = f(s + h, v + h * k3);
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += h;
        check_state(s, v)?;
    }
    Ok(v)
}

// Dormand–Prince 5(4) tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

fn rk45_span<F: FnMut(f64, f64) -> f64>(
    f: &mut F,
    mut v: f64,
    a: f64,
    b: f64,
    rtol: f64,
    atol: f64,
) -> Result<f64> {
    let mut s = a;
    let mut h = (b - a).min(1e-2).max(1e-10);
    let mut k1 = f(s, v); // FSAL
    let min_step = 1e-14 * (b - a).max(1.0);
    let mut rejected = 0usize;
    loop {
        // closing step: land on b exactly instead of chasing fp residue
        let last = h >= b - s;
        if last {
            h = b - s;
        }
        let k2 = f(s + C[0] * h, v + h * A2[0] * k1);
        let k3 = f(s + C[1] * h, v + h * (A3[0] * k1 + A3[1] * k2));
        let k4 = f(s + C[2] * h, v + h * (A4[0] * k1 + A4[1] * k2 + A4[2] * k3));
        let k5 = f(
            s + C[3] * h,
            v + h * (A5[0] * k1 + A5[1] * k2 + A5[2] * k3 + A5[3] * k4),
        );
        let k6 = f(
            s + C[4] * h,
            v + h * (A6[0] * k1 + A6[1] * k2 + A6[2] * k3 + A6[3] * k4 + A6[4] * k5),
        );
        let v5 = v + h * (B5[0] * k1 + B5[2] * k3 + B5[3] * k4 + B5[4] * k5 + B5[5] * k6);
        let k7 = f(s + h, v5);
        let v4 = v
            + h * (B4[0] * k1 + B4[2] * k3 + B4[3] * k4 + B4[4] * k5 + B4[5] * k6 + B4[6] * k7);
        let err = (v5 - v4).abs();
        let tol = atol + rtol * v.abs().max(v5.abs());
        if !v5.is_finite() || !err.is_finite() {
            return Err(Error::Domain(format!(
                "ODE state became non-finite at s = {s:.6}"
            )));
        }
        if err <= tol {
            if last {
                return Ok(v5);
            }
            s += h;
            v = v5;
            k1 = k7; // first-same-as-last
            rejected = 0;
        } else {
            rejected += 1;
            if rejected > 60 {
                return Err(Error::Domain(format!(
                    "ODE step control stalled at s = {s:.6} (err {err:.3e} vs tol {tol:.3e})"
                )));
            }
        }
        let factor = if err > 0.0 {
            0.9 * (tol / err).powf(0.2)
        } else {
            5.0
        };
        h *= factor.clamp(0.2, 5.0);
        if h < min_step {
            return Err(Error::Domain(format!(
                "ODE step underflow at s = {s:.6}; the state is likely blowing up"
            )));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_growth_rk45() {
        let cfg = IntegratorConfig::default();
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let out = integrate_at(|_, v| v, 1.0, &times, &cfg).unwrap();
        for (i, &t) in times.iter().enumerate() {
            assert_relative_eq!(out[i], t.exp(), max_relative = 1e-8);
        }
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        // v' = cos(s)·v, v(1) = e^{sin 1}; global error ratio ≈ 16 per halving
        let f = |s: f64, v: f64| s.cos() * v;
        let exact = (1.0f64.sin()).exp();
        let mut errs = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            let cfg = IntegratorConfig {
                method: Method::Rk4,
                rk4_step: h,
                ..Default::default()
            };
            let out = integrate_at(f, 1.0, &[0.0, 1.0], &cfg).unwrap();
            errs.push((out[1] - exact).abs());
        }
        let r1 = errs[0] / errs[1];
        let r2 = errs[1] / errs[2];
        assert!(r1 > 12.0 && r2 > 12.0, "ratios {r1:.1}, {r2:.1}");
    }

    #[test]
    fn logistic_against_closed_form() {
        let cfg = IntegratorConfig::default();
        let out = integrate_at(|_, v| v * (1.0 - v), 0.1, &[0.0, 2.0], &cfg).unwrap();
        let exact = 0.1 * (2.0f64).exp() / (1.0 + 0.1 * ((2.0f64).exp() - 1.0));
        assert_relative_eq!(out[1], exact, max_relative = 1e-8);
    }

    #[test]
    fn finite_time_blowup_is_an_error() {
        // v' = v², v(0) = 1 blows up at s = 1
        let cfg = IntegratorConfig::default();
        let res = integrate_at(|_, v| v * v, 1.0, &[0.0, 2.0], &cfg);
        assert!(res.is_err());
    }

    #[test]
    fn rk45_matches_rk4_closely() {
        let f = |s: f64, v: f64| (s * v).tanh() - 0.3 * v;
        let times = [0.0, 0.5, 1.0];
        let a = integrate_at(f, 0.7, &times, &IntegratorConfig::default()).unwrap();
        let cfg4 = IntegratorConfig {
            method: Method::Rk4,
            rk4_step: 1e-4,
            ..Default::default()
        };
        let b = integrate_at(f, 0.7, &times, &cfg4).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, max_relative = 1e-7);
        }
    }
}

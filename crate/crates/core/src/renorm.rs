//! Renormalized composition on the first chaos: the heat evolution of a
//! scalar map, its Wick-power recomposition Σ_n d_n X^{◇n}, the dual-path
//! agreement check against the algebra's direct composition, and the
//! curvature error bound with its swept constant.

use crate::basis::{check_p, lambda_pow};
use crate::chaos::{ChaosAlgebra, ChaosExpansion, Projection};
use crate::error::{Error, Result};
use crate::quadrature::{ln_factorial, GaussHermite};
use crate::scalar::{hermite_projection_at, ScalarFn};
use serde::Serialize;

pub const KUO_TOL: f64 = 1e-9;
pub const PROPOSITION_TOL: f64 = 1e-8;

/// Taylor coefficients d_n = (P_tφ)^{(n)}(0)/n! of the heat evolution of φ
/// at variance t, together with the Parseval self-check
/// Σ_n t^n n! d_n² = E[φ(X_t)²], X_t ~ N(0, t).
#[derive(Debug, Clone, Serialize)]
pub struct HeatCoeffs {
    pub variance: f64,
    pub coeffs: Vec<f64>,
    pub quad_order: usize,
    /// |Σ_n t^n n! d_n² − E[φ(X_t)²]|: series truncation plus quadrature
    pub parseval_residual: f64,
}

/// d_n for n ≤ degree via the Gaussian projection
/// (P_tφ)^{(n)}(0) = t^{−n/2} E[φ(√t G) He_n(G)]; the Parseval residual must
/// clear KUO_TOL or the coefficients are rejected as inconsistent.
pub fn heat_semigroup_coeffs(phi: &ScalarFn, t: f64, degree: usize) -> Result<HeatCoeffs> {
    let order = (4 * degree).max(64);
    let hc = heat_coeffs_at_order(phi, t, degree, order)?;
    let scale = hc.parseval_scale();
    if hc.parseval_residual > KUO_TOL * scale {
        return Err(Error::Config(format!(
            "heat coefficients of {:?} at variance {t} fail the Parseval check \
             (residual {:.3e} vs {:.1e}); raise the degree or the quadrature order",
            phi.name(),
            hc.parseval_residual,
            KUO_TOL * scale
        )));
    }
    Ok(hc)
}

impl HeatCoeffs {
    fn parseval_scale(&self) -> f64 {
        1.0f64.max(self.mean_square())
    }

    /// Σ_n t^n n! d_n², the reconstructed E[φ(X_t)²].
    pub fn mean_square(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, d)| d * d * (n as f64 * self.variance.ln() + ln_factorial(n)).exp())
            .sum()
    }
}

fn heat_coeffs_at_order(
    phi: &ScalarFn,
    t: f64,
    degree: usize,
    order: usize,
) -> Result<HeatCoeffs> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!(
            "heat semigroup needs a positive variance, got {t}"
        )));
    }
    if degree > 60 {
        return Err(Error::Config(format!(
            "heat coefficient degree {degree} exceeds the quadrature budget (max 60)"
        )));
    }
    let sigma = t.sqrt();
    let e = hermite_projection_at(phi, 0.0, sigma, degree, order)?;
    let coeffs: Vec<f64> = e
        .iter()
        .enumerate()
        .map(|(n, en)| en * sigma.powi(-(n as i32)))
        .collect();
    // E[φ(X_t)²] by the same rule; the gap to Σ e_n² n! is the residual
    let gh = GaussHermite::cached(order);
    let mut mean_sq = 0.0;
    for (&x, &w) in gh.nodes.iter().zip(&gh.weights) {
        let fx = phi.eval(sigma * x);
        mean_sq += w * fx * fx;
    }
    let series: f64 = e
        .iter()
        .enumerate()
        .map(|(n, en)| en * en * ln_factorial(n).exp())
        .sum();
    Ok(HeatCoeffs {
        variance: t,
        coeffs,
        quad_order: order,
        parseval_residual: (series - mean_sq).abs(),
    })
}

/// Σ_n c_n I_1(h)^{◇n} with I_1(h) = Σ_k h_k Z_k; Wick powers are built by
/// repeated wick products so the tested kernel carries the whole weight.
pub fn wick_compose(
    algebra: &ChaosAlgebra,
    coeffs: &[f64],
    h: &[f64],
) -> Result<ChaosExpansion> {
    let x = ChaosExpansion::first_chaos(algebra.k(), h)?;
    let top = coeffs
        .iter()
        .rposition(|&c| c != 0.0)
        .map_or(0, |n| n + 1);
    let mut out = ChaosExpansion::constant(algebra.k(), coeffs.first().copied().unwrap_or(0.0));
    let mut pow = ChaosExpansion::constant(algebra.k(), 1.0);
    for &c in coeffs.iter().take(top).skip(1) {
        pow = algebra.wick(&pow, &x)?;
        if c != 0.0 {
            let mut term = pow.clone();
            term.scale(c);
            out.add_assign(&term)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct PropositionReport {
    pub p: f64,
    pub degree: usize,
    /// |A^{−p}h|², the variance at which the heat coefficients are taken
    pub smoothed_variance: f64,
    pub max_coeff_discrepancy: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Dual-path check of the composition identity: the algebra's direct
/// renormalized map against heat_semigroup_coeffs at variance |A^{−p}h|²
/// recomposed through Wick powers of I_1(h).
pub fn proposition_check(
    algebra: &ChaosAlgebra,
    phi: &ScalarFn,
    h: &[f64],
    p: f64,
    degree: usize,
) -> Result<PropositionReport> {
    check_p(p)?;
    let sigma2: f64 = h
        .iter()
        .enumerate()
        .map(|(k, hk)| lambda_pow(k, -2.0 * p) * hk * hk)
        .sum();
    if sigma2 <= 0.0 {
        return Err(Error::Domain(
            "composition check needs a nonzero argument".into(),
        ));
    }
    let x = ChaosExpansion::first_chaos(algebra.k(), h)?;
    let direct = algebra
        .phi_tilde(phi, &x, p, &Projection::exact(degree))?
        .expansion;
    let heat = heat_semigroup_coeffs(phi, sigma2, degree)?;
    let composed = wick_compose(algebra, &heat.coeffs, h)?;

    let mut diff = direct;
    diff.scale(-1.0);
    diff.add_assign(&composed)?;
    let max_coeff_discrepancy = diff
        .terms()
        .map(|(_, c)| c.abs())
        .fold(0.0f64, f64::max);
    Ok(PropositionReport {
        p,
        degree,
        smoothed_variance: sigma2,
        max_coeff_discrepancy,
        tol: PROPOSITION_TOL,
        pass: max_coeff_discrepancy <= PROPOSITION_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBoundReport {
    pub p: f64,
    pub degree: usize,
    /// |h|²
    pub full_variance: f64,
    /// |A^{−p}h|²
    pub smoothed_variance: f64,
    /// ‖φ(I_1(h)) − φ̃_p(I_1(h))‖_{−p} over degrees ≤ degree
    pub lhs_norm: f64,
    pub sup_phi2: f64,
    /// (Σ_n |A^{−p}h|^{2n}/τ^n)^{1/2} at the far end τ = |h|², the smallest
    /// constant the admissible sweep can produce
    pub c_tightest: f64,
    /// sup|φ″| · (|h|² − |A^{−p}h|²)/2 · c_tightest
    pub rhs: f64,
    /// p = 0 leaves no smoothing gap: both sides are zero by construction
    pub vacuous: bool,
    pub pass: bool,
}

/// Curvature bound on the renormalization error: the difference between the
/// plain and the smoothed composition, measured in ‖·‖_{−p}, against
/// sup|φ″|·(|h|² − |A^{−p}h|²)/2 times the swept constant. The declared
/// curvature bound is audited on sampled points before use.
pub fn error_bound_check(
    algebra: &ChaosAlgebra,
    phi: &ScalarFn,
    h: &[f64],
    p: f64,
    degree: usize,
    sup_phi2: f64,
) -> Result<ErrorBoundReport> {
    check_p(p)?;
    if !(sup_phi2.is_finite() && sup_phi2 >= 0.0) {
        return Err(Error::MissingGrowthBound);
    }
    for i in 0..257 {
        let x = (i as f64 - 128.0) / 128.0 * 30.0;
        if phi.d2(x).abs() > sup_phi2 * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::Config(format!(
                "declared curvature bound {sup_phi2} for {:?} is violated at x = {x} \
                 (|φ″| = {})",
                phi.name(),
                phi.d2(x).abs()
            )));
        }
    }
    let full: f64 = h.iter().map(|hk| hk * hk).sum();
    let smoothed: f64 = h
        .iter()
        .enumerate()
        .map(|(k, hk)| lambda_pow(k, -2.0 * p) * hk * hk)
        .sum();
    if full <= 0.0 {
        return Err(Error::Domain(
            "error bound check needs a nonzero argument".into(),
        ));
    }
    let gap = full - smoothed;
    let vacuous = gap <= 1e-15 * full;

    let plain = wick_compose(algebra, &heat_semigroup_coeffs(phi, full, degree)?.coeffs, h)?;
    let diff = if vacuous {
        ChaosExpansion::zero(algebra.k())
    } else {
        let smooth = wick_compose(
            algebra,
            &heat_semigroup_coeffs(phi, smoothed, degree)?.coeffs,
            h,
        )?;
        let mut d = smooth;
        d.scale(-1.0);
        d.add_assign(&plain)?;
        d
    };
    let lhs_norm = diff.norm(-p);

    let (c_tightest, rhs) = if vacuous {
        (f64::INFINITY, 0.0)
    } else {
        let c = (full / gap).sqrt();
        (c, sup_phi2 * gap / 2.0 * c)
    };
    let pass = if vacuous {
        lhs_norm <= 1e-12
    } else {
        lhs_norm <= rhs * (1.0 + 1e-12) + 1e-12
    };
    Ok(ErrorBoundReport {
        p,
        degree,
        full_variance: full,
        smoothed_variance: smoothed,
        lhs_norm,
        sup_phi2,
        c_tightest,
        rhs,
        vacuous,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::MultiIndex;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn square_and_cosine_heat_coefficients() {
        let sq = ScalarFn::square();
        let hc = heat_semigroup_coeffs(&sq, 0.37, 6).unwrap();
        assert_relative_eq!(hc.coeffs[0], 0.37, max_relative = 1e-12);
        assert_relative_eq!(hc.coeffs[2], 1.0, max_relative = 1e-12);
        for n in [1, 3, 4, 5, 6] {
            assert_abs_diff_eq!(hc.coeffs[n], 0.0, epsilon = 1e-12);
        }

        let cos = ScalarFn::cos();
        let t = 0.5;
        let hc = heat_semigroup_coeffs(&cos, t, 10).unwrap();
        assert!(hc.quad_order >= 40);
        let damp = (-t / 2.0).exp();
        for m in 0..=5 {
            let expect = damp * if m % 2 == 0 { 1.0 } else { -1.0 }
                / ln_factorial(2 * m).exp();
            assert_relative_eq!(hc.coeffs[2 * m], expect, max_relative = 1e-10);
            if 2 * m + 1 <= 10 {
                assert_abs_diff_eq!(hc.coeffs[2 * m + 1], 0.0, epsilon = 1e-14);
            }
        }
        assert!(hc.parseval_residual < 1e-10, "{}", hc.parseval_residual);
        // E[cos(X_t)²] = (1 + e^{−2t})/2
        assert_relative_eq!(
            hc.mean_square(),
            0.5 * (1.0 + (-2.0 * t).exp()),
            max_relative = 1e-9
        );

        assert!(heat_semigroup_coeffs(&cos, -0.1, 4).is_err());
        // a kink has slowly decaying coefficients: degree 2 cannot close
        // the Parseval identity
        let abs = ScalarFn::new("absval", f64::abs, f64::signum, |_| 0.0, false, Some(1));
        assert!(heat_semigroup_coeffs(&abs, 1.0, 2).is_err());
    }

    #[test]
    fn composition_discrepancy_decays_with_quadrature_order() {
        // at variance ~1.5 the cosine integrand is far from polynomial, so
        // the quadrature error is visible at low orders and must at least
        // halve per +4 nodes until it hits the float floor
        let algebra = ChaosAlgebra::new(2, 8).unwrap();
        let cos = ScalarFn::cos();
        let (h, p, degree) = ([1.2, 0.8], 0.3, 8);
        let x = ChaosExpansion::first_chaos(2, &h).unwrap();
        let direct = algebra
            .phi_tilde(&cos, &x, p, &Projection::exact(degree))
            .unwrap()
            .expansion;
        let sigma2: f64 = h
            .iter()
            .enumerate()
            .map(|(k, hk)| lambda_pow(k, -2.0 * p) * hk * hk)
            .sum();
        let disc: Vec<f64> = [8usize, 12, 16, 20]
            .iter()
            .map(|&o| {
                let heat = heat_coeffs_at_order(&cos, sigma2, degree, o).unwrap();
                let composed = wick_compose(&algebra, &heat.coeffs, &h).unwrap();
                let mut d = composed;
                d.scale(-1.0);
                d.add_assign(&direct).unwrap();
                d.terms().map(|(_, c)| c.abs()).fold(0.0f64, f64::max)
            })
            .collect();
        assert!(disc[0] > 1e-10, "quadrature error not visible: {disc:?}");
        for w in disc.windows(2) {
            assert!(
                w[1] <= 0.5 * w[0] + 1e-13,
                "discrepancies did not halve: {disc:?}"
            );
        }
        assert!(disc[3] < 1e-10, "{disc:?}");
    }

    #[test]
    fn wick_compose_exponential_and_multinomials() {
        let algebra = ChaosAlgebra::new(2, 8).unwrap();
        let h = [0.5, -0.3];
        // exp^◇ of the first chaos is the normalized exponential: its
        // coefficient on H_α is h^α/α!
        let inv_fact: Vec<f64> = (0..=8).map(|n| (-ln_factorial(n)).exp()).collect();
        let e = wick_compose(&algebra, &inv_fact, &h).unwrap();
        let cases = [
            (MultiIndex::empty(), 1.0),
            (MultiIndex::single(0, 1), 0.5),
            (MultiIndex::single(1, 1), -0.3),
            (MultiIndex::from_pairs([(0, 1), (1, 1)]), -0.15),
            (MultiIndex::from_pairs([(0, 2), (1, 1)]), -0.0375),
            (MultiIndex::single(0, 4), 0.5f64.powi(4) / 24.0),
        ];
        for (alpha, want) in cases {
            assert_relative_eq!(e.coefficient(&alpha), want, max_relative = 1e-12);
        }

        // I_1(h)^{◇3} carries n!/α! · h^α on H_α
        let h3 = [0.4, -0.7];
        let cube = wick_compose(&algebra, &[0.0, 0.0, 0.0, 1.0], &h3).unwrap();
        assert_relative_eq!(
            cube.coefficient(&MultiIndex::single(0, 3)),
            0.4f64.powi(3),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            cube.coefficient(&MultiIndex::from_pairs([(0, 2), (1, 1)])),
            3.0 * 0.16 * -0.7,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            cube.coefficient(&MultiIndex::from_pairs([(0, 1), (1, 2)])),
            3.0 * 0.4 * 0.49,
            max_relative = 1e-12
        );

        // d = (t, 0, 1): the shifted Wick square
        let x = ChaosExpansion::first_chaos(2, &h).unwrap();
        let mut want = algebra.wick(&x, &x).unwrap();
        want.add_term(MultiIndex::empty(), 0.37);
        let got = wick_compose(&algebra, &[0.37, 0.0, 1.0], &h).unwrap();
        let mut diff = got;
        diff.scale(-1.0);
        diff.add_assign(&want).unwrap();
        assert!(diff.terms().all(|(_, c)| c.abs() < 1e-15));

        // degree cap surfaces from the wick kernel
        let tight = ChaosAlgebra::new(2, 2).unwrap();
        assert!(matches!(
            wick_compose(&tight, &[0.0, 0.0, 0.0, 1.0], &h),
            Err(Error::DegreeCap { .. })
        ));
    }

    #[test]
    fn composition_identity_both_paths() {
        // φ = x²: both paths give I_1(h)^{◇2} + |A^{−p}h|² exactly
        let algebra = ChaosAlgebra::new(3, 6).unwrap();
        let sq = ScalarFn::square();
        let r = proposition_check(&algebra, &sq, &[0.6, -0.2, 0.3], 0.7, 6).unwrap();
        assert!(r.max_coeff_discrepancy < 1e-12, "{r:?}");

        // bounded φ, the quoted fixture
        let algebra = ChaosAlgebra::new(2, 10).unwrap();
        let cos = ScalarFn::cos();
        let r = proposition_check(&algebra, &cos, &[0.7, 0.3], 1.5, 10).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.max_coeff_discrepancy < 1e-8);
        assert_relative_eq!(
            r.smoothed_variance,
            0.49 / 1.5f64.powi(3) + 0.09 / 2.5f64.powi(3),
            max_relative = 1e-12
        );

        // p = 0 is the plain composition identity
        let r = proposition_check(&algebra, &cos, &[0.5, 0.1], 0.0, 10).unwrap();
        assert!(r.max_coeff_discrepancy < 1e-10, "{r:?}");

        // a map whose expansion cannot close the Parseval identity at this
        // degree is rejected rather than silently truncated
        let tanh = ScalarFn::tanh();
        assert!(matches!(
            proposition_check(&algebra, &tanh, &[0.5, 0.1], 0.0, 10),
            Err(Error::Config(_))
        ));

        assert!(proposition_check(&algebra, &cos, &[0.0, 0.0], 1.0, 6).is_err());
    }

    #[test]
    fn curvature_bound_fixtures() {
        let algebra = ChaosAlgebra::new(1, 12).unwrap();
        let sin = ScalarFn::sin();
        let r = error_bound_check(&algebra, &sin, &[1.0], 1.0, 12, 1.0).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(!r.vacuous);
        assert!(r.lhs_norm > 0.1, "bound exercised trivially: {r:?}");
        assert_relative_eq!(r.smoothed_variance, 1.5f64.powi(-2), max_relative = 1e-12);
        assert_relative_eq!(
            r.c_tightest,
            (r.full_variance / (r.full_variance - r.smoothed_variance)).sqrt(),
            max_relative = 1e-12
        );

        // linear φ: no curvature, no error, at any exponent
        let id = ScalarFn::identity();
        for p in [0.5, 1.0, 2.0] {
            let r = error_bound_check(&algebra, &id, &[1.0], p, 12, 0.0).unwrap();
            assert!(r.lhs_norm <= 1e-12, "{r:?}");
            assert!(r.pass);
        }

        // φ = x²: the error is exactly the variance gap (a pure constant)
        let sq = ScalarFn::square();
        let r = error_bound_check(&algebra, &sq, &[1.0], 1.0, 6, 2.0).unwrap();
        let gap = r.full_variance - r.smoothed_variance;
        assert_relative_eq!(r.lhs_norm, gap, max_relative = 1e-10);
        assert!(r.pass);

        // p = 0 is vacuous
        let r = error_bound_check(&algebra, &sin, &[1.0], 0.0, 12, 1.0).unwrap();
        assert!(r.vacuous && r.pass && r.lhs_norm <= 1e-12);

        // the deviation grows with the smoothing exponent on this family
        let mut last = -1.0;
        for p in [0.0, 0.5, 1.0, 2.0] {
            let r = error_bound_check(&algebra, &sin, &[1.0], p, 12, 1.0).unwrap();
            assert!(
                r.lhs_norm >= last - 1e-12,
                "lhs not monotone at p = {p}: {} < {last}",
                r.lhs_norm
            );
            assert!(r.pass);
            last = r.lhs_norm;
        }

        // a lying curvature declaration is rejected
        assert!(matches!(
            error_bound_check(&algebra, &sq, &[1.0], 1.0, 6, 1.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            error_bound_check(&algebra, &sin, &[1.0], 1.0, 12, f64::NAN),
            Err(Error::MissingGrowthBound)
        ));
    }
}

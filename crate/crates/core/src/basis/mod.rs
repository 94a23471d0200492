//! Spectral Laguerre basis on L²(0, ∞).
//!
//! ξ_k(t) = e^{-t/2} L_k(t) are the eigenfunctions of the Sturm–Liouville
//! operator A = -(d/dt) t (d/dt) + t/4 + 1 with eigenvalues λ_k = k + 3/2.
//! Everything downstream (chaos scalings, smoothed noise, Gram integrals)
//! is expressed through this basis.

mod gram;
mod laguerre;
mod ortho;
mod tail;

pub use gram::{gram, GramCache, GramTable, GridSpec, GRAM_MAGIC, REFINE_TOL};
pub use laguerre::{laguerre_eval, xi_row, xi_row_with_deriv};
pub use ortho::{
    ln_product_tail_bound, orthonormality_horizon, orthonormality_residual, sup_xi_grid,
    OrthoReport,
};
pub use tail::{spectral_tail, SpectralTail};

use crate::error::{Error, Result};

pub const MAX_K: usize = 4096;
pub const MAX_P: f64 = 64.0;

/// λ_k = k + 3/2.
#[inline]
pub fn lambda(k: usize) -> f64 {
    k as f64 + 1.5
}

/// λ_k^p in log space; safe for |p| ≤ 64, k < 4096.
#[inline]
pub fn lambda_pow(k: usize, p: f64) -> f64 {
    (p * lambda(k).ln()).exp()
}

/// Regularity exponents are capped at |p| ≤ MAX_P to keep λ^p finite.
pub fn check_p(p: f64) -> Result<()> {
    if !p.is_finite() || p.abs() > MAX_P {
        return Err(Error::Config(format!("|p| must be <= {MAX_P}, got {p}")));
    }
    Ok(())
}

/// Truncated basis of K coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectralBasis {
    pub k: usize,
}

impl SpectralBasis {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k > MAX_K {
            return Err(Error::Config(format!(
                "basis size must be in 1..={MAX_K}, got {k}"
            )));
        }
        Ok(SpectralBasis { k })
    }

    pub fn check_p(&self, p: f64) -> Result<()> {
        check_p(p)
    }

    /// Coordinates of the smoothed Dirac mass A^{-p} δ_t: (λ_k^{-p} ξ_k(t))_k.
    pub fn delta_coords(&self, t: f64, p: f64) -> Result<Vec<f64>> {
        self.check_p(p)?;
        let mut out = vec![0.0; self.k];
        xi_row(t, &mut out)?;
        for (k, v) in out.iter_mut().enumerate() {
            *v *= lambda_pow(k, -p);
        }
        Ok(out)
    }

    /// |A^{-p} δ_t|² with explicit truncation/tail split.
    pub fn delta_norm_sq(&self, t: f64, p: f64) -> Result<DeltaNorm> {
        self.check_p(p)?;
        let mut row = vec![0.0; self.k];
        xi_row(t, &mut row)?;
        let truncated = row
            .iter()
            .enumerate()
            .map(|(k, &x)| x * x * lambda_pow(k, -2.0 * p))
            .sum();
        let tail = spectral_tail(self.k, p);
        Ok(DeltaNorm {
            truncated,
            tail: tail.estimate,
            tail_upper: tail.upper,
            slow_tail: tail.divergent,
        })
    }

    /// Smoothed covariance kernel K_p(r, s) = Σ_k λ_k^{-2p} ξ_k(r) ξ_k(s).
    pub fn kernel(&self, r: f64, s: f64, p: f64) -> Result<f64> {
        self.check_p(p)?;
        let mut a = vec![0.0; self.k];
        let mut b = vec![0.0; self.k];
        xi_row(r, &mut a)?;
        xi_row(s, &mut b)?;
        Ok(a.iter()
            .zip(&b)
            .enumerate()
            .map(|(k, (&x, &y))| x * y * lambda_pow(k, -2.0 * p))
            .sum())
    }

    /// sup_t |A^{-p} δ_t|² over a dense grid plus the endpoint t = 0, where
    /// the supremum is attained (ξ_k(0) = 1, |ξ_k| ≤ 1 elsewhere).
    pub fn sup_delta_norm(&self, p: f64, t_max: f64, points: usize) -> Result<SupDelta> {
        self.check_p(p)?;
        if points < 2 || !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::Config(format!(
                "sup search needs t_max > 0 and at least two points, got {t_max}, {points}"
            )));
        }
        let mut best_t = 0.0;
        let mut best = f64::NEG_INFINITY;
        for i in 0..points {
            let t = t_max * i as f64 / (points - 1) as f64;
            let v = self.delta_norm_sq(t, p)?.truncated;
            if v > best {
                best = v;
                best_t = t;
            }
        }
        let tail = spectral_tail(self.k, p);
        Ok(SupDelta {
            sup_truncated: best,
            argmax: best_t,
            tail: tail.estimate,
            tail_upper: tail.upper,
            slow_tail: tail.divergent,
        })
    }
}

/// Split evaluation of |A^{-p} δ_t|².
#[derive(Debug, Clone, Copy)]
pub struct DeltaNorm {
    /// Σ_{k<K} λ_k^{-2p} ξ_k(t)².
    pub truncated: f64,
    /// Euler–Maclaurin tail Σ_{k≥K} λ_k^{-2p}; exact contribution at t = 0,
    /// an over-count elsewhere (ξ_k(t)² ≤ 1).
    pub tail: f64,
    /// Strict integral-comparison upper bound for the same tail.
    pub tail_upper: f64,
    /// Set when 2p ≤ 1 and the untruncated sum diverges.
    pub slow_tail: bool,
}

impl DeltaNorm {
    pub fn with_tail(&self) -> f64 {
        self.truncated + self.tail
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SupDelta {
    pub sup_truncated: f64,
    pub argmax: f64,
    pub tail: f64,
    pub tail_upper: f64,
    pub slow_tail: bool,
}

impl SupDelta {
    pub fn with_tail(&self) -> f64 {
        self.sup_truncated + self.tail
    }

    /// Moment blow-up horizon T = 1/(4 sup_t |A^{-p}δ_t|²), tail included.
    pub fn life_time(&self) -> f64 {
        1.0 / (4.0 * self.with_tail())
    }

    /// Same threshold from the truncated sum only.
    pub fn life_time_truncated(&self) -> f64 {
        1.0 / (4.0 * self.sup_truncated)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn delta_norm_at_zero_matches_polygamma() {
        // Σ (k+3/2)^{-2} = ψ'(3/2) = π²/2 − 4
        let basis = SpectralBasis::new(64).unwrap();
        let d = basis.delta_norm_sq(0.0, 1.0).unwrap();
        let psi1 = std::f64::consts::PI.powi(2) / 2.0 - 4.0;
        assert_abs_diff_eq!(d.with_tail(), psi1, epsilon = 1e-10);
        assert!(!d.slow_tail);
        assert!(d.tail_upper >= d.tail);
    }

    #[test]
    fn kernel_diagonal_equals_delta_norm() {
        let basis = SpectralBasis::new(32).unwrap();
        for &t in &[0.0, 0.4, 2.0] {
            let k = basis.kernel(t, t, 1.5).unwrap();
            let d = basis.delta_norm_sq(t, 1.5).unwrap();
            assert_abs_diff_eq!(k, d.truncated, epsilon = 1e-14);
        }
    }

    #[test]
    fn kernel_is_symmetric() {
        let basis = SpectralBasis::new(24).unwrap();
        assert_abs_diff_eq!(
            basis.kernel(0.3, 1.1, 2.0).unwrap(),
            basis.kernel(1.1, 0.3, 2.0).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn sup_is_attained_at_zero() {
        let basis = SpectralBasis::new(48).unwrap();
        let sup = basis.sup_delta_norm(1.0, 50.0, 2001).unwrap();
        assert_eq!(sup.argmax, 0.0);
        let at_zero: f64 = (0..48).map(|k| lambda_pow(k, -2.0)).sum();
        assert_abs_diff_eq!(sup.sup_truncated, at_zero, epsilon = 1e-13);
    }

    #[test]
    fn life_time_reproduces_frozen_constant() {
        // 1/(4 ψ'(3/2)) at p = 1; oracle value from 50-digit arithmetic.
        let basis = SpectralBasis::new(64).unwrap();
        let sup = basis.sup_delta_norm(1.0, 50.0, 10_001).unwrap();
        assert_abs_diff_eq!(sup.life_time(), 0.26743625534293031, epsilon = 1e-9);
    }

    #[test]
    fn slow_tail_flagged_for_small_p() {
        let basis = SpectralBasis::new(16).unwrap();
        let d = basis.delta_norm_sq(0.5, 0.4).unwrap();
        assert!(d.slow_tail);
        assert!(d.tail.is_infinite());
        assert!(d.truncated.is_finite());
    }

    #[test]
    fn p2_sup_matches_fourth_order_polygamma() {
        let basis = SpectralBasis::new(64).unwrap();
        let sup = basis.sup_delta_norm(2.0, 50.0, 501).unwrap();
        assert_abs_diff_eq!(sup.with_tail(), 0.23484850566707288, epsilon = 1e-12);
    }

    #[test]
    fn rejects_oversized_configuration() {
        assert!(SpectralBasis::new(0).is_err());
        assert!(SpectralBasis::new(5000).is_err());
        let b = SpectralBasis::new(8).unwrap();
        assert!(b.delta_norm_sq(0.1, 100.0).is_err());
    }
}

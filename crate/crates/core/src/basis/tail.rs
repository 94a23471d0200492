//! Analytic tails of the spectral sums Σ_k (k + 3/2)^{-2p}.
//!
//! The Euler–Maclaurin estimate (through the fifth derivative term) is sharp
//! to ~1e-17 at K = 64, p = 1; the strict bound f(K) + ∫_K^∞ f is kept
//! alongside for rigorous over-estimates.

/// Tail of Σ_{k ≥ k0} λ_k^{-2p}, λ_k = k + 3/2.
#[derive(Debug, Clone, Copy)]
pub struct SpectralTail {
    /// Euler–Maclaurin estimate (near-exact for the configured ranges).
    pub estimate: f64,
    /// Strict upper bound via integral comparison.
    pub upper: f64,
    /// True when 2p ≤ 1 so the tail diverges.
    pub divergent: bool,
}

pub fn spectral_tail(k0: usize, p: f64) -> SpectralTail {
    let s = 2.0 * p;
    if s <= 1.0 {
        return SpectralTail {
            estimate: f64::INFINITY,
            upper: f64::INFINITY,
            divergent: true,
        };
    }
    let y = k0 as f64 + 1.5;
    let f = y.powf(-s);
    let integral = y.powf(1.0 - s) / (s - 1.0);
    let d1 = s * y.powf(-s - 1.0);
    let d3 = s * (s + 1.0) * (s + 2.0) * y.powf(-s - 3.0);
    let d5 = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * y.powf(-s - 5.0);
    SpectralTail {
        estimate: integral + 0.5 * f + d1 / 12.0 - d3 / 720.0 + d5 / 30240.0,
        upper: f + integral,
        divergent: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p1_tail_reproduces_polygamma_constant() {
        // Σ_{k≥0} (k+3/2)^{-2} = ψ'(3/2) = π²/2 − 4.
        let psi1 = std::f64::consts::PI.powi(2) / 2.0 - 4.0;
        let k0 = 64usize;
        let partial: f64 = (0..k0).map(|k| (k as f64 + 1.5).powi(-2)).sum();
        let tail = spectral_tail(k0, 1.0);
        assert!(
            (partial + tail.estimate - psi1).abs() < 1e-12,
            "estimate off by {:e}",
            (partial + tail.estimate - psi1).abs()
        );
        assert!(partial + tail.upper >= psi1);
        assert!(!tail.divergent);
    }

    #[test]
    fn p2_tail_reproduces_fourth_order_sum() {
        // Σ (k+3/2)^{-4} = ψ'''(3/2)/6 = (π⁴ − 96)/6; oracle frozen at 50 digits.
        let expect = 0.23484850566707288;
        let partial: f64 = (0..64).map(|k| (k as f64 + 1.5).powi(-4)).sum();
        let tail = spectral_tail(64, 2.0);
        assert!((partial + tail.estimate - expect).abs() < 1e-13);
    }

    #[test]
    fn upper_bound_dominates_brute_partial_tails() {
        for &p in &[0.75, 1.0, 1.5, 3.0] {
            let t = spectral_tail(32, p);
            let brute: f64 = (32..400_000).map(|k| (k as f64 + 1.5).powf(-2.0 * p)).sum();
            assert!(t.upper >= brute);
            assert!(t.estimate >= brute); // remaining tail of brute is positive
        }
    }

    #[test]
    fn divergent_below_half() {
        assert!(spectral_tail(10, 0.5).divergent);
        assert!(spectral_tail(10, 0.25).divergent);
        assert!(!spectral_tail(10, 0.500001).divergent);
    }
}

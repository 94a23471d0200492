//! Damped Laguerre functions ξ_k(t) = e^{-t/2} L_k(t).
//!
//! The recurrence is run directly on the damped values so no intermediate
//! L_k(t) (which grows like t^k/k!) is ever formed; |ξ_k| ≤ 1 on [0, ∞).

use crate::error::{Error, Result};

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!(
            "Laguerre functions are defined on t >= 0, got t = {t}"
        )));
    }
    Ok(())
}

/// ξ_k(t) for a single k. Prefer [`xi_row`] when several orders are needed.
pub fn laguerre_eval(k: usize, t: f64) -> Result<f64> {
    check_time(t)?;
    let e = (-0.5 * t).exp();
    if k == 0 {
        return Ok(e);
    }
    let mut prev = e;
    let mut cur = (1.0 - t) * e;
    for m in 1..k {
        let mf = m as f64;
        let next = ((2.0 * mf + 1.0 - t) * cur - mf * prev) / (mf + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Fill `out[k] = ξ_k(t)` for k < out.len() in one recurrence sweep.
pub fn xi_row(t: f64, out: &mut [f64]) -> Result<()> {
    check_time(t)?;
    if out.is_empty() {
        return Ok(());
    }
    let e = (-0.5 * t).exp();
    out[0] = e;
    if out.len() > 1 {
        out[1] = (1.0 - t) * e;
    }
    for m in 1..out.len().saturating_sub(1) {
        let mf = m as f64;
        out[m + 1] = ((2.0 * mf + 1.0 - t) * out[m] - mf * out[m - 1]) / (mf + 1.0);
    }
    Ok(())
}

/// Fill ξ_k(t) and ξ_k'(t). Uses L_k'(t) = L_{k-1}'(t) - L_{k-1}(t), kept in
/// damped form η_k = e^{-t/2} L_k', so ξ_k' = η_k - ξ_k/2.
pub fn xi_row_with_deriv(t: f64, xi: &mut [f64], dxi: &mut [f64]) -> Result<()> {
    assert_eq!(xi.len(), dxi.len());
    xi_row(t, xi)?;
    let mut eta = 0.0; // η_0 = 0
    for k in 0..xi.len() {
        if k > 0 {
            eta -= xi[k - 1];
        }
        dxi[k] = eta - 0.5 * xi[k];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_orders_match_closed_forms() {
        for &t in &[0.0, 0.3, 1.0, 2.0, 7.5] {
            let e = (-0.5_f64 * t).exp();
            assert_abs_diff_eq!(laguerre_eval(0, t).unwrap(), e, epsilon = 1e-15);
            assert_abs_diff_eq!(laguerre_eval(1, t).unwrap(), (1.0 - t) * e, epsilon = 1e-15);
            assert_abs_diff_eq!(
                laguerre_eval(2, t).unwrap(),
                (1.0 - 2.0 * t + 0.5 * t * t) * e,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn frozen_value_order_three() {
        // L_3(2) = (-8 + 36 - 36 + 6)/6 = -1/3 exactly, so ξ_3(2) = -e^{-1}/3.
        let expected = -(-1.0_f64).exp() / 3.0;
        assert_abs_diff_eq!(laguerre_eval(3, 2.0).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, -0.122626480390480774, epsilon = 1e-15);
    }

    #[test]
    fn value_at_zero_is_one() {
        for k in [0, 1, 5, 17, 63, 200] {
            assert_abs_diff_eq!(laguerre_eval(k, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn row_agrees_with_scalar_eval() {
        let mut row = vec![0.0; 70];
        xi_row(3.7, &mut row).unwrap();
        for (k, &v) in row.iter().enumerate() {
            assert_abs_diff_eq!(v, laguerre_eval(k, 3.7).unwrap(), epsilon = 1e-14);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        let mut xi = vec![0.0; 40];
        let mut dxi = vec![0.0; 40];
        for &t in &[0.2, 1.0, 4.0, 9.3] {
            xi_row_with_deriv(t, &mut xi, &mut dxi).unwrap();
            let mut lo = vec![0.0; 40];
            let mut hi = vec![0.0; 40];
            xi_row(t - h, &mut lo).unwrap();
            xi_row(t + h, &mut hi).unwrap();
            for k in 0..40 {
                let fd = (hi[k] - lo[k]) / (2.0 * h);
                assert_abs_diff_eq!(dxi[k], fd, epsilon = 5e-7 * (1.0 + dxi[k].abs()));
            }
        }
    }

    #[test]
    fn rejects_negative_and_non_finite_time() {
        assert!(laguerre_eval(3, -0.1).is_err());
        assert!(laguerre_eval(3, f64::NAN).is_err());
        assert!(laguerre_eval(3, f64::INFINITY).is_err());
    }
}

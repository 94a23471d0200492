//! Closed-form Gaussian expectations of quadratic exponentials:
//! for z ~ N(0, I_n) and symmetric M with λ_max(2M) < 1,
//!   E[exp(z'Mz + b'z)] = det(I − 2M)^{−1/2} exp(½ b'(I − 2M)^{−1} b),
//! extended to complex shifts b = u + iv.

use crate::error::{Error, Result};
use nalgebra::{Cholesky, Complex, DMatrix, DVector, Dyn};

/// Largest eigenvalue of the symmetrization ½(M + Mᵀ).
pub fn lambda_max_sym(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}

/// Factorization of I − 2M for a fixed symmetric M; reusable across shifts.
pub struct GaussianQuadratic {
    chol: Cholesky<f64, Dyn>,
    ln_det_half: f64,
}

impl GaussianQuadratic {
    /// Errors when I − 2M is not positive definite, i.e. the exponential is
    /// not integrable; the message carries λ_max(2M).
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Domain(format!(
                "quadratic form matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let sym = (m + m.transpose()) * 0.5;
        let a = DMatrix::identity(n, n) - &sym * 2.0;
        match Cholesky::new(a) {
            Some(chol) => {
                let ln_det_half: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum();
                Ok(GaussianQuadratic { chol, ln_det_half })
            }
            None => {
                let lam = lambda_max_sym(&(sym * 2.0));
                Err(Error::Domain(format!(
                    "exp(z'Mz) is not integrable: lambda_max(2M) = {lam:.6} >= 1"
                )))
            }
        }
    }

    /// ln E[exp(z'Mz)] = −½ ln det(I − 2M).
    pub fn ln_mean(&self) -> f64 {
        -self.ln_det_half
    }

    /// ln E[exp(z'Mz + b'z)].
    pub fn ln_mean_with_shift(&self, b: &DVector<f64>) -> f64 {
        let x = self.chol.solve(b);
        self.ln_mean() + 0.5 * b.dot(&x)
    }

    pub fn mean_with_shift(&self, b: &DVector<f64>) -> f64 {
        self.ln_mean_with_shift(b).exp()
    }

    /// E[exp(z'Mz + (u + iv)'z)] as a complex number:
    /// ½(u+iv)'C(u+iv) = ½(u'Cu − v'Cv) + i u'Cv with C = (I−2M)^{−1}.
    pub fn mean_with_complex_shift(&self, u: &DVector<f64>, v: &DVector<f64>) -> Complex<f64> {
        let cu = self.chol.solve(u);
        let cv = self.chol.solve(v);
        let re = self.ln_mean() + 0.5 * (u.dot(&cu) - v.dot(&cv));
        let im = u.dot(&cv);
        Complex::from_polar(re.exp(), im)
    }
}

//! Algebra on chaos expansions: second quantization Γ(A^p), Wick product,
//! ordinary (pointwise) product via Hermite linearization, the interpolated
//! product X ∗_p Y = Γ(A^p)(Γ(A^{-p})X · Γ(A^{-p})Y), and renormalized
//! composition φ̃(X) = Γ(A^p) φ(Γ(A^{-p})X).

use super::{ChaosExpansion, MultiIndex, PRUNE_EPS};
use crate::error::{Error, Result};
use crate::scalar::{hermite_projection, ScalarFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Default cap on total Hermite degree for products.
pub const DEFAULT_MAX_DEGREE: usize = 12;

/// Exponent threshold beyond which Γ(A^p) coefficients overflow f64.
const LN_OVERFLOW: f64 = 700.0;

/// Context for degree-capped operations over K coordinates.
#[derive(Debug, Clone, Copy)]
pub struct ChaosAlgebra {
    k: usize,
    max_degree: usize,
}

impl ChaosAlgebra {
    pub fn new(k: usize, max_degree: usize) -> Result<Self> {
        if k == 0 || k > crate::basis::MAX_K {
            return Err(Error::Config(format!(
                "coordinate count {k} out of range 1..={}",
                crate::basis::MAX_K
            )));
        }
        if max_degree == 0 || max_degree > 64 {
            return Err(Error::Config(format!(
                "degree cap {max_degree} out of range 1..=64"
            )));
        }
        Ok(ChaosAlgebra { k, max_degree })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    fn check_operand(&self, x: &ChaosExpansion) -> Result<()> {
        if x.k() != self.k {
            return Err(Error::MixedK(self.k, x.k()));
        }
        Ok(())
    }

    /// Γ(A^p): scales c_α by Π_k λ_k^{p α_k}. Errors when a scaled
    /// coefficient would overflow f64; underflow is allowed to flush to zero.
    pub fn gamma(&self, x: &ChaosExpansion, p: f64) -> Result<ChaosExpansion> {
        self.check_operand(x)?;
        crate::basis::check_p(p)?;
        let mut out = ChaosExpansion::zero(self.k);
        for (alpha, c) in x.terms() {
            if c == 0.0 {
                continue;
            }
            let exponent = c.abs().ln() + p * alpha.ln_lambda_weight();
            if exponent > LN_OVERFLOW {
                return Err(Error::GammaOverflow { exponent });
            }
            out.add_term(alpha.clone(), c.signum() * exponent.exp());
        }
        out.prune(0.0);
        Ok(out)
    }

    /// Wick product X ◇ Y: index-wise convolution H_α ◇ H_β = H_{α+β}.
    pub fn wick(&self, x: &ChaosExpansion, y: &ChaosExpansion) -> Result<ChaosExpansion> {
        self.check_operand(x)?;
        self.check_operand(y)?;
        let mut out = ChaosExpansion::zero(self.k);
        for (alpha, ca) in x.terms() {
            for (beta, cb) in y.terms() {
                let degree = alpha.degree() + beta.degree();
                if degree > self.max_degree {
                    return Err(Error::DegreeCap {
                        degree,
                        cap: self.max_degree,
                        lhs: alpha.clone(),
                        rhs: beta.clone(),
                    });
                }
                out.add_term(alpha.add(beta), ca * cb);
            }
        }
        out.prune(PRUNE_EPS);
        Ok(out)
    }

    /// n-fold Wick power X^{◇n} (X^{◇0} = 1).
    pub fn wick_power(&self, x: &ChaosExpansion, n: usize) -> Result<ChaosExpansion> {
        let mut out = ChaosExpansion::constant(self.k, 1.0);
        for _ in 0..n {
            out = self.wick(&out, x)?;
        }
        Ok(out)
    }

    /// Ordinary (pointwise) product, linearized coordinate-wise through
    /// He_a·He_b = Σ_r C(a,r) C(b,r) r! He_{a+b−2r}.
    pub fn multiply(&self, x: &ChaosExpansion, y: &ChaosExpansion) -> Result<ChaosExpansion> {
        let mut out = self.multiply_unpruned(x, y)?;
        out.prune(PRUNE_EPS);
        Ok(out)
    }

    fn multiply_unpruned(&self, x: &ChaosExpansion, y: &ChaosExpansion) -> Result<ChaosExpansion> {
        self.check_operand(x)?;
        self.check_operand(y)?;
        let mut out = ChaosExpansion::zero(self.k);
        for (alpha, ca) in x.terms() {
            for (beta, cb) in y.terms() {
                let degree = alpha.degree() + beta.degree();
                if degree > self.max_degree {
                    return Err(Error::DegreeCap {
                        degree,
                        cap: self.max_degree,
                        lhs: alpha.clone(),
                        rhs: beta.clone(),
                    });
                }
                linearize_pair(alpha, beta, ca * cb, &mut out);
            }
        }
        Ok(out)
    }

    /// Interpolated product X ∗_p Y; ∗_0 is the ordinary product and p → ∞
    /// approaches the Wick product. The intermediate product is kept
    /// unpruned: its coefficients are scaled down by λ^{−p(|α|+|β|)} and an
    /// absolute cutoff there would erase terms the closing rescale restores
    /// to full size.
    pub fn star(&self, x: &ChaosExpansion, y: &ChaosExpansion, p: f64) -> Result<ChaosExpansion> {
        let xd = self.gamma(x, -p)?;
        let yd = self.gamma(y, -p)?;
        let prod = self.multiply_unpruned(&xd, &yd)?;
        let mut out = self.gamma(&prod, p)?;
        out.prune(PRUNE_EPS);
        Ok(out)
    }

    /// Renormalized composition φ̃(X) = Γ(A^p) φ(Γ(A^{-p})X), projected onto
    /// Hermite degree ≤ proj_degree. The exact path applies when Γ(A^{-p})X
    /// lives in the first chaos (degree ≤ 1); otherwise the coefficients are
    /// estimated by Monte Carlo projection and per-coefficient standard
    /// errors are reported.
    pub fn phi_tilde(
        &self,
        phi: &ScalarFn,
        x: &ChaosExpansion,
        p: f64,
        proj: &Projection,
    ) -> Result<PhiTildeOutput> {
        self.check_operand(x)?;
        if proj.degree > self.max_degree {
            return Err(Error::Config(format!(
                "projection degree {} exceeds algebra cap {}",
                proj.degree, self.max_degree
            )));
        }
        let y = self.gamma(x, -p)?;
        if y.max_degree() <= 1 {
            return self.phi_tilde_exact(phi, &y, p, proj.degree);
        }
        match proj.sampling {
            Some(ref mc) => self.phi_tilde_mc(phi, &y, p, proj.degree, mc),
            None => Err(Error::Domain(format!(
                "composition input has degree {} > 1; exact projection needs a \
                 first-chaos argument and no sampling plan was provided",
                y.max_degree()
            ))),
        }
    }

    /// Exact path: Y = c + I_1(a), φ(c + σG) = Σ e_n He_n(G) with σ = |a|,
    /// and He_n(I_1(u)) = I_1(u)^{◇n} for unit u, so
    /// φ̃(X) = Σ_n e_n (Γ(A^p)I_1(u))^{◇n}.
    fn phi_tilde_exact(
        &self,
        phi: &ScalarFn,
        y: &ChaosExpansion,
        p: f64,
        degree: usize,
    ) -> Result<PhiTildeOutput> {
        let c = y.expectation();
        let mut a = vec![0.0; self.k];
        for (alpha, coef) in y.terms() {
            if alpha.degree() == 1 {
                let (coord, _) = alpha.iter().next().expect("degree-1 index");
                a[coord] = coef;
            }
        }
        let sigma = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let e = hermite_projection(phi, c, sigma, degree)?;
        let mut out = ChaosExpansion::constant(self.k, e[0]);
        if sigma > 0.0 {
            let u: Vec<f64> = a.iter().map(|v| v / sigma).collect();
            let unit = ChaosExpansion::first_chaos(self.k, &u)?;
            let direction = self.gamma(&unit, p)?;
            let mut power = ChaosExpansion::constant(self.k, 1.0);
            for coef in e.iter().skip(1) {
                power = self.wick(&power, &direction)?;
                let mut term = power.clone();
                term.scale(*coef);
                out.add_assign(&term)?;
            }
        }
        out.prune(PRUNE_EPS);
        Ok(PhiTildeOutput {
            expansion: out,
            max_coeff_stderr: None,
            samples: 0,
        })
    }

    /// Monte Carlo path: sample z ~ N(0, I_K), project φ(Y(z)) onto H_α for
    /// every α supported on the active coordinates of Y with |α| ≤ degree,
    /// using ĉ_α = mean[φ(Y(z)) H_α(z)] / α!, then apply Γ(A^p).
    fn phi_tilde_mc(
        &self,
        phi: &ScalarFn,
        y: &ChaosExpansion,
        p: f64,
        degree: usize,
        mc: &SamplingPlan,
    ) -> Result<PhiTildeOutput> {
        if !phi.bounded && phi.growth_degree.is_none() {
            return Err(Error::MissingGrowthBound);
        }
        let mut active: Vec<usize> = Vec::new();
        for (alpha, _) in y.terms() {
            for (coord, _) in alpha.iter() {
                if !active.contains(&coord) {
                    active.push(coord);
                }
            }
        }
        active.sort_unstable();
        let indices = enumerate_indices(&active, degree);
        if indices.len() > 100_000 {
            return Err(Error::Config(format!(
                "projection basis has {} indices; reduce degree or support",
                indices.len()
            )));
        }
        let n = mc.samples.max(2);
        let mut rng = ChaCha12Rng::seed_from_u64(mc.seed);
        let max_coord = active.last().copied().unwrap_or(0);
        let mut z = vec![0.0f64; max_coord + 1];
        let mut he = vec![vec![0.0f64; degree + 1]; active.len()];
        let mut sum = vec![0.0f64; indices.len()];
        let mut sum_sq = vec![0.0f64; indices.len()];
        let mut h_buf = vec![0.0f64; indices.len()];
        for _ in 0..n {
            for zv in z.iter_mut() {
                *zv = rng.sample(StandardNormal);
            }
            let w = phi.eval(y.eval_at(&z));
            for (slot, &coord) in active.iter().enumerate() {
                super::hermite_values(z[coord], &mut he[slot]);
            }
            for (i, alpha) in indices.iter().enumerate() {
                let mut h = 1.0;
                for (coord, d) in alpha.iter() {
                    let slot = active.binary_search(&coord).expect("active coord");
                    h *= he[slot][d as usize];
                }
                h_buf[i] = w * h;
            }
            for i in 0..indices.len() {
                sum[i] += h_buf[i];
                sum_sq[i] += h_buf[i] * h_buf[i];
            }
        }
        let mut projected = ChaosExpansion::zero(self.k);
        let mut max_stderr = 0.0f64;
        let nf = n as f64;
        for (i, alpha) in indices.iter().enumerate() {
            let mean = sum[i] / nf;
            let var = (sum_sq[i] / nf - mean * mean).max(0.0) / (nf - 1.0);
            let fac = alpha.factorial();
            projected.add_term(alpha.clone(), mean / fac);
            max_stderr = max_stderr.max(var.sqrt() / fac);
        }
        let expansion = self.gamma(&projected, p)?;
        Ok(PhiTildeOutput {
            expansion,
            max_coeff_stderr: Some(max_stderr),
            samples: n,
        })
    }
}

/// Projection request for `phi_tilde`: target degree plus an optional Monte
/// Carlo plan for arguments outside the first chaos.
#[derive(Debug, Clone)]
pub struct Projection {
    pub degree: usize,
    pub sampling: Option<SamplingPlan>,
}

impl Projection {
    pub fn exact(degree: usize) -> Self {
        Projection {
            degree,
            sampling: None,
        }
    }

    pub fn sampled(degree: usize, samples: usize, seed: u64) -> Self {
        Projection {
            degree,
            sampling: Some(SamplingPlan { samples, seed }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SamplingPlan {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct PhiTildeOutput {
    pub expansion: ChaosExpansion,
    /// Largest per-coefficient standard error (Monte Carlo path only).
    pub max_coeff_stderr: Option<f64>,
    pub samples: usize,
}

/// Accumulate the Hermite linearization of c·H_α·H_β into `out`.
fn linearize_pair(alpha: &MultiIndex, beta: &MultiIndex, c: f64, out: &mut ChaosExpansion) {
    // coordinates appearing in either index, with their two degrees
    let mut coords: Vec<(usize, u32, u32)> = Vec::new();
    for (coord, d) in alpha.iter() {
        coords.push((coord, d, beta.get(coord)));
    }
    for (coord, d) in beta.iter() {
        if alpha.get(coord) == 0 {
            coords.push((coord, 0, d));
        }
    }
    coords.sort_unstable_by_key(|&(coord, _, _)| coord);
    let mut stack: Vec<(usize, u32)> = Vec::with_capacity(coords.len());
    expand_coords(&coords, 0, c, &mut stack, out);
}

fn expand_coords(
    coords: &[(usize, u32, u32)],
    depth: usize,
    weight: f64,
    stack: &mut Vec<(usize, u32)>,
    out: &mut ChaosExpansion,
) {
    if depth == coords.len() {
        out.add_term(MultiIndex::from_pairs(stack.iter().copied()), weight);
        return;
    }
    let (coord, a, b) = coords[depth];
    for r in 0..=a.min(b) {
        let w = weight * binomial(a, r) * binomial(b, r) * factorial(r);
        let d = a + b - 2 * r;
        if d > 0 {
            stack.push((coord, d));
        }
        expand_coords(coords, depth + 1, w, stack, out);
        if d > 0 {
            stack.pop();
        }
    }
}

fn binomial(n: u32, r: u32) -> f64 {
    let r = r.min(n - r);
    let mut acc = 1.0;
    for i in 0..r {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|x| x as f64).product()
}

/// All multi-indices supported on `coords` with total degree ≤ d_max,
/// including the empty index.
fn enumerate_indices(coords: &[usize], d_max: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut stack: Vec<(usize, u32)> = Vec::new();
    fn rec(
        coords: &[usize],
        pos: usize,
        remaining: usize,
        stack: &mut Vec<(usize, u32)>,
        out: &mut Vec<MultiIndex>,
    ) {
        if pos == coords.len() {
            out.push(MultiIndex::from_pairs(stack.iter().copied()));
            return;
        }
        for d in 0..=remaining {
            if d > 0 {
                stack.push((coords[pos], d as u32));
            }
            rec(coords, pos + 1, remaining - d, stack, out);
            if d > 0 {
                stack.pop();
            }
        }
    }
    rec(coords, 0, d_max, &mut stack, &mut out);
    out.sort_unstable();
    out
}

//! Finite chaos expansions X = Σ_α c_α H_α over K Gaussian coordinates,
//! H_α = Π_k He_{α_k}(Z_k) with unnormalized probabilists' Hermite polynomials.

use super::MultiIndex;
use crate::basis::lambda;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Coefficients below this magnitude are dropped after algebra operations.
pub const PRUNE_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosExpansion {
    k: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl ChaosExpansion {
    pub fn zero(k: usize) -> Self {
        ChaosExpansion {
            k,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(k: usize, c: f64) -> Self {
        let mut x = Self::zero(k);
        x.add_term(MultiIndex::empty(), c);
        x
    }

    /// The coordinate Gaussian Z_j = I_1(ξ_j).
    pub fn coordinate(k: usize, j: usize) -> Result<Self> {
        if j >= k {
            return Err(Error::IndexRange { index: j, k });
        }
        let mut x = Self::zero(k);
        x.add_term(MultiIndex::single(j, 1), 1.0);
        Ok(x)
    }

    /// First-chaos element I_1(Σ a_j ξ_j) = Σ a_j Z_j; a.len() must be ≤ K.
    pub fn first_chaos(k: usize, a: &[f64]) -> Result<Self> {
        if a.len() > k {
            return Err(Error::IndexRange {
                index: a.len() - 1,
                k,
            });
        }
        let mut x = Self::zero(k);
        for (j, &c) in a.iter().enumerate() {
            x.add_term(MultiIndex::single(j, 1), c);
        }
        Ok(x)
    }

    pub fn from_terms<I: IntoIterator<Item = (MultiIndex, f64)>>(k: usize, it: I) -> Result<Self> {
        let mut x = Self::zero(k);
        for (alpha, c) in it {
            if let Some(m) = alpha.max_coord() {
                if m >= k {
                    return Err(Error::IndexRange { index: m, k });
                }
            }
            x.add_term(alpha, c);
        }
        Ok(x)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Accumulate c into the α coefficient (exact zeros are removed).
    pub(crate) fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        use std::collections::btree_map::Entry;
        if c == 0.0 {
            return;
        }
        match self.terms.entry(alpha) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if *slot.get() == 0.0 {
                    slot.remove();
                }
            }
        }
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    /// E[X] = c_0.
    pub fn expectation(&self) -> f64 {
        self.coefficient(&MultiIndex::empty())
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(|a| a.degree()).max().unwrap_or(0)
    }

    /// Drop terms with |c_α| ≤ eps.
    pub fn prune(&mut self, eps: f64) {
        self.terms.retain(|_, c| c.abs() > eps);
    }

    pub fn scale(&mut self, s: f64) {
        if s == 0.0 {
            self.terms.clear();
            return;
        }
        for c in self.terms.values_mut() {
            *c *= s;
        }
    }

    pub fn add_assign(&mut self, other: &ChaosExpansion) -> Result<()> {
        if self.k != other.k {
            return Err(Error::MixedK(self.k, other.k));
        }
        for (alpha, c) in other.terms() {
            self.add_term(alpha.clone(), c);
        }
        Ok(())
    }

    /// ‖X‖_q² = Σ_α α! (Π_k λ_k^{2qα_k}) c_α², computed in log space so large
    /// q stays finite as long as the result fits in f64.
    pub fn norm_sq(&self, q: f64) -> f64 {
        let mut max_ln = f64::NEG_INFINITY;
        let mut lns = Vec::with_capacity(self.terms.len());
        for (alpha, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            let ln_term = alpha.ln_factorial() + 2.0 * q * alpha.ln_lambda_weight()
                + 2.0 * c.abs().ln();
            lns.push(ln_term);
            if ln_term > max_ln {
                max_ln = ln_term;
            }
        }
        if lns.is_empty() {
            return 0.0;
        }
        let sum: f64 = lns.iter().map(|&l| (l - max_ln).exp()).sum();
        max_ln.exp() * sum
    }

    pub fn norm(&self, q: f64) -> f64 {
        self.norm_sq(q).sqrt()
    }

    /// S-transform at a test direction: (SX)(f) = Σ_α c_α Π_k f_k^{α_k}.
    pub fn s_transform(&self, f: &[f64]) -> f64 {
        self.terms().map(|(a, c)| c * a.monomial(f)).sum()
    }

    /// Pointwise evaluation at a Gaussian sample z using He recurrences.
    /// `he` is scratch indexed [coord][degree], sized by the caller.
    pub fn eval_at(&self, z: &[f64]) -> f64 {
        let deg = self.max_degree();
        let mut he = vec![vec![0.0; deg + 1]; self.k.min(z.len())];
        for (j, row) in he.iter_mut().enumerate() {
            hermite_values(z[j], row);
        }
        let mut acc = 0.0;
        for (alpha, c) in self.terms() {
            let mut term = c;
            for (coord, d) in alpha.iter() {
                term *= he[coord][d as usize];
            }
            acc += term;
        }
        acc
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(JsonExpansion::from(self)).expect("expansion serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let raw: JsonExpansion = serde_json::from_value(v.clone())?;
        raw.try_into()
    }
}

/// Fill `out[d] = He_d(x)` via He_{d+1} = x He_d − d He_{d−1}.
pub fn hermite_values(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for d in 2..out.len() {
        out[d] = x * out[d - 1] - (d - 1) as f64 * out[d - 2];
    }
}

/// Λ^{2q} diagonal weight for a single coordinate (λ_k = k + 3/2).
pub fn coordinate_weight(k: usize, q: f64) -> f64 {
    lambda(k).powf(2.0 * q)
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    alpha: MultiIndex,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonExpansion {
    #[serde(rename = "K")]
    k: usize,
    terms: Vec<JsonTerm>,
}

impl From<&ChaosExpansion> for JsonExpansion {
    fn from(x: &ChaosExpansion) -> Self {
        JsonExpansion {
            k: x.k,
            terms: x
                .terms()
                .map(|(alpha, c)| JsonTerm {
                    alpha: alpha.clone(),
                    c,
                })
                .collect(),
        }
    }
}

impl TryFrom<JsonExpansion> for ChaosExpansion {
    type Error = Error;

    fn try_from(raw: JsonExpansion) -> Result<Self> {
        ChaosExpansion::from_terms(raw.k, raw.terms.into_iter().map(|t| (t.alpha, t.c)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_expectation_and_norm() {
        let x = ChaosExpansion::constant(4, 2.5);
        assert_eq!(x.expectation(), 2.5);
        assert_relative_eq!(x.norm(3.0), 2.5, max_relative = 1e-15);
    }

    #[test]
    fn coordinate_norm_weights() {
        // ‖Z_1‖_q² = λ_1^{2q} = 2.5^{2q}
        let x = ChaosExpansion::coordinate(4, 1).unwrap();
        assert_relative_eq!(x.norm_sq(0.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(x.norm_sq(1.0), 6.25, max_relative = 1e-14);
        assert_relative_eq!(x.norm_sq(-0.5), 0.4, max_relative = 1e-14);
    }

    #[test]
    fn norm_mixed_terms() {
        // X = 3 H_{2e_0} + Z_2: ‖X‖_q² = 2·λ_0^{4q}·9 + λ_2^{2q}
        let x = ChaosExpansion::from_terms(
            4,
            [
                (MultiIndex::single(0, 2), 3.0),
                (MultiIndex::single(2, 1), 1.0),
            ],
        )
        .unwrap();
        let q = 0.75;
        let expect = 2.0 * lambda(0).powf(4.0 * q) * 9.0 + lambda(2).powf(2.0 * q);
        assert_relative_eq!(x.norm_sq(q), expect, max_relative = 1e-14);
    }

    #[test]
    fn norm_survives_large_exponents() {
        let x = ChaosExpansion::from_terms(64, [(MultiIndex::single(63, 6), 1e-3)]).unwrap();
        let n = x.norm_sq(10.0);
        assert!(n.is_finite() && n > 0.0);
        let ln_expect = ln_f(720.0) + 120.0 * (64.5f64).ln() + 2.0 * (1e-3f64).ln();
        assert_relative_eq!(n.ln(), ln_expect, max_relative = 1e-12);
    }

    fn ln_f(x: f64) -> f64 {
        x.ln()
    }

    #[test]
    fn s_transform_is_monomial_sum() {
        // X = 1 + 2 Z_0 + Z_0 Z_1 → S(f) = 1 + 2 f_0 + f_0 f_1
        let x = ChaosExpansion::from_terms(
            2,
            [
                (MultiIndex::empty(), 1.0),
                (MultiIndex::single(0, 1), 2.0),
                (MultiIndex::from_pairs([(0, 1), (1, 1)]), 1.0),
            ],
        )
        .unwrap();
        assert_relative_eq!(x.s_transform(&[0.5, -2.0]), 1.0 + 1.0 - 1.0, epsilon = 1e-15);
    }

    #[test]
    fn eval_matches_hermite_recurrence() {
        // H_{2e_0 + e_1}(z) = (z_0² − 1) z_1
        let x =
            ChaosExpansion::from_terms(2, [(MultiIndex::from_pairs([(0, 2), (1, 1)]), 1.0)])
                .unwrap();
        let z = [1.3, -0.7];
        assert_relative_eq!(x.eval_at(&z), (1.3 * 1.3 - 1.0) * -0.7, epsilon = 1e-14);
    }

    #[test]
    fn json_roundtrip_canonical_order() {
        let x = ChaosExpansion::from_terms(
            3,
            [
                (MultiIndex::single(2, 1), 0.5),
                (MultiIndex::empty(), 1.0),
                (MultiIndex::single(0, 2), -0.25),
            ],
        )
        .unwrap();
        let v = x.to_json();
        let back = ChaosExpansion::from_json(&v).unwrap();
        assert_eq!(x, back);
        // terms appear in ascending dense-lexicographic order
        let s = serde_json::to_string(&v).unwrap();
        let i_const = s.find(r#"{"alpha":{},"#).unwrap();
        let i_z2 = s.find(r#"{"alpha":{"2":1}"#).unwrap();
        let i_h2 = s.find(r#"{"alpha":{"0":2}"#).unwrap();
        assert!(i_const < i_z2 && i_z2 < i_h2);
    }

    #[test]
    fn rejects_out_of_range_coordinate() {
        let err = ChaosExpansion::from_terms(2, [(MultiIndex::single(2, 1), 1.0)]);
        assert!(matches!(err, Err(Error::IndexRange { index: 2, k: 2 })));
    }
}

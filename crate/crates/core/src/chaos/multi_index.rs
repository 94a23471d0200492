//! Sparse Hermite multi-indices α: ℕ₀^K with finitely many nonzero entries.

use crate::quadrature::ln_factorial;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

/// Entries are (coordinate, degree) pairs, sorted by coordinate, degree ≥ 1.
/// The empty index is the constant mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    entries: Vec<(u32, u32)>,
}

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex::default()
    }

    pub fn single(coord: usize, degree: u32) -> Self {
        if degree == 0 {
            return Self::empty();
        }
        MultiIndex {
            entries: vec![(coord as u32, degree)],
        }
    }

    /// Build from arbitrary (coord, degree) pairs; repeated coordinates add.
    pub fn from_pairs<I: IntoIterator<Item = (usize, u32)>>(pairs: I) -> Self {
        let mut entries: Vec<(u32, u32)> = Vec::new();
        for (c, d) in pairs {
            if d == 0 {
                continue;
            }
            entries.push((c as u32, d));
        }
        entries.sort_unstable_by_key(|&(c, _)| c);
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        MultiIndex { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total degree |α| = Σ α_k.
    pub fn degree(&self) -> usize {
        self.entries.iter().map(|&(_, d)| d as usize).sum()
    }

    pub fn get(&self, coord: usize) -> u32 {
        self.entries
            .binary_search_by_key(&(coord as u32), |&(c, _)| c)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.entries.iter().map(|&(c, d)| (c as usize, d))
    }

    pub fn max_coord(&self) -> Option<usize> {
        self.entries.last().map(|&(c, _)| c as usize)
    }

    /// Pointwise sum α + β (the Wick index rule).
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        let mut entries = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() || j < other.entries.len() {
            match (self.entries.get(i), other.entries.get(j)) {
                (Some(&(ca, da)), Some(&(cb, db))) => match ca.cmp(&cb) {
                    Ordering::Less => {
                        entries.push((ca, da));
                        i += 1;
                    }
                    Ordering::Greater => {
                        entries.push((cb, db));
                        j += 1;
                    }
                    Ordering::Equal => {
                        entries.push((ca, da + db));
                        i += 1;
                        j += 1;
                    }
                },
                (Some(&e), None) => {
                    entries.push(e);
                    i += 1;
                }
                (None, Some(&e)) => {
                    entries.push(e);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        MultiIndex { entries }
    }

    /// ln α! = Σ ln(α_k!).
    pub fn ln_factorial(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, d)| ln_factorial(d as usize))
            .sum()
    }

    /// α! as f64; exact for the supported degree range.
    pub fn factorial(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, d)| (1..=d as u64).map(|x| x as f64).product::<f64>())
            .product()
    }

    /// Σ α_k ln λ_k with λ_k = k + 3/2 (the log of the Γ(A^p) scaling at p=1).
    pub fn ln_lambda_weight(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(c, d)| d as f64 * (c as f64 + 1.5).ln())
            .sum()
    }

    /// Π_k f_k^{α_k}; coordinates beyond f.len() contribute only when α_k = 0.
    pub fn monomial(&self, f: &[f64]) -> f64 {
        let mut acc = 1.0;
        for &(c, d) in &self.entries {
            let v = f.get(c as usize).copied().unwrap_or(0.0);
            acc *= v.powi(d as i32);
        }
        acc
    }
}

/// Dense-lexicographic order: compare (α_0, α_1, ...) entry by entry.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.entries.get(i), other.entries.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(&(ca, da)), Some(&(cb, db))) => match ca.cmp(&cb) {
                    // the earlier coordinate is nonzero on one side only
                    Ordering::Less => return da.cmp(&0).then(Ordering::Greater),
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if da != db {
                            return da.cmp(&db);
                        }
                        i += 1;
                        j += 1;
                    }
                },
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
            }
        }
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "{{}}");
        }
        write!(f, "{{")?;
        for (i, &(c, d)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}:{d}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.entries.len()))?;
        for &(c, d) in &self.entries {
            map.serialize_entry(&c.to_string(), &d)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw: std::collections::BTreeMap<String, u32> =
            Deserialize::deserialize(deserializer)?;
        let mut pairs = Vec::with_capacity(raw.len());
        for (k, d) in raw {
            let coord: usize = k
                .parse()
                .map_err(|_| D::Error::custom(format!("bad coordinate key {k:?}")))?;
            pairs.push((coord, d));
        }
        Ok(MultiIndex::from_pairs(pairs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_merges_coordinates() {
        let a = MultiIndex::from_pairs([(0, 2), (3, 1)]);
        let b = MultiIndex::from_pairs([(3, 2), (5, 1)]);
        let c = a.add(&b);
        assert_eq!(c.get(0), 2);
        assert_eq!(c.get(3), 3);
        assert_eq!(c.get(5), 1);
        assert_eq!(c.degree(), 6);
    }

    #[test]
    fn order_is_dense_lexicographic() {
        let empty = MultiIndex::empty();
        let e0 = MultiIndex::single(0, 1);
        let e0sq = MultiIndex::single(0, 2);
        let e1 = MultiIndex::single(1, 1);
        // (0,0,..) < (0,1,..) < (1,0,..) < (2,0,..)
        assert!(empty < e1);
        assert!(e1 < e0);
        assert!(e0 < e0sq);
        let mixed = MultiIndex::from_pairs([(0, 1), (1, 1)]);
        assert!(e0 < mixed);
        assert!(mixed < e0sq);
    }

    #[test]
    fn factorial_and_weights() {
        let a = MultiIndex::from_pairs([(0, 3), (2, 2)]);
        assert_eq!(a.factorial(), 12.0);
        let expect = 3.0 * (1.5f64).ln() + 2.0 * (3.5f64).ln();
        assert!((a.ln_lambda_weight() - expect).abs() < 1e-14);
    }

    #[test]
    fn serde_uses_string_keys() {
        let a = MultiIndex::from_pairs([(0, 2), (3, 1)]);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"0":2,"3":1}"#);
        let back: MultiIndex = serde_json::from_str(&json).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn monomial_evaluates_powers() {
        let a = MultiIndex::from_pairs([(0, 2), (1, 1)]);
        assert_eq!(a.monomial(&[2.0, 3.0]), 12.0);
        assert_eq!(a.monomial(&[2.0]), 0.0); // missing coordinate is zero
    }
}

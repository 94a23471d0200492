//! Deterministic Monte Carlo ensembles: sample i is regenerated on demand
//! from (master_seed, i), so results are bit-stable across thread counts and
//! no z-matrix is ever materialized.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Samples per parallel work unit; partials are merged in chunk order, which
/// keeps floating-point reductions independent of the thread schedule.
const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy)]
pub struct PathEnsemble {
    n: usize,
    k: usize,
    master_seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

impl PathEnsemble {
    pub fn new(n: usize, k: usize, master_seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("ensemble needs at least one sample".into()));
        }
        if k == 0 || k > crate::basis::MAX_K {
            return Err(Error::Config(format!("ensemble dimension {k} out of range")));
        }
        Ok(PathEnsemble { n, k, master_seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        PathEnsemble::new(n, self.k, self.master_seed)
    }

    /// Fill `z` with sample i; bit-for-bit reproducible.
    pub fn fill_sample(&self, i: usize, z: &mut [f64]) {
        debug_assert_eq!(z.len(), self.k);
        let seed = splitmix64(self.master_seed ^ splitmix64(i as u64 + 1));
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }

    pub fn sample(&self, i: usize) -> Vec<f64> {
        let mut z = vec![0.0; self.k];
        self.fill_sample(i, &mut z);
        z
    }

    /// Parallel fold over all samples with a deterministic merge order:
    /// chunks are processed in parallel, partial accumulators merged by
    /// ascending chunk index.
    pub fn par_fold<A, Mk, St, Mg>(&self, make: Mk, step: St, merge: Mg) -> A
    where
        A: Send,
        Mk: Fn() -> A + Sync,
        St: Fn(&mut A, usize, &[f64]) + Sync,
        Mg: Fn(&mut A, A),
    {
        let bounds: Vec<(usize, usize)> = (0..self.n)
            .step_by(CHUNK)
            .map(|s| (s, (s + CHUNK).min(self.n)))
            .collect();
        let partials: Vec<A> = bounds
            .into_par_iter()
            .map(|(lo, hi)| {
                let mut acc = make();
                let mut z = vec![0.0; self.k];
                for i in lo..hi {
                    self.fill_sample(i, &mut z);
                    step(&mut acc, i, &z);
                }
                acc
            })
            .collect();
        let mut acc = make();
        for part in partials {
            merge(&mut acc, part);
        }
        acc
    }

    /// Mean and standard error of a per-sample statistic.
    pub fn mean<F: Fn(usize, &[f64]) -> f64 + Sync>(&self, stat: F) -> MeanStderr {
        let (sum, sum_sq) = self.par_fold(
            || (0.0f64, 0.0f64),
            |acc, i, z| {
                let v = stat(i, z);
                acc.0 += v;
                acc.1 += v * v;
            },
            |acc, part| {
                acc.0 += part.0;
                acc.1 += part.1;
            },
        );
        MeanStderr::from_moments(sum, sum_sq, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanStderr {
    pub fn from_moments(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        MeanStderr {
            mean,
            stderr: (var / nf).sqrt(),
            n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_reproducible() {
        let e = PathEnsemble::new(100, 8, 42).unwrap();
        let a = e.sample(17);
        let b = e.sample(17);
        assert_eq!(a, b);
        assert_ne!(e.sample(17), e.sample(18));
        // different master seeds decorrelate
        let e2 = PathEnsemble::new(100, 8, 43).unwrap();
        assert_ne!(e.sample(17), e2.sample(17));
    }

    #[test]
    fn second_moments_converge() {
        let e = PathEnsemble::new(40_000, 4, 7).unwrap();
        let m00 = e.mean(|_, z| z[0] * z[0]);
        let m01 = e.mean(|_, z| z[0] * z[1]);
        assert!((m00.mean - 1.0).abs() < 4.0 * m00.stderr + 1e-3, "{m00:?}");
        assert!(m01.mean.abs() < 4.0 * m01.stderr + 1e-3, "{m01:?}");
        assert!(m00.stderr < 0.02);
    }

    #[test]
    fn par_fold_is_schedule_independent() {
        // same reduction on 1 thread and on the global pool, bit for bit
        let e = PathEnsemble::new(10_000, 4, 99).unwrap();
        let stat = |_: usize, z: &[f64]| (z[0] * z[1]).tanh() * z[2].exp().min(10.0);
        let global = e.mean(stat);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| e.mean(stat));
        assert_eq!(global.mean.to_bits(), single.mean.to_bits());
        assert_eq!(global.stderr.to_bits(), single.stderr.to_bits());
    }

    #[test]
    fn rejects_empty() {
        assert!(PathEnsemble::new(0, 4, 1).is_err());
        assert!(PathEnsemble::new(10, 0, 1).is_err());
    }
}

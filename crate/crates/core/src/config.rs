//! Run configuration shared by the CLI and the check suite.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::basis::{GridSpec, MAX_K};
use crate::chaos::DEFAULT_MAX_DEGREE;
use crate::error::{Error, Result};

/// Tolerance knobs for the ad-hoc commands. The named suite checks pin their
/// own tolerances and ignore these.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// z-score multiplier for Monte Carlo comparisons
    pub mc_sigma: f64,
    /// absolute floor for coefficient-level identities
    pub coeff_tol: f64,
    /// quadrature / orthonormality residual gate
    pub quad_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mc_sigma: 3.0,
            coeff_tol: 1e-12,
            quad_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Gaussian coordinates for ad-hoc commands.
    pub k: usize,
    /// chaos degree cap for ad-hoc commands
    pub d_max: usize,
    /// master seed; per-check and per-sample streams are derived from it
    pub seed: u64,
    pub grid: GridSpec,
    /// default Monte Carlo sample count for ad-hoc commands
    pub samples: usize,
    /// Gauss–Legendre order for Gram-table panels
    pub quad_order: usize,
    pub tolerances: Tolerances,
    /// rayon pool size; 0 keeps the library default. Runtime-only: excluded
    /// from serialized reports so thread count never changes report bytes.
    #[serde(skip_serializing)]
    pub threads: usize,
    /// Gram table cache directory; runtime-only, like `threads`.
    #[serde(skip_serializing)]
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: 32,
            d_max: 12,
            seed: 42,
            grid: GridSpec::new(1.0, 0.05).expect("default grid"),
            samples: 20_000,
            quad_order: 16,
            tolerances: Tolerances::default(),
            threads: 0,
            cache_dir: None,
        }
    }
}

impl RunConfig {
    /// Field-level validation; deserialization bypasses the constructors, so
    /// every invariant is re-checked here.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_K {
            return Err(Error::Config(format!(
                "k = {} outside 1..={MAX_K}",
                self.k
            )));
        }
        if self.d_max == 0 || self.d_max > DEFAULT_MAX_DEGREE * 8 {
            return Err(Error::Config(format!(
                "d_max = {} outside 1..={}",
                self.d_max,
                DEFAULT_MAX_DEGREE * 8
            )));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        if self.quad_order == 0 || self.quad_order > 256 {
            return Err(Error::Config(format!(
                "quad_order = {} outside 1..=256",
                self.quad_order
            )));
        }
        if self.threads > 512 {
            return Err(Error::Config(format!(
                "threads = {} exceeds 512",
                self.threads
            )));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("mc_sigma", t.mc_sigma),
            ("coeff_tol", t.coeff_tol),
            ("quad_tol", t.quad_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "tolerances.{name} = {v} must be a positive finite number"
                )));
            }
        }
        // round-trips the grid through its constructor to catch raw values
        GridSpec::new(self.grid.t_max, self.grid.dt)?;
        Ok(())
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Stable sub-seed for the `index`-th consumer (splitmix64 step).
    pub fn sub_seed(&self, index: u64) -> u64 {
        let mut z = self
            .seed
            .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(!text.contains("threads"), "runtime knobs must not serialize");
        assert!(!text.contains("cache_dir"));
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back.k, cfg.k);
        assert_eq!(back.seed, cfg.seed);
    }

    #[test]
    fn partial_json_fills_defaults_and_bad_fields_fail() {
        let cfg: RunConfig = serde_json::from_str(r#"{"k": 8, "seed": 7}"#).unwrap();
        assert_eq!(cfg.k, 8);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.d_max, RunConfig::default().d_max);
        cfg.validate().unwrap();

        let bad: RunConfig = serde_json::from_str(r#"{"k": 0}"#).unwrap();
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad: RunConfig =
            serde_json::from_str(r#"{"grid": {"t_max": 1.0, "dt": 0.3}}"#).unwrap();
        assert!(bad.validate().is_err(), "grid must divide evenly");
        assert!(serde_json::from_str::<RunConfig>(r#"{"llama": 1}"#).is_err());
    }

    #[test]
    fn sub_seeds_are_distinct_and_stable() {
        let cfg = RunConfig::default();
        let a = cfg.sub_seed(0);
        let b = cfg.sub_seed(1);
        assert_ne!(a, b);
        assert_eq!(a, cfg.sub_seed(0));
        let other = RunConfig {
            seed: 43,
            ..RunConfig::default()
        };
        assert_ne!(a, other.sub_seed(0));
    }
}

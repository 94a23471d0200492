//! Cumulative Gram integrals G_jk(t) = ∫_0^t ξ_j ξ_k ds on a uniform time
//! grid, with binary persistence.
//!
//! The table is built by composite Gauss–Legendre accumulated left to right;
//! a full half-width rebuild must agree to the refinement tolerance before a
//! table is accepted. Build order is fixed, so rebuilding a table reproduces
//! it bit for bit, which is what the on-disk cache relies on.

use super::laguerre::xi_row;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

pub const GRAM_MAGIC: &[u8; 4] = b"WFG1";
pub const REFINE_TOL: f64 = 1e-12;

/// Uniform grid 0 = t_0 < ... < t_M, t_m = m·dt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_max: f64,
    pub dt: f64,
}

impl GridSpec {
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        if !(t_max.is_finite() && dt.is_finite()) || t_max <= 0.0 || dt <= 0.0 || dt > t_max {
            return Err(Error::Config(format!(
                "invalid grid: t_max = {t_max}, dt = {dt}"
            )));
        }
        let m = (t_max / dt).round();
        if m > 4_000_000.0 {
            return Err(Error::Config(format!("grid too fine: {m} intervals")));
        }
        if (m * dt - t_max).abs() > 1e-9 * t_max {
            return Err(Error::Config(format!(
                "t_max = {t_max} is not an integer multiple of dt = {dt}"
            )));
        }
        Ok(GridSpec { t_max, dt })
    }

    pub fn intervals(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn node(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    /// Largest m with t_m ≤ t (within rounding slack).
    pub fn floor_index(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.t_max * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::GridRange {
                t,
                t_max: self.t_max,
            });
        }
        Ok(((t / self.dt) + 1e-9).floor().min(self.intervals() as f64) as usize)
    }

    /// Index of a time that must coincide with a grid node.
    pub fn node_index(&self, t: f64) -> Result<usize> {
        let m = self.floor_index(t)?;
        if (t - self.node(m)).abs() > 1e-9 * self.dt.max(1.0) {
            return Err(Error::Config(format!(
                "time {t} must sit on a grid node (dt = {})",
                self.dt
            )));
        }
        Ok(m)
    }
}

fn tri_len(k: usize) -> usize {
    k * (k + 1) / 2
}

#[inline]
fn tri_idx(j: usize, k: usize) -> usize {
    // lower triangle, j >= k
    let (j, k) = if j >= k { (j, k) } else { (k, j) };
    j * (j + 1) / 2 + k
}

/// Dense table of G(t_m) for every grid node, packed symmetric.
#[derive(Debug, Clone)]
pub struct GramTable {
    pub k: usize,
    pub grid: GridSpec,
    pub quad_order: usize,
    /// (M+1) packed lower triangles of length k(k+1)/2 each.
    data: Vec<f64>,
    /// Max absolute disagreement against the half-width rebuild.
    pub refine_delta: f64,
}

impl GramTable {
    /// Integrate all pairs simultaneously: per panel, evaluate the ξ row at
    /// the quadrature nodes and accumulate the weighted outer product.
    pub fn build(k: usize, grid: GridSpec, quad_order: usize) -> Result<Self> {
        let coarse = Self::accumulate(k, grid, quad_order, 1)?;
        let fine = Self::accumulate(k, grid, quad_order, 2)?;
        let mut delta = 0.0f64;
        for (a, b) in coarse.iter().zip(fine.iter()) {
            delta = delta.max((a - b).abs());
        }
        if delta > REFINE_TOL {
            return Err(Error::QuadratureStall {
                tol: REFINE_TOL,
                refinements: 1,
                last: delta,
            });
        }
        Ok(GramTable {
            k,
            grid,
            quad_order,
            data: fine,
            refine_delta: delta,
        })
    }

    fn accumulate(k: usize, grid: GridSpec, quad_order: usize, split: usize) -> Result<Vec<f64>> {
        let m = grid.intervals();
        let tl = tri_len(k);
        let rule = GaussLegendre::cached(quad_order);
        // panel width respects the tightest per-pair cap 4/(j+k+1)
        let cap = (4.0 / (2.0 * k as f64 - 1.0)).min(0.5);
        let mut data = vec![0.0f64; (m + 1) * tl];
        let mut cur = vec![0.0f64; tl];
        let mut row = vec![0.0f64; k];
        for i in 0..m {
            let (a, b) = (grid.node(i), grid.node(i + 1));
            let sub = ((b - a) / cap).ceil().max(1.0) as usize * split;
            let h = (b - a) / sub as f64;
            for s in 0..sub {
                let (pa, pb) = (a + s as f64 * h, a + (s + 1) as f64 * h);
                let c = 0.5 * (pa + pb);
                let half = 0.5 * (pb - pa);
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    xi_row(c + half * x, &mut row)?;
                    let wh = w * half;
                    // cur[j(j+1)/2 + l] += wh * row[j] * row[l]
                    let mut idx = 0;
                    for j in 0..k {
                        let rj = wh * row[j];
                        for rl in &row[..=j] {
                            cur[idx] += rj * rl;
                            idx += 1;
                        }
                    }
                }
            }
            data[(i + 1) * tl..(i + 2) * tl].copy_from_slice(&cur);
        }
        Ok(data)
    }

    /// G_jk at grid node m.
    #[inline]
    pub fn at(&self, j: usize, k: usize, m: usize) -> f64 {
        self.data[m * tri_len(self.k) + tri_idx(j, k)]
    }

    /// Packed triangle at grid node m.
    pub fn triangle(&self, m: usize) -> &[f64] {
        let tl = tri_len(self.k);
        &self.data[m * tl..(m + 1) * tl]
    }

    /// Dense symmetric matrix Λ^{-p} G(t_m) Λ^{-p} (p = 0 gives raw G).
    pub fn scaled_matrix(&self, m: usize, p: f64) -> nalgebra::DMatrix<f64> {
        let k = self.k;
        let mut out = nalgebra::DMatrix::zeros(k, k);
        let lam: Vec<f64> = (0..k).map(|i| (i as f64 + 1.5).powf(-p)).collect();
        for j in 0..k {
            for l in 0..=j {
                let v = self.at(j, l, m) * lam[j] * lam[l];
                out[(j, l)] = v;
                out[(l, j)] = v;
            }
        }
        out
    }

    /// trace of Λ^{-p} G(t_m) Λ^{-p}.
    pub fn scaled_trace(&self, m: usize, p: f64) -> f64 {
        (0..self.k)
            .map(|j| self.at(j, j, m) * (j as f64 + 1.5).powf(-2.0 * p))
            .sum()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let m = self.grid.intervals();
        let tl = tri_len(self.k);
        let mut out = Vec::with_capacity(4 + 16 + 16 + (m + 1) * tl * 8);
        out.extend_from_slice(GRAM_MAGIC);
        out.extend_from_slice(&(self.k as u32).to_le_bytes());
        out.extend_from_slice(&(m as u32).to_le_bytes());
        out.extend_from_slice(&(self.quad_order as u32).to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&self.grid.t_max.to_le_bytes());
        out.extend_from_slice(&self.grid.dt.to_le_bytes());
        out.extend_from_slice(&self.refine_delta.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |msg: &str| Error::CacheFormat(msg.to_string());
        if bytes.len() < 44 || &bytes[0..4] != GRAM_MAGIC {
            return Err(fail("missing WFG1 magic"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let k = u32_at(4) as usize;
        let m = u32_at(8) as usize;
        let quad_order = u32_at(12) as usize;
        let t_max = f64_at(20);
        let dt = f64_at(28);
        let refine_delta = f64_at(36);
        let grid = GridSpec::new(t_max, dt).map_err(|e| fail(&format!("bad grid: {e}")))?;
        if grid.intervals() != m {
            return Err(fail("interval count disagrees with grid spec"));
        }
        let need = 44 + (m + 1) * tri_len(k) * 8;
        if bytes.len() != need {
            return Err(fail(&format!(
                "payload length {} does not match header (expected {need})",
                bytes.len()
            )));
        }
        let mut data = Vec::with_capacity((m + 1) * tri_len(k));
        for i in 0..(m + 1) * tri_len(k) {
            data.push(f64_at(44 + 8 * i));
        }
        Ok(GramTable {
            k,
            grid,
            quad_order,
            data,
            refine_delta,
        })
    }

    /// Hex SHA-256 of the serialized table; reports embed it so a run can be
    /// matched to the exact tables it used.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_bytes());
        hex_string(&h.finalize())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes();
        std::fs::File::create(path)?.write_all(&bytes)?;
        let sidecar = Sidecar {
            format: "WFG1".into(),
            k: self.k,
            intervals: self.grid.intervals(),
            quad_order: self.quad_order,
            t_max: self.grid.t_max,
            dt: self.grid.dt,
            refine_delta: self.refine_delta,
            sha256: {
                let mut h = Sha256::new();
                h.update(&bytes);
                hex_string(&h.finalize())
            },
        };
        let meta = serde_json::to_string_pretty(&sidecar)?;
        std::fs::write(sidecar_path(path), meta)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let table = Self::from_bytes(&bytes)?;
        // sidecar, when present, must agree on the content hash
        let sc = sidecar_path(path);
        if sc.exists() {
            let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(&sc)?)?;
            let mut h = Sha256::new();
            h.update(&bytes);
            if sidecar.sha256 != hex_string(&h.finalize()) {
                return Err(Error::CacheFormat(format!(
                    "sidecar hash mismatch for {}",
                    path.display()
                )));
            }
        }
        Ok(table)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    format: String,
    k: usize,
    intervals: usize,
    quad_order: usize,
    t_max: f64,
    dt: f64,
    refine_delta: f64,
    sha256: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta.json");
    PathBuf::from(os)
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// One-off Gram entry ∫_0^t ξ_j ξ_k ds by refined composite quadrature.
pub fn gram(j: usize, k: usize, t: f64, quad_order: usize) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("gram needs t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let width = (4.0 / (j as f64 + k as f64 + 1.0)).min(0.5);
    let kmax = j.max(k) + 1;
    let mut row = vec![0.0; kmax];
    let (val, _) =
        crate::quadrature::integrate_refined(0.0, t, width, quad_order, REFINE_TOL, 8, |s| {
            xi_row(s, &mut row).expect("s >= 0 inside panel");
            row[j] * row[k]
        })?;
    Ok(val)
}

/// Disk-backed store of Gram tables, keyed by (K, grid, order).
pub struct GramCache {
    dir: Option<PathBuf>,
    tables: Mutex<std::collections::HashMap<String, Arc<GramTable>>>,
    hits: std::sync::atomic::AtomicUsize,
    misses: std::sync::atomic::AtomicUsize,
}

impl GramCache {
    /// `dir = None` keeps tables in memory only.
    pub fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(GramCache {
            dir,
            tables: Mutex::new(std::collections::HashMap::new()),
            hits: 0.into(),
            misses: 0.into(),
        })
    }

    fn key(k: usize, grid: GridSpec, order: usize) -> String {
        format!("gram_K{k}_T{:.9}_dt{:.9}_q{order}", grid.t_max, grid.dt)
    }

    pub fn get_or_build(&self, k: usize, grid: GridSpec, order: usize) -> Result<Arc<GramTable>> {
        use std::sync::atomic::Ordering::Relaxed;
        let key = Self::key(k, grid, order);
        {
            let map = self.tables.lock().unwrap();
            if let Some(t) = map.get(&key) {
                self.hits.fetch_add(1, Relaxed);
                return Ok(t.clone());
            }
        }
        // build or load outside the map lock; last writer wins harmlessly
        // because every build of the same key is bit-identical
        let path = self.dir.as_ref().map(|d| d.join(format!("{key}.wfg")));
        let table = if let Some(p) = path.as_ref().filter(|p| p.exists()) {
            let loaded = GramTable::load(p)?;
            if loaded.k != k || loaded.grid != grid || loaded.quad_order != order {
                return Err(Error::CacheFormat(format!(
                    "cache file {} holds a different configuration",
                    p.display()
                )));
            }
            self.hits.fetch_add(1, Relaxed);
            Arc::new(loaded)
        } else {
            self.misses.fetch_add(1, Relaxed);
            let built = Arc::new(GramTable::build(k, grid, order)?);
            if let Some(p) = path.as_ref() {
                built.save(p)?;
            }
            built
        };
        self.tables
            .lock()
            .unwrap()
            .insert(key, table.clone());
        Ok(table)
    }

    pub fn stats(&self) -> (usize, usize) {
        use std::sync::atomic::Ordering::Relaxed;
        (self.hits.load(Relaxed), self.misses.load(Relaxed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_entry_has_closed_form_at_low_order() {
        // G_00(t) = ∫_0^t e^{-s} ds = 1 - e^{-t}
        let g = gram(0, 0, 0.7, 16).unwrap();
        assert_abs_diff_eq!(g, 1.0 - (-0.7_f64).exp(), epsilon = 1e-13);
        // G_01(t) = ∫_0^t (1-s)e^{-s} ds = t e^{-t}
        let g01 = gram(0, 1, 0.7, 16).unwrap();
        assert_abs_diff_eq!(g01, 0.7 * (-0.7_f64).exp(), epsilon = 1e-13);
    }

    #[test]
    fn table_matches_oneoff_entries() {
        let grid = GridSpec::new(0.2, 0.01).unwrap();
        let table = GramTable::build(8, grid, 16).unwrap();
        for (j, k, m) in [(0, 0, 20), (3, 1, 10), (7, 7, 20), (5, 2, 1)] {
            let t = grid.node(m);
            let direct = gram(j, k, t, 16).unwrap();
            assert_abs_diff_eq!(table.at(j, k, m), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let grid = GridSpec::new(0.1, 0.02).unwrap();
        let a = GramTable::build(6, grid, 16).unwrap();
        let b = GramTable::build(6, grid, 16).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_eq!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn persistence_roundtrip_preserves_bits() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::new(0.1, 0.02).unwrap();
        let table = GramTable::build(5, grid, 16).unwrap();
        let path = dir.path().join("t.wfg");
        table.save(&path).unwrap();
        let loaded = GramTable::load(&path).unwrap();
        assert_eq!(table.to_bytes(), loaded.to_bytes());
    }

    #[test]
    fn corrupted_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::new(0.1, 0.02).unwrap();
        let table = GramTable::build(4, grid, 16).unwrap();
        let path = dir.path().join("t.wfg");
        table.save(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            GramTable::load(&path),
            Err(Error::CacheFormat(_))
        ));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let grid = GridSpec::new(0.1, 0.02).unwrap();
        let table = GramTable::build(4, grid, 16).unwrap();
        let mut bytes = table.to_bytes();
        bytes.truncate(bytes.len() - 8);
        assert!(GramTable::from_bytes(&bytes).is_err());
    }

    #[test]
    fn cache_hits_after_persist() {
        let dir = tempfile::tempdir().unwrap();
        let cache = GramCache::new(Some(dir.path().to_path_buf())).unwrap();
        let grid = GridSpec::new(0.1, 0.02).unwrap();
        let a = cache.get_or_build(4, grid, 16).unwrap();
        let b = cache.get_or_build(4, grid, 16).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_eq!(cache.stats(), (1, 1));
        // a fresh cache over the same dir loads from disk
        let cache2 = GramCache::new(Some(dir.path().to_path_buf())).unwrap();
        let c = cache2.get_or_build(4, grid, 16).unwrap();
        assert_eq!(c.content_hash(), a.content_hash());
        assert_eq!(cache2.stats(), (1, 0));
    }
}

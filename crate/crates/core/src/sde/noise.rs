//! Per-sample evaluation of the translated quadratic-noise primitive
//!   Y_s = ∫_0^s [(W_r^p + f(r))² − |δ_r^p|²] dr,   W_r^p = Σ_k λ_k^{−p}ξ_k(r) z_k,
//! on a fixed time grid. All deterministic quantities (scaled basis rows at
//! the Gauss–Legendre nodes, f values, |δ^p|²) are tabulated once; a sample
//! then costs one matrix–vector product plus prefix sums. Between grid nodes
//! Y is the C¹ cubic Hermite interpolant built from exact nodal derivatives.

use crate::basis::{check_p, xi_row, GridSpec};
use crate::chaos::TestFunction;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Fine rule per grid interval; the embedded coarse rule quantifies the
/// time-quadrature error carried into Y.
pub const FINE_ORDER: usize = 16;
pub const COARSE_ORDER: usize = 8;

pub struct NoiseGrid {
    pub k: usize,
    pub p: f64,
    pub grid: GridSpec,
    fine: RuleTable,
    coarse: RuleTable,
    /// (M+1) × K scaled rows λ^{−p}ξ_k(t_m) at the grid nodes.
    xi_grid: Vec<f64>,
    f_grid: Vec<f64>,
    dsq_grid: Vec<f64>,
}

/// Tabulated data at the quadrature nodes of one rule.
struct RuleTable {
    order: usize,
    /// M·order node times, in increasing order, `order` per interval.
    t: Vec<f64>,
    /// Corresponding weights (already scaled by interval half-width).
    w: Vec<f64>,
    /// node-major rows of λ^{−p}ξ_k.
    v: Vec<f64>,
    f: Vec<f64>,
    dsq: Vec<f64>,
}

impl RuleTable {
    fn build(
        k: usize,
        grid: GridSpec,
        p: f64,
        order: usize,
        f: Option<&TestFunction>,
    ) -> Result<Self> {
        let rule = GaussLegendre::cached(order);
        let m = grid.intervals();
        let count = m * order;
        let mut t = Vec::with_capacity(count);
        let mut w = Vec::with_capacity(count);
        for i in 0..m {
            let (a, b) = (grid.node(i), grid.node(i + 1));
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
                t.push(mid + half * x);
                w.push(half * wt);
            }
        }
        let mut v = vec![0.0; count * k];
        let mut fv = vec![0.0; count];
        let mut dsq = vec![0.0; count];
        let scale: Vec<f64> = (0..k).map(|j| crate::basis::lambda_pow(j, -p)).collect();
        for (i, &ti) in t.iter().enumerate() {
            let row = &mut v[i * k..(i + 1) * k];
            xi_row(ti, row)?;
            for (x, s) in row.iter_mut().zip(&scale) {
                *x *= s;
            }
            dsq[i] = row.iter().map(|x| x * x).sum();
            if let Some(tf) = f {
                fv[i] = tf.value(ti)?;
            }
        }
        Ok(RuleTable {
            order,
            t,
            w,
            v,
            f: fv,
            dsq,
        })
    }

    /// W^p values at every node for a sample: u = Vz.
    fn noise_values(&self, k: usize, z: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.reserve(self.t.len());
        for i in 0..self.t.len() {
            let row = &self.v[i * k..(i + 1) * k];
            out.push(row.iter().zip(z).map(|(a, b)| a * b).sum());
        }
    }

    /// Per-interval integrals of (u + f)² − |δ|² given node noise values.
    fn interval_sums(&self, u: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let m = u.len() / self.order;
        for i in 0..m {
            let lo = i * self.order;
            let mut acc = 0.0;
            for j in lo..lo + self.order {
                let shifted = u[j] + self.f[j];
                acc += self.w[j] * (shifted * shifted - self.dsq[j]);
            }
            out.push(acc);
        }
    }
}

impl NoiseGrid {
    pub fn new(k: usize, grid: GridSpec, p: f64, f: Option<&TestFunction>) -> Result<Self> {
        check_p(p)?;
        if k == 0 || k > crate::basis::MAX_K {
            return Err(Error::Config(format!("noise grid dimension {k} out of range")));
        }
        if let Some(tf) = f {
            if tf.k() > k {
                return Err(Error::MixedK(k, tf.k()));
            }
        }
        let fine = RuleTable::build(k, grid, p, FINE_ORDER, f)?;
        let coarse = RuleTable::build(k, grid, p, COARSE_ORDER, f)?;
        let m = grid.intervals();
        let mut xi_grid = vec![0.0; (m + 1) * k];
        let mut f_grid = vec![0.0; m + 1];
        let mut dsq_grid = vec![0.0; m + 1];
        let scale: Vec<f64> = (0..k).map(|j| crate::basis::lambda_pow(j, -p)).collect();
        for i in 0..=m {
            let ti = grid.node(i);
            let row = &mut xi_grid[i * k..(i + 1) * k];
            xi_row(ti, row)?;
            for (x, s) in row.iter_mut().zip(&scale) {
                *x *= s;
            }
            dsq_grid[i] = row.iter().map(|x| x * x).sum();
            if let Some(tf) = f {
                f_grid[i] = tf.value(ti)?;
            }
        }
        Ok(NoiseGrid {
            k,
            p,
            grid,
            fine,
            coarse,
            xi_grid,
            f_grid,
            dsq_grid,
        })
    }

    /// Number of fine quadrature nodes on [0, t_max].
    pub fn node_count(&self) -> usize {
        self.fine.t.len()
    }

    /// Fine node metadata: (time, weight, f value, |δ^p|²).
    pub fn node(&self, idx: usize) -> (f64, f64, f64, f64) {
        (
            self.fine.t[idx],
            self.fine.w[idx],
            self.fine.f[idx],
            self.fine.dsq[idx],
        )
    }

    /// Coarse-rule node metadata, same layout as `node`.
    pub fn coarse_node(&self, idx: usize) -> (f64, f64, f64, f64) {
        (
            self.coarse.t[idx],
            self.coarse.w[idx],
            self.coarse.f[idx],
            self.coarse.dsq[idx],
        )
    }

    /// Index range of fine nodes covering [0, t] for a grid-aligned t.
    pub fn nodes_until(&self, t: f64) -> Result<std::ops::Range<usize>> {
        let m = self.grid_index(t)?;
        Ok(0..m * FINE_ORDER)
    }

    /// Index range of coarse nodes covering [0, t] for a grid-aligned t.
    pub fn coarse_nodes_until(&self, t: f64) -> Result<std::ops::Range<usize>> {
        let m = self.grid_index(t)?;
        Ok(0..m * COARSE_ORDER)
    }

    /// f(t_m) at a grid node.
    pub fn f_at_grid(&self, m: usize) -> f64 {
        self.f_grid[m]
    }

    /// Grid index of a time that must sit on a grid node.
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        self.grid.node_index(t)
    }

    /// |δ_t^p|² (truncated) at a grid node.
    pub fn delta_sq(&self, m: usize) -> f64 {
        self.dsq_grid[m]
    }

    /// Evaluate the sample path Y for one z. Scratch buffers live in `work`.
    pub fn path(&self, z: &[f64], work: &mut PathWork) -> SamplePath {
        debug_assert_eq!(z.len(), self.k);
        let m = self.grid.intervals();
        self.fine.noise_values(self.k, z, &mut work.u);
        self.fine.interval_sums(&work.u, &mut work.sums);
        let mut y = Vec::with_capacity(m + 1);
        y.push(0.0);
        for i in 0..m {
            let last = y[i];
            y.push(last + work.sums[i]);
        }
        self.coarse.noise_values(self.k, z, &mut work.u_coarse);
        self.coarse.interval_sums(&work.u_coarse, &mut work.sums);
        let mut y_coarse = Vec::with_capacity(m + 1);
        y_coarse.push(0.0);
        for i in 0..m {
            let last = y_coarse[i];
            y_coarse.push(last + work.sums[i]);
        }
        let mut dy = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let row = &self.xi_grid[i * self.k..(i + 1) * self.k];
            let w: f64 = row.iter().zip(z).map(|(a, b)| a * b).sum();
            let shifted = w + self.f_grid[i];
            dy.push(shifted * shifted - self.dsq_grid[i]);
        }
        SamplePath {
            grid: self.grid,
            y,
            dy,
            y_coarse,
        }
    }

    /// Noise values W^p at the fine nodes for one z (reuses `work.u`).
    pub fn noise_at_fine_nodes<'w>(&self, z: &[f64], work: &'w mut PathWork) -> &'w [f64] {
        self.fine.noise_values(self.k, z, &mut work.u);
        &work.u
    }

    /// W^p at a grid node for one z.
    pub fn noise_at_grid(&self, m: usize, z: &[f64]) -> f64 {
        let row = &self.xi_grid[m * self.k..(m + 1) * self.k];
        row.iter().zip(z).map(|(a, b)| a * b).sum()
    }
}

/// Reusable per-thread scratch space. After `NoiseGrid::path`, `fine_noise`
/// and `coarse_noise` hold the sample's W^p values at the quadrature nodes.
#[derive(Default)]
pub struct PathWork {
    u: Vec<f64>,
    u_coarse: Vec<f64>,
    sums: Vec<f64>,
}

impl PathWork {
    pub fn fine_noise(&self) -> &[f64] {
        &self.u
    }

    pub fn coarse_noise(&self) -> &[f64] {
        &self.u_coarse
    }
}

/// One sample's Y on the grid: exact nodal values and derivatives, plus the
/// coarse-rule companion for quadrature-error reporting.
#[derive(Debug, Clone)]
pub struct SamplePath {
    grid: GridSpec,
    y: Vec<f64>,
    dy: Vec<f64>,
    y_coarse: Vec<f64>,
}

impl SamplePath {
    pub fn grid_value(&self, m: usize) -> f64 {
        self.y[m]
    }

    pub fn grid_deriv(&self, m: usize) -> f64 {
        self.dy[m]
    }

    /// |fine − coarse| accumulated up to grid node m: the time-quadrature
    /// error indicator for Y(t_m).
    pub fn quad_gap(&self, m: usize) -> f64 {
        (self.y[m] - self.y_coarse[m]).abs()
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let m = self
            .grid
            .floor_index(s)
            .unwrap_or_else(|_| panic!("time {s} outside path grid"));
        let m = m.min(self.y.len() - 2);
        (m, (s - self.grid.node(m)) / self.grid.dt)
    }

    /// C¹ cubic Hermite interpolant of Y.
    pub fn value(&self, s: f64) -> f64 {
        let (m, x) = self.locate(s);
        hermite_cubic(&self.y, &self.dy, self.grid.dt, m, x)
    }

    /// Derivative of the interpolant (consistent with `value`).
    pub fn deriv(&self, s: f64) -> f64 {
        let (m, x) = self.locate(s);
        hermite_cubic_deriv(&self.y, &self.dy, self.grid.dt, m, x)
    }

    /// Interpolant rebuilt from the coarse-rule nodal values (same exact
    /// derivatives); the spread against `value` tracks quadrature error.
    pub fn coarse_value(&self, s: f64) -> f64 {
        let (m, x) = self.locate(s);
        hermite_cubic(&self.y_coarse, &self.dy, self.grid.dt, m, x)
    }

    pub fn coarse_deriv(&self, s: f64) -> f64 {
        let (m, x) = self.locate(s);
        hermite_cubic_deriv(&self.y_coarse, &self.dy, self.grid.dt, m, x)
    }

    pub fn coarse_grid_value(&self, m: usize) -> f64 {
        self.y_coarse[m]
    }
}

fn hermite_cubic(y: &[f64], dy: &[f64], h: f64, m: usize, x: f64) -> f64 {
    let (y0, y1, d0, d1) = (y[m], y[m + 1], dy[m], dy[m + 1]);
    let x2 = x * x;
    let x3 = x2 * x;
    (2.0 * x3 - 3.0 * x2 + 1.0) * y0
        + (x3 - 2.0 * x2 + x) * h * d0
        + (-2.0 * x3 + 3.0 * x2) * y1
        + (x3 - x2) * h * d1
}

fn hermite_cubic_deriv(y: &[f64], dy: &[f64], h: f64, m: usize, x: f64) -> f64 {
    let (y0, y1, d0, d1) = (y[m], y[m + 1], dy[m], dy[m + 1]);
    let x2 = x * x;
    ((6.0 * x2 - 6.0 * x) * y0
        + (3.0 * x2 - 4.0 * x + 1.0) * h * d0
        + (-6.0 * x2 + 6.0 * x) * y1
        + (3.0 * x2 - 2.0 * x) * h * d1)
        / h
}

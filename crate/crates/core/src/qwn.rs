//! Quadratic noise objects in the truncated model: pointwise white noise on
//! the first chaos, its Wick square, the running integral X_t on the second
//! chaos, the exact closed form for X_t^{∗_p 2} − X_t^{◇2}, and a Monte
//! Carlo chain-rule check for smooth scalar maps of translated noise paths.

use crate::basis::{check_p, lambda_pow, xi_row, GramTable, GridSpec, SpectralBasis, MAX_K};
use crate::chaos::{ChaosAlgebra, ChaosExpansion, MultiIndex, TestFunction};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::scalar::ScalarFn;
use crate::sde::{NoiseGrid, PathEnsemble, PathWork};
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::SQRT_2;

/// W_t on the first chaos: coefficient ξ_k(t) on each coordinate.
pub fn white_noise(k: usize, t: f64) -> Result<ChaosExpansion> {
    if k == 0 || k > MAX_K {
        return Err(Error::Config(format!("coordinate count {k} out of range")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("white noise needs t ≥ 0, got {t}")));
    }
    let mut row = vec![0.0; k];
    xi_row(t, &mut row)?;
    ChaosExpansion::first_chaos(k, &row)
}

/// W_t^{◇2} = W_t ◇ W_t. Zero mean by construction; its ‖·‖_{−p} norm equals
/// √2 · Σ_k λ_k^{−2p} ξ_k(t)².
pub fn wick_square_wn(algebra: &ChaosAlgebra, t: f64) -> Result<ChaosExpansion> {
    let w = white_noise(algebra.k(), t)?;
    algebra.wick(&w, &w)
}

/// The second-chaos element zᵀMz − tr M for symmetric M: coefficient M_jj on
/// H_{2e_j} and M_jl + M_lj on H_{e_j+e_l}.
pub fn quadratic_chaos(m: &DMatrix<f64>) -> Result<ChaosExpansion> {
    if m.nrows() != m.ncols() {
        return Err(Error::Config(format!(
            "quadratic form needs a square matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let k = m.nrows();
    let mut out = ChaosExpansion::zero(k);
    for j in 0..k {
        out.add_term(MultiIndex::single(j, 2), m[(j, j)]);
        for l in 0..j {
            let alpha = MultiIndex::from_pairs([(j, 1), (l, 1)]);
            out.add_term(alpha, m[(j, l)] + m[(l, j)]);
        }
    }
    Ok(out)
}

/// X_t = ∫_0^t W_s^{◇2} ds: the quadratic form of the Gram matrix G(t),
/// with t required to sit on the table's grid.
pub fn x_process(gram: &GramTable, t: f64) -> Result<ChaosExpansion> {
    let m = gram.grid.node_index(t)?;
    quadratic_chaos(&gram.scaled_matrix(m, 0.0))
}

pub const ITO_SQUARE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct ItoSquareReport {
    pub t: f64,
    pub p: f64,
    pub k: usize,
    /// max |coefficient| of (X∗X − X◇X) − (2 tr Ĝ² + quadratic form of 4Λ^pĜ²Λ^p)
    pub max_coeff_discrepancy: f64,
    pub constant_lhs: f64,
    pub constant_rhs: f64,
    pub pass: bool,
}

/// The square identity: X_t^{∗_p 2} − X_t^{◇2} computed in the chaos algebra
/// must equal the constant 2·tr(Ĝ_p(t)²) plus the second-chaos form with
/// matrix 4·Λ^p Ĝ_p(t)² Λ^p (Ĝ_p = Λ^{−p} G Λ^{−p}).
pub fn ito_square_check(
    gram: &GramTable,
    t: f64,
    p: f64,
    algebra: &ChaosAlgebra,
) -> Result<ItoSquareReport> {
    check_p(p)?;
    if algebra.k() != gram.k {
        return Err(Error::MixedK(algebra.k(), gram.k));
    }
    let x = x_process(gram, t)?;
    let star = algebra.star(&x, &x, p)?;
    let mut wick = algebra.wick(&x, &x)?;
    wick.scale(-1.0);
    let mut lhs = star;
    lhs.add_assign(&wick)?;

    let m = gram.grid.node_index(t)?;
    let ghat = gram.scaled_matrix(m, p);
    let g2 = &ghat * &ghat;
    let tr2 = g2.trace();
    let lam: Vec<f64> = (0..gram.k).map(|j| lambda_pow(j, p)).collect();
    let mut second = g2 * 4.0;
    for j in 0..gram.k {
        for l in 0..gram.k {
            second[(j, l)] *= lam[j] * lam[l];
        }
    }
    let mut rhs = quadratic_chaos(&second)?;
    rhs.add_term(MultiIndex::empty(), 2.0 * tr2);

    let max_coeff_discrepancy = max_coeff_gap(&lhs, &rhs);
    Ok(ItoSquareReport {
        t,
        p,
        k: gram.k,
        max_coeff_discrepancy,
        constant_lhs: lhs.expectation(),
        constant_rhs: 2.0 * tr2,
        pass: max_coeff_discrepancy <= ITO_SQUARE_TOL,
    })
}

fn max_coeff_gap(a: &ChaosExpansion, b: &ChaosExpansion) -> f64 {
    let mut gap = 0.0f64;
    for (alpha, c) in a.terms() {
        gap = gap.max((c - b.coefficient(alpha)).abs());
    }
    for (alpha, c) in b.terms() {
        gap = gap.max((c - a.coefficient(alpha)).abs());
    }
    gap
}

#[derive(Debug, Clone, Serialize)]
pub struct NormBoundReport {
    pub t: f64,
    pub p: f64,
    pub k: usize,
    /// ∫_0^t ‖W_s^{◇2}‖_{−p} ds = √2 · tr Ĝ_p(t), read from the Gram table.
    pub integral: f64,
    /// The same integral by per-interval quadrature of √2|δ_s^p|².
    pub integral_quad: f64,
    /// √2 Σ_{k<K} λ_k^{−2p}, the convergent majorant series.
    pub series_bound: f64,
    pub pass: bool,
}

/// The norm-integral bound ∫_0^t ‖W_s^{◇2}‖_{−p} ds ≤ √2 Σ_k λ_k^{−2p},
/// checked both through the Gram table and by direct quadrature.
pub fn norm_bound_check(gram: &GramTable, t: f64, p: f64) -> Result<NormBoundReport> {
    check_p(p)?;
    let m = gram.grid.node_index(t)?;
    let integral = SQRT_2 * gram.scaled_trace(m, p);

    let basis = SpectralBasis::new(gram.k)?;
    let rule = GaussLegendre::cached(16);
    let mut integral_quad = 0.0;
    for i in 0..m {
        let (a, b) = (gram.grid.node(i), gram.grid.node(i + 1));
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            integral_quad += half * w * basis.delta_norm_sq(mid + half * x, p)?.truncated;
        }
    }
    integral_quad *= SQRT_2;

    let series_bound = SQRT_2 * (0..gram.k).map(|j| lambda_pow(j, -2.0 * p)).sum::<f64>();
    let consistent = (integral - integral_quad).abs() <= 1e-8 * integral.max(1.0);
    Ok(NormBoundReport {
        t,
        p,
        k: gram.k,
        integral,
        integral_quad,
        series_bound,
        pass: integral <= series_bound + 1e-12 && consistent,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionProbe {
    pub s: f64,
    /// E[φ′(Y_s)·((W_s^p)² − |δ_s^p|²)]
    pub quadratic_term: f64,
    /// 2 f(s)·E[φ′(Y_s)·W_s^p]
    pub cross_term: f64,
    /// f(s)²·E[φ′(Y_s)]
    pub translation_term: f64,
    /// Step-doubled centered difference of E[φ(Y_s)] (Richardson form).
    pub time_derivative: f64,
    pub diff: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ItoFormulaReport {
    pub t: f64,
    pub p: f64,
    pub samples: usize,
    /// E[φ(Y_t)]
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// φ(0) + ∫_0^t E[φ′(Y_s)·((W_s^p + f(s))² − |δ_s^p|²)] ds
    pub rhs: f64,
    pub diff: f64,
    /// Standard error of the per-sample residual (common random numbers).
    pub mc_stderr: f64,
    /// Mean |residual(fine rule) − residual(halved rule)|.
    pub quad_bound: f64,
    pub max_pathwise_residual: f64,
    pub probes: Vec<DecompositionProbe>,
    pub pass: bool,
}

struct ProbeAcc {
    a: f64,
    b: f64,
    c: f64,
    fd1: f64,
    fd2: f64,
    d: f64,
    d2: f64,
}

struct FormulaAcc {
    work: PathWork,
    n: usize,
    sum_lhs: f64,
    sum_lhs2: f64,
    sum_rhs: f64,
    sum_res: f64,
    sum_res2: f64,
    max_res: f64,
    sum_gap: f64,
    probes: Vec<ProbeAcc>,
}

/// Chain-rule identity for Y_s = ∫_0^s [(W_r^p + f(r))² − |δ_r^p|²] dr:
///   E[φ(Y_t)] = φ(0) + ∫_0^t E[φ′(Y_s)·((W_s^p + f(s))² − |δ_s^p|²)] ds,
/// verified pathwise with common random numbers, plus the decomposition of
/// the integrand into quadratic/cross/translation parts against a finite
/// difference of E[φ(Y_s)] at five interior grid nodes.
pub fn ito_formula_check(
    phi: &ScalarFn,
    p: f64,
    t: f64,
    f: &TestFunction,
    grid: GridSpec,
    ensemble: &PathEnsemble,
) -> Result<ItoFormulaReport> {
    if p <= 1.0 {
        return Err(Error::RegularityRange {
            what: "the pathwise chain-rule check",
            min_p: 1.0,
            p,
        });
    }
    let ng = NoiseGrid::new(ensemble.k(), grid, p, Some(f))?;
    let m_t = ng.grid_index(t)?;
    if m_t < 8 {
        return Err(Error::Config(format!(
            "chain-rule check needs ≥ 8 grid intervals below t, got {m_t}"
        )));
    }
    // five interior probe nodes, kept two nodes clear of 0 and t for the
    // wider finite-difference stencil
    let mut probe_nodes: Vec<usize> = (1..=5)
        .map(|j| (((m_t * j) as f64) / 6.0).round() as usize)
        .map(|m| m.clamp(2, m_t - 2))
        .collect();
    probe_nodes.dedup();

    let phi0 = phi.eval(0.0);
    let fine = ng.nodes_until(t)?;
    let coarse = ng.coarse_nodes_until(t)?;
    let dt = grid.dt;

    let acc = ensemble.par_fold(
        || FormulaAcc {
            work: PathWork::default(),
            n: 0,
            sum_lhs: 0.0,
            sum_lhs2: 0.0,
            sum_rhs: 0.0,
            sum_res: 0.0,
            sum_res2: 0.0,
            max_res: 0.0,
            sum_gap: 0.0,
            probes: probe_nodes
                .iter()
                .map(|_| ProbeAcc {
                    a: 0.0,
                    b: 0.0,
                    c: 0.0,
                    fd1: 0.0,
                    fd2: 0.0,
                    d: 0.0,
                    d2: 0.0,
                })
                .collect(),
        },
        |acc, _i, z| {
            let path = ng.path(z, &mut acc.work);
            let lhs = phi.eval(path.grid_value(m_t));
            let mut rhs = 0.0;
            for q in fine.clone() {
                let (s, w, _, _) = ng.node(q);
                rhs += w * phi.d1(path.value(s)) * path.deriv(s);
            }
            let res = lhs - phi0 - rhs;
            let mut rhs_c = 0.0;
            for q in coarse.clone() {
                let (s, w, _, _) = ng.coarse_node(q);
                rhs_c += w * phi.d1(path.coarse_value(s)) * path.coarse_deriv(s);
            }
            let res_c = phi.eval(path.coarse_grid_value(m_t)) - phi0 - rhs_c;
            acc.n += 1;
            acc.sum_lhs += lhs;
            acc.sum_lhs2 += lhs * lhs;
            acc.sum_rhs += rhs;
            acc.sum_res += res;
            acc.sum_res2 += res * res;
            acc.max_res = acc.max_res.max(res.abs());
            acc.sum_gap += (res - res_c).abs();
            for (pa, &m) in acc.probes.iter_mut().zip(&probe_nodes) {
                let dphi = phi.d1(path.grid_value(m));
                let w_s = ng.noise_at_grid(m, z);
                let fv = ng.f_at_grid(m);
                let a = dphi * (w_s * w_s - ng.delta_sq(m));
                let b = 2.0 * dphi * w_s * fv;
                let c = dphi * fv * fv;
                let fd1 = (phi.eval(path.grid_value(m + 1)) - phi.eval(path.grid_value(m - 1)))
                    / (2.0 * dt);
                let fd2 = (phi.eval(path.grid_value(m + 2)) - phi.eval(path.grid_value(m - 2)))
                    / (4.0 * dt);
                let d = a + b + c - (4.0 * fd1 - fd2) / 3.0;
                pa.a += a;
                pa.b += b;
                pa.c += c;
                pa.fd1 += fd1;
                pa.fd2 += fd2;
                pa.d += d;
                pa.d2 += d * d;
            }
        },
        |acc, part| {
            acc.n += part.n;
            acc.sum_lhs += part.sum_lhs;
            acc.sum_lhs2 += part.sum_lhs2;
            acc.sum_rhs += part.sum_rhs;
            acc.sum_res += part.sum_res;
            acc.sum_res2 += part.sum_res2;
            acc.max_res = acc.max_res.max(part.max_res);
            acc.sum_gap += part.sum_gap;
            for (pa, pb) in acc.probes.iter_mut().zip(part.probes) {
                pa.a += pb.a;
                pa.b += pb.b;
                pa.c += pb.c;
                pa.fd1 += pb.fd1;
                pa.fd2 += pb.fd2;
                pa.d += pb.d;
                pa.d2 += pb.d2;
            }
        },
    );

    let n = acc.n as f64;
    let lhs = acc.sum_lhs / n;
    let lhs_stderr = stderr(acc.sum_lhs, acc.sum_lhs2, acc.n);
    let rhs = phi0 + acc.sum_rhs / n;
    let diff = acc.sum_res / n;
    let mc_stderr = stderr(acc.sum_res, acc.sum_res2, acc.n);
    let quad_bound = acc.sum_gap / n + 1e-13;
    let mut pass = diff.abs() <= 3.0 * (mc_stderr + quad_bound);

    let mut probes = Vec::with_capacity(probe_nodes.len());
    for (pa, &m) in acc.probes.iter().zip(&probe_nodes) {
        let (a, b, c) = (pa.a / n, pa.b / n, pa.c / n);
        let (fd1, fd2) = (pa.fd1 / n, pa.fd2 / n);
        let fdx = (4.0 * fd1 - fd2) / 3.0;
        let d_mean = pa.d / n;
        let d_stderr = stderr(pa.d, pa.d2, acc.n);
        // allowances: step-doubling estimate of the centered-difference
        // truncation term, plus an O(dt³) term for the interpolant's
        // second-derivative jumps at grid nodes
        let tol = 3.0 * d_stderr + 0.5 * (fd1 - fd2).abs() + dt.powi(3) * (1.0 + fdx.abs());
        let ok = d_mean.abs() <= tol;
        pass &= ok;
        probes.push(DecompositionProbe {
            s: grid.node(m),
            quadratic_term: a,
            cross_term: b,
            translation_term: c,
            time_derivative: fdx,
            diff: d_mean,
            tol,
            pass: ok,
        });
    }

    Ok(ItoFormulaReport {
        t,
        p,
        samples: acc.n,
        lhs,
        lhs_stderr,
        rhs,
        diff,
        mc_stderr,
        quad_bound,
        max_pathwise_residual: acc.max_res,
        probes,
        pass,
    })
}

fn stderr(sum: f64, sum_sq: f64, n: usize) -> f64 {
    crate::sde::MeanStderr::from_moments(sum, sum_sq, n).stderr
}

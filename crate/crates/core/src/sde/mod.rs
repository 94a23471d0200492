//! Pathwise solver for dY/dt = b̃_p(Y) + Y ∗_p W^{◇2} via the multiplicative
//! reduction: per sample, solve the scalar random ODE
//!   dV/ds = b(V e^ζ) e^{−ζ},   ζ_s = ∫_0^s [(W_r^p + f(r))² − |δ_r^p|²] dr,
//! then read S-transforms and moments from V_t e^{ζ_t} on translated paths.
//! The module also carries the solution's contract checks: the integral
//! identity, adaptedness under late-supported translations, the moment
//! blow-up horizon, and the linear example's closed form with its positive-
//! definiteness certificate.

mod ensemble;
mod integrate;
mod noise;

pub use ensemble::{MeanStderr, PathEnsemble};
pub use integrate::{integrate_at, IntegratorConfig, Method};
pub use noise::{NoiseGrid, PathWork, SamplePath, COARSE_ORDER, FINE_ORDER};

use crate::basis::{lambda_pow, GramTable, GridSpec, SpectralBasis};
use crate::chaos::TestFunction;
use crate::error::{Error, Result};
use crate::gaussian::{lambda_max_sym, GaussianQuadratic};
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use std::sync::Arc;

/// Scalar drift with a declared Lipschitz/linear-growth constant C:
/// |b(x) − b(y)| ≤ C|x − y| and |b(x)| ≤ C(1 + |x|).
#[derive(Clone)]
pub struct DriftSpec {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    c: f64,
    /// false when b(V e^ζ)e^{−ζ} does not actually depend on ζ (b = 0, κ·y)
    zeta_coupled: bool,
}

impl std::fmt::Debug for DriftSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DriftSpec")
            .field("name", &self.name)
            .field("c", &self.c)
            .finish()
    }
}

impl DriftSpec {
    pub fn zero() -> Self {
        DriftSpec {
            name: "zero".into(),
            f: Arc::new(|_| 0.0),
            c: 0.0,
            zeta_coupled: false,
        }
    }

    /// b(y) = κ y; the exponential factor cancels, so V' = κV exactly.
    pub fn linear(kappa: f64) -> Self {
        DriftSpec {
            name: if kappa == 1.0 {
                "id".into()
            } else {
                format!("linear:{kappa}")
            },
            f: Arc::new(move |y| kappa * y),
            c: kappa.abs(),
            zeta_coupled: false,
        }
    }

    pub fn identity() -> Self {
        Self::linear(1.0)
    }

    /// b(y) = c·tanh(y): bounded, Lipschitz with constant c.
    pub fn tanh_scaled(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Config(format!("tanh drift needs c > 0, got {c}")));
        }
        Ok(DriftSpec {
            name: format!("tanh:{c}"),
            f: Arc::new(move |y| c * y.tanh()),
            c,
            zeta_coupled: true,
        })
    }

    /// User-supplied drift; the declared constant is audited on random pairs.
    pub fn custom(
        name: &str,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        c: f64,
    ) -> Result<Self> {
        let d = DriftSpec {
            name: name.into(),
            f,
            c,
            zeta_coupled: true,
        };
        d.spot_check(0xD21F7)?;
        Ok(d)
    }

    /// Registry lookup: `zero`, `id`, `tanh`, `tanh:<c>`, `linear:<κ>`.
    pub fn by_name(spec: &str) -> Result<Self> {
        if let Some(c) = spec.strip_prefix("tanh:") {
            let c: f64 = c
                .parse()
                .map_err(|_| Error::Config(format!("bad tanh scale in {spec:?}")))?;
            return Self::tanh_scaled(c);
        }
        if let Some(k) = spec.strip_prefix("linear:") {
            let k: f64 = k
                .parse()
                .map_err(|_| Error::Config(format!("bad linear slope in {spec:?}")))?;
            if !k.is_finite() {
                return Err(Error::Config(format!("bad linear slope in {spec:?}")));
            }
            return Ok(Self::linear(k));
        }
        match spec {
            "zero" => Ok(Self::zero()),
            "id" => Ok(Self::identity()),
            "tanh" => Self::tanh_scaled(1.0),
            _ => Err(Error::Config(format!(
                "unknown drift {spec:?}; expected zero | id | tanh | tanh:<c> | linear:<κ>"
            ))),
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        (self.f)(y)
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Randomized audit of the declared Lipschitz/growth constant.
    pub fn spot_check(&self, seed: u64) -> Result<()> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let slack = 1e-9 * (1.0 + self.c);
        for _ in 0..128 {
            let x: f64 = rng.gen_range(-50.0..50.0);
            let y: f64 = rng.gen_range(-50.0..50.0);
            if (self.eval(x) - self.eval(y)).abs() > self.c * (x - y).abs() + slack {
                return Err(Error::Config(format!(
                    "drift {:?} violates its Lipschitz constant {} between {x} and {y}",
                    self.name, self.c
                )));
            }
            if self.eval(x).abs() > self.c * (1.0 + x.abs()) + slack {
                return Err(Error::Config(format!(
                    "drift {:?} violates its growth constant {} at {x}",
                    self.name, self.c
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveSettings {
    pub integrator: IntegratorConfig,
    /// Proceed past the moment horizon T; reports carry a flag instead.
    pub allow_beyond_life_time: bool,
    /// Admit p ∈ (1/2, 1], where path continuity is no longer guaranteed.
    pub allow_low_regularity: bool,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            integrator: IntegratorConfig::default(),
            allow_beyond_life_time: false,
            allow_low_regularity: false,
        }
    }
}

/// Shared parameters for the solver operations.
#[derive(Clone)]
pub struct SdeSetup<'a> {
    pub drift: &'a DriftSpec,
    pub x0: f64,
    pub p: f64,
    pub grid: GridSpec,
    pub settings: SolveSettings,
}

/// One configured equation on a time grid with its tabulated noise.
pub struct SdeProblem {
    drift: DriftSpec,
    x0: f64,
    p: f64,
    t_end: f64,
    m_end: usize,
    noise: NoiseGrid,
    cfg: IntegratorConfig,
    life_time: f64,
    life_time_truncated: f64,
    beyond_life_time: bool,
}

impl SdeProblem {
    pub fn new(
        setup: &SdeSetup<'_>,
        t_end: f64,
        f: Option<&TestFunction>,
        k: usize,
    ) -> Result<Self> {
        let p = setup.p;
        if p <= 0.5 {
            return Err(Error::RegularityRange {
                what: "the multiplicative-noise solver",
                min_p: 0.5,
                p,
            });
        }
        if p <= 1.0 && !setup.settings.allow_low_regularity {
            return Err(Error::RegularityRange {
                what: "the default solver regime",
                min_p: 1.0,
                p,
            });
        }
        let noise = NoiseGrid::new(k, setup.grid, p, f)?;
        let m_end = noise.grid_index(t_end)?;
        let basis = SpectralBasis::new(k)?;
        let sup = basis.sup_delta_norm(p, setup.grid.t_max.max(2.0), 4097)?;
        let life_time = sup.life_time();
        let beyond_life_time = t_end >= life_time;
        if beyond_life_time && !setup.settings.allow_beyond_life_time {
            return Err(Error::BeyondLifeTime(format!(
                "t_end = {t_end} reaches the moment horizon T = {life_time:.6}; \
                 set allow_beyond_life_time to continue"
            )));
        }
        Ok(SdeProblem {
            drift: setup.drift.clone(),
            x0: setup.x0,
            p,
            t_end,
            m_end,
            noise,
            cfg: setup.settings.integrator,
            life_time,
            life_time_truncated: sup.life_time_truncated(),
            beyond_life_time,
        })
    }

    pub fn noise(&self) -> &NoiseGrid {
        &self.noise
    }

    pub fn life_time(&self) -> f64 {
        self.life_time
    }

    pub fn grid_times(&self) -> Vec<f64> {
        (0..=self.m_end).map(|m| self.noise.grid.node(m)).collect()
    }

    /// Grid nodes interleaved with the fine quadrature nodes of [0, t_end]:
    /// node m sits at index m·(FINE_ORDER + 1), fine node q of interval m at
    /// m·(FINE_ORDER + 1) + 1 + (q mod FINE_ORDER).
    pub fn dense_times(&self) -> Vec<f64> {
        let mut times = Vec::with_capacity(self.m_end * (FINE_ORDER + 1) + 1);
        times.push(0.0);
        for m in 0..self.m_end {
            for q in m * FINE_ORDER..(m + 1) * FINE_ORDER {
                times.push(self.noise.node(q).0);
            }
            times.push(self.noise.grid.node(m + 1));
        }
        times
    }

    /// Integrate one sample's V at the given increasing times.
    pub fn solve_sample(&self, path: &SamplePath, times: &[f64]) -> Result<Vec<f64>> {
        integrate_at(
            |s, v| {
                let zeta = path.value(s);
                self.drift.eval(v * zeta.exp()) * (-zeta).exp()
            },
            self.x0,
            times,
            &self.cfg,
        )
    }

    fn solve_sample_with(&self, path: &SamplePath, times: &[f64], cfg: &IntegratorConfig) -> Result<Vec<f64>> {
        integrate_at(
            |s, v| {
                let zeta = path.value(s);
                self.drift.eval(v * zeta.exp()) * (-zeta).exp()
            },
            self.x0,
            times,
            cfg,
        )
    }

    /// Max over grid nodes of (|V| − envelope)/envelope for the per-path
    /// a-priori bound |V_t| ≤ |x|e^{Ct} + C e^{Ct} ∫_0^t e^{−ζ_s − Cs} ds,
    /// which follows from |V'| ≤ C e^{−ζ} + C|V|.
    fn gronwall_excess(&self, path: &SamplePath, v: &[f64]) -> f64 {
        let c = self.drift.constant();
        let mut integral = 0.0;
        let mut worst = f64::NEG_INFINITY;
        for m in 0..=self.m_end {
            if m > 0 {
                for q in (m - 1) * FINE_ORDER..m * FINE_ORDER {
                    let (s, w, _, _) = self.noise.node(q);
                    integral += w * (-path.value(s) - c * s).exp();
                }
            }
            let t_m = self.noise.grid.node(m);
            let env = (self.x0.abs() + c * integral) * (c * t_m).exp();
            let excess = (v[m].abs() - env - 1e-12) / env.max(1e-12);
            worst = worst.max(excess);
        }
        worst
    }
}

fn first_err(slot: &mut Option<Error>, e: Error) {
    if slot.is_none() {
        *slot = Some(e);
    }
}

pub const GRONWALL_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub drift: String,
    pub x0: f64,
    pub p: f64,
    pub t_end: f64,
    pub samples: usize,
    pub life_time: f64,
    pub life_time_truncated: f64,
    pub beyond_life_time: bool,
    pub times: Vec<f64>,
    pub v_mean: Vec<f64>,
    pub v_stderr: Vec<f64>,
    pub zeta_mean: Vec<f64>,
    pub gronwall_max_rel_excess: f64,
    pub gronwall_pass: bool,
}

/// Solve the ensemble on the grid; reports per-node aggregates of V and ζ
/// and the worst relative excess over the per-path a-priori envelope.
pub fn solve_paths(
    setup: &SdeSetup<'_>,
    t_end: f64,
    f: Option<&TestFunction>,
    ensemble: &PathEnsemble,
) -> Result<SolveReport> {
    let prob = SdeProblem::new(setup, t_end, f, ensemble.k())?;
    let times = prob.grid_times();
    let nodes = times.len();

    struct Acc {
        work: PathWork,
        err: Option<Error>,
        n: usize,
        sum_v: Vec<f64>,
        sum_v2: Vec<f64>,
        sum_z: Vec<f64>,
        max_excess: f64,
    }
    let acc = ensemble.par_fold(
        || Acc {
            work: PathWork::default(),
            err: None,
            n: 0,
            sum_v: vec![0.0; nodes],
            sum_v2: vec![0.0; nodes],
            sum_z: vec![0.0; nodes],
            max_excess: f64::NEG_INFINITY,
        },
        |acc, _i, z| {
            if acc.err.is_some() {
                return;
            }
            let path = prob.noise.path(z, &mut acc.work);
            match prob.solve_sample(&path, &times) {
                Err(e) => first_err(&mut acc.err, e),
                Ok(v) => {
                    for m in 0..nodes {
                        acc.sum_v[m] += v[m];
                        acc.sum_v2[m] += v[m] * v[m];
                        acc.sum_z[m] += path.grid_value(m);
                    }
                    acc.max_excess = acc.max_excess.max(prob.gronwall_excess(&path, &v));
                    acc.n += 1;
                }
            }
        },
        |acc, part| {
            if acc.err.is_none() {
                acc.err = part.err;
            }
            acc.n += part.n;
            for m in 0..nodes {
                acc.sum_v[m] += part.sum_v[m];
                acc.sum_v2[m] += part.sum_v2[m];
                acc.sum_z[m] += part.sum_z[m];
            }
            acc.max_excess = acc.max_excess.max(part.max_excess);
        },
    );
    if let Some(e) = acc.err {
        return Err(e);
    }

    let n = acc.n;
    let mut v_mean = Vec::with_capacity(nodes);
    let mut v_stderr = Vec::with_capacity(nodes);
    for m in 0..nodes {
        let ms = MeanStderr::from_moments(acc.sum_v[m], acc.sum_v2[m], n);
        v_mean.push(ms.mean);
        v_stderr.push(ms.stderr);
    }
    let zeta_mean = acc.sum_z.iter().map(|s| s / n as f64).collect();
    Ok(SolveReport {
        drift: prob.drift.name.clone(),
        x0: prob.x0,
        p: prob.p,
        t_end: prob.t_end,
        samples: n,
        life_time: prob.life_time,
        life_time_truncated: prob.life_time_truncated,
        beyond_life_time: prob.beyond_life_time,
        times,
        v_mean,
        v_stderr,
        zeta_mean,
        gronwall_max_rel_excess: acc.max_excess,
        gronwall_pass: acc.max_excess <= GRONWALL_SLACK,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct STransformReport {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    /// sample standard deviation over |mean|
    pub coefficient_of_variation: f64,
    /// set when the standard error exceeds a quarter of |value|: the
    /// estimator is unusable, as happens when t approaches the horizon
    pub variance_blown: bool,
    pub life_time: f64,
    pub beyond_life_time: bool,
}

/// Monte Carlo S-transform of the solution at f: E[V_t e^{ζ_t}] over
/// translated paths.
pub fn s_transform_solution(
    setup: &SdeSetup<'_>,
    t: f64,
    f: &TestFunction,
    ensemble: &PathEnsemble,
) -> Result<STransformReport> {
    let prob = SdeProblem::new(setup, t, Some(f), ensemble.k())?;
    let times = prob.grid_times();

    struct Acc {
        work: PathWork,
        err: Option<Error>,
        n: usize,
        sum: f64,
        sum2: f64,
    }
    let acc = ensemble.par_fold(
        || Acc {
            work: PathWork::default(),
            err: None,
            n: 0,
            sum: 0.0,
            sum2: 0.0,
        },
        |acc, _i, z| {
            if acc.err.is_some() {
                return;
            }
            let path = prob.noise.path(z, &mut acc.work);
            match prob.solve_sample(&path, &times) {
                Err(e) => first_err(&mut acc.err, e),
                Ok(v) => {
                    let s = v[prob.m_end] * path.grid_value(prob.m_end).exp();
                    acc.sum += s;
                    acc.sum2 += s * s;
                    acc.n += 1;
                }
            }
        },
        |acc, part| {
            if acc.err.is_none() {
                acc.err = part.err;
            }
            acc.n += part.n;
            acc.sum += part.sum;
            acc.sum2 += part.sum2;
        },
    );
    if let Some(e) = acc.err {
        return Err(e);
    }
    let ms = MeanStderr::from_moments(acc.sum, acc.sum2, acc.n);
    let sd = ms.stderr * (acc.n as f64).sqrt();
    let cv = if ms.mean.abs() > 0.0 {
        sd / ms.mean.abs()
    } else {
        f64::INFINITY
    };
    Ok(STransformReport {
        value: ms.mean,
        stderr: ms.stderr,
        samples: acc.n,
        coefficient_of_variation: cv,
        variance_blown: ms.stderr > 0.25 * ms.mean.abs(),
        life_time: prob.life_time,
        beyond_life_time: prob.beyond_life_time,
    })
}

pub const PATHWISE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub t: f64,
    pub p: f64,
    pub samples: usize,
    /// max over samples of |V_t e^{ζ_t} − x − ∫_0^t [b(V e^ζ) + V e^ζ ζ'] ds|
    pub max_pathwise_residual: f64,
    pub pathwise_tol: f64,
    pub expectation_residual: f64,
    pub expectation_stderr: f64,
    /// Monte Carlo S-transform value, for context.
    pub s_value: f64,
    pub pass: bool,
}

/// The integral identity satisfied by U = V e^ζ (the S-transformed solution):
/// U_t = x + ∫_0^t [b(U_s) + U_s ζ'_s] ds, checked pathwise per sample and in
/// expectation with common random numbers.
pub fn verify_integral_identity(
    setup: &SdeSetup<'_>,
    t: f64,
    f: &TestFunction,
    ensemble: &PathEnsemble,
) -> Result<IdentityReport> {
    let prob = SdeProblem::new(setup, t, Some(f), ensemble.k())?;
    let times = prob.dense_times();
    let stride = FINE_ORDER + 1;

    struct Acc {
        work: PathWork,
        err: Option<Error>,
        n: usize,
        max_res: f64,
        sum: f64,
        sum2: f64,
        sum_s: f64,
    }
    let acc = ensemble.par_fold(
        || Acc {
            work: PathWork::default(),
            err: None,
            n: 0,
            max_res: 0.0,
            sum: 0.0,
            sum2: 0.0,
            sum_s: 0.0,
        },
        |acc, _i, z| {
            if acc.err.is_some() {
                return;
            }
            let path = prob.noise.path(z, &mut acc.work);
            match prob.solve_sample(&path, &times) {
                Err(e) => first_err(&mut acc.err, e),
                Ok(v) => {
                    let mut integral = 0.0;
                    for m in 0..prob.m_end {
                        for j in 0..FINE_ORDER {
                            let q = m * FINE_ORDER + j;
                            let (s, w, _, _) = prob.noise.node(q);
                            let u = v[m * stride + 1 + j] * path.value(s).exp();
                            integral += w * (prob.drift.eval(u) + u * path.deriv(s));
                        }
                    }
                    let u_t = v[prob.m_end * stride] * path.grid_value(prob.m_end).exp();
                    let res = u_t - prob.x0 - integral;
                    acc.max_res = acc.max_res.max(res.abs());
                    acc.sum += res;
                    acc.sum2 += res * res;
                    acc.sum_s += u_t;
                    acc.n += 1;
                }
            }
        },
        |acc, part| {
            if acc.err.is_none() {
                acc.err = part.err;
            }
            acc.n += part.n;
            acc.max_res = acc.max_res.max(part.max_res);
            acc.sum += part.sum;
            acc.sum2 += part.sum2;
            acc.sum_s += part.sum_s;
        },
    );
    if let Some(e) = acc.err {
        return Err(e);
    }
    let ms = MeanStderr::from_moments(acc.sum, acc.sum2, acc.n);
    let pass = acc.max_res <= PATHWISE_TOL && ms.mean.abs() <= 3.0 * ms.stderr + 1e-12;
    Ok(IdentityReport {
        t,
        p: prob.p,
        samples: acc.n,
        max_pathwise_residual: acc.max_res,
        pathwise_tol: PATHWISE_TOL,
        expectation_residual: ms.mean,
        expectation_stderr: ms.stderr,
        s_value: acc.sum_s / acc.n as f64,
        pass,
    })
}

pub const AGREEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub t_end: f64,
    pub samples: usize,
    /// max over samples and grid nodes of |V_rk45 − V_rk4|
    pub max_gap: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Uniqueness surrogate: the adaptive and the fixed-step integrator must
/// land on the same V-path.
pub fn integrator_agreement(
    setup: &SdeSetup<'_>,
    t_end: f64,
    f: Option<&TestFunction>,
    ensemble: &PathEnsemble,
) -> Result<AgreementReport> {
    let prob = SdeProblem::new(setup, t_end, f, ensemble.k())?;
    let times = prob.grid_times();
    let rk45 = IntegratorConfig {
        method: Method::Rk45,
        ..prob.cfg
    };
    let rk4 = IntegratorConfig {
        method: Method::Rk4,
        ..prob.cfg
    };

    struct Acc {
        work: PathWork,
        err: Option<Error>,
        n: usize,
        max_gap: f64,
    }
    let acc = ensemble.par_fold(
        || Acc {
            work: PathWork::default(),
            err: None,
            n: 0,
            max_gap: 0.0,
        },
        |acc, _i, z| {
            if acc.err.is_some() {
                return;
            }
            let path = prob.noise.path(z, &mut acc.work);
            let pair = prob
                .solve_sample_with(&path, &times, &rk45)
                .and_then(|a| Ok((a, prob.solve_sample_with(&path, &times, &rk4)?)));
            match pair {
                Err(e) => first_err(&mut acc.err, e),
                Ok((a, b)) => {
                    for (x, y) in a.iter().zip(&b) {
                        acc.max_gap = acc.max_gap.max((x - y).abs());
                    }
                    acc.n += 1;
                }
            }
        },
        |acc, part| {
            if acc.err.is_none() {
                acc.err = part.err;
            }
            acc.n += part.n;
            acc.max_gap = acc.max_gap.max(part.max_gap);
        },
    );
    if let Some(e) = acc.err {
        return Err(e);
    }
    Ok(AgreementReport {
        t_end,
        samples: acc.n,
        max_gap: acc.max_gap,
        tol: AGREEMENT_TOL,
        pass: acc.max_gap <= AGREEMENT_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdaptednessReport {
    pub t: f64,
    pub p: f64,
    pub samples: usize,
    /// paired-sample estimate of S(Y_t)(f+g) − S(Y_t)(f)
    pub diff: f64,
    pub stderr: f64,
    /// a-priori bound on the truncation leakage of g into [0, t]
    pub leakage_bound: f64,
    /// L² mass of the truncated g inside [0, t]
    pub g_inside_l2: f64,
    /// S(Y_t)(f), for scale
    pub base_value: f64,
    pub pass: bool,
}

/// Adaptedness under translation: adding a g supported past t must not move
/// the S-transform beyond Monte Carlo noise plus the explicit leakage of g's
/// basis truncation into [0, t]. The leakage bound is assembled from the
/// f-run only: with Δζ_s = ∫_0^s [2(W+f)g + g²] dr,
///   |ΔU_t| ≤ |V_t| e^{ζ_t} |Δζ_t| e^{|Δζ_t|}
///          + e^{ζ_t + |Δζ_t|} ∫_0^t e^{C(t−s)} C (2|V_s| + e^{−ζ_s}e^{|Δζ_s|}) |Δζ_s| ds,
/// the second term dropping out when the V-equation does not see ζ.
pub fn adaptedness_check(
    setup: &SdeSetup<'_>,
    t: f64,
    f: &TestFunction,
    g: &TestFunction,
    ensemble: &PathEnsemble,
) -> Result<AdaptednessReport> {
    let k = ensemble.k();
    let mut fg = f.coeffs().to_vec();
    fg.resize(k.max(g.k()), 0.0);
    for (c, gc) in fg.iter_mut().zip(g.coeffs()) {
        *c += gc;
    }
    let fg = TestFunction::from_coeffs(fg)?;
    let prob_f = SdeProblem::new(setup, t, Some(f), k)?;
    let prob_fg = SdeProblem::new(setup, t, Some(&fg), k)?;
    let times = if prob_f.drift.zeta_coupled {
        prob_f.dense_times()
    } else {
        prob_f.grid_times()
    };
    let stride = if prob_f.drift.zeta_coupled {
        FINE_ORDER + 1
    } else {
        1
    };
    let m_end = prob_f.m_end;
    let c = prob_f.drift.constant();

    // g at the fine nodes of [0, t], for Δζ prefixes
    let fine_count = m_end * FINE_ORDER;
    let mut g_nodes = vec![0.0; fine_count];
    let mut g_inside_sq = 0.0;
    for q in 0..fine_count {
        let (s, w, _, _) = prob_f.noise.node(q);
        g_nodes[q] = g.value(s)?;
        g_inside_sq += w * g_nodes[q] * g_nodes[q];
    }

    struct Acc {
        work: PathWork,
        dzeta: Vec<f64>,
        err: Option<Error>,
        n: usize,
        sum_d: f64,
        sum_d2: f64,
        sum_leak: f64,
        sum_base: f64,
    }
    let acc = ensemble.par_fold(
        || Acc {
            work: PathWork::default(),
            dzeta: vec![0.0; fine_count],
            err: None,
            n: 0,
            sum_d: 0.0,
            sum_d2: 0.0,
            sum_leak: 0.0,
            sum_base: 0.0,
        },
        |acc, _i, z| {
            if acc.err.is_some() {
                return;
            }
            let path_f = prob_f.noise.path(z, &mut acc.work);
            // Δζ prefix at the fine nodes, from the f-run noise values
            {
                let u = acc.work.fine_noise();
                let mut run = 0.0;
                for q in 0..fine_count {
                    let (_, w, fv, _) = prob_f.noise.node(q);
                    run += w * (2.0 * (u[q] + fv) * g_nodes[q] + g_nodes[q] * g_nodes[q]);
                    acc.dzeta[q] = run;
                }
            }
            let dzeta_t = acc.dzeta.last().copied().unwrap_or(0.0);

            let v_f = match prob_f.solve_sample(&path_f, &times) {
                Err(e) => return first_err(&mut acc.err, e),
                Ok(v) => v,
            };
            let path_fg = prob_fg.noise.path(z, &mut acc.work);
            let v_fg = match prob_fg.solve_sample(&path_fg, &times) {
                Err(e) => return first_err(&mut acc.err, e),
                Ok(v) => v,
            };

            let zeta_t = path_f.grid_value(m_end);
            let u_f = v_f[m_end * stride] * zeta_t.exp();
            let u_fg = v_fg[m_end * stride] * path_fg.grid_value(m_end).exp();
            let d = u_fg - u_f;

            let mut leak = v_f[m_end * stride].abs()
                * zeta_t.exp()
                * dzeta_t.abs()
                * dzeta_t.abs().exp();
            if prob_f.drift.zeta_coupled {
                let mut dv_int = 0.0;
                let t_end = prob_f.noise.grid.node(m_end);
                for m in 0..m_end {
                    for j in 0..FINE_ORDER {
                        let q = m * FINE_ORDER + j;
                        let (s, w, _, _) = prob_f.noise.node(q);
                        let zeta_s = path_f.value(s);
                        let dz = acc.dzeta[q].abs();
                        let vs = v_f[m * stride + 1 + j].abs();
                        dv_int += w
                            * (c * (t_end - s)).exp()
                            * c
                            * (2.0 * vs + (-zeta_s).exp() * dz.exp())
                            * dz;
                    }
                }
                leak += (zeta_t + dzeta_t.abs()).exp() * dv_int;
            }

            acc.sum_d += d;
            acc.sum_d2 += d * d;
            acc.sum_leak += leak;
            acc.sum_base += u_f;
            acc.n += 1;
        },
        |acc, part| {
            if acc.err.is_none() {
                acc.err = part.err;
            }
            acc.n += part.n;
            acc.sum_d += part.sum_d;
            acc.sum_d2 += part.sum_d2;
            acc.sum_leak += part.sum_leak;
            acc.sum_base += part.sum_base;
        },
    );
    if let Some(e) = acc.err {
        return Err(e);
    }
    let ms = MeanStderr::from_moments(acc.sum_d, acc.sum_d2, acc.n);
    let leakage_bound = acc.sum_leak / acc.n as f64;
    Ok(AdaptednessReport {
        t,
        p: prob_f.p,
        samples: acc.n,
        diff: ms.mean,
        stderr: ms.stderr,
        leakage_bound,
        g_inside_l2: g_inside_sq.max(0.0).sqrt(),
        base_value: acc.sum_base / acc.n as f64,
        pass: ms.mean.abs() <= 3.0 * ms.stderr + leakage_bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LifetimeReport {
    pub p: f64,
    pub k: usize,
    /// (4 sup_t |δ_t^p|²)^{−1} with the spectral tail included
    pub life_time: f64,
    pub life_time_truncated: f64,
    pub sup_argmax: f64,
    /// first time λ_max(Ĝ_p(t)) reaches 1/4, where E[e^{2ζ_t}] stops existing
    pub t_star: Option<f64>,
    /// λ_max(Ĝ_p) at the end of the scanned grid, for context
    pub lambda_max_end: f64,
    /// life_time ≤ t_star whenever the threshold is reached
    pub ordering_ok: bool,
}

/// The conservative moment horizon T against the exact threshold t* of the
/// truncated model.
pub fn lifetime_threshold(gram: &GramTable, p: f64) -> Result<LifetimeReport> {
    let basis = SpectralBasis::new(gram.k)?;
    let sup = basis.sup_delta_norm(p, gram.grid.t_max.max(2.0), 4097)?;
    let intervals = gram.grid.intervals();
    let mut t_star = None;
    let mut prev = 0.0;
    let mut lambda_end = 0.0;
    for m in 0..=intervals {
        let lam = lambda_max_sym(&gram.scaled_matrix(m, p));
        lambda_end = lam;
        if t_star.is_none() && lam >= 0.25 {
            let t = if m == 0 {
                0.0
            } else {
                // linear crossing between the bracketing nodes
                gram.grid.node(m - 1) + gram.grid.dt * (0.25 - prev) / (lam - prev)
            };
            t_star = Some(t);
        }
        prev = lam;
    }
    let life_time = sup.life_time();
    Ok(LifetimeReport {
        p,
        k: gram.k,
        life_time,
        life_time_truncated: sup.life_time_truncated(),
        sup_argmax: sup.argmax,
        t_star,
        lambda_max_end: lambda_end,
        ordering_ok: t_star.map_or(true, |ts| life_time <= ts + 1e-12),
    })
}

/// E[e^{2ζ_t}] = det(I − 4Ĝ_p(t))^{−1/2} e^{−2 tr Ĝ_p(t)} for the
/// untranslated ζ; errors past the eigenvalue threshold.
pub fn exp_moment_closed_form(gram: &GramTable, t: f64, p: f64) -> Result<f64> {
    let m = gram.grid.node_index(t)?;
    let ghat = gram.scaled_matrix(m, p);
    let gq = GaussianQuadratic::new(&(2.0 * &ghat)).map_err(|_| {
        Error::BeyondLifeTime(format!(
            "E[e^{{2ζ}}] does not exist at t = {t}: λ_max(Ĝ) = {:.6} ≥ 1/4",
            lambda_max_sym(&ghat)
        ))
    })?;
    Ok((gq.ln_mean() - 2.0 * ghat.trace()).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub samples: usize,
    pub mean: f64,
}

/// Monte Carlo estimates of E[e^{2ζ_t}] at a ladder of sample counts; near
/// or past the threshold the sequence grows without stabilizing.
pub fn exp_moment_mc(
    gram: &GramTable,
    t: f64,
    p: f64,
    ensemble: &PathEnsemble,
    sizes: &[usize],
) -> Result<Vec<MomentEstimate>> {
    let m = gram.grid.node_index(t)?;
    let ghat = gram.scaled_matrix(m, p);
    let k = gram.k;
    if ensemble.k() != k {
        return Err(Error::MixedK(ensemble.k(), k));
    }
    let tr = ghat.trace();
    let mut out = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let e = ensemble.with_n(n)?;
        let ms = e.mean(|_i, z| {
            let mut q = 0.0;
            for j in 0..k {
                for l in 0..j {
                    q += 2.0 * ghat[(j, l)] * z[j] * z[l];
                }
                q += ghat[(j, j)] * z[j] * z[j];
            }
            (2.0 * (q - tr)).exp()
        });
        out.push(MomentEstimate {
            samples: n,
            mean: ms.mean,
        });
    }
    Ok(out)
}

/// S-transform of the linear-drift solution (b(y) = κy) at a real argument
/// f, in the truncated model:
///   x0 · exp{κt + ∫_0^t f² ds − tr Ĝ} · E[exp{zᵀĜz + bᵀz}],
/// where Ĝ = Ĝ_p(t) and b = 2Λ^{−p}G(t)f comes from expanding the translated
/// quadratic form ∫ (W+f)² − |δ|² ds — the linear coefficient is assembled
/// from that expansion, never hard-coded.
pub fn closed_form_linear(
    gram: &GramTable,
    x0: f64,
    p: f64,
    t: f64,
    f: &TestFunction,
    kappa: f64,
) -> Result<f64> {
    let (c0, b, ghat) = linear_ingredients(gram, p, t, f)?;
    let gq = gaussian_part(&ghat, t)?;
    Ok(x0 * (kappa * t + c0 - ghat.trace() + gq.ln_mean_with_shift(&b)).exp())
}

/// Same S-transform at the purely imaginary argument i·g (used by the
/// positive-definiteness certificate): ∫(ig)² = −∫g² and b becomes i·β.
pub fn closed_form_linear_imaginary(
    gram: &GramTable,
    x0: f64,
    p: f64,
    t: f64,
    g: &TestFunction,
    kappa: f64,
) -> Result<Complex<f64>> {
    let (c0, beta, ghat) = linear_ingredients(gram, p, t, g)?;
    let gq = gaussian_part(&ghat, t)?;
    let zero = DVector::zeros(beta.len());
    let scale = x0 * (kappa * t - c0 - ghat.trace()).exp();
    Ok(gq.mean_with_complex_shift(&zero, &beta) * scale)
}

fn linear_ingredients(
    gram: &GramTable,
    p: f64,
    t: f64,
    f: &TestFunction,
) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
    crate::basis::check_p(p)?;
    if f.k() > gram.k {
        return Err(Error::MixedK(gram.k, f.k()));
    }
    let m = gram.grid.node_index(t)?;
    let g0 = gram.scaled_matrix(m, 0.0);
    let ghat = gram.scaled_matrix(m, p);
    let mut fc = f.coeffs().to_vec();
    fc.resize(gram.k, 0.0);
    let fv = DVector::from_column_slice(&fc);
    let gf = &g0 * &fv;
    let c0 = fv.dot(&gf);
    let b = DVector::from_iterator(
        gram.k,
        (0..gram.k).map(|j| 2.0 * lambda_pow(j, -p) * gf[j]),
    );
    Ok((c0, b, ghat))
}

fn gaussian_part(ghat: &DMatrix<f64>, t: f64) -> Result<GaussianQuadratic> {
    GaussianQuadratic::new(ghat).map_err(|_| {
        Error::BeyondLifeTime(format!(
            "E[e^{{ζ}}] does not exist at t = {t}: λ_max(Ĝ) = {:.6} ≥ 1/2",
            lambda_max_sym(ghat)
        ))
    })
}

pub const POSITIVITY_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub t: f64,
    pub p: f64,
    pub n: usize,
    pub min_eigenvalue: f64,
    /// spectral norm of the certificate matrix
    pub norm: f64,
    pub pass: bool,
}

/// Bochner-style certificate for the linear-drift solution: the Hermitian
/// matrix F_jl = S(Y_t)(i(f_j − f_l)) · exp{−|f_j − f_l|₀²/2} must be
/// positive semidefinite (up to a relative eigenvalue tolerance).
pub fn positivity_certificate(
    gram: &GramTable,
    x0: f64,
    p: f64,
    t: f64,
    fs: &[TestFunction],
    kappa: f64,
) -> Result<PositivityReport> {
    let n = fs.len();
    if n == 0 || n > 16 {
        return Err(Error::Config(format!(
            "positivity certificate takes 1..=16 test functions, got {n}"
        )));
    }
    if !(x0 > 0.0) {
        return Err(Error::Domain(format!(
            "positivity needs a positive initial value, got {x0}"
        )));
    }
    let mut f_re = DMatrix::zeros(n, n);
    let mut f_im = DMatrix::zeros(n, n);
    for j in 0..n {
        for l in 0..=j {
            let mut diff = fs[j].coeffs().to_vec();
            diff.resize(fs[j].coeffs().len().max(fs[l].coeffs().len()), 0.0);
            for (d, c) in diff.iter_mut().zip(fs[l].coeffs()) {
                *d -= c;
            }
            let norm_sq: f64 = diff.iter().map(|d| d * d).sum();
            let g = TestFunction::from_coeffs(diff)?;
            let val = closed_form_linear_imaginary(gram, x0, p, t, &g, kappa)?
                * (-0.5 * norm_sq).exp();
            f_re[(j, l)] = val.re;
            f_re[(l, j)] = val.re;
            f_im[(j, l)] = val.im;
            f_im[(l, j)] = -val.im;
        }
    }
    // eigenvalues of the Hermitian F via its real symmetric embedding
    let mut embed = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for l in 0..n {
            embed[(j, l)] = f_re[(j, l)];
            embed[(n + j, n + l)] = f_re[(j, l)];
            embed[(j, n + l)] = -f_im[(j, l)];
            embed[(n + j, l)] = f_im[(j, l)];
        }
    }
    let eigs = embed.symmetric_eigenvalues();
    let min_eigenvalue = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let norm = eigs.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
    Ok(PositivityReport {
        t,
        p,
        n,
        min_eigenvalue,
        norm,
        pass: min_eigenvalue >= -POSITIVITY_REL_TOL * norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn setup<'a>(drift: &'a DriftSpec, x0: f64, p: f64, grid: GridSpec) -> SdeSetup<'a> {
        SdeSetup {
            drift,
            x0,
            p,
            grid,
            settings: SolveSettings::default(),
        }
    }

    #[test]
    fn drift_registry_and_spot_check() {
        let d = DriftSpec::by_name("tanh:2.5").unwrap();
        assert_eq!(d.name(), "tanh:2.5");
        assert_relative_eq!(d.eval(0.3), 2.5 * 0.3f64.tanh());
        assert_relative_eq!(d.constant(), 2.5);
        d.spot_check(99).unwrap();
        assert_eq!(DriftSpec::by_name("id").unwrap().name(), "id");
        assert_eq!(DriftSpec::by_name("zero").unwrap().constant(), 0.0);
        assert!(DriftSpec::by_name("cubic").is_err());
        // declared constant too small for b(y) = 3y
        assert!(DriftSpec::custom("steep", Arc::new(|y| 3.0 * y), 1.0).is_err());
        assert!(DriftSpec::custom("ok", Arc::new(|y| 3.0 * y), 3.0).is_ok());
    }

    #[test]
    fn zero_drift_keeps_v_constant() {
        let drift = DriftSpec::zero();
        let grid = GridSpec::new(0.2, 0.02).unwrap();
        let ensemble = PathEnsemble::new(48, 8, 11).unwrap();
        let r = solve_paths(&setup(&drift, 1.7, 1.5, grid), 0.2, None, &ensemble).unwrap();
        for (v, se) in r.v_mean.iter().zip(&r.v_stderr) {
            assert_relative_eq!(*v, 1.7, max_relative = 1e-14);
            assert!(se.abs() < 1e-14);
        }
        assert!(r.gronwall_pass);
        assert!(!r.beyond_life_time);
    }

    #[test]
    fn linear_drift_is_deterministic_exponential() {
        // b(y) = y makes e^ζ cancel: V_t = x e^t regardless of the sample
        let drift = DriftSpec::identity();
        let grid = GridSpec::new(0.2, 0.02).unwrap();
        let ensemble = PathEnsemble::new(24, 8, 5).unwrap();
        let r = solve_paths(&setup(&drift, 0.8, 1.5, grid), 0.2, None, &ensemble).unwrap();
        for (m, v) in r.v_mean.iter().enumerate() {
            assert_relative_eq!(*v, 0.8 * (0.02 * m as f64).exp(), max_relative = 1e-9);
        }
        assert!(r.gronwall_pass);
        assert!(r.gronwall_max_rel_excess < 0.0);
    }

    #[test]
    fn s_transform_at_time_zero_and_x0_scaling() {
        let drift = DriftSpec::zero();
        let grid = GridSpec::new(0.1, 0.01).unwrap();
        let f = TestFunction::from_coeffs(vec![0.3, -0.2]).unwrap();
        let ensemble = PathEnsemble::new(32, 8, 3).unwrap();
        let r0 = s_transform_solution(&setup(&drift, 2.5, 1.5, grid), 0.0, &f, &ensemble).unwrap();
        assert_relative_eq!(r0.value, 2.5, max_relative = 1e-15);
        assert!(r0.stderr.abs() < 1e-15);

        let r1 = s_transform_solution(&setup(&drift, 1.0, 1.5, grid), 0.1, &f, &ensemble).unwrap();
        let r2 = s_transform_solution(&setup(&drift, -3.0, 1.5, grid), 0.1, &f, &ensemble).unwrap();
        assert_relative_eq!(r2.value, -3.0 * r1.value, max_relative = 1e-12);
    }

    #[test]
    fn zero_drift_s_transform_matches_gaussian_identity() {
        // f = 0, b = 0: E[x e^{ζ_t}] = x · det(I − 2Ĝ)^{−1/2} e^{−tr Ĝ}
        let k = 8;
        let grid = GridSpec::new(0.2, 0.02).unwrap();
        let drift = DriftSpec::zero();
        let f = TestFunction::from_coeffs(vec![0.0]).unwrap();
        let ensemble = PathEnsemble::new(20_000, k, 77).unwrap();
        let r = s_transform_solution(&setup(&drift, 1.3, 1.2, grid), 0.2, &f, &ensemble).unwrap();
        let gram = GramTable::build(k, grid, 16).unwrap();
        let ghat = gram.scaled_matrix(10, 1.2);
        let gq = GaussianQuadratic::new(&ghat).unwrap();
        let closed = 1.3 * (gq.ln_mean() - ghat.trace()).exp();
        assert!(
            (r.value - closed).abs() <= 3.0 * r.stderr,
            "mc {} vs closed {closed} (stderr {})",
            r.value,
            r.stderr
        );
        assert!(!r.variance_blown);
    }

    #[test]
    fn integral_identity_holds_pathwise() {
        let grid = GridSpec::new(0.2, 0.02).unwrap();
        let f = TestFunction::from_coeffs(vec![0.4, -0.2, 0.1]).unwrap();
        let ensemble = PathEnsemble::new(32, 8, 21).unwrap();
        for drift in [DriftSpec::identity(), DriftSpec::tanh_scaled(1.0).unwrap()] {
            let r =
                verify_integral_identity(&setup(&drift, 0.9, 1.5, grid), 0.2, &f, &ensemble)
                    .unwrap();
            assert!(
                r.pass,
                "drift {}: max residual {} expectation {}±{}",
                drift.name(),
                r.max_pathwise_residual,
                r.expectation_residual,
                r.expectation_stderr
            );
            assert!(r.max_pathwise_residual <= PATHWISE_TOL);
        }
    }

    #[test]
    fn rk4_convergence_is_fourth_order() {
        let grid = GridSpec::new(0.2, 0.02).unwrap();
        let drift = DriftSpec::tanh_scaled(1.0).unwrap();
        let st = setup(&drift, 0.9, 1.5, grid);
        let prob = SdeProblem::new(&st, 0.2, None, 8).unwrap();
        let z = PathEnsemble::new(1, 8, 13).unwrap().sample(0);
        let mut work = PathWork::default();
        let path = prob.noise.path(&z, &mut work);
        let times = [0.0, 0.2];
        let tight = IntegratorConfig {
            method: Method::Rk45,
            rtol: 1e-12,
            atol: 1e-14,
            ..IntegratorConfig::default()
        };
        let reference = prob.solve_sample_with(&path, &times, &tight).unwrap()[1];
        let err_at = |h: f64| {
            let cfg = IntegratorConfig {
                method: Method::Rk4,
                rk4_step: h,
                ..IntegratorConfig::default()
            };
            (prob.solve_sample_with(&path, &times, &cfg).unwrap()[1] - reference).abs()
        };
        let (e1, e2) = (err_at(0.02), err_at(0.01));
        let ratio = e1 / e2;
        assert!(
            (10.0..24.0).contains(&ratio),
            "halving ratio {ratio} (errors {e1}, {e2})"
        );
    }

    #[test]
    fn integrators_agree_on_v_paths() {
        let grid = GridSpec::new(0.2, 0.02).unwrap();
        let drift = DriftSpec::tanh_scaled(1.0).unwrap();
        let f = TestFunction::from_coeffs(vec![0.3]).unwrap();
        let ensemble = PathEnsemble::new(16, 8, 41).unwrap();
        let r = integrator_agreement(&setup(&drift, 1.1, 1.5, grid), 0.2, Some(&f), &ensemble)
            .unwrap();
        assert!(r.pass, "max gap {}", r.max_gap);
    }

    #[test]
    fn adaptedness_late_bump_vs_inside_bump() {
        let k = 192;
        let t = 0.3;
        let grid = GridSpec::new(0.3, 0.03).unwrap();
        let drift = DriftSpec::identity();
        let f = TestFunction::from_coeffs(vec![0.3, -0.1]).unwrap();
        let ensemble = PathEnsemble::new(1500, k, 2025).unwrap();
        let st = setup(&drift, 1.0, 1.5, grid);

        let late = TestFunction::bump(k, t + 0.2, t + 0.9, 0.5).unwrap();
        let r = adaptedness_check(&st, t, &f, &late, &ensemble).unwrap();
        assert!(r.pass, "late-bump report: {r:?}");
        assert!(
            r.leakage_bound < 0.2 * r.base_value.abs(),
            "leakage {} vs base {}",
            r.leakage_bound,
            r.base_value
        );

        let inside = TestFunction::bump(k, 0.05, 0.25, 0.5).unwrap();
        let neg = adaptedness_check(&st, t, &f, &inside, &ensemble).unwrap();
        assert!(
            neg.diff.abs() > 3.0 * neg.stderr,
            "negative control not detected: {neg:?}"
        );
        assert!(
            neg.g_inside_l2 > 10.0 * r.g_inside_l2,
            "inside mass {} vs late leakage {}",
            neg.g_inside_l2,
            r.g_inside_l2
        );
    }

    #[test]
    fn lifetime_ordering_and_moment_threshold() {
        let k = 16;
        let grid = GridSpec::new(2.0, 0.05).unwrap();
        let gram = GramTable::build(k, grid, 16).unwrap();

        let r1 = lifetime_threshold(&gram, 1.0).unwrap();
        let ts = r1.t_star.expect("λ_max(Ĝ_1) must cross 1/4 (limit 4/9)");
        assert!(r1.ordering_ok, "T = {} vs t* = {ts}", r1.life_time);
        assert!(r1.life_time < ts);

        // p = 2: λ_max(Ĝ) is capped by 1.5^{−4} < 1/4, no finite threshold
        let r2 = lifetime_threshold(&gram, 2.0).unwrap();
        assert!(r2.t_star.is_none());
        assert!(r2.lambda_max_end < 0.25);
        assert!(r2.ordering_ok);

        // closed form matches Monte Carlo well inside the horizon
        let t = 0.1;
        let cf = exp_moment_closed_form(&gram, t, 1.0).unwrap();
        let ensemble = PathEnsemble::new(1, k, 31).unwrap();
        let mc = exp_moment_mc(&gram, t, 1.0, &ensemble, &[40_000]).unwrap();
        assert_relative_eq!(mc[0].mean, cf, max_relative = 0.05);

        // past t*, the closed form refuses
        let past = grid.node(((ts * 1.2) / 0.05).round() as usize);
        assert!(matches!(
            exp_moment_closed_form(&gram, past, 1.0),
            Err(Error::BeyondLifeTime(_))
        ));
    }

    #[test]
    fn closed_form_matches_monte_carlo_for_linear_drift() {
        let k = 8;
        let grid = GridSpec::new(0.2, 0.02).unwrap();
        let gram = GramTable::build(k, grid, 16).unwrap();
        let f = TestFunction::from_coeffs(vec![0.25, -0.15, 0.1]).unwrap();
        let drift = DriftSpec::identity();
        let ensemble = PathEnsemble::new(12_000, k, 909).unwrap();
        let t = 0.2;
        let p = 1.3;
        let closed = closed_form_linear(&gram, 1.4, p, t, &f, 1.0).unwrap();
        let mc = s_transform_solution(&setup(&drift, 1.4, p, grid), t, &f, &ensemble).unwrap();
        assert!(
            (mc.value - closed).abs() <= 3.0 * mc.stderr,
            "mc {} vs closed {closed} (stderr {})",
            mc.value,
            mc.stderr
        );
        // t = 0 collapses to x0
        let grid0 = GridSpec::new(0.02, 0.02).unwrap();
        let gram0 = GramTable::build(k, grid0, 16).unwrap();
        assert_relative_eq!(
            closed_form_linear(&gram0, 2.2, p, 0.0, &f, 1.0).unwrap(),
            2.2,
            max_relative = 1e-14
        );
    }

    #[test]
    fn imaginary_argument_and_positivity() {
        let k = 8;
        let grid = GridSpec::new(0.2, 0.02).unwrap();
        let gram = GramTable::build(k, grid, 16).unwrap();
        let (p, t) = (1.3, 0.2);

        // zero argument: imaginary form reduces to the real one
        let zero = TestFunction::from_coeffs(vec![0.0]).unwrap();
        let re = closed_form_linear(&gram, 1.0, p, t, &zero, 1.0).unwrap();
        let im = closed_form_linear_imaginary(&gram, 1.0, p, t, &zero, 1.0).unwrap();
        assert_relative_eq!(im.re, re, max_relative = 1e-12);
        assert_abs_diff_eq!(im.im, 0.0, epsilon = 1e-14);

        // conjugate symmetry under g ↦ −g
        let g = TestFunction::from_coeffs(vec![0.4, 0.2, -0.3]).unwrap();
        let gm = TestFunction::from_coeffs(vec![-0.4, -0.2, 0.3]).unwrap();
        let a = closed_form_linear_imaginary(&gram, 1.0, p, t, &g, 1.0).unwrap();
        let b = closed_form_linear_imaginary(&gram, 1.0, p, t, &gm, 1.0).unwrap();
        assert_relative_eq!(a.re, b.re, max_relative = 1e-12);
        assert_relative_eq!(a.im, -b.im, max_relative = 1e-12);

        let fs = vec![
            TestFunction::from_coeffs(vec![0.5, 0.0, -0.2]).unwrap(),
            TestFunction::from_coeffs(vec![-0.1, 0.3]).unwrap(),
            TestFunction::from_coeffs(vec![0.2, 0.2, 0.2, -0.4]).unwrap(),
        ];
        let r = positivity_certificate(&gram, 1.0, p, t, &fs, 1.0).unwrap();
        assert!(r.pass, "min eig {} norm {}", r.min_eigenvalue, r.norm);

        // identical arguments give a rank-one PSD matrix
        let same = vec![fs[0].clone(), fs[0].clone(), fs[0].clone()];
        let r1 = positivity_certificate(&gram, 1.0, p, t, &same, 1.0).unwrap();
        assert!(r1.pass);
        assert!(r1.min_eigenvalue.abs() <= 1e-10 * r1.norm);
    }

    #[test]
    fn regularity_and_horizon_guards() {
        let drift = DriftSpec::zero();
        let grid = GridSpec::new(0.2, 0.02).unwrap();
        let ensemble = PathEnsemble::new(4, 8, 1).unwrap();

        let mut st = setup(&drift, 1.0, 0.9, grid);
        assert!(matches!(
            solve_paths(&st, 0.2, None, &ensemble),
            Err(Error::RegularityRange { min_p, .. }) if min_p == 1.0
        ));
        st.settings.allow_low_regularity = true;
        assert!(solve_paths(&st, 0.2, None, &ensemble).is_ok());
        st.p = 0.4;
        assert!(matches!(
            solve_paths(&st, 0.2, None, &ensemble),
            Err(Error::RegularityRange { min_p, .. }) if min_p == 0.5
        ));

        // p = 1: T ≈ 0.267 < 0.4, so a long horizon must be gated
        let grid_long = GridSpec::new(0.4, 0.02).unwrap();
        let mut st = setup(&drift, 1.0, 1.0, grid_long);
        st.settings.allow_low_regularity = true;
        assert!(matches!(
            solve_paths(&st, 0.4, None, &ensemble),
            Err(Error::BeyondLifeTime(_))
        ));
        st.settings.allow_beyond_life_time = true;
        let r = solve_paths(&st, 0.4, None, &ensemble).unwrap();
        assert!(r.beyond_life_time);
    }
}

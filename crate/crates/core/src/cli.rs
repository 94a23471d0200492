//! Command-line surface. Every command produces a [`Report`]: pass/fail
//! check lines and named values on stdout, optional JSON via `--out`, and
//! wall-clock plus cache statistics on stderr (kept out of the JSON so that
//! identical config and seed give byte-identical reports).

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::basis::{
    orthonormality_residual, sup_xi_grid, GramCache, GramTable, SpectralBasis,
};
use crate::chaos::{ChaosAlgebra, TestFunction};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::qwn::{ito_formula_check, ito_square_check, x_process, ITO_SQUARE_TOL};
use crate::renorm::{error_bound_check, heat_semigroup_coeffs, proposition_check};
use crate::report::{CheckResult, Report};
use crate::scalar::ScalarFn;
use crate::sde::{
    adaptedness_check, closed_form_linear, exp_moment_closed_form, lifetime_threshold,
    positivity_certificate, s_transform_solution, solve_paths, verify_integral_identity,
    DriftSpec, PathEnsemble, SdeSetup, SolveSettings, GRONWALL_SLACK, POSITIVITY_REL_TOL,
};
use crate::suite;

#[derive(Parser)]
#[command(
    name = "wick-forge",
    version,
    about = "Numerical engine for renormalized white-noise calculus",
    after_help = "Exit status: 0 when every check passes, 1 when a check fails, \
                  2 on usage or runtime errors."
)]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Globals {
    /// JSON config file; explicit flags below override its fields
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Gaussian coordinates for ad-hoc commands
    #[arg(long = "K", global = true)]
    k: Option<usize>,
    /// chaos degree cap for ad-hoc commands
    #[arg(long = "D", global = true)]
    d_max: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads (0 = library default)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// directory for persisted Gram tables
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Monte Carlo sample count for ad-hoc commands
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// write the JSON report here
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Basis-level checks and spectral quantities
    #[command(subcommand)]
    Basis(BasisCmd),
    /// Chaos-algebra queries
    #[command(subcommand)]
    Chaos(ChaosCmd),
    /// Chain-rule identities
    #[command(subcommand)]
    Ito(ItoCmd),
    /// Drift equations driven by the renormalized square
    #[command(subcommand)]
    Sde(SdeCmd),
    /// Renormalized composition checks
    #[command(subcommand)]
    Renorm(RenormCmd),
    /// The named verification suite
    Suite(SuiteCmd),
}

#[derive(Subcommand)]
enum BasisCmd {
    /// Orthonormality residual and boundedness of the basis family
    Ortho {
        #[arg(long, default_value_t = 24)]
        quad_order: usize,
    },
    /// |δ_t^p|² with spectral tail, and the moment horizon for this p
    Delta {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        p: f64,
    },
}

#[derive(Subcommand)]
enum ChaosCmd {
    /// Distance of the interpolated square from the Wick square across p
    Star {
        /// time argument of the integrated square process
        #[arg(long)]
        t: f64,
        /// interpolation exponents, ascending
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,4,8")]
        p: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum ItoCmd {
    /// Coefficient-exact square identity at one (t, p)
    Square {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        p: f64,
    },
    /// Expectation-level chain rule for a scalar map
    General {
        /// cos | sin | tanh | id | sq | poly:<c0,c1,…>
        #[arg(long)]
        phi: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        p: f64,
        /// test-function JSON ({"coeffs": […]} or {"bump": {…}})
        #[arg(long, value_name = "FILE")]
        f: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SdeArgs {
    /// zero | id | tanh | tanh:<c> | linear:<κ>
    #[arg(long, default_value = "id")]
    b: String,
    #[arg(long, default_value_t = 1.0)]
    x0: f64,
    #[arg(long, default_value_t = 1.5)]
    p: f64,
    #[arg(long)]
    t: f64,
    /// test-function JSON file; a zero forcing when omitted
    #[arg(long, value_name = "FILE")]
    testfn: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SdeCmd {
    /// Solve the ensemble and report the endpoint statistics
    Solve {
        #[command(flatten)]
        args: SdeArgs,
    },
    /// Pathwise and expectation-level integral-identity verification
    Verify {
        #[command(flatten)]
        args: SdeArgs,
    },
    /// Future-supported forcing must not move the value at t
    Adapted {
        #[command(flatten)]
        args: SdeArgs,
        /// perturbation JSON file
        #[arg(long, value_name = "FILE")]
        g: PathBuf,
    },
    /// Moment horizon, spectral threshold, and their ordering
    Lifetime {
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// Closed-form linear-drift value against the sampled value
    Linear {
        #[command(flatten)]
        args: SdeArgs,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
    /// Positive-semidefiniteness certificate of the solution kernel
    Positivity {
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        #[arg(long, default_value_t = 1.5)]
        p: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// one or more test-function JSON files
        #[arg(long, value_name = "FILE", required = true)]
        testfn: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RenormCmd {
    /// Composition identity: direct map vs heat-coefficient recomposition
    Prop {
        #[arg(long)]
        phi: String,
        /// first-chaos coordinates of the argument
        #[arg(long, value_delimiter = ',')]
        h: Vec<f64>,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 10)]
        degree: usize,
    },
    /// Curvature error bound for the smoothed composition
    Bound {
        #[arg(long)]
        phi: String,
        #[arg(long, value_delimiter = ',')]
        h: Vec<f64>,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 12)]
        degree: usize,
        /// sup |φ″|; NaN-free and honest, or the check is rejected
        #[arg(long)]
        sup_phi2: f64,
    },
}

#[derive(Args)]
struct SuiteCmd {
    /// run every check
    #[arg(long, conflicts_with = "only")]
    all: bool,
    /// comma-separated subset of checks
    #[arg(long, value_delimiter = ',', value_name = "NAME")]
    only: Vec<String>,
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let started = Instant::now();
    match execute(&cli) {
        Ok((report, cache)) => {
            for line in report.lines() {
                println!("{line}");
            }
            for (name, v) in &report.values {
                println!("{name} = {v:.12e}");
            }
            if let Some(path) = &cli.globals.out {
                match report.to_json() {
                    Ok(json) => {
                        if let Err(e) = std::fs::write(path, json + "\n") {
                            eprintln!("error: cannot write {}: {e}", path.display());
                            return 2;
                        }
                    }
                    Err(e) => {
                        eprintln!("error: cannot serialize report: {e}");
                        return 2;
                    }
                }
            }
            let (hits, misses) = cache.stats();
            eprintln!(
                "elapsed {:.2}s; gram cache: {hits} hits, {misses} misses",
                started.elapsed().as_secs_f64()
            );
            if report.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn resolve_config(globals: &Globals) -> Result<RunConfig> {
    let mut cfg = match &globals.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(k) = globals.k {
        cfg.k = k;
    }
    if let Some(d) = globals.d_max {
        cfg.d_max = d;
    }
    if let Some(s) = globals.seed {
        cfg.seed = s;
    }
    if let Some(t) = globals.threads {
        cfg.threads = t;
    }
    if let Some(dir) = &globals.cache_dir {
        cfg.cache_dir = Some(dir.clone());
    }
    if let Some(n) = globals.samples {
        cfg.samples = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(Report, GramCache)> {
    let cfg = resolve_config(&cli.globals)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cache = GramCache::new(cfg.cache_dir.clone())?;
    let report = match &cli.command {
        Command::Suite(args) => {
            if args.all || args.only.is_empty() {
                suite::run_all(&cfg, &cache)?
            } else {
                suite::run_checks(&args.only, &cfg, &cache)?
            }
        }
        Command::Basis(cmd) => basis_cmd(cmd, &cfg)?,
        Command::Chaos(cmd) => chaos_cmd(cmd, &cfg, &cache)?,
        Command::Ito(cmd) => ito_cmd(cmd, &cfg, &cache)?,
        Command::Sde(cmd) => sde_cmd(cmd, &cfg, &cache)?,
        Command::Renorm(cmd) => renorm_cmd(cmd, &cfg)?,
    };
    Ok((report, cache))
}

fn load_testfn(path: &PathBuf, k: usize) -> Result<TestFunction> {
    let text = std::fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    TestFunction::from_json(&v, k)
}

fn gram_for(cache: &GramCache, cfg: &RunConfig, report: &mut Report) -> Result<std::sync::Arc<GramTable>> {
    let table = cache.get_or_build(cfg.k, cfg.grid, cfg.quad_order)?;
    report.gram_tables.insert(
        format!(
            "k{}_t{}_dt{}_q{}",
            cfg.k, cfg.grid.t_max, cfg.grid.dt, cfg.quad_order
        ),
        table.content_hash(),
    );
    Ok(table)
}

fn basis_cmd(cmd: &BasisCmd, cfg: &RunConfig) -> Result<Report> {
    let mut report = Report::new(cfg.clone());
    match cmd {
        BasisCmd::Ortho { quad_order } => {
            if *quad_order == 0 || *quad_order > 256 {
                return Err(Error::Config(format!(
                    "quad_order = {quad_order} outside 1..=256"
                )));
            }
            let r = orthonormality_residual(cfg.k, *quad_order);
            let sup = sup_xi_grid(cfg.k, r.horizon.max(10.0), 10_001);
            report.value("horizon", r.horizon);
            report.value("tail_bound", r.tail_bound);
            report.value("sup_xi", sup);
            let bound = cfg.tolerances.quad_tol;
            report.push(CheckResult {
                name: "ortho".into(),
                value: r.max_residual,
                bound,
                stderr: None,
                pass: r.max_residual <= bound && sup <= 1.0 + 1e-12,
                detail: format!("K={}, pairwise residual; sup|ξ| − 1 = {:+.2e}", cfg.k, sup - 1.0),
            });
        }
        BasisCmd::Delta { t, p } => {
            let basis = SpectralBasis::new(cfg.k)?;
            let d = basis.delta_norm_sq(*t, *p)?;
            let sup = basis.sup_delta_norm(*p, cfg.grid.t_max.max(2.0), 4097)?;
            report.value("delta_sq_truncated", d.truncated);
            report.value("delta_sq", d.with_tail());
            report.value("tail_upper", d.tail_upper);
            report.value("sup_delta_sq", sup.with_tail());
            report.value("sup_argmax", sup.argmax);
            report.value("life_time", sup.life_time());
        }
    }
    Ok(report)
}

fn chaos_cmd(cmd: &ChaosCmd, cfg: &RunConfig, cache: &GramCache) -> Result<Report> {
    let mut report = Report::new(cfg.clone());
    match cmd {
        ChaosCmd::Star { t, p } => {
            if p.len() < 2 {
                return Err(Error::Config("need at least two p values".into()));
            }
            let gram = gram_for(cache, cfg, &mut report)?;
            let algebra = ChaosAlgebra::new(cfg.k, cfg.d_max.max(4))?;
            let x = x_process(&gram, *t)?;
            let wick_sq = algebra.wick(&x, &x)?;
            let denom = wick_sq.norm(-2.0);
            let mut neg = wick_sq.clone();
            neg.scale(-1.0);
            let mut dists = Vec::with_capacity(p.len());
            for &pi in p {
                let mut diff = algebra.star(&x, &x, pi)?;
                diff.add_assign(&neg)?;
                let d = diff.norm(-2.0) / denom;
                report.value(&format!("distance_p{pi}"), d);
                dists.push(d);
            }
            let worst_ratio = dists
                .windows(2)
                .map(|w| w[1] / w[0])
                .fold(0.0f64, f64::max);
            report.push(CheckResult {
                name: "star-monotone".into(),
                value: worst_ratio,
                bound: 1.0,
                stderr: None,
                pass: worst_ratio < 1.0,
                detail: format!(
                    "K={}, t={t}: worst consecutive distance ratio across p={p:?}",
                    cfg.k
                ),
            });
        }
    }
    Ok(report)
}

fn ito_cmd(cmd: &ItoCmd, cfg: &RunConfig, cache: &GramCache) -> Result<Report> {
    let mut report = Report::new(cfg.clone());
    match cmd {
        ItoCmd::Square { t, p } => {
            let gram = gram_for(cache, cfg, &mut report)?;
            let algebra = ChaosAlgebra::new(cfg.k, cfg.d_max.max(4))?;
            let r = ito_square_check(&gram, *t, *p, &algebra)?;
            report.value("constant_lhs", r.constant_lhs);
            report.value("constant_rhs", r.constant_rhs);
            report.push(CheckResult {
                name: "ito-square".into(),
                value: r.max_coeff_discrepancy,
                bound: ITO_SQUARE_TOL,
                stderr: None,
                pass: r.pass,
                detail: format!("K={}, t={t}, p={p}: coefficient discrepancy", cfg.k),
            });
        }
        ItoCmd::General { phi, t, p, f } => {
            let map = ScalarFn::by_name(phi)?;
            let f = match f {
                Some(path) => load_testfn(path, cfg.k)?,
                None => TestFunction::from_coeffs(vec![0.0; cfg.k])?,
            };
            let ensemble = PathEnsemble::new(cfg.samples, cfg.k, cfg.seed)?;
            let r = ito_formula_check(&map, *p, *t, &f, cfg.grid, &ensemble)?;
            report.value("lhs", r.lhs);
            report.value("rhs", r.rhs);
            report.value("max_pathwise_residual", r.max_pathwise_residual);
            report.push(CheckResult {
                name: "ito-general".into(),
                value: r.diff.abs(),
                bound: 3.0 * (r.mc_stderr + r.quad_bound),
                stderr: Some(r.mc_stderr),
                pass: r.pass,
                detail: format!(
                    "{phi} map, K={}, {} paths, {} derivative probes",
                    cfg.k,
                    r.samples,
                    r.probes.len()
                ),
            });
        }
    }
    Ok(report)
}

fn sde_cmd(cmd: &SdeCmd, cfg: &RunConfig, cache: &GramCache) -> Result<Report> {
    let mut report = Report::new(cfg.clone());
    match cmd {
        SdeCmd::Solve { args } => {
            let drift = DriftSpec::by_name(&args.b)?;
            let setup = SdeSetup {
                drift: &drift,
                x0: args.x0,
                p: args.p,
                grid: cfg.grid,
                settings: SolveSettings::default(),
            };
            let f = args
                .testfn
                .as_ref()
                .map(|path| load_testfn(path, cfg.k))
                .transpose()?;
            let ensemble = PathEnsemble::new(cfg.samples, cfg.k, cfg.seed)?;
            let r = solve_paths(&setup, args.t, f.as_ref(), &ensemble)?;
            let last = r.times.len() - 1;
            report.value("v_mean_end", r.v_mean[last]);
            report.value("v_stderr_end", r.v_stderr[last]);
            report.value("zeta_mean_end", r.zeta_mean[last]);
            report.value("life_time", r.life_time);
            report.push(CheckResult {
                name: "envelope".into(),
                value: r.gronwall_max_rel_excess,
                bound: GRONWALL_SLACK,
                stderr: None,
                pass: r.gronwall_pass,
                detail: format!(
                    "drift {}, {} paths: worst relative excess over the a-priori bound",
                    r.drift, r.samples
                ),
            });
        }
        SdeCmd::Verify { args } => {
            let drift = DriftSpec::by_name(&args.b)?;
            let setup = SdeSetup {
                drift: &drift,
                x0: args.x0,
                p: args.p,
                grid: cfg.grid,
                settings: SolveSettings::default(),
            };
            let f = match &args.testfn {
                Some(path) => load_testfn(path, cfg.k)?,
                None => TestFunction::from_coeffs(vec![0.0; cfg.k])?,
            };
            let ensemble = PathEnsemble::new(cfg.samples, cfg.k, cfg.seed)?;
            let r = verify_integral_identity(&setup, args.t, &f, &ensemble)?;
            report.value("expectation_residual", r.expectation_residual);
            report.value("s_value", r.s_value);
            report.push(CheckResult {
                name: "identity".into(),
                value: r.max_pathwise_residual,
                bound: r.pathwise_tol,
                stderr: Some(r.expectation_stderr),
                pass: r.pass,
                detail: format!(
                    "drift {}, {} paths: max pathwise defect; expectation residual {:+.2e}",
                    args.b, r.samples, r.expectation_residual
                ),
            });
        }
        SdeCmd::Adapted { args, g } => {
            let drift = DriftSpec::by_name(&args.b)?;
            let setup = SdeSetup {
                drift: &drift,
                x0: args.x0,
                p: args.p,
                grid: cfg.grid,
                settings: SolveSettings::default(),
            };
            let f = match &args.testfn {
                Some(path) => load_testfn(path, cfg.k)?,
                None => TestFunction::from_coeffs(vec![0.0; cfg.k])?,
            };
            let g = load_testfn(g, cfg.k)?;
            let ensemble = PathEnsemble::new(cfg.samples, cfg.k, cfg.seed)?;
            let r = adaptedness_check(&setup, args.t, &f, &g, &ensemble)?;
            report.value("diff", r.diff);
            report.value("leakage_bound", r.leakage_bound);
            report.value("g_inside_l2", r.g_inside_l2);
            report.value("base_value", r.base_value);
            report.push(CheckResult {
                name: "adapted".into(),
                value: r.diff.abs(),
                bound: 3.0 * r.stderr + r.leakage_bound,
                stderr: Some(r.stderr),
                pass: r.pass,
                detail: format!(
                    "drift {}, {} paths: shift from the added forcing vs statistics + leakage",
                    args.b, r.samples
                ),
            });
        }
        SdeCmd::Lifetime { p } => {
            let gram = gram_for(cache, cfg, &mut report)?;
            let r = lifetime_threshold(&gram, *p)?;
            report.value("life_time", r.life_time);
            report.value("life_time_truncated", r.life_time_truncated);
            report.value("lambda_max_end", r.lambda_max_end);
            if let Some(ts) = r.t_star {
                report.value("t_star", ts);
                if let Ok(m) = exp_moment_closed_form(&gram, cfg.grid.dt, *p) {
                    report.value("exp_moment_at_dt", m);
                }
            }
            let (bound, detail) = match r.t_star {
                Some(ts) => (ts, format!("p={p}: horizon must precede the spectral threshold {ts:.4}")),
                None => (
                    cfg.grid.t_max,
                    format!(
                        "p={p}: threshold not reached on [0, {}] (λ_max ends at {:.4})",
                        cfg.grid.t_max, r.lambda_max_end
                    ),
                ),
            };
            report.push(CheckResult {
                name: "ordering".into(),
                value: r.life_time,
                bound,
                stderr: None,
                pass: r.ordering_ok,
                detail,
            });
        }
        SdeCmd::Linear { args, kappa } => {
            let drift = DriftSpec::linear(*kappa);
            let setup = SdeSetup {
                drift: &drift,
                x0: args.x0,
                p: args.p,
                grid: cfg.grid,
                settings: SolveSettings::default(),
            };
            let f = match &args.testfn {
                Some(path) => load_testfn(path, cfg.k)?,
                None => TestFunction::from_coeffs(vec![0.0; cfg.k])?,
            };
            let gram = gram_for(cache, cfg, &mut report)?;
            let closed = closed_form_linear(&gram, args.x0, args.p, args.t, &f, *kappa)?;
            let ensemble = PathEnsemble::new(cfg.samples, cfg.k, cfg.seed)?;
            let st = s_transform_solution(&setup, args.t, &f, &ensemble)?;
            report.value("closed_form", closed);
            report.value("monte_carlo", st.value);
            report.push(CheckResult {
                name: "linear".into(),
                value: (st.value - closed).abs(),
                bound: cfg.tolerances.mc_sigma * st.stderr,
                stderr: Some(st.stderr),
                pass: (st.value - closed).abs() <= cfg.tolerances.mc_sigma * st.stderr,
                detail: format!(
                    "κ={kappa}, {} paths: |closed − sampled| vs {}σ",
                    st.samples, cfg.tolerances.mc_sigma
                ),
            });
        }
        SdeCmd::Positivity {
            x0,
            p,
            t,
            kappa,
            testfn,
        } => {
            let gram = gram_for(cache, cfg, &mut report)?;
            let fs: Vec<TestFunction> = testfn
                .iter()
                .map(|path| load_testfn(path, cfg.k))
                .collect::<Result<_>>()?;
            let r = positivity_certificate(&gram, *x0, *p, *t, &fs, *kappa)?;
            report.value("min_eigenvalue", r.min_eigenvalue);
            report.value("norm", r.norm);
            report.push(CheckResult {
                name: "positivity".into(),
                value: -r.min_eigenvalue.min(0.0),
                bound: POSITIVITY_REL_TOL * r.norm,
                stderr: None,
                pass: r.pass,
                detail: format!("{} functions at t={t}: eigenvalue defect of the kernel", r.n),
            });
        }
    }
    Ok(report)
}

fn renorm_cmd(cmd: &RenormCmd, cfg: &RunConfig) -> Result<Report> {
    let mut report = Report::new(cfg.clone());
    match cmd {
        RenormCmd::Prop { phi, h, p, degree } => {
            if h.is_empty() {
                return Err(Error::Config("need at least one coordinate in --h".into()));
            }
            let map = ScalarFn::by_name(phi)?;
            let algebra = ChaosAlgebra::new(h.len().max(2), (2 * degree).max(cfg.d_max))?;
            let r = proposition_check(&algebra, &map, h, *p, *degree)?;
            report.value("smoothed_variance", r.smoothed_variance);
            report.push(CheckResult {
                name: "composition".into(),
                value: r.max_coeff_discrepancy,
                bound: r.tol,
                stderr: None,
                pass: r.pass,
                detail: format!("{phi} at p={p}, degree {degree}: dual-path coefficient gap"),
            });
        }
        RenormCmd::Bound {
            phi,
            h,
            p,
            degree,
            sup_phi2,
        } => {
            if h.is_empty() {
                return Err(Error::Config("need at least one coordinate in --h".into()));
            }
            let map = ScalarFn::by_name(phi)?;
            let algebra = ChaosAlgebra::new(h.len().max(2), (2 * degree).max(cfg.d_max))?;
            let r = error_bound_check(&algebra, &map, h, *p, *degree, *sup_phi2)?;
            report.value("lhs_norm", r.lhs_norm);
            report.value("rhs", r.rhs);
            report.value("c_tightest", r.c_tightest);
            report.value("full_variance", r.full_variance);
            report.value("smoothed_variance", r.smoothed_variance);
            let _ = heat_semigroup_coeffs(&map, r.full_variance.max(1e-12), *degree)?;
            report.push(CheckResult {
                name: "error-bound".into(),
                value: r.lhs_norm,
                bound: r.rhs,
                stderr: None,
                pass: r.pass,
                detail: format!(
                    "{phi} at p={p}, degree {degree}: smoothing error vs curvature bound{}",
                    if r.vacuous { " (vacuous: no regularity gap)" } else { "" }
                ),
            });
        }
    }
    Ok(report)
}

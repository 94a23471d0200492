//! C ABI for the wick-forge engine.
//!
//! Conventions:
//! - Every fallible call returns a [`WfStatus`]; `WF_STATUS_OK` is zero.
//! - Results are written through `out` pointers, never returned by value.
//! - Handles (`WfGram`, `WfAlgebra`, `WfChaos`) are opaque. A call that
//!   stores a handle in `out` transfers ownership to the caller, who must
//!   release it with the matching `wf_*_free`. Free functions accept null.
//! - On any non-OK status a human-readable message is stored in thread-local
//!   state and can be fetched with [`wf_last_error_message`].
//! - Handles are immutable after construction except through the explicitly
//!   mutating calls (`wf_chaos_scale`, `wf_chaos_add_assign`,
//!   `wf_chaos_prune`); sharing a handle across threads requires the caller
//!   to serialize those.
//!
//! Panics never unwind across the boundary: each entry point catches them
//! and reports `WF_STATUS_PANIC`.

// The safety contract (null handling, ownership transfer, thread locality)
// is the module-level C contract above; per-function `# Safety` sections
// would only duplicate it into the generated header.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use wick_forge::basis::{GramTable, GridSpec, SpectralBasis};
use wick_forge::chaos::{ChaosAlgebra, ChaosExpansion, TestFunction};
use wick_forge::qwn::x_process;
use wick_forge::sde::{closed_form_linear, exp_moment_closed_form, lifetime_threshold};
use wick_forge::Error;

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument was outside its documented domain.
    InvalidArgument = 2,
    /// A basis index exceeded the coordinate count.
    IndexRange = 3,
    /// A product would exceed the algebra's degree cap.
    DegreeCap = 4,
    /// Operands live on different coordinate counts.
    MixedK = 5,
    /// A spectral rescaling overflowed the double range.
    Overflow = 6,
    /// Quadrature refinement failed to converge.
    QuadratureStall = 7,
    /// A time fell outside the cached grid.
    GridRange = 8,
    /// A moment was requested past its blow-up time.
    BeyondLifeTime = 9,
    /// A cache or serialization payload was rejected.
    CacheFormat = 10,
    /// An I/O or encoding failure.
    Io = 11,
    /// The caller-supplied buffer was too small.
    BufferTooSmall = 12,
    /// An internal panic was caught at the boundary.
    Panic = 13,
}

/// Opaque handle: dense Gram table of pairing integrals on a fixed grid.
pub struct WfGram {
    table: GramTable,
}

/// Opaque handle: product driver with a fixed coordinate count and degree cap.
pub struct WfAlgebra {
    inner: ChaosAlgebra,
}

/// Opaque handle: finite chaos expansion.
pub struct WfChaos {
    inner: ChaosExpansion,
}

/// Flattened blow-up scan. `t_star` is negative when the second-moment
/// threshold is not reached on the scanned grid.
#[repr(C)]
pub struct WfLifetime {
    pub p: f64,
    pub k: usize,
    /// Existence horizon with the spectral tail included.
    pub life_time: f64,
    /// Same horizon from the truncated sum only.
    pub life_time_truncated: f64,
    /// Where the scan attained its supremum.
    pub sup_argmax: f64,
    pub t_star: f64,
    /// Largest Gram eigenvalue at the end of the grid, for context.
    pub lambda_max_end: f64,
    /// life_time <= t_star whenever the threshold was reached.
    pub ordering_ok: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl std::fmt::Display) {
    LAST_ERROR.with(|cell| {
        let mut slot = cell.borrow_mut();
        slot.clear();
        use std::fmt::Write;
        let _ = write!(slot, "{msg}");
    });
}

fn clear_error() {
    LAST_ERROR.with(|cell| cell.borrow_mut().clear());
}

fn status_of(e: &Error) -> WfStatus {
    match e {
        Error::Domain(_)
        | Error::Config(_)
        | Error::RegularityRange { .. }
        | Error::MissingGrowthBound => WfStatus::InvalidArgument,
        Error::IndexRange { .. } => WfStatus::IndexRange,
        Error::DegreeCap { .. } => WfStatus::DegreeCap,
        Error::MixedK(..) => WfStatus::MixedK,
        Error::GammaOverflow { .. } => WfStatus::Overflow,
        Error::QuadratureStall { .. } => WfStatus::QuadratureStall,
        Error::GridRange { .. } => WfStatus::GridRange,
        Error::BeyondLifeTime(_) => WfStatus::BeyondLifeTime,
        Error::CacheFormat(_) => WfStatus::CacheFormat,
        Error::Io(_) | Error::Json(_) => WfStatus::Io,
    }
}

/// Clears the error slot, runs the body, and converts panics into a status.
fn guard(f: impl FnOnce() -> WfStatus) -> WfStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic caught at the C boundary");
            WfStatus::Panic
        }
    }
}

macro_rules! nonnull {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_error(concat!("null pointer argument: ", stringify!($ptr)));
            return WfStatus::NullArgument;
        }
    };
}

macro_rules! try_ffi {
    ($expr:expr) => {
        match $expr {
            Ok(v) => v,
            Err(e) => {
                let status = status_of(&e);
                set_error(e);
                return status;
            }
        }
    };
}

/// Copies `msg` NUL-terminated into `buf` (truncating to `cap - 1` bytes)
/// and returns the full untruncated length.
unsafe fn copy_str(msg: &str, buf: *mut c_char, cap: usize) -> usize {
    if !buf.is_null() && cap > 0 {
        let n = msg.len().min(cap - 1);
        std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
        *buf.add(n) = 0;
    }
    msg.len()
}

/// Version of the underlying engine as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the message of the most recent failure on this thread into `buf`
/// (NUL-terminated, truncated to fit) and returns the message's full byte
/// length, 0 when the last call on this thread succeeded.
#[no_mangle]
pub unsafe extern "C" fn wf_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|cell| copy_str(&cell.borrow(), buf, cap))
}

// ---------------------------------------------------------------------------
// Spectral queries that need no handle.

/// Tail-corrected squared norm of the order-(-p) smoothed point mass at `t`,
/// computed from `k` explicit coordinates.
#[no_mangle]
pub unsafe extern "C" fn wf_delta_norm_sq(k: usize, t: f64, p: f64, out: *mut f64) -> WfStatus {
    guard(|| {
        nonnull!(out);
        let basis = try_ffi!(SpectralBasis::new(k));
        let norm = try_ffi!(basis.delta_norm_sq(t, p));
        *out = norm.with_tail();
        WfStatus::Ok
    })
}

/// Existence horizon 1 / (4 sup_t |A^{-p} d_t|^2), the sup scanned on
/// `points` equispaced times in [0, t_scan] with the spectral tail included.
#[no_mangle]
pub unsafe extern "C" fn wf_life_time(
    k: usize,
    p: f64,
    t_scan: f64,
    points: usize,
    out: *mut f64,
) -> WfStatus {
    guard(|| {
        nonnull!(out);
        let basis = try_ffi!(SpectralBasis::new(k));
        let sup = try_ffi!(basis.sup_delta_norm(p, t_scan, points));
        *out = sup.life_time();
        WfStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Gram tables.

/// Builds the dense table of pairing integrals for `k` coordinates on the
/// uniform grid (t_max, dt). On success stores a new handle in `out`.
#[no_mangle]
pub unsafe extern "C" fn wf_gram_build(
    k: usize,
    t_max: f64,
    dt: f64,
    quad_order: usize,
    out: *mut *mut WfGram,
) -> WfStatus {
    guard(|| {
        nonnull!(out);
        let grid = try_ffi!(GridSpec::new(t_max, dt));
        let table = try_ffi!(GramTable::build(k, grid, quad_order));
        *out = Box::into_raw(Box::new(WfGram { table }));
        WfStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_gram_free(gram: *mut WfGram) {
    if !gram.is_null() {
        drop(Box::from_raw(gram));
    }
}

/// Coordinate count of the table.
#[no_mangle]
pub unsafe extern "C" fn wf_gram_k(gram: *const WfGram, out: *mut usize) -> WfStatus {
    guard(|| {
        nonnull!(gram);
        nonnull!(out);
        *out = (*gram).table.k;
        WfStatus::Ok
    })
}

/// Hex digest identifying the table's exact contents. `cap` must be at
/// least 65 (64 hex digits plus the terminating NUL).
#[no_mangle]
pub unsafe extern "C" fn wf_gram_content_hash(
    gram: *const WfGram,
    buf: *mut c_char,
    cap: usize,
) -> WfStatus {
    guard(|| {
        nonnull!(gram);
        nonnull!(buf);
        let hash = (*gram).table.content_hash();
        if cap <= hash.len() {
            set_error(format!(
                "content hash needs {} bytes, buffer holds {cap}",
                hash.len() + 1
            ));
            return WfStatus::BufferTooSmall;
        }
        copy_str(&hash, buf, cap);
        WfStatus::Ok
    })
}

/// Scans the table's grid for the second-moment blow-up threshold and fills
/// a flattened report.
#[no_mangle]
pub unsafe extern "C" fn wf_lifetime_scan(
    gram: *const WfGram,
    p: f64,
    out: *mut WfLifetime,
) -> WfStatus {
    guard(|| {
        nonnull!(gram);
        nonnull!(out);
        let report = try_ffi!(lifetime_threshold(&(*gram).table, p));
        *out = WfLifetime {
            p: report.p,
            k: report.k,
            life_time: report.life_time,
            life_time_truncated: report.life_time_truncated,
            sup_argmax: report.sup_argmax,
            t_star: report.t_star.unwrap_or(-1.0),
            lambda_max_end: report.lambda_max_end,
            ordering_ok: report.ordering_ok,
        };
        WfStatus::Ok
    })
}

/// Closed-form exponential moment E[exp(2 zeta_t)] at a grid node, valid
/// strictly below the blow-up threshold.
#[no_mangle]
pub unsafe extern "C" fn wf_exp_moment(
    gram: *const WfGram,
    t: f64,
    p: f64,
    out: *mut f64,
) -> WfStatus {
    guard(|| {
        nonnull!(gram);
        nonnull!(out);
        *out = try_ffi!(exp_moment_closed_form(&(*gram).table, t, p));
        WfStatus::Ok
    })
}

/// Closed form for E[f(t) X_t] under linear drift `kappa x`, with `f` given
/// by its `f_len` leading basis coefficients.
#[no_mangle]
pub unsafe extern "C" fn wf_linear_closed_form(
    gram: *const WfGram,
    x0: f64,
    p: f64,
    t: f64,
    f_coeffs: *const f64,
    f_len: usize,
    kappa: f64,
    out: *mut f64,
) -> WfStatus {
    guard(|| {
        nonnull!(gram);
        nonnull!(out);
        if f_len > 0 {
            nonnull!(f_coeffs);
        }
        let coeffs = std::slice::from_raw_parts(f_coeffs, f_len).to_vec();
        let f = try_ffi!(TestFunction::from_coeffs(coeffs));
        *out = try_ffi!(closed_form_linear(&(*gram).table, x0, p, t, &f, kappa));
        WfStatus::Ok
    })
}

/// Renormalized square of the smoothed noise at time `t`, integrated over
/// [0, t] on the table's grid; stores a new expansion handle in `out`.
#[no_mangle]
pub unsafe extern "C" fn wf_x_process(
    gram: *const WfGram,
    t: f64,
    out: *mut *mut WfChaos,
) -> WfStatus {
    guard(|| {
        nonnull!(gram);
        nonnull!(out);
        let x = try_ffi!(x_process(&(*gram).table, t));
        *out = Box::into_raw(Box::new(WfChaos { inner: x }));
        WfStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Chaos expansions.

/// Constant expansion `c` on `k` coordinates.
#[no_mangle]
pub unsafe extern "C" fn wf_chaos_constant(k: usize, c: f64, out: *mut *mut WfChaos) -> WfStatus {
    guard(|| {
        nonnull!(out);
        // Reuse the basis constructor's range check: expansions themselves
        // accept any k, but the C surface keeps one validation story.
        try_ffi!(SpectralBasis::new(k));
        *out = Box::into_raw(Box::new(WfChaos {
            inner: ChaosExpansion::constant(k, c),
        }));
        WfStatus::Ok
    })
}

/// First-order expansion with the given `len <= k` leading coefficients.
#[no_mangle]
pub unsafe extern "C" fn wf_chaos_first_order(
    k: usize,
    coeffs: *const f64,
    len: usize,
    out: *mut *mut WfChaos,
) -> WfStatus {
    guard(|| {
        nonnull!(out);
        if len > 0 {
            nonnull!(coeffs);
        }
        try_ffi!(SpectralBasis::new(k));
        let slice = std::slice::from_raw_parts(coeffs, len);
        let x = try_ffi!(ChaosExpansion::first_chaos(k, slice));
        *out = Box::into_raw(Box::new(WfChaos { inner: x }));
        WfStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_chaos_clone(x: *const WfChaos, out: *mut *mut WfChaos) -> WfStatus {
    guard(|| {
        nonnull!(x);
        nonnull!(out);
        *out = Box::into_raw(Box::new(WfChaos {
            inner: (*x).inner.clone(),
        }));
        WfStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_chaos_free(x: *mut WfChaos) {
    if !x.is_null() {
        drop(Box::from_raw(x));
    }
}

/// Coordinate count the expansion lives on.
#[no_mangle]
pub unsafe extern "C" fn wf_chaos_k(x: *const WfChaos, out: *mut usize) -> WfStatus {
    guard(|| {
        nonnull!(x);
        nonnull!(out);
        *out = (*x).inner.k();
        WfStatus::Ok
    })
}

/// Number of stored (index, coefficient) terms.
#[no_mangle]
pub unsafe extern "C" fn wf_chaos_len(x: *const WfChaos, out: *mut usize) -> WfStatus {
    guard(|| {
        nonnull!(x);
        nonnull!(out);
        *out = (*x).inner.len();
        WfStatus::Ok
    })
}

/// Largest total degree among the stored terms (0 for the zero expansion).
#[no_mangle]
pub unsafe extern "C" fn wf_chaos_max_degree(x: *const WfChaos, out: *mut usize) -> WfStatus {
    guard(|| {
        nonnull!(x);
        nonnull!(out);
        *out = (*x).inner.max_degree();
        WfStatus::Ok
    })
}

/// Graded norm with smoothing exponent `q` (negative q weights down high
/// degrees; q = 0 is the plain L2 norm of the coefficients).
#[no_mangle]
pub unsafe extern "C" fn wf_chaos_norm(x: *const WfChaos, q: f64, out: *mut f64) -> WfStatus {
    guard(|| {
        nonnull!(x);
        nonnull!(out);
        *out = (*x).inner.norm(q);
        WfStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_chaos_scale(x: *mut WfChaos, s: f64) -> WfStatus {
    guard(|| {
        nonnull!(x);
        (*x).inner.scale(s);
        WfStatus::Ok
    })
}

/// In-place sum `x += y`; both operands must share the coordinate count.
#[no_mangle]
pub unsafe extern "C" fn wf_chaos_add_assign(x: *mut WfChaos, y: *const WfChaos) -> WfStatus {
    guard(|| {
        nonnull!(x);
        nonnull!(y);
        try_ffi!((*x).inner.add_assign(&(*y).inner));
        WfStatus::Ok
    })
}

/// Drops terms with |coefficient| <= eps.
#[no_mangle]
pub unsafe extern "C" fn wf_chaos_prune(x: *mut WfChaos, eps: f64) -> WfStatus {
    guard(|| {
        nonnull!(x);
        (*x).inner.prune(eps);
        WfStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Products.

/// Product driver for `k` coordinates; results are truncated at total
/// degree `max_degree`.
#[no_mangle]
pub unsafe extern "C" fn wf_algebra_new(
    k: usize,
    max_degree: usize,
    out: *mut *mut WfAlgebra,
) -> WfStatus {
    guard(|| {
        nonnull!(out);
        let inner = try_ffi!(ChaosAlgebra::new(k, max_degree));
        *out = Box::into_raw(Box::new(WfAlgebra { inner }));
        WfStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_algebra_free(algebra: *mut WfAlgebra) {
    if !algebra.is_null() {
        drop(Box::from_raw(algebra));
    }
}

unsafe fn binary_op(
    algebra: *const WfAlgebra,
    x: *const WfChaos,
    y: *const WfChaos,
    out: *mut *mut WfChaos,
    f: impl FnOnce(
        &ChaosAlgebra,
        &ChaosExpansion,
        &ChaosExpansion,
    ) -> wick_forge::Result<ChaosExpansion>,
) -> WfStatus {
    nonnull!(algebra);
    nonnull!(x);
    nonnull!(y);
    nonnull!(out);
    let z = try_ffi!(f(&(*algebra).inner, &(*x).inner, &(*y).inner));
    *out = Box::into_raw(Box::new(WfChaos { inner: z }));
    WfStatus::Ok
}

/// Pointwise product of two expansions.
#[no_mangle]
pub unsafe extern "C" fn wf_multiply(
    algebra: *const WfAlgebra,
    x: *const WfChaos,
    y: *const WfChaos,
    out: *mut *mut WfChaos,
) -> WfStatus {
    guard(|| binary_op(algebra, x, y, out, |a, x, y| a.multiply(x, y)))
}

/// Wick product of two expansions.
#[no_mangle]
pub unsafe extern "C" fn wf_wick(
    algebra: *const WfAlgebra,
    x: *const WfChaos,
    y: *const WfChaos,
    out: *mut *mut WfChaos,
) -> WfStatus {
    guard(|| binary_op(algebra, x, y, out, |a, x, y| a.wick(x, y)))
}

/// Interpolating product: p = 0 is the pointwise product and large p
/// approaches the Wick product.
#[no_mangle]
pub unsafe extern "C" fn wf_star(
    algebra: *const WfAlgebra,
    x: *const WfChaos,
    y: *const WfChaos,
    p: f64,
    out: *mut *mut WfChaos,
) -> WfStatus {
    guard(|| binary_op(algebra, x, y, out, |a, x, y| a.star(x, y, p)))
}

/// Second-quantized scaling by the spectral weights to the power `-p`.
#[no_mangle]
pub unsafe extern "C" fn wf_gamma(
    algebra: *const WfAlgebra,
    x: *const WfChaos,
    p: f64,
    out: *mut *mut WfChaos,
) -> WfStatus {
    guard(|| {
        nonnull!(algebra);
        nonnull!(x);
        nonnull!(out);
        let z = try_ffi!((*algebra).inner.gamma(&(*x).inner, p));
        *out = Box::into_raw(Box::new(WfChaos { inner: z }));
        WfStatus::Ok
    })
}

/// n-fold Wick power of an expansion.
#[no_mangle]
pub unsafe extern "C" fn wf_wick_power(
    algebra: *const WfAlgebra,
    x: *const WfChaos,
    n: usize,
    out: *mut *mut WfChaos,
) -> WfStatus {
    guard(|| {
        nonnull!(algebra);
        nonnull!(x);
        nonnull!(out);
        let z = try_ffi!((*algebra).inner.wick_power(&(*x).inner, n));
        *out = Box::into_raw(Box::new(WfChaos { inner: z }));
        WfStatus::Ok
    })
}

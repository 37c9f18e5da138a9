//! C ABI over the `cznd` library.
//!
//! Problems and trajectories are opaque heap handles released with their
//! `*_free` function. Every fallible call returns a [`CzndStatus`]; on failure
//! a message for the calling thread is available from [`cznd_last_error`].
//! Panics never cross the boundary and are reported as `CZND_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use cznd::harness::{check_uniqueness, HarnessError};
use cznd::models::{Gain, Linear, ModelError, ModelKind, ModelSystem};
use cznd::ode::{integrate, IntegratorConfig, OdeError, Trajectory};
use cznd::problem::{self, load_problem, parse_problem, ProblemError, TvsscmeProblem};

/// Result codes of every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CzndStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    ComplexGainUnsupported = 5,
    NumericalFailure = 6,
    BufferTooSmall = 7,
    NoExactSolution = 8,
    Panic = 9,
}

pub const CZND_MODEL_CON_CZND1: u32 = 0;
pub const CZND_MODEL_CON_CZND2: u32 = 1;
pub const CZND_MODEL_CON_CZND1_CONJ: u32 = 2;

/// Opaque problem handle.
pub struct CzndProblem {
    inner: TvsscmeProblem,
}

/// Opaque trajectory handle.
pub struct CzndTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

type Failure = (CzndStatus, String);

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CzndStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            CzndStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CzndStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    (CzndStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    (CzndStatus::InvalidArgument, msg.into())
}

fn from_problem(e: ProblemError) -> Failure {
    let status = match e {
        ProblemError::Io(_) => CzndStatus::IoError,
        ProblemError::Eval(_) | ProblemError::Linalg(_) => CzndStatus::NumericalFailure,
        _ => CzndStatus::ParseError,
    };
    (status, e.to_string())
}

fn from_model(e: ModelError) -> Failure {
    let status = match &e {
        ModelError::ComplexGainUnsupported(_) => CzndStatus::ComplexGainUnsupported,
        ModelError::InvalidGain(_) | ModelError::UnknownModel(_) => CzndStatus::InvalidArgument,
        _ => CzndStatus::NumericalFailure,
    };
    (status, e.to_string())
}

fn from_ode(e: OdeError) -> Failure {
    let status = match e {
        OdeError::DimensionMismatch { .. } | OdeError::InvalidSpan { .. } | OdeError::InvalidConfig(_) => {
            CzndStatus::InvalidArgument
        }
        _ => CzndStatus::NumericalFailure,
    };
    (status, e.to_string())
}

fn from_harness(e: HarnessError) -> Failure {
    match e {
        HarnessError::ProblemLoad(p) => from_problem(p),
        HarnessError::Model(m) => from_model(m),
        HarnessError::Usage(u) => invalid(u),
        other => (CzndStatus::NumericalFailure, other.to_string()),
    }
}

unsafe fn problem_ref<'a>(p: *const CzndProblem) -> Result<&'a TvsscmeProblem, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null("problem"))
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("`{what}` is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_out<'a>(ptr: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn emit_problem(out: *mut *mut CzndProblem, p: TvsscmeProblem) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(CzndProblem { inner: p }));
    Ok(())
}

fn model_kind(model: u32) -> Result<ModelKind, Failure> {
    match model {
        CZND_MODEL_CON_CZND1 => Ok(ModelKind::ConCznd1),
        CZND_MODEL_CON_CZND2 => Ok(ModelKind::ConCznd2),
        CZND_MODEL_CON_CZND1_CONJ => Ok(ModelKind::ConCznd1Conj),
        other => Err(invalid(format!("unknown model id {other}"))),
    }
}

fn build_system(p: &TvsscmeProblem, model: u32, gamma_re: f64, gamma_im: f64) -> Result<ModelSystem, Failure> {
    let kind = model_kind(model)?;
    let gamma = Gain::new(gamma_re, gamma_im).map_err(from_model)?;
    ModelSystem::new(kind, p, gamma, Arc::new(Linear)).map_err(from_model)
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to fit) and returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cznd_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds the built-in 2×2 benchmark problem.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cznd_problem_example3(out: *mut *mut CzndProblem) -> CzndStatus {
    guard(|| emit_problem(out, problem::example3()))
}

/// Loads a `.tvp` problem file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cznd_problem_load(path: *const c_char, out: *mut *mut CzndProblem) -> CzndStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        emit_problem(out, load_problem(path).map_err(from_problem)?)
    })
}

/// Parses `.tvp` text; `name` may be null.
///
/// # Safety
/// `text` and a non-null `name` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cznd_problem_parse(
    text: *const c_char,
    name: *const c_char,
    out: *mut *mut CzndProblem,
) -> CzndStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let name = if name.is_null() { "problem" } else { str_arg(name, "name")? };
        emit_problem(out, parse_problem(text, name).map_err(from_problem)?)
    })
}

/// Releases a problem handle. Null is ignored.
///
/// # Safety
/// `p` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cznd_problem_free(p: *mut CzndProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Writes `m` (rows of X) and `n` (columns of X).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cznd_problem_dims(p: *const CzndProblem, m: *mut usize, n: *mut usize) -> CzndStatus {
    guard(|| {
        let p = problem_ref(p)?;
        if m.is_null() || n.is_null() {
            return Err(null("m/n"));
        }
        *m = p.m();
        *n = p.n();
        Ok(())
    })
}

/// Writes the stacked exact state `[vec(X_r); vec(X_i)]` (length `2mn`) at `tau`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cznd_problem_exact_state(
    p: *const CzndProblem,
    tau: f64,
    out: *mut f64,
    len: usize,
) -> CzndStatus {
    guard(|| {
        let p = problem_ref(p)?;
        let x = p
            .exact_state(tau)
            .ok_or_else(|| (CzndStatus::NoExactSolution, "problem has no exact solution".to_string()))?
            .map_err(from_problem)?;
        if len < x.len() {
            return Err((CzndStatus::BufferTooSmall, format!("need {} doubles, got {len}", x.len())));
        }
        slice_out(out, len, "out")?[..x.len()].copy_from_slice(&x);
        Ok(())
    })
}

/// Residual of a stacked state: distance to the exact solution when known,
/// otherwise the Frobenius norm of `X F - A conj(X) - C`.
///
/// # Safety
/// `state` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cznd_problem_residual(
    p: *const CzndProblem,
    tau: f64,
    state: *const f64,
    len: usize,
    out: *mut f64,
) -> CzndStatus {
    guard(|| {
        let p = problem_ref(p)?;
        if len != p.state_dim() {
            return Err(invalid(format!("state length {len}, expected {}", p.state_dim())));
        }
        let x = slice_arg(state, len, "state")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = p.residual(tau, x).map_err(from_problem)?;
        Ok(())
    })
}

/// Pointwise uniqueness check on `points` uniform instants over `[t0, t1]`.
/// Any of the output pointers may be null.
///
/// # Safety
/// Non-null output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cznd_check_uniqueness(
    p: *const CzndProblem,
    t0: f64,
    t1: f64,
    points: usize,
    unique: *mut bool,
    min_eigen_gap: *mut f64,
    min_abs_det: *mut f64,
) -> CzndStatus {
    guard(|| {
        let p = problem_ref(p)?;
        if !(t1 >= t0) {
            return Err(invalid(format!("invalid span [{t0}, {t1}]")));
        }
        let r = check_uniqueness(p, (t0, t1), points, None).map_err(from_harness)?;
        if !unique.is_null() {
            *unique = r.unique;
        }
        if !min_eigen_gap.is_null() {
            *min_eigen_gap = r.min_eigen_gap.unwrap_or(f64::NAN);
        }
        if !min_abs_det.is_null() {
            *min_abs_det = r.min_abs_det.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Evaluates a model's state derivative at `(tau, state)`.
///
/// # Safety
/// `state` and `out` must each point to `len` doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn cznd_vector_field(
    p: *const CzndProblem,
    model: u32,
    gamma_re: f64,
    gamma_im: f64,
    tau: f64,
    state: *const f64,
    out: *mut f64,
    len: usize,
) -> CzndStatus {
    guard(|| {
        let p = problem_ref(p)?;
        let sys = build_system(p, model, gamma_re, gamma_im)?;
        if len != sys.dim() {
            return Err(invalid(format!("state length {len}, expected {}", sys.dim())));
        }
        let x = slice_arg(state, len, "state")?;
        let d = sys.state_derivative(tau, x).map_err(from_model)?;
        slice_out(out, len, "out")?.copy_from_slice(&d);
        Ok(())
    })
}

/// Integrates a model from `x0` over `[t0, t1]` with `samples` uniform output
/// points. Non-positive tolerances select the defaults (1e-3, 1e-6).
///
/// # Safety
/// `x0` must point to `len` doubles; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn cznd_integrate(
    p: *const CzndProblem,
    model: u32,
    gamma_re: f64,
    gamma_im: f64,
    x0: *const f64,
    len: usize,
    t0: f64,
    t1: f64,
    rel_tol: f64,
    abs_tol: f64,
    samples: usize,
    out: *mut *mut CzndTrajectory,
) -> CzndStatus {
    guard(|| {
        let p = problem_ref(p)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sys = build_system(p, model, gamma_re, gamma_im)?;
        let x0 = slice_arg(x0, len, "x0")?;
        let defaults = IntegratorConfig::default();
        let cfg = IntegratorConfig {
            rel_tol: if rel_tol > 0.0 { rel_tol } else { defaults.rel_tol },
            abs_tol: if abs_tol > 0.0 { abs_tol } else { defaults.abs_tol },
            sample_count: samples,
            ..defaults
        };
        let residual = |t: f64, x: &[f64]| p.residual(t, x).unwrap_or(f64::NAN);
        let tr = integrate(&sys, x0, (t0, t1), &cfg, Some(&residual)).map_err(from_ode)?;
        *out = Box::into_raw(Box::new(CzndTrajectory { inner: tr }));
        Ok(())
    })
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `tr` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cznd_trajectory_len(tr: *const CzndTrajectory) -> usize {
    tr.as_ref().map_or(0, |t| t.inner.len())
}

/// State length per sample; 0 for a null handle.
///
/// # Safety
/// `tr` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cznd_trajectory_dim(tr: *const CzndTrajectory) -> usize {
    tr.as_ref()
        .and_then(|t| t.inner.states.first())
        .map_or(0, |s| s.len())
}

/// Reads sample `k`. `tau`, `residual` and `state` may each be null; a
/// non-null `state` must hold at least `dim` doubles.
///
/// # Safety
/// Non-null pointers must be valid for writes of the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn cznd_trajectory_sample(
    tr: *const CzndTrajectory,
    k: usize,
    tau: *mut f64,
    residual: *mut f64,
    state: *mut f64,
    len: usize,
) -> CzndStatus {
    guard(|| {
        let t = &tr.as_ref().ok_or_else(|| null("trajectory"))?.inner;
        if k >= t.len() {
            return Err(invalid(format!("sample {k} out of range (len {})", t.len())));
        }
        if !tau.is_null() {
            *tau = t.taus[k];
        }
        if !residual.is_null() {
            *residual = t.residuals[k];
        }
        if !state.is_null() {
            let s = &t.states[k];
            if len < s.len() {
                return Err((CzndStatus::BufferTooSmall, format!("need {} doubles, got {len}", s.len())));
            }
            slice_out(state, len, "state")?[..s.len()].copy_from_slice(s);
        }
        Ok(())
    })
}

/// Releases a trajectory handle. Null is ignored.
///
/// # Safety
/// `tr` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cznd_trajectory_free(tr: *mut CzndTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

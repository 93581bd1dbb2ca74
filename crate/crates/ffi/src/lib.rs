//! C ABI over the cggm solvers.
//!
//! Matrices and solver results are opaque handles owned by the caller once
//! returned and released with the matching `*_free` function. Every fallible
//! call returns a [`CggmStatus`]; on failure the message of the last error on
//! the calling thread is available from [`cggm_last_error_message`].
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cggm::copula::to_gaussian;
use cggm::solvers::{
    graphical_lasso, ledoit_wolf, spcov, EstimateKind, SolverConfig, SolverResult,
};
use cggm::{Error, SymMatrix};
use ndarray::Array2;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CggmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotPositiveDefinite = 4,
    SingularInput = 5,
    NotConverged = 6,
    DegenerateData = 7,
    TooFewSamples = 8,
    NonFiniteInput = 9,
    BufferTooSmall = 10,
    Internal = 98,
    Panic = 99,
}

/// Which matrix a result holds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CggmEstimateKind {
    Precision = 0,
    Covariance = 1,
}

/// Solver tuning; obtain defaults from [`cggm_solver_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CggmSolverConfig {
    pub lambda: f64,
    pub max_outer_iters: usize,
    pub tol: f64,
    pub delta: f64,
    pub step_shrink: f64,
}

impl From<CggmSolverConfig> for SolverConfig {
    fn from(c: CggmSolverConfig) -> Self {
        SolverConfig {
            lambda: c.lambda,
            max_outer_iters: c.max_outer_iters,
            tol: c.tol,
            delta: c.delta,
            step_shrink: c.step_shrink,
        }
    }
}

/// Opaque symmetric matrix.
pub struct CggmMatrix(SymMatrix);

/// Opaque solver result.
pub struct CggmResult(SolverResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CggmStatus {
    match e.root() {
        Error::NotPositiveDefinite => CggmStatus::NotPositiveDefinite,
        Error::DimensionMismatch { .. } => CggmStatus::DimensionMismatch,
        Error::SingularInput => CggmStatus::SingularInput,
        Error::MaxIterationsExceeded { .. } => CggmStatus::NotConverged,
        Error::DegenerateData => CggmStatus::DegenerateData,
        Error::TooFewSamples { .. } => CggmStatus::TooFewSamples,
        Error::NonFiniteInput { .. } | Error::NonFiniteSample { .. } => CggmStatus::NonFiniteInput,
        Error::InvalidArgument(_) | Error::BadDelta { .. } | Error::OutOfRange { .. } => {
            CggmStatus::InvalidArgument
        }
        _ => CggmStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), CggmStatus>) -> CggmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CggmStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_last_error("internal panic".into());
            CggmStatus::Panic
        }
    }
}

fn fail(e: Error) -> CggmStatus {
    let status = status_of(&e);
    set_last_error(e.to_string());
    status
}

fn null(what: &str) -> CggmStatus {
    set_last_error(format!("{what} is null"));
    CggmStatus::NullPointer
}

/// # Safety
/// `p` must be null or point to a live value of type `T`.
unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, CggmStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `data` must be null or readable for `len` values.
unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], CggmStatus> {
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

fn check_out<T>(out: *mut *mut T) -> Result<(), CggmStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    Ok(())
}

fn give<T>(out: *mut *mut T, value: T) -> Result<(), CggmStatus> {
    check_out(out)?;
    // SAFETY: checked non-null above; the caller provides writable storage.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Human-readable name of a status code, or "unknown status". The string
/// is static. Takes a plain integer so any value is safe to pass.
#[no_mangle]
pub extern "C" fn cggm_status_name(status: i32) -> *const c_char {
    let s: &'static [u8] = match status {
        0 => b"ok\0",
        1 => b"null pointer\0",
        2 => b"invalid argument\0",
        3 => b"dimension mismatch\0",
        4 => b"not positive definite\0",
        5 => b"singular input\0",
        6 => b"not converged\0",
        7 => b"degenerate data\0",
        8 => b"too few samples\0",
        9 => b"non-finite input\0",
        10 => b"buffer too small\0",
        98 => b"internal error\0",
        99 => b"panic\0",
        _ => b"unknown status\0",
    };
    s.as_ptr().cast()
}

/// Message of the last failed call on this thread, or null if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cggm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn cggm_solver_config_default() -> CggmSolverConfig {
    let d = SolverConfig::default();
    CggmSolverConfig {
        lambda: d.lambda,
        max_outer_iters: d.max_outer_iters,
        tol: d.tol,
        delta: d.delta,
        step_shrink: d.step_shrink,
    }
}

/// Builds a `p x p` matrix from row-major `data`. The two triangles are
/// averaged.
///
/// # Safety
/// `data` must be readable for `p * p` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cggm_matrix_new(
    p: usize,
    data: *const f64,
    out: *mut *mut CggmMatrix,
) -> CggmStatus {
    guard(|| {
        let Some(len) = p.checked_mul(p).filter(|&l| l > 0) else {
            set_last_error(format!("invalid dimension {p}"));
            return Err(CggmStatus::InvalidArgument);
        };
        let values = slice(data, len, "data")?;
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(fail(Error::NonFiniteInput { index }));
        }
        let a = Array2::from_shape_vec((p, p), values.to_vec()).expect("length checked");
        let sym = (&a + &a.t()) * 0.5;
        give(out, CggmMatrix(SymMatrix::from_array(sym).map_err(fail)?))
    })
}

/// # Safety
/// `m` must be null or a handle from this library that was not freed.
#[no_mangle]
pub unsafe extern "C" fn cggm_matrix_free(m: *mut CggmMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Dimension of `m`, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cggm_matrix_dim(m: *const CggmMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim())
}

/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cggm_matrix_get(
    m: *const CggmMatrix,
    i: usize,
    j: usize,
    out: *mut f64,
) -> CggmStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let p = m.0.dim();
        if i >= p || j >= p {
            return Err(fail(Error::OutOfRange {
                value: i.max(j) as f64,
                domain: "matrix index",
            }));
        }
        *out = m.0.get(i, j);
        Ok(())
    })
}

/// Copies `m` row-major into `buf`, which must hold `dim * dim` doubles.
///
/// # Safety
/// `m` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cggm_matrix_copy(
    m: *const CggmMatrix,
    buf: *mut f64,
    len: usize,
) -> CggmStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        let p = m.0.dim();
        if len < p * p {
            set_last_error(format!("buffer holds {len} values, need {}", p * p));
            return Err(CggmStatus::BufferTooSmall);
        }
        let dst = std::slice::from_raw_parts_mut(buf, p * p);
        for (d, v) in dst.iter_mut().zip(m.0.as_array().iter()) {
            *d = *v;
        }
        Ok(())
    })
}

/// Graphical lasso on covariance `s`.
///
/// # Safety
/// `s` and `cfg` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cggm_glasso(
    s: *const CggmMatrix,
    cfg: *const CggmSolverConfig,
    out: *mut *mut CggmResult,
) -> CggmStatus {
    guard(|| {
        check_out(out)?;
        let (s, cfg) = (borrow(s, "matrix")?, borrow(cfg, "config")?);
        give(
            out,
            CggmResult(graphical_lasso(&s.0, &(*cfg).into()).map_err(fail)?),
        )
    })
}

/// Sparse covariance (SPCOV) on covariance `s`.
///
/// # Safety
/// `s` and `cfg` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cggm_spcov(
    s: *const CggmMatrix,
    cfg: *const CggmSolverConfig,
    out: *mut *mut CggmResult,
) -> CggmStatus {
    guard(|| {
        check_out(out)?;
        let (s, cfg) = (borrow(s, "matrix")?, borrow(cfg, "config")?);
        give(out, CggmResult(spcov(&s.0, &(*cfg).into()).map_err(fail)?))
    })
}

/// Ledoit-Wolf shrinkage of an `n x p` row-major sample matrix.
///
/// # Safety
/// `data` must be readable for `n * p` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cggm_ledoit_wolf(
    data: *const f64,
    n: usize,
    p: usize,
    out: *mut *mut CggmResult,
) -> CggmStatus {
    guard(|| {
        check_out(out)?;
        let Some(len) = n.checked_mul(p) else {
            set_last_error("n * p overflows".into());
            return Err(CggmStatus::InvalidArgument);
        };
        let values = slice(data, len, "data")?;
        let x = Array2::from_shape_vec((n, p), values.to_vec()).expect("length checked");
        give(out, CggmResult(ledoit_wolf(&x).map_err(fail)?))
    })
}

/// # Safety
/// `r` must be null or a handle from this library that was not freed.
#[no_mangle]
pub unsafe extern "C" fn cggm_result_free(r: *mut CggmResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// New matrix handle holding a copy of the estimate.
///
/// # Safety
/// `r` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cggm_result_estimate(
    r: *const CggmResult,
    out: *mut *mut CggmMatrix,
) -> CggmStatus {
    guard(|| {
        let r = borrow(r, "result")?;
        give(out, CggmMatrix(r.0.estimate.clone()))
    })
}

/// New matrix handle holding the covariance-scale estimate.
///
/// # Safety
/// `r` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cggm_result_covariance(
    r: *const CggmResult,
    out: *mut *mut CggmMatrix,
) -> CggmStatus {
    guard(|| {
        let r = borrow(r, "result")?;
        give(out, CggmMatrix(r.0.covariance().map_err(fail)?))
    })
}

/// # Safety
/// `r` must be live; `kind` writable.
#[no_mangle]
pub unsafe extern "C" fn cggm_result_kind(
    r: *const CggmResult,
    kind: *mut CggmEstimateKind,
) -> CggmStatus {
    guard(|| {
        let r = borrow(r, "result")?;
        if kind.is_null() {
            return Err(null("output pointer"));
        }
        *kind = match r.0.estimate_kind {
            EstimateKind::Precision => CggmEstimateKind::Precision,
            EstimateKind::Covariance => CggmEstimateKind::Covariance,
        };
        Ok(())
    })
}

/// Summary numbers of a result. Any output pointer may be null.
/// `shrinkage` is NaN for the penalized solvers.
///
/// # Safety
/// `r` must be live; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn cggm_result_summary(
    r: *const CggmResult,
    objective: *mut f64,
    iterations: *mut usize,
    converged: *mut bool,
    shrinkage: *mut f64,
) -> CggmStatus {
    guard(|| {
        let r = &borrow(r, "result")?.0;
        if !objective.is_null() {
            *objective = r.objective;
        }
        if !iterations.is_null() {
            *iterations = r.iterations;
        }
        if !converged.is_null() {
            *converged = r.converged;
        }
        if !shrinkage.is_null() {
            *shrinkage = r.shrinkage.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Copula transform of `n` samples into `out`.
///
/// # Safety
/// `x` must be readable and `out` writable for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn cggm_to_gaussian(x: *const f64, n: usize, out: *mut f64) -> CggmStatus {
    guard(|| {
        let values = slice(x, n, "input")?;
        if out.is_null() {
            return Err(null("output"));
        }
        let scores = to_gaussian(values).map_err(fail)?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&scores);
        Ok(())
    })
}

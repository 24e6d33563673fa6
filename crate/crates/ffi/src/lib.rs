//! C ABI for the brownring library.
//!
//! Matrices cross the boundary as row-major arrays of interleaved
//! `(re, im)` doubles. Every call returns a [`BrStatus`]; on failure the
//! message is available from [`br_last_error`] until the next failing call
//! on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use brownring::brown_girko::log_potential;
use brownring::closed_forms::brown_density_h_d;
use brownring::ensembles::{sample_sum, EnsembleSpec};
use brownring::linalg::{general_eigenvalues, singular_values, CMatrix};
use brownring::schwinger_dyson::{
    free_bernoulli_convolve, invert_to_density, theta_recursion, StieltjesEvaluator, SubordinationParams,
};
use brownring::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
    Panic = 4,
}

/// Opaque Stieltjes evaluator.
pub struct BrEvaluator {
    inner: StieltjesEvaluator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> BrStatus {
    set_error(err.to_string());
    if err.is_numerical() {
        BrStatus::NumericalFailure
    } else {
        BrStatus::InvalidArgument
    }
}

fn guard<F: FnOnce() -> BrStatus>(f: F) -> BrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            BrStatus::Panic
        }
    }
}

macro_rules! check_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            set_error(concat!("null pointer: ", stringify!($p)));
            return BrStatus::NullPointer;
        })+
    };
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return status_of(&err),
        }
    };
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn br_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn br_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Evaluator of the symmetrized singular-value law of `u_1 + ... + u_d - v`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn br_evaluator_theta(d: usize, v_re: f64, v_im: f64, out: *mut *mut BrEvaluator) -> BrStatus {
    guard(|| {
        check_null!(out);
        let inner = try_status!(theta_recursion(d, Complex64::new(v_re, v_im)));
        *out = Box::into_raw(Box::new(BrEvaluator { inner }));
        BrStatus::Ok
    })
}

/// New evaluator for `g` convolved with `(delta_rho + delta_{-rho}) / 2`.
/// `g` is not consumed.
///
/// # Safety
/// `g` must come from this library and not be freed; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_evaluator_convolve(
    g: *const BrEvaluator,
    rho: f64,
    out: *mut *mut BrEvaluator,
) -> BrStatus {
    guard(|| {
        check_null!(g, out);
        let inner = try_status!(free_bernoulli_convolve(&(*g).inner, SubordinationParams::with_rho(rho)));
        *out = Box::into_raw(Box::new(BrEvaluator { inner }));
        BrStatus::Ok
    })
}

/// `G(z)` for `Im z > 0`.
///
/// # Safety
/// `g` must be a live evaluator; `re`, `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_evaluator_eval(
    g: *const BrEvaluator,
    z_re: f64,
    z_im: f64,
    re: *mut f64,
    im: *mut f64,
) -> BrStatus {
    guard(|| {
        check_null!(g, re, im);
        let v = try_status!((*g).inner.eval(Complex64::new(z_re, z_im)));
        *re = v.re;
        *im = v.im;
        BrStatus::Ok
    })
}

/// Density on `grid[0..len]` by Stieltjes inversion at height `eta`. Writes
/// `len` values to `density` and the renormalization factor to
/// `renormalization` (may be null).
///
/// # Safety
/// `grid` and `density` must point to `len` doubles; `g` must be live.
#[no_mangle]
pub unsafe extern "C" fn br_evaluator_invert(
    g: *const BrEvaluator,
    grid: *const f64,
    len: usize,
    eta: f64,
    strict: bool,
    density: *mut f64,
    renormalization: *mut f64,
) -> BrStatus {
    guard(|| {
        check_null!(g, grid, density);
        let xs = slice::from_raw_parts(grid, len);
        let inv = try_status!(invert_to_density(&(*g).inner, xs, eta, strict));
        let out = slice::from_raw_parts_mut(density, len);
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = inv.measure.density_at(x);
        }
        if !renormalization.is_null() {
            *renormalization = inv.renormalization;
        }
        BrStatus::Ok
    })
}

/// Releases an evaluator. Null is ignored.
///
/// # Safety
/// `g` must be null or a pointer obtained from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn br_evaluator_free(g: *mut BrEvaluator) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

unsafe fn read_matrix(rows: usize, cols: usize, data: *const f64) -> Result<CMatrix, Error> {
    let raw = slice::from_raw_parts(data, 2 * rows * cols);
    let entries = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    CMatrix::from_row_major(rows, cols, entries)
}

/// Draws `S = U_1 + ... + U_{d'} + O_{d'+1} + ... + O_d` into `out`
/// (`2 n^2` doubles).
///
/// # Safety
/// `out` must point to `2 n^2` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn br_sample_sum(n: usize, d: usize, d_prime: usize, seed: u64, out: *mut f64) -> BrStatus {
    guard(|| {
        check_null!(out);
        let spec = try_status!(EnsembleSpec::new(n, d, d_prime, seed));
        let s = try_status!(sample_sum(&spec));
        let dst = slice::from_raw_parts_mut(out, 2 * n * n);
        for (k, z) in s.as_slice().iter().enumerate() {
            dst[2 * k] = z.re;
            dst[2 * k + 1] = z.im;
        }
        BrStatus::Ok
    })
}

/// Singular values in descending order; writes `min(rows, cols)` doubles.
///
/// # Safety
/// `data` must hold `2 rows cols` doubles and `out` `min(rows, cols)`.
#[no_mangle]
pub unsafe extern "C" fn br_singular_values(rows: usize, cols: usize, data: *const f64, out: *mut f64) -> BrStatus {
    guard(|| {
        check_null!(data, out);
        let m = try_status!(read_matrix(rows, cols, data));
        let sv = try_status!(singular_values(&m));
        slice::from_raw_parts_mut(out, sv.len()).copy_from_slice(&sv);
        BrStatus::Ok
    })
}

/// Eigenvalues of a square matrix as `n` interleaved `(re, im)` pairs.
///
/// # Safety
/// `data` must hold `2 n^2` doubles and `out` `2 n`.
#[no_mangle]
pub unsafe extern "C" fn br_general_eigenvalues(n: usize, data: *const f64, out: *mut f64) -> BrStatus {
    guard(|| {
        check_null!(data, out);
        let m = try_status!(read_matrix(n, n, data));
        let eig = try_status!(general_eigenvalues(&m));
        let dst = slice::from_raw_parts_mut(out, 2 * n);
        for (k, z) in eig.points().iter().enumerate() {
            dst[2 * k] = z.re;
            dst[2 * k + 1] = z.im;
        }
        BrStatus::Ok
    })
}

/// Brown density of a sum of `d >= 2` free Haar unitaries at `v`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_brown_density(d: usize, v_re: f64, v_im: f64, out: *mut f64) -> BrStatus {
    guard(|| {
        check_null!(out);
        *out = try_status!(brown_density_h_d(d, Complex64::new(v_re, v_im)));
        BrStatus::Ok
    })
}

/// `int log|x| dTheta^{d,v}` for `|v| = r`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_log_potential(d: usize, r: f64, out: *mut f64) -> BrStatus {
    guard(|| {
        check_null!(out);
        *out = try_status!(log_potential(d, r));
        BrStatus::Ok
    })
}

//! C ABI for the toolkit. Domains live behind opaque handles; every call
//! returns an `SsStatus` and writes results through out-pointers. The text
//! of the most recent error on the calling thread is available from
//! `ss_last_error`.
//!
//! Exponents are plain doubles: `1.0` is the Cheeger end, `INFINITY` the
//! inradius end.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use spectral_shape::cheeger::{cheeger_extended, DEFAULT_TOL};
use spectral_shape::eigensolver::{eigen, SolverConfig};
use spectral_shape::functional::ratio;
use spectral_shape::geometry::{parse_domain_spec, ConvexPolygon, Domain, Point};
use spectral_shape::spectral_exact::{pi_p, Exponent};
use spectral_shape::Error;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unsupported = 3,
    SolverFailure = 4,
    Io = 5,
    Parse = 6,
    Panic = 7,
}

/// Opaque domain handle.
pub struct SsDomain {
    inner: Domain,
}

/// Discretization settings; get defaults from `ss_solver_options_default`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SsSolverOptions {
    pub levels: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub coarse_cells: usize,
    pub radial_points: usize,
}

/// A computed value with its error bound.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SsEstimate {
    pub value: f64,
    pub error: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut v = e.borrow_mut();
        v.clear();
        v.extend(msg.bytes().filter(|&b| b != 0));
        v.push(0);
    });
}

fn status_of(e: &Error) -> SsStatus {
    if e.is_solver_failure() || matches!(e, Error::Overflow(_)) {
        return SsStatus::SolverFailure;
    }
    match e {
        Error::Unsupported(_) => SsStatus::Unsupported,
        Error::Io(_) => SsStatus::Io,
        Error::Parse { .. } | Error::Json(_) => SsStatus::Parse,
        Error::Leg { source, .. } | Error::Candidate { source, .. } => status_of(source),
        _ => SsStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SsStatus, String)>) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SsStatus::Panic
        }
    }
}

fn lib<T>(r: spectral_shape::Result<T>) -> Result<T, (SsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SsStatus, String) {
    (SsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn domain_ref<'a>(d: *const SsDomain) -> Result<&'a Domain, (SsStatus, String)> {
    // SAFETY: the caller passes a handle from `ss_domain_*` that has not been freed.
    unsafe { d.as_ref() }.map(|d| &d.inner).ok_or_else(|| null("domain"))
}

fn solver(opts: *const SsSolverOptions) -> Result<SolverConfig, (SsStatus, String)> {
    // SAFETY: null selects the defaults; otherwise the caller owns a valid struct.
    let Some(o) = (unsafe { opts.as_ref() }) else {
        return Ok(SolverConfig::default());
    };
    let cfg = SolverConfig {
        levels: o.levels,
        max_iter: o.max_iter,
        tol: o.tol,
        coarse_cells: o.coarse_cells,
        radial_points: o.radial_points,
        ..SolverConfig::default()
    };
    lib(cfg.validate())?;
    Ok(cfg)
}

fn exponent(p: f64) -> Result<Exponent, (SsStatus, String)> {
    lib(Exponent::from_value(p))
}

fn write_out<T>(out: *mut T, v: T) -> Result<(), (SsStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: non-null and, per the contract, valid for writes.
    unsafe { out.write(v) };
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ss_last_error() -> *const c_char {
    LAST_ERROR.with(|e| {
        let mut v = e.borrow_mut();
        if v.is_empty() {
            v.push(0);
        }
        v.as_ptr().cast()
    })
}

#[no_mangle]
pub extern "C" fn ss_solver_options_default() -> SsSolverOptions {
    let c = SolverConfig::default();
    SsSolverOptions {
        levels: c.levels,
        max_iter: c.max_iter,
        tol: c.tol,
        coarse_cells: c.coarse_cells,
        radial_points: c.radial_points,
    }
}

/// `pi_p`; NaN for `p < 1`.
#[no_mangle]
pub extern "C" fn ss_pi_p(p: f64) -> f64 {
    Exponent::from_value(p).map_or(f64::NAN, pi_p)
}

/// Builds a domain from an inline spec such as `"square"` or `"ball:3"`,
/// or from a file path.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_domain_from_spec(spec: *const c_char, out: *mut *mut SsDomain) -> SsStatus {
    guard(|| {
        if spec.is_null() {
            return Err(null("spec"));
        }
        // SAFETY: checked non-null, NUL-terminated per the contract.
        let s = unsafe { CStr::from_ptr(spec) }
            .to_str()
            .map_err(|_| (SsStatus::InvalidArgument, "spec is not UTF-8".to_string()))?;
        let d = lib(parse_domain_spec(s))?;
        write_out(out, Box::into_raw(Box::new(SsDomain { inner: d })))
    })
}

/// Convex polygon from `n` interleaved `x, y` pairs, counterclockwise.
///
/// # Safety
/// `xy` must point to `2 n` doubles and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_domain_polygon(xy: *const f64, n: usize, out: *mut *mut SsDomain) -> SsStatus {
    guard(|| {
        if xy.is_null() {
            return Err(null("xy"));
        }
        // SAFETY: checked non-null, length per the contract.
        let coords = unsafe { std::slice::from_raw_parts(xy, 2 * n) };
        let pts = coords.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect();
        let poly = lib(ConvexPolygon::new(pts))?;
        write_out(
            out,
            Box::into_raw(Box::new(SsDomain {
                inner: Domain::polygon(poly),
            })),
        )
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `d` must come from `ss_domain_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ss_domain_free(d: *mut SsDomain) {
    if !d.is_null() {
        // SAFETY: created by Box::into_raw in this crate, freed once.
        drop(unsafe { Box::from_raw(d) });
    }
}

/// Inradius of a domain.
///
/// # Safety
/// `d` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_inradius(d: *const SsDomain, out: *mut f64) -> SsStatus {
    guard(|| {
        let d = unsafe { domain_ref(d) }?;
        if let Domain::Annulus { .. } = d {
            return Err((SsStatus::Unsupported, "inradius of the mixed annulus problem".into()));
        }
        write_out(out, d.inradius())
    })
}

/// Principal eigenvalue `lambda_p` (finite `p > 1`). `opts` may be null.
///
/// # Safety
/// `d` must be a live handle, `opts` null or valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_eigenvalue(
    d: *const SsDomain,
    p: f64,
    opts: *const SsSolverOptions,
    out: *mut SsEstimate,
) -> SsStatus {
    guard(|| {
        let d = unsafe { domain_ref(d) }?;
        let cfg = solver(opts)?;
        let e = lib(eigen(d, p, &cfg))?;
        write_out(
            out,
            SsEstimate {
                value: e.extrapolated,
                error: e.error_indicator,
            },
        )
    })
}

/// Cheeger constant. `opts` may be null.
///
/// # Safety
/// `d` must be a live handle, `opts` null or valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_cheeger(
    d: *const SsDomain,
    opts: *const SsSolverOptions,
    out: *mut SsEstimate,
) -> SsStatus {
    guard(|| {
        let d = unsafe { domain_ref(d) }?;
        let cfg = solver(opts)?;
        let c = lib(cheeger_extended(d, DEFAULT_TOL, &cfg))?;
        write_out(
            out,
            SsEstimate {
                value: c.h,
                error: c.h_error,
            },
        )
    })
}

/// `F_{p,q} = Lambda_p / Lambda_q` for `q < p`. `opts` may be null.
///
/// # Safety
/// `d` must be a live handle, `opts` null or valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_ratio(
    d: *const SsDomain,
    p: f64,
    q: f64,
    opts: *const SsSolverOptions,
    out: *mut SsEstimate,
) -> SsStatus {
    guard(|| {
        let d = unsafe { domain_ref(d) }?;
        let cfg = solver(opts)?;
        let r = lib(ratio(d, exponent(p)?, exponent(q)?, &cfg))?;
        write_out(
            out,
            SsEstimate {
                value: r.ratio,
                error: r.error_indicator,
            },
        )
    })
}

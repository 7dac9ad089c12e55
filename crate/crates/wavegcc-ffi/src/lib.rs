//! C ABI for `wavegcc`.
//!
//! Objects are opaque heap handles created by `wg_*_new` style functions and
//! released with the matching `wg_*_free`. Every fallible function returns a
//! [`WgStatus`]; on failure a message is available from [`wg_last_error`]
//! on the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use wavegcc::control_times::{geodesic_average, k_of_t, t_gcc};
use wavegcc::gramian::{assemble_gramian, min_eig, EigenOptions, GramianApply, GramianMatrix, Observation};
use wavegcc::regions::t_uc;
use wavegcc::{Component, Error, Manifold, ObservationFunction, PhasePoint};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidRegion = 3,
    Resolution = 4,
    /// Integration, stability, eigensolver or conjugate-gradient failure.
    Numerical = 5,
    Config = 6,
    Io = 7,
    Panic = 8,
    Other = 9,
}

pub struct WgManifold(Manifold);

pub struct WgRegion(ObservationFunction);

pub struct WgGramian(GramianMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WgStatus {
    match e {
        Error::InvalidInput(_) | Error::Inconsistency(_) => WgStatus::InvalidInput,
        Error::InvalidRegion(_) | Error::Construction(_) => WgStatus::InvalidRegion,
        Error::Resolution(_) | Error::Aliasing { .. } => WgStatus::Resolution,
        Error::IntegrationFailure { .. }
        | Error::Stability { .. }
        | Error::Eigensolver { .. }
        | Error::IllConditioned { .. } => WgStatus::Numerical,
        Error::Config(_) => WgStatus::Config,
        Error::Io(_) => WgStatus::Io,
        Error::Context { source, .. } => status_of(source),
        #[allow(unreachable_patterns)]
        _ => WgStatus::Other,
    }
}

struct Fail(WgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(WgStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F>(f: F) -> WgStatus
where
    F: FnOnce() -> Result<(), Fail>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            WgStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            WgStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn put_handle<T>(slot: *mut *mut T, value: T) -> Result<(), Fail> {
    let slot = out(slot, "output handle")?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn string_arg(p: *const c_char, what: &str) -> Result<String, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_string)
        .map_err(|_| Fail(WgStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

/// Message of the last failure on this thread, or null after a success.
/// The pointer stays valid until the next call into the library.
#[no_mangle]
pub extern "C" fn wg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wg_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Flat torus `R^2 / (l1 Z x l2 Z)`.
///
/// # Safety
/// `out_manifold` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn wg_manifold_flat_torus(l1: f64, l2: f64, out_manifold: *mut *mut WgManifold) -> WgStatus {
    guard(|| put_handle(out_manifold, WgManifold(Manifold::flat_torus(l1, l2)?)))
}

/// Unit round sphere in `(theta, phi)` coordinates.
///
/// # Safety
/// `out_manifold` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn wg_manifold_round_sphere(out_manifold: *mut *mut WgManifold) -> WgStatus {
    guard(|| put_handle(out_manifold, WgManifold(Manifold::round_sphere())))
}

/// # Safety
/// `m` must be null or a handle from a `wg_manifold_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn wg_manifold_free(m: *mut WgManifold) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Empty observation function with the given amplitude; add components
/// before use.
///
/// # Safety
/// `out_region` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn wg_region_new(amplitude: f64, out_region: *mut *mut WgRegion) -> WgStatus {
    guard(|| {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Fail(WgStatus::InvalidRegion, format!("amplitude must be positive, got {amplitude}")));
        }
        put_handle(out_region, WgRegion(ObservationFunction { components: Vec::new(), amplitude }))
    })
}

unsafe fn add(r: *mut WgRegion, c: Component) -> WgStatus {
    guard(|| {
        out(r, "region")?.0.components.push(c);
        Ok(())
    })
}

/// Adds a bump equal to one on `d(x, c) <= r0` and zero beyond `r1`.
///
/// # Safety
/// `r` must be a live region handle.
#[no_mangle]
pub unsafe extern "C" fn wg_region_add_ball(r: *mut WgRegion, c1: f64, c2: f64, r0: f64, r1: f64) -> WgStatus {
    add(r, Component::Ball { center: [c1, c2], r0, r1 })
}

/// Adds the complement of a ball: zero on `d(x, c) <= r0`, one beyond `r1`.
///
/// # Safety
/// `r` must be a live region handle.
#[no_mangle]
pub unsafe extern "C" fn wg_region_add_hole(r: *mut WgRegion, c1: f64, c2: f64, r0: f64, r1: f64) -> WgStatus {
    add(r, Component::Hole { center: [c1, c2], r0, r1 })
}

/// Adds a band in coordinate `axis` (1 or 2) supported in `(a, a + w1)` with
/// a plateau of width `w0`.
///
/// # Safety
/// `r` must be a live region handle.
#[no_mangle]
pub unsafe extern "C" fn wg_region_add_strip(r: *mut WgRegion, axis: u8, a: f64, w0: f64, w1: f64) -> WgStatus {
    add(r, Component::Strip { axis, a, w0, w1 })
}

/// # Safety
/// `r` must be null or a handle from [`wg_region_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn wg_region_free(r: *mut WgRegion) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

unsafe fn checked<'a>(
    m: *const WgManifold,
    r: *const WgRegion,
) -> Result<(&'a Manifold, &'a ObservationFunction), Fail> {
    let m = &deref(m, "manifold")?.0;
    let r = &deref(r, "region")?.0;
    r.validate_for(m)?;
    Ok((m, r))
}

/// `b(x)`.
///
/// # Safety
/// Handles must be live; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wg_region_evaluate(
    m: *const WgManifold,
    r: *const WgRegion,
    x1: f64,
    x2: f64,
    out_value: *mut f64,
) -> WgStatus {
    guard(|| {
        let (m, r) = checked(m, r)?;
        *out(out_value, "out_value")? = r.evaluate(m, [x1, x2]);
        Ok(())
    })
}

/// `int_0^T b^2` along the unit geodesic from `(x, xi)`.
///
/// # Safety
/// Handles must be live; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wg_geodesic_average(
    m: *const WgManifold,
    r: *const WgRegion,
    x1: f64,
    x2: f64,
    xi1: f64,
    xi2: f64,
    t: f64,
    out_value: *mut f64,
) -> WgStatus {
    guard(|| {
        let (m, r) = checked(m, r)?;
        *out(out_value, "out_value")? = geodesic_average(m, r, &PhasePoint::new([x1, x2], [xi1, xi2]), t)?;
        Ok(())
    })
}

/// `K(T)` on an `nx^2 x na` cosphere grid refined by Nelder-Mead. The
/// minimizing `(x1, x2, xi1, xi2)` is written to `out_rho` when non-null.
///
/// # Safety
/// Handles must be live; `out_value` writable; `out_rho` null or 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wg_k_of_t(
    m: *const WgManifold,
    r: *const WgRegion,
    t: f64,
    nx: usize,
    na: usize,
    out_value: *mut f64,
    out_rho: *mut f64,
) -> WgStatus {
    guard(|| {
        let (m, r) = checked(m, r)?;
        let k = k_of_t(m, r, t, nx, na)?;
        *out(out_value, "out_value")? = k.value;
        if !out_rho.is_null() {
            let rho = std::slice::from_raw_parts_mut(out_rho, 4);
            rho.copy_from_slice(&[k.minimizer.x[0], k.minimizer.x[1], k.minimizer.xi[0], k.minimizer.xi[1]]);
        }
        Ok(())
    })
}

/// `T_GCC`, `+inf` when a trapped ray is certified.
///
/// # Safety
/// Handles must be live; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wg_t_gcc(
    m: *const WgManifold,
    r: *const WgRegion,
    t_max: f64,
    tol: f64,
    nx: usize,
    na: usize,
    out_value: *mut f64,
) -> WgStatus {
    guard(|| {
        let (m, r) = checked(m, r)?;
        *out(out_value, "out_value")? = t_gcc(m, r, t_max, tol, nx, na)?.value;
        Ok(())
    })
}

/// `T_UC = 2 sup_x dist(x, omega)` on a `resolution`-point grid.
///
/// # Safety
/// Handles must be live; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wg_t_uc(
    m: *const WgManifold,
    r: *const WgRegion,
    resolution: usize,
    out_value: *mut f64,
) -> WgStatus {
    guard(|| {
        let (m, r) = checked(m, r)?;
        *out(out_value, "out_value")? = t_uc(r, m, resolution)?;
        Ok(())
    })
}

/// Dense observability Gramian on the flat torus with modes `|k|_inf <= k_max`.
///
/// # Safety
/// Handles must be live; `out_gramian` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wg_gramian_assemble(
    m: *const WgManifold,
    r: *const WgRegion,
    k_max: usize,
    s: f64,
    t: f64,
    tail_tol: f64,
    out_gramian: *mut *mut WgGramian,
) -> WgStatus {
    guard(|| {
        let (m, r) = checked(m, r)?;
        let obs = Observation::new(m, r, k_max, s, tail_tol)?;
        put_handle(out_gramian, WgGramian(assemble_gramian(&obs, t)?))
    })
}

/// Loads a Gramian written by [`wg_gramian_save`].
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_gramian` writable.
#[no_mangle]
pub unsafe extern "C" fn wg_gramian_load(path: *const c_char, out_gramian: *mut *mut WgGramian) -> WgStatus {
    guard(|| {
        let p = string_arg(path, "path")?;
        put_handle(out_gramian, WgGramian(GramianMatrix::load(Path::new(&p))?))
    })
}

/// # Safety
/// `g` must be a live Gramian; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wg_gramian_save(g: *const WgGramian, path: *const c_char) -> WgStatus {
    guard(|| {
        let g = &deref(g, "gramian")?.0;
        let p = string_arg(path, "path")?;
        g.save(Path::new(&p))?;
        Ok(())
    })
}

/// Matrix dimension, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live Gramian.
#[no_mangle]
pub unsafe extern "C" fn wg_gramian_dim(g: *const WgGramian) -> usize {
    g.as_ref().map_or(0, |g| g.0.dim())
}

/// Copies the entries, column-major, as interleaved `(re, im)` pairs into
/// `buffer`, which must hold `2 * dim * dim` doubles.
///
/// # Safety
/// `g` must be live; `buffer` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wg_gramian_entries(g: *const WgGramian, buffer: *mut f64, len: usize) -> WgStatus {
    guard(|| {
        let g = &deref(g, "gramian")?.0;
        let need = 2 * g.entries.len();
        if len < need {
            return Err(Fail(WgStatus::InvalidInput, format!("buffer holds {len} doubles, need {need}")));
        }
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        let dst = std::slice::from_raw_parts_mut(buffer, need);
        for (pair, c) in dst.chunks_exact_mut(2).zip(&g.entries) {
            pair[0] = c.re;
            pair[1] = c.im;
        }
        Ok(())
    })
}

/// Smallest eigenvalue, over all modes when `kappa < 0` and otherwise over
/// the shell `kappa_k > kappa`.
///
/// # Safety
/// `g` must be live; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn wg_gramian_min_eig(g: *const WgGramian, kappa: f64, out_value: *mut f64) -> WgStatus {
    guard(|| {
        let g = &deref(g, "gramian")?.0;
        let shell = if kappa < 0.0 { None } else { Some(kappa) };
        *out(out_value, "out_value")? = min_eig(g as &dyn GramianApply, shell, None, &EigenOptions::default())?.value;
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a Gramian handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn wg_gramian_free(g: *mut WgGramian) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Runs the experiment in the TOML config at `config_path`, writing into
/// `out_dir`. `out_passed` receives 1 when every assertion passed.
///
/// # Safety
/// Strings must be NUL-terminated; `out_passed` writable.
#[no_mangle]
pub unsafe extern "C" fn wg_run_config(
    config_path: *const c_char,
    out_dir: *const c_char,
    out_passed: *mut i32,
) -> WgStatus {
    guard(|| {
        let cfg = wavegcc::cli::ExperimentConfig::load(Path::new(&string_arg(config_path, "config_path")?))?;
        let dir = string_arg(out_dir, "out_dir")?;
        let m = wavegcc::cli::run(&cfg, Path::new(&dir))?;
        *out(out_passed, "out_passed")? = i32::from(m.passed);
        Ok(())
    })
}

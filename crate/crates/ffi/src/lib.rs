//! C ABI over the `path-excitation` library.
//!
//! A `PeSystem` is an opaque handle holding one resolved run configuration
//! (constants, slits, open-slit mask, grid and trajectory defaults). Every
//! fallible call returns a [`PeStatus`]; on failure the message is available
//! from [`pe_last_error_message`] on the same thread until the next failing call.
//!
//! The header `include/path_excitation.h` is regenerated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use path_excitation::channels::NodalThreshold;
use path_excitation::config::{parse_config, RunConfig};
use path_excitation::field::{envelope_peak, eval_open, field_grid, pairwise_field};
use path_excitation::trajectories::{integrate, Termination};
use path_excitation::{oracle, packet, sorkin, Error, GridSpec, SlitMask};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    NegativeTime = 5,
    NodalPoint = 6,
    IndexOutOfRange = 7,
    Runtime = 8,
    Panic = 9,
}

/// Field values at one point. `v_tot` is NaN when `nodal` is true.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeFieldSample {
    pub p_tot: f64,
    pub j_tot: f64,
    pub v_tot: f64,
    pub nodal: bool,
}

/// Opaque configuration handle.
pub struct PeSystem {
    config: RunConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PeStatus {
    match err {
        Error::Parse { .. } => PeStatus::Parse,
        Error::Validation(_) => PeStatus::Validation,
        Error::NegativeTime(_) => PeStatus::NegativeTime,
        Error::NodalPoint { .. } => PeStatus::NodalPoint,
        Error::SlitIndex { .. } | Error::ChannelIndex { .. } => PeStatus::IndexOutOfRange,
        _ => PeStatus::Runtime,
    }
}

fn fail(status: PeStatus, msg: impl Into<String>) -> PeStatus {
    set_last_error(msg.into());
    status
}

/// Runs `f`, translating library errors and panics into status codes.
fn guard<F>(f: F) -> PeStatus
where
    F: FnOnce() -> Result<(), PeStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PeStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(PeStatus::Panic, "panic inside path-excitation"),
    }
}

fn lib<T>(r: path_excitation::Result<T>) -> Result<T, PeStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn handle<'a>(sys: *const PeSystem) -> Result<&'a PeSystem, PeStatus> {
    sys.as_ref()
        .ok_or_else(|| fail(PeStatus::NullPointer, "null system handle"))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, PeStatus> {
    p.as_mut()
        .ok_or_else(|| fail(PeStatus::NullPointer, "null output pointer"))
}

/// Message of the most recent failure on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pe_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a handle with the default symmetric two-slit configuration.
///
/// # Safety
/// `out_system` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn pe_system_new_default(out_system: *mut *mut PeSystem) -> PeStatus {
    guard(|| {
        let slot = out(out_system)?;
        *slot = Box::into_raw(Box::new(PeSystem {
            config: RunConfig::default(),
        }));
        Ok(())
    })
}

/// Creates a handle from a JSON configuration (same schema as the CLI).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_system` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pe_system_new_from_json(
    json: *const c_char,
    out_system: *mut *mut PeSystem,
) -> PeStatus {
    guard(|| {
        let slot = out(out_system)?;
        if json.is_null() {
            return Err(fail(PeStatus::NullPointer, "null json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| fail(PeStatus::InvalidUtf8, e.to_string()))?;
        let config = lib(parse_config(text))?;
        *slot = Box::into_raw(Box::new(PeSystem { config }));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `system` must come from one of the constructors and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pe_system_free(system: *mut PeSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Number of configured slits; 0 for NULL.
///
/// # Safety
/// `system` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pe_system_slit_count(system: *const PeSystem) -> usize {
    system.as_ref().map_or(0, |s| s.config.slits.len())
}

/// Replaces the open-slit mask; bit `i` opens slit `i`.
///
/// # Safety
/// `system` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pe_system_set_mask(system: *mut PeSystem, open_bits: u64) -> PeStatus {
    guard(|| {
        let sys = system
            .as_mut()
            .ok_or_else(|| fail(PeStatus::NullPointer, "null system handle"))?;
        let mask = SlitMask::from_bits(open_bits);
        lib(mask.validate(sys.config.slits.len()))?;
        sys.config.mask = mask;
        Ok(())
    })
}

/// `sigma(t)` of one slit.
///
/// # Safety
/// `system` must be a live handle and `out_sigma` writable.
#[no_mangle]
pub unsafe extern "C" fn pe_sigma_t(
    system: *const PeSystem,
    slit_index: usize,
    t: f64,
    out_sigma: *mut f64,
) -> PeStatus {
    guard(|| {
        let sys = handle(system)?;
        let o = out(out_sigma)?;
        let slit = sys.config.slits.get(slit_index).ok_or_else(|| {
            fail(PeStatus::IndexOutOfRange, format!("slit index {slit_index} out of range"))
        })?;
        *o = lib(packet::sigma_t(&sys.config.params, slit, t))?;
        Ok(())
    })
}

/// Emergent field at `(x, t)` for the open slits. Nodal points are judged
/// against `reference_peak`; pass a value `<= 0` to use the envelope bound of
/// `P_tot(., t)`.
///
/// # Safety
/// `system` must be a live handle and `out_sample` writable.
#[no_mangle]
pub unsafe extern "C" fn pe_field_at(
    system: *const PeSystem,
    x: f64,
    t: f64,
    reference_peak: f64,
    out_sample: *mut PeFieldSample,
) -> PeStatus {
    guard(|| {
        let sys = handle(system)?;
        let o = out(out_sample)?;
        let c = &sys.config;
        let peak = if reference_peak > 0.0 {
            reference_peak
        } else {
            let open = lib(c.mask.select(&c.slits))?;
            lib(envelope_peak(&c.params, &open, t))?
        };
        let evals = lib(eval_open(&c.params, &c.slits, &c.mask, x, t))?;
        let s = lib(pairwise_field(&evals, &NodalThreshold::new(c.node_floor, peak)))?;
        *o = PeFieldSample {
            p_tot: s.p_tot,
            j_tot: s.j_tot,
            v_tot: s.v_tot.unwrap_or(f64::NAN),
            nodal: s.nodal,
        };
        Ok(())
    })
}

/// Evaluates the field on `n_points` uniform points of `[x_min, x_max]` at `t`.
/// Each output array must hold `n_points` elements; `nodal` receives 0 or 1.
///
/// # Safety
/// All pointers must be valid for `n_points` writes.
#[no_mangle]
pub unsafe extern "C" fn pe_field_grid(
    system: *const PeSystem,
    x_min: f64,
    x_max: f64,
    n_points: usize,
    t: f64,
    p_tot: *mut f64,
    j_tot: *mut f64,
    v_tot: *mut f64,
    nodal: *mut u8,
) -> PeStatus {
    guard(|| {
        let sys = handle(system)?;
        if p_tot.is_null() || j_tot.is_null() || v_tot.is_null() || nodal.is_null() {
            return Err(fail(PeStatus::NullPointer, "null output array"));
        }
        let c = &sys.config;
        let grid = lib(GridSpec::new(x_min, x_max, n_points, t))?;
        let rows = lib(field_grid(&c.params, &c.slits, &c.mask, &grid, c.node_floor))?;
        let p = std::slice::from_raw_parts_mut(p_tot, n_points);
        let j = std::slice::from_raw_parts_mut(j_tot, n_points);
        let v = std::slice::from_raw_parts_mut(v_tot, n_points);
        let nd = std::slice::from_raw_parts_mut(nodal, n_points);
        for (i, r) in rows.iter().enumerate() {
            p[i] = r.sample.p_tot;
            j[i] = r.sample.j_tot;
            v[i] = r.sample.v_tot.unwrap_or(f64::NAN);
            nd[i] = u8::from(r.sample.nodal);
        }
        Ok(())
    })
}

/// Oracle density `|Psi|^2` and current `(hbar/m) Im(Psi* dPsi/dx)`.
///
/// # Safety
/// `system` must be a live handle; output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn pe_qm_current(
    system: *const PeSystem,
    x: f64,
    t: f64,
    out_density: *mut f64,
    out_current: *mut f64,
) -> PeStatus {
    guard(|| {
        let sys = handle(system)?;
        let d = out(out_density)?;
        let j = out(out_current)?;
        let c = &sys.config;
        let (p, cur) = lib(oracle::qm_current(&c.params, &c.slits, &c.mask, x, t))?;
        *d = p;
        *j = cur;
        Ok(())
    })
}

/// Sorkin term `I_S` for the subset whose bit `i` selects slit `i`.
///
/// # Safety
/// `system` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn pe_interference_term(
    system: *const PeSystem,
    subset_bits: u64,
    x: f64,
    t: f64,
    out_value: *mut f64,
) -> PeStatus {
    guard(|| {
        let sys = handle(system)?;
        let o = out(out_value)?;
        let c = &sys.config;
        *o = lib(sorkin::interference_term(
            &c.params,
            &c.slits,
            &SlitMask::from_bits(subset_bits),
            x,
            t,
        ))?;
        Ok(())
    })
}

/// Integrates one streamline with RK4. `out_aborted` is set to 1 when the
/// trajectory hit a nodal point, in which case `out_x` holds the last position
/// reached.
///
/// # Safety
/// `system` must be a live handle; output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn pe_integrate(
    system: *const PeSystem,
    x0: f64,
    t0: f64,
    t1: f64,
    dt: f64,
    out_x: *mut f64,
    out_aborted: *mut u8,
) -> PeStatus {
    guard(|| {
        let sys = handle(system)?;
        let ox = out(out_x)?;
        let oa = out(out_aborted)?;
        let c = &sys.config;
        let tr = lib(integrate(&c.params, &c.slits, &c.mask, x0, t0, t1, dt, c.node_floor))?;
        *ox = tr.samples.last().map_or(x0, |s| s.1);
        *oa = u8::from(tr.terminated == Termination::NodalAbort);
        Ok(())
    })
}

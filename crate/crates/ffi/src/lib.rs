//! C ABI for relcon.
//!
//! Objects are opaque handles created by the constructor functions
//! and released with the matching `relcon_*_free`. Every fallible
//! function returns a [`RelconStatus`]; on failure the message is available
//! from [`relcon_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use relcon::config::ToolkitConfig;
use relcon::drive_cycle::DriveCycle;
use relcon::pipeline::{self, ModeSummary};
use relcon::sim::SimulationLog;
use relcon::synthesis::{ControlMode, ControllerRealization};
use relcon::{thermal, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelconStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Invalid argument, configuration or file contents.
    InvalidInput = 2,
    /// File could not be read or written.
    Io = 3,
    /// Synthesis infeasible, simulation diverged or another numerical failure.
    Numerical = 4,
    /// Caller-provided buffer is too small.
    BufferTooSmall = 5,
    /// Internal panic caught at the boundary.
    Panic = 6,
}

/// Control mode selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelconMode {
    PerformanceOriented = 0,
    ReliabilityAware = 1,
}

fn mode_from_int(m: c_int) -> Result<ControlMode, Fail> {
    match m {
        x if x == RelconMode::PerformanceOriented as c_int => Ok(ControlMode::PerformanceOriented),
        x if x == RelconMode::ReliabilityAware as c_int => Ok(ControlMode::ReliabilityAware),
        _ => Err(Fail(
            RelconStatus::InvalidInput,
            format!("unknown mode {m}"),
        )),
    }
}

/// Log columns readable with [`relcon_log_column`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelconColumn {
    Time = 0,
    OmegaRef = 1,
    OmegaM = 2,
    Id = 3,
    Iq = 4,
    Ud = 5,
    Uq = 6,
    TauL = 7,
    PLoss = 8,
    Tj = 9,
}

/// Damage analysis of one log. Projections are `INFINITY` when no damage
/// accrued.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelconDamage {
    pub damage: f64,
    pub cycle_count: f64,
    pub projected_cycles: f64,
    pub projected_years: f64,
}

/// Scalar results of one mode in a comparison.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelconModeSummary {
    pub gamma_achieved: f64,
    pub rmse_kmh: f64,
    pub energy_loss_j: f64,
    pub peak_tj: f64,
    pub damage: f64,
    pub projected_years: f64,
}

impl From<&ModeSummary> for RelconModeSummary {
    fn from(m: &ModeSummary) -> Self {
        RelconModeSummary {
            gamma_achieved: m.gamma_achieved,
            rmse_kmh: m.rmse_kmh,
            energy_loss_j: m.energy_loss_j,
            peak_tj: m.peak_tj,
            damage: m.damage,
            projected_years: m.projected_years.unwrap_or(f64::INFINITY),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelconComparison {
    pub performance: RelconModeSummary,
    pub reliability: RelconModeSummary,
    pub damage_reduction_percent: f64,
}

/// Opaque toolkit configuration.
pub struct RelconConfig(ToolkitConfig);
/// Opaque drive cycle.
pub struct RelconCycle(DriveCycle);
/// Opaque synthesized controller.
pub struct RelconController(ControllerRealization);
/// Opaque simulation log.
pub struct RelconLog(SimulationLog);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> RelconStatus {
    match relcon::cli::exit_code(err) {
        relcon::cli::EXIT_IO => RelconStatus::Io,
        relcon::cli::EXIT_NUMERICAL => RelconStatus::Numerical,
        _ => RelconStatus::InvalidInput,
    }
}

struct Fail(RelconStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(RelconStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, records any error or panic, and converts it to a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RelconStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RelconStatus::Ok
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
            RelconStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(RelconStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn relcon_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next relcon call on this thread.
#[no_mangle]
pub extern "C" fn relcon_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates the default configuration.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_config_default(out: *mut *mut RelconConfig) -> RelconStatus {
    guard(|| put(out, RelconConfig(ToolkitConfig::default())))
}

/// Parses a configuration from a JSON string.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_config_from_json(
    json: *const c_char,
    out: *mut *mut RelconConfig,
) -> RelconStatus {
    guard(|| {
        let cfg = ToolkitConfig::from_json(as_str(json, "json")?)?;
        put(out, RelconConfig(cfg))
    })
}

/// Loads a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_config_from_file(
    path: *const c_char,
    out: *mut *mut RelconConfig,
) -> RelconStatus {
    guard(|| {
        let cfg = ToolkitConfig::from_path(Path::new(as_str(path, "path")?))?;
        put(out, RelconConfig(cfg))
    })
}

/// # Safety
/// `cfg` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn relcon_config_free(cfg: *mut RelconConfig) {
    free(cfg)
}

/// The bundled WLTC class 3b speed profile.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_cycle_wltc(out: *mut *mut RelconCycle) -> RelconStatus {
    guard(|| put(out, RelconCycle(DriveCycle::wltc_class3b())))
}

/// Loads a speed profile CSV (`t_s,v_kmh`).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_cycle_from_file(
    path: *const c_char,
    out: *mut *mut RelconCycle,
) -> RelconStatus {
    guard(|| {
        let c = DriveCycle::from_path(Path::new(as_str(path, "path")?))?;
        put(out, RelconCycle(c))
    })
}

/// Builds a cycle from `n` samples of time (s) and speed (km/h).
///
/// # Safety
/// `t` and `v_kmh` must point to `n` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn relcon_cycle_from_samples(
    t: *const f64,
    v_kmh: *const f64,
    n: usize,
    out: *mut *mut RelconCycle,
) -> RelconStatus {
    guard(|| {
        if t.is_null() || v_kmh.is_null() {
            return Err(null("sample array"));
        }
        let t = std::slice::from_raw_parts(t, n).to_vec();
        let v = std::slice::from_raw_parts(v_kmh, n).to_vec();
        put(out, RelconCycle(DriveCycle::new("samples", t, v)?))
    })
}

/// Cycle length in seconds.
///
/// # Safety
/// `cycle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_cycle_duration(
    cycle: *const RelconCycle,
    out: *mut f64,
) -> RelconStatus {
    guard(|| write_out(out, as_ref(cycle, "cycle")?.0.duration()))
}

/// # Safety
/// `cycle` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn relcon_cycle_free(cycle: *mut RelconCycle) {
    free(cycle)
}

/// Synthesizes and verifies the controller for `mode`, a [`RelconMode`].
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_synthesize(
    cfg: *const RelconConfig,
    mode: c_int,
    out: *mut *mut RelconController,
) -> RelconStatus {
    guard(|| {
        let s = pipeline::synthesize_mode(&as_ref(cfg, "config")?.0, mode_from_int(mode)?)?;
        put(out, RelconController(s.controller))
    })
}

/// Reads a controller file written by `relcon synthesize`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_controller_from_file(
    path: *const c_char,
    out: *mut *mut RelconController,
) -> RelconStatus {
    guard(|| {
        let f = relcon::cli::read_controller(Path::new(as_str(path, "path")?))?;
        put(out, RelconController(f.controller))
    })
}

/// Achieved H∞ level of the controller.
///
/// # Safety
/// `ctrl` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_controller_gamma(
    ctrl: *const RelconController,
    out: *mut f64,
) -> RelconStatus {
    guard(|| write_out(out, as_ref(ctrl, "controller")?.0.gamma_achieved))
}

/// Number of controller states.
///
/// # Safety
/// `ctrl` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_controller_order(
    ctrl: *const RelconController,
    out: *mut usize,
) -> RelconStatus {
    guard(|| write_out(out, as_ref(ctrl, "controller")?.0.continuous.n_states()))
}

/// # Safety
/// `ctrl` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn relcon_controller_free(ctrl: *mut RelconController) {
    free(ctrl)
}

/// Simulates `cycle` in closed loop with `ctrl`.
///
/// # Safety
/// All handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_simulate(
    cfg: *const RelconConfig,
    ctrl: *const RelconController,
    cycle: *const RelconCycle,
    out: *mut *mut RelconLog,
) -> RelconStatus {
    guard(|| {
        let log = pipeline::simulate(
            &as_ref(cfg, "config")?.0,
            &as_ref(cycle, "cycle")?.0,
            &as_ref(ctrl, "controller")?.0,
        )?;
        put(out, RelconLog(log))
    })
}

/// Number of logged rows.
///
/// # Safety
/// `log` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_log_len(log: *const RelconLog, out: *mut usize) -> RelconStatus {
    guard(|| write_out(out, as_ref(log, "log")?.0.len()))
}

/// Copies one log column, a [`RelconColumn`], into `buf`, which must hold
/// `relcon_log_len` values.
///
/// # Safety
/// `log` must be a live handle and `buf` must point to `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn relcon_log_column(
    log: *const RelconLog,
    column: c_int,
    buf: *mut f64,
    cap: usize,
) -> RelconStatus {
    guard(|| {
        let log = &as_ref(log, "log")?.0;
        let col = match column {
            c if c == RelconColumn::Time as c_int => &log.t,
            c if c == RelconColumn::OmegaRef as c_int => &log.omega_ref,
            c if c == RelconColumn::OmegaM as c_int => &log.omega_m,
            c if c == RelconColumn::Id as c_int => &log.i_d,
            c if c == RelconColumn::Iq as c_int => &log.i_q,
            c if c == RelconColumn::Ud as c_int => &log.u_d,
            c if c == RelconColumn::Uq as c_int => &log.u_q,
            c if c == RelconColumn::TauL as c_int => &log.tau_l,
            c if c == RelconColumn::PLoss as c_int => &log.p_loss,
            c if c == RelconColumn::Tj as c_int => &log.t_j,
            _ => {
                return Err(Fail(
                    RelconStatus::InvalidInput,
                    format!("unknown column {column}"),
                ))
            }
        };
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if cap < col.len() {
            return Err(Fail(
                RelconStatus::BufferTooSmall,
                format!("buffer holds {cap} values, column has {}", col.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, col.len()).copy_from_slice(col);
        Ok(())
    })
}

/// Speed-tracking RMSE of the log in km/h.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_log_rmse_kmh(
    cfg: *const RelconConfig,
    log: *const RelconLog,
    out: *mut f64,
) -> RelconStatus {
    guard(|| {
        let v = relcon::sim::tracking_rmse(
            &as_ref(log, "log")?.0,
            &as_ref(cfg, "config")?.0.vehicle_params(),
        )?;
        write_out(out, v)
    })
}

/// Writes the log as CSV.
///
/// # Safety
/// `log` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn relcon_log_write_csv(
    log: *const RelconLog,
    path: *const c_char,
) -> RelconStatus {
    guard(|| {
        let log = &as_ref(log, "log")?.0;
        let path = as_str(path, "path")?;
        std::fs::write(path, log.to_csv())
            .map_err(|e| Fail(RelconStatus::Io, format!("{path}: {e}")))
    })
}

/// # Safety
/// `log` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn relcon_log_free(log: *mut RelconLog) {
    free(log)
}

/// Rainflow-counts the log's junction temperature and applies Miner's rule.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_analyze(
    cfg: *const RelconConfig,
    log: *const RelconLog,
    out: *mut RelconDamage,
) -> RelconStatus {
    guard(|| {
        let r = pipeline::analyze(&as_ref(cfg, "config")?.0, &as_ref(log, "log")?.0)?;
        write_out(
            out,
            RelconDamage {
                damage: r.damage,
                cycle_count: r.cycle_count,
                projected_cycles: r.projection.cycles.unwrap_or(f64::INFINITY),
                projected_years: r.projection.years.unwrap_or(f64::INFINITY),
            },
        )
    })
}

/// Cycles to failure for one thermal cycle under the configured lifetime
/// model. `t_j` is the mean junction temperature (°C), `t_on` the heating
/// time (s).
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_cycles_to_failure(
    cfg: *const RelconConfig,
    delta_t: f64,
    t_j: f64,
    t_on: f64,
    out: *mut f64,
) -> RelconStatus {
    guard(|| {
        let lp = as_ref(cfg, "config")?.0.lifetime_params();
        write_out(out, thermal::cycles_to_failure(delta_t, t_j, t_on, &lp)?)
    })
}

/// Runs synthesis, simulation and analysis for both modes.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_compare(
    cfg: *const RelconConfig,
    cycle: *const RelconCycle,
    out: *mut RelconComparison,
) -> RelconStatus {
    guard(|| {
        let (cmp, perf, rel) =
            pipeline::compare(&as_ref(cfg, "config")?.0, &as_ref(cycle, "cycle")?.0)?;
        write_out(
            out,
            RelconComparison {
                performance: (&perf.summary).into(),
                reliability: (&rel.summary).into(),
                damage_reduction_percent: cmp.damage_reduction_percent,
            },
        )
    })
}

/// Maps a mode name (`performance_oriented`, `reliability_aware`) to a
/// [`RelconMode`].
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn relcon_mode_from_name(
    name: *const c_char,
    out: *mut RelconMode,
) -> RelconStatus {
    guard(|| {
        let m: ControlMode = as_str(name, "name")?.parse()?;
        let mode = match m {
            ControlMode::PerformanceOriented => RelconMode::PerformanceOriented,
            ControlMode::ReliabilityAware => RelconMode::ReliabilityAware,
        };
        write_out(out, mode)
    })
}

/// Short description of a status code.
#[no_mangle]
pub extern "C" fn relcon_status_name(status: c_int) -> *const c_char {
    let s: &'static str = match status {
        0 => "ok\0",
        1 => "null pointer\0",
        2 => "invalid input\0",
        3 => "i/o error\0",
        4 => "numerical failure\0",
        5 => "buffer too small\0",
        6 => "internal panic\0",
        _ => "unknown status\0",
    };
    s.as_ptr().cast()
}

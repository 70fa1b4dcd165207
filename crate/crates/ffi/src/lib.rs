//! C ABI for the ychannel simulator.
//!
//! All functions return a [`YchStatus`]. On failure a message is stored
//! per thread and can be read with [`ych_last_error_message`]. A scenario
//! is an opaque handle owning one antenna configuration, one seeded channel
//! draw and the plan built on it; free it with [`ych_scenario_free`].
//!
//! User indices and antenna counts are in the caller's labelling. Rates are
//! reported in the order 12, 13, 21, 23, 31, 32 of those labels.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ychannel::{
    analytic_rates, build_plan, estimate_dof, sample_channel, theorem_sum_dof, validate_and_order, validate_plan,
    AntennaConfig, BeamformingPlan, BindingCase, ChannelRealization, Error, PowerConfig, RateReport, UserPermutation,
};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YchStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The channel draw violates a genericity condition of the scheme.
    DegenerateChannel = 3,
    /// A Rust panic was caught at the boundary.
    Internal = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YchCase {
    A = 0,
    B = 1,
    C = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YchBounds {
    pub theorem_sum: u32,
    /// Cut-set bound per user, in the caller's labelling.
    pub cutset_per_user: [u32; 3],
    pub cutset_sum: u32,
    pub genie_sum: u32,
    pub binding_case: YchCase,
}

/// Opaque scenario handle.
pub struct YchScenario {
    config: AntennaConfig,
    permutation: UserPermutation,
    channel: ChannelRealization,
    plan: BeamformingPlan,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> YchStatus {
    match err {
        Error::DegenerateChannel(_) => YchStatus::DegenerateChannel,
        _ => YchStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> YchStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Runs `f`, converting panics into [`YchStatus::Internal`].
fn guard(f: impl FnOnce() -> YchStatus) -> YchStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            YchStatus::Internal
        }
    }
}

fn null(what: &str) -> YchStatus {
    set_error(format!("{what} is null"));
    YchStatus::NullPointer
}

fn case_of(c: BindingCase) -> YchCase {
    match c {
        BindingCase::A => YchCase::A,
        BindingCase::B => YchCase::B,
        BindingCase::C => YchCase::C,
    }
}

fn external_rates(r: &RateReport, perm: &UserPermutation) -> [f64; 6] {
    [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)].map(|(a, b)| r.rate(perm.internal(a), perm.internal(b)))
}

/// Sum-DoF bounds for antenna counts given in any order.
///
/// # Safety
/// `out` must be null or point to writable memory for one `YchBounds`.
#[no_mangle]
pub unsafe extern "C" fn ych_bounds(m1: i64, m2: i64, m3: i64, n: i64, out: *mut YchBounds) -> YchStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let (cfg, perm) = match validate_and_order(m1, m2, m3, n) {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        let b = theorem_sum_dof(&cfg);
        let bounds = YchBounds {
            theorem_sum: b.theorem_sum as u32,
            cutset_per_user: std::array::from_fn(|e| b.cutset_per_user[perm.internal(e)] as u32),
            cutset_sum: b.cutset_sum as u32,
            genie_sum: b.genie_sum as u32,
            binding_case: case_of(b.binding_case),
        };
        // SAFETY: checked non-null; caller guarantees it is writable.
        unsafe { out.write(bounds) };
        YchStatus::Ok
    })
}

/// Draws a seeded channel and builds the plan on it.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer. On
/// success the handle written there must be released with
/// [`ych_scenario_free`].
#[no_mangle]
pub unsafe extern "C" fn ych_scenario_new(
    m1: i64,
    m2: i64,
    m3: i64,
    n: i64,
    seed: u64,
    reciprocal: bool,
    out: *mut *mut YchScenario,
) -> YchStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        // SAFETY: checked non-null.
        unsafe { out.write(ptr::null_mut()) };
        let (config, permutation) = match validate_and_order(m1, m2, m3, n) {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        let channel = sample_channel(&config, reciprocal, seed);
        let plan = match build_plan(&config, &channel) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        let handle = Box::new(YchScenario {
            config,
            permutation,
            channel,
            plan,
        });
        // SAFETY: checked non-null.
        unsafe { out.write(Box::into_raw(handle)) };
        YchStatus::Ok
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must be null or a handle from [`ych_scenario_new`] that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn ych_scenario_free(scenario: *mut YchScenario) {
    if !scenario.is_null() {
        // SAFETY: the caller hands back ownership of a live handle.
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// Sum-DoF predicted for the scenario's configuration.
///
/// # Safety
/// `scenario` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ych_scenario_theorem_sum(scenario: *const YchScenario, out: *mut u32) -> YchStatus {
    guard(|| {
        // SAFETY: null or live per the contract.
        let Some(s) = (unsafe { scenario.as_ref() }) else {
            return null("scenario");
        };
        if out.is_null() {
            return null("out");
        }
        // SAFETY: checked non-null.
        unsafe { out.write(theorem_sum_dof(&s.config).theorem_sum as u32) };
        YchStatus::Ok
    })
}

/// Checks every plan invariant; `passed` receives the verdict.
///
/// # Safety
/// `scenario` must be null or a live handle; `passed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ych_scenario_validate(scenario: *const YchScenario, passed: *mut bool) -> YchStatus {
    guard(|| {
        // SAFETY: null or live per the contract.
        let Some(s) = (unsafe { scenario.as_ref() }) else {
            return null("scenario");
        };
        if passed.is_null() {
            return null("passed");
        }
        let report = validate_plan(&s.plan, &s.channel);
        if !report.passed {
            let names: Vec<_> = report.failures().map(|c| c.name.clone()).collect();
            set_error(format!("failed checks: {}", names.join(", ")));
        }
        // SAFETY: checked non-null.
        unsafe { passed.write(report.passed) };
        YchStatus::Ok
    })
}

/// Per-message rates (six values) and their sum at `snr_db`, in bits per
/// channel use.
///
/// # Safety
/// `scenario` must be null or a live handle; `rates` must be null or point
/// to six writable doubles; `sum_rate` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ych_scenario_rates(
    scenario: *const YchScenario,
    snr_db: f64,
    rates: *mut f64,
    sum_rate: *mut f64,
) -> YchStatus {
    guard(|| {
        // SAFETY: null or live per the contract.
        let Some(s) = (unsafe { scenario.as_ref() }) else {
            return null("scenario");
        };
        if rates.is_null() || sum_rate.is_null() {
            return null("output buffer");
        }
        let report = match PowerConfig::from_snr_db(snr_db).and_then(|p| analytic_rates(&s.plan, &s.channel, &p)) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        let values = external_rates(&report, &s.permutation);
        // SAFETY: caller provides room for six values; both checked non-null.
        unsafe {
            ptr::copy_nonoverlapping(values.as_ptr(), rates, values.len());
            sum_rate.write(report.sum_rate);
        }
        YchStatus::Ok
    })
}

/// Rate slope between the extreme points of an increasing SNR grid (dB).
///
/// # Safety
/// `scenario` must be null or a live handle; `snr_db` must be null or point
/// to `len` readable doubles; `slope` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ych_scenario_estimate_dof(
    scenario: *const YchScenario,
    snr_db: *const f64,
    len: usize,
    slope: *mut f64,
) -> YchStatus {
    guard(|| {
        // SAFETY: null or live per the contract.
        let Some(s) = (unsafe { scenario.as_ref() }) else {
            return null("scenario");
        };
        if snr_db.is_null() || slope.is_null() {
            return null("grid or output");
        }
        // SAFETY: caller guarantees `len` readable values.
        let grid_db = unsafe { std::slice::from_raw_parts(snr_db, len) };
        let grid: Vec<f64> = grid_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
        match estimate_dof(&s.plan, &s.channel, &grid) {
            Ok(r) => {
                // SAFETY: checked non-null.
                unsafe { slope.write(r.estimated_slope) };
                YchStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Message of the last failed call on this thread, or null. The string is
/// owned by the library and stays valid until the next call on the thread.
#[no_mangle]
pub extern "C" fn ych_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! C ABI for the memchange library.
//!
//! Conventions:
//! - Every fallible call returns an [`McStatus`]; `MC_STATUS_OK` is zero.
//! - Objects are returned as opaque handles that must be released with the
//!   matching `*_free` function.
//! - On failure a thread-local message is kept; fetch it with
//!   [`mc_last_error`].
//! - Passing `0` for a knob selects its documented default.

use memchange::error::McError;
use memchange::segment::{
    build_candidate_grid, build_cost_table, default_fixed_penalty, default_k_max, default_min_seg,
    default_slope_fit_range, default_step, dp_segment, SegmentationResult,
};
use memchange::spectral::{default_bandwidth, SegmentWindow, SpectralPrefix};
use memchange::synthesis::{synthesize_truncated, ProcessSpec, DEFAULT_TRUNCATION_FACTOR};
use memchange::whittle::estimate_d;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let sanitized: Vec<u8> = msg.bytes().filter(|&b| b != 0).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Status codes returned by every fallible function.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    DataError = 4,
    DegenerateSegment = 5,
    InfeasibleK = 6,
    IoError = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

fn status_of(err: &McError) -> McStatus {
    match err {
        McError::InvalidInput(_) => McStatus::InvalidInput,
        McError::Data(_) => McStatus::DataError,
        McError::DegenerateSegment(_) => McStatus::DegenerateSegment,
        McError::InfeasibleK(_) => McStatus::InfeasibleK,
        McError::Io(_) => McStatus::IoError,
    }
}

fn fail(err: &McError) -> McStatus {
    set_last_error(&err.to_string());
    status_of(err)
}

fn guard(f: impl FnOnce() -> McStatus) -> McStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic");
            McStatus::Panic
        }
    }
}

/// A series handle: raw values, owned by the library.
pub struct McSeries {
    values: Vec<f64>,
}

/// A detection handle: full contrast curve plus the reported segmentation.
pub struct McDetection {
    result: SegmentationResult,
    k_hat: usize,
    s_hat: f64,
}

/// Local Whittle fit of one segment.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct McWhittleFit {
    pub d_hat: f64,
    pub w_min: f64,
    /// Nonzero when the minimizer sits at an end of the search interval.
    pub at_boundary: u8,
}

/// Selection rule for the number of changes.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McRule {
    Fixed = 0,
    Bic = 1,
    Slope = 2,
}

/// Detection knobs; zero means the documented default. Set `known_k` to a
/// non-negative value to skip selection and report that row.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct McDetectParams {
    pub m: usize,
    pub k_max: usize,
    pub step: usize,
    pub min_seg: usize,
    /// Fixed penalty per break; 0 means `2 / sqrt(n)`.
    pub z_n: f64,
    /// True change count, or -1 when unknown.
    pub known_k: i64,
    pub rule: McRule,
    /// Slope fit range; both 0 means the default `2..k_max`.
    pub slope_fit_lo: usize,
    pub slope_fit_hi: usize,
}

impl Default for McDetectParams {
    fn default() -> Self {
        McDetectParams {
            m: 0,
            k_max: 0,
            step: 0,
            min_seg: 0,
            z_n: 0.0,
            known_k: -1,
            rule: McRule::Slope,
            slope_fit_lo: 0,
            slope_fit_hi: 0,
        }
    }
}

/// Copy the message of the most recent failure on this thread into `buf`
/// (NUL terminated, truncated to `cap`). Returns the full message length.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be NULL (then only the
/// required length is returned).
#[no_mangle]
pub unsafe extern "C" fn mc_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Wrap a copy of `len` raw values into a series handle.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be a valid
/// destination pointer.
#[no_mangle]
pub unsafe extern "C" fn mc_series_from_values(
    values: *const f64,
    len: usize,
    out: *mut *mut McSeries,
) -> McStatus {
    guard(|| {
        if values.is_null() || out.is_null() {
            set_last_error("NULL pointer argument");
            return McStatus::NullPointer;
        }
        if len == 0 {
            set_last_error("empty series");
            return McStatus::DataError;
        }
        let slice = std::slice::from_raw_parts(values, len);
        if slice.iter().any(|v| !v.is_finite()) {
            set_last_error("series contains a non-finite value");
            return McStatus::DataError;
        }
        *out = Box::into_raw(Box::new(McSeries { values: slice.to_vec() }));
        McStatus::Ok
    })
}

/// Simulate a trajectory from a JSON process specification, e.g.
/// `{"n":1000,"taus":[0.5],"regimes":[{"family":"farima00","d":0.4},
/// {"family":"farima00","d":0.1}]}`. `truncation` 0 selects `10 * n`.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mc_simulate_json(
    spec_json: *const c_char,
    seed: u64,
    truncation: usize,
    out: *mut *mut McSeries,
) -> McStatus {
    guard(|| {
        if spec_json.is_null() || out.is_null() {
            set_last_error("NULL pointer argument");
            return McStatus::NullPointer;
        }
        let text = match CStr::from_ptr(spec_json).to_str() {
            Ok(t) => t,
            Err(_) => {
                set_last_error("spec JSON is not valid UTF-8");
                return McStatus::InvalidUtf8;
            }
        };
        let spec: ProcessSpec = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(e) => {
                set_last_error(&format!("malformed spec JSON: {e}"));
                return McStatus::DataError;
            }
        };
        let truncation = if truncation == 0 {
            DEFAULT_TRUNCATION_FACTOR * spec.n
        } else {
            truncation
        };
        match synthesize_truncated(&spec, seed, truncation) {
            Ok(traj) => {
                *out = Box::into_raw(Box::new(McSeries { values: traj.values }));
                McStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of values held by the series, or 0 for NULL.
///
/// # Safety
/// `series` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mc_series_len(series: *const McSeries) -> usize {
    if series.is_null() {
        return 0;
    }
    (*series).values.len()
}

/// Copy the series values into `buf` (`cap` doubles available).
///
/// # Safety
/// `series` must be a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn mc_series_copy_values(
    series: *const McSeries,
    buf: *mut f64,
    cap: usize,
) -> McStatus {
    guard(|| {
        if series.is_null() || buf.is_null() {
            set_last_error("NULL pointer argument");
            return McStatus::NullPointer;
        }
        let values = &(*series).values;
        if cap < values.len() {
            set_last_error(&format!("buffer holds {cap} values but {} are needed", values.len()));
            return McStatus::BufferTooSmall;
        }
        std::ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        McStatus::Ok
    })
}

/// Release a series handle (NULL is a no-op).
///
/// # Safety
/// `series` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mc_series_free(series: *mut McSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Local Whittle fit on the window `{a+1, ..., b}`; pass `a = b = 0` for
/// the full series and `m = 0` for the default bandwidth.
///
/// # Safety
/// `series` must be a live handle and `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn mc_estimate_d(
    series: *const McSeries,
    m: usize,
    a: usize,
    b: usize,
    out: *mut McWhittleFit,
) -> McStatus {
    guard(|| {
        if series.is_null() || out.is_null() {
            set_last_error("NULL pointer argument");
            return McStatus::NullPointer;
        }
        let values = &(*series).values;
        let n = values.len();
        let m = if m == 0 { default_bandwidth(n) } else { m };
        let (a, b) = if a == 0 && b == 0 { (0, n) } else { (a, b) };
        let run = || -> Result<McWhittleFit, McError> {
            let window = SegmentWindow::new(a, b)?;
            let prefix = SpectralPrefix::from_values(values, m)?;
            let fit = estimate_d(&prefix, window)?;
            Ok(McWhittleFit {
                d_hat: fit.d_hat,
                w_min: fit.w_min,
                at_boundary: fit.at_boundary as u8,
            })
        };
        match run() {
            Ok(fit) => {
                *out = fit;
                McStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Segment the series and select the number of changes.
///
/// # Safety
/// `series` must be a live handle; `params` NULL or valid; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mc_detect(
    series: *const McSeries,
    params: *const McDetectParams,
    out: *mut *mut McDetection,
) -> McStatus {
    guard(|| {
        if series.is_null() || out.is_null() {
            set_last_error("NULL pointer argument");
            return McStatus::NullPointer;
        }
        let p = if params.is_null() { McDetectParams::default() } else { *params };
        let values = &(*series).values;
        let n = values.len();
        let m = if p.m == 0 { default_bandwidth(n) } else { p.m };
        let step = if p.step == 0 { default_step(n) } else { p.step };
        let min_seg = if p.min_seg == 0 { default_min_seg(step) } else { p.min_seg };
        let mut k_max = if p.k_max == 0 { default_k_max(n) } else { p.k_max };
        if p.known_k >= 0 {
            k_max = k_max.max(p.known_k as usize);
        }
        let z_n = if p.z_n == 0.0 { default_fixed_penalty(n) } else { p.z_n };
        let slope_fit = if p.slope_fit_lo == 0 && p.slope_fit_hi == 0 {
            default_slope_fit_range(k_max)
        } else {
            (p.slope_fit_lo, p.slope_fit_hi)
        };

        let run = || -> Result<McDetection, McError> {
            let prefix = SpectralPrefix::from_values(values, m)?;
            let grid = build_candidate_grid(n, step, min_seg)?;
            let table = build_cost_table(&prefix, &grid)?;
            let result = dp_segment(&table, k_max)?;
            let (k_hat, s_hat) = if p.known_k >= 0 {
                (p.known_k as usize, 0.0)
            } else {
                match p.rule {
                    McRule::Fixed => (result.select_fixed_penalty(z_n).k_hat, 0.0),
                    McRule::Bic => (result.select_bic().k_hat, 0.0),
                    McRule::Slope => {
                        let sel = result.slope_heuristic(slope_fit)?;
                        (sel.k_hat, sel.s_hat.unwrap_or(0.0))
                    }
                }
            };
            Ok(McDetection { result, k_hat, s_hat })
        };
        match run() {
            Ok(det) => {
                *out = Box::into_raw(Box::new(det));
                McStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Selected number of changes.
///
/// # Safety
/// `det` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mc_detection_k_hat(det: *const McDetection) -> usize {
    if det.is_null() {
        return 0;
    }
    (*det).k_hat
}

/// Fitted slope magnitude (zero unless the slope rule ran).
///
/// # Safety
/// `det` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mc_detection_s_hat(det: *const McDetection) -> f64 {
    if det.is_null() {
        return 0.0;
    }
    (*det).s_hat
}

/// Number of contrast rows (`k_max + 1`).
///
/// # Safety
/// `det` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mc_detection_num_rows(det: *const McDetection) -> usize {
    if det.is_null() {
        return 0;
    }
    (*det).result.rows.len()
}

/// Copy `C(K)` for `K = 0..num_rows` into `buf`.
///
/// # Safety
/// `det` must be a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn mc_detection_contrasts(
    det: *const McDetection,
    buf: *mut f64,
    cap: usize,
) -> McStatus {
    guard(|| {
        if det.is_null() || buf.is_null() {
            set_last_error("NULL pointer argument");
            return McStatus::NullPointer;
        }
        let contrasts = (*det).result.contrasts();
        if cap < contrasts.len() {
            set_last_error(&format!(
                "buffer holds {cap} values but {} are needed",
                contrasts.len()
            ));
            return McStatus::BufferTooSmall;
        }
        std::ptr::copy_nonoverlapping(contrasts.as_ptr(), buf, contrasts.len());
        McStatus::Ok
    })
}

unsafe fn copy_row_slice<T: Copy>(
    data: &[T],
    buf: *mut T,
    cap: usize,
    out_len: *mut usize,
) -> McStatus {
    if !out_len.is_null() {
        *out_len = data.len();
    }
    if buf.is_null() {
        // Length query only.
        return McStatus::Ok;
    }
    if cap < data.len() {
        set_last_error(&format!("buffer holds {cap} values but {} are needed", data.len()));
        return McStatus::BufferTooSmall;
    }
    std::ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
    McStatus::Ok
}

/// Copy the `k` breakpoints of row `k` into `buf`; pass `buf = NULL` to
/// query the length through `out_len`.
///
/// # Safety
/// `det` must be a live handle; `buf` NULL or `cap` writable entries;
/// `out_len` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn mc_detection_breakpoints(
    det: *const McDetection,
    k: usize,
    buf: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> McStatus {
    guard(|| {
        if det.is_null() {
            set_last_error("NULL pointer argument");
            return McStatus::NullPointer;
        }
        let rows = &(*det).result.rows;
        if k >= rows.len() {
            set_last_error(&format!("row {k} out of range (k_max = {})", rows.len() - 1));
            return McStatus::InvalidInput;
        }
        copy_row_slice(&rows[k].breakpoints, buf, cap, out_len)
    })
}

/// Copy the `k + 1` per-segment memory estimates of row `k` into `buf`;
/// pass `buf = NULL` to query the length through `out_len`.
///
/// # Safety
/// Same contract as [`mc_detection_breakpoints`].
#[no_mangle]
pub unsafe extern "C" fn mc_detection_dhats(
    det: *const McDetection,
    k: usize,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> McStatus {
    guard(|| {
        if det.is_null() {
            set_last_error("NULL pointer argument");
            return McStatus::NullPointer;
        }
        let rows = &(*det).result.rows;
        if k >= rows.len() {
            set_last_error(&format!("row {k} out of range (k_max = {})", rows.len() - 1));
            return McStatus::InvalidInput;
        }
        copy_row_slice(&rows[k].dhats, buf, cap, out_len)
    })
}

/// Release a detection handle (NULL is a no-op).
///
/// # Safety
/// `det` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mc_detection_free(det: *mut McDetection) {
    if !det.is_null() {
        drop(Box::from_raw(det));
    }
}

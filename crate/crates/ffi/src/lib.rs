//! C ABI over `sac-core`.
//!
//! Datasets and estimates cross the boundary as opaque handles. Every
//! fallible call returns a [`SacStatus`]; on failure the message is kept per
//! thread and read back with [`sac_last_error_message`]. Panics are caught
//! at the boundary and reported as `SAC_STATUS_PANIC`.
//!
//! The header is `include/sac.h`, regenerated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use sac_core::baselines::{chebyshev_extrapolate, least_squares_poly};
use sac_core::estimator::{EstimatorOptions, Regime};
use sac_core::{ConformalParams, Error, RenyiDataset};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SacStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    /// Singular or indefinite matrices, failed root finding and similar.
    Numerical = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SacRegime {
    Noiseless = 0,
    Constrained = 1,
    ConstraintInactive = 2,
}

/// Estimator settings. Start from [`sac_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SacOptions {
    pub epsilon: f64,
    pub eta: f64,
    /// χ² radius; zero or negative selects `k_max`.
    pub chi2_0: f64,
}

/// Opaque Rényi dataset.
pub struct SacDataset(RenyiDataset);

/// Opaque estimate.
pub struct SacEstimate(sac_core::SacEstimate);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SacStatus, msg: impl Into<String>) -> SacStatus {
    set_error(msg.into());
    status
}

fn from_core(e: Error) -> SacStatus {
    let status = if e.is_numerical() {
        SacStatus::Numerical
    } else {
        SacStatus::InvalidInput
    };
    fail(status, e.to_string())
}

/// Runs `f`, clearing the last error first and converting panics.
fn guard(f: impl FnOnce() -> SacStatus) -> SacStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SacStatus::Panic, format!("panic: {msg}"))
        }
    }
}

/// Message of the last failed call on this thread, or NULL.
///
/// The pointer stays valid until the next `sac_*` call on the same thread.
#[no_mangle]
pub extern "C" fn sac_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Defaults: the bundled conformal parameters and `chi2_0 = 0`.
#[no_mangle]
pub extern "C" fn sac_options_default() -> SacOptions {
    let p = ConformalParams::default();
    SacOptions {
        epsilon: p.epsilon,
        eta: p.eta,
        chi2_0: 0.0,
    }
}

/// Builds a dataset from `len` orders and Rényi values in bits.
///
/// `covariance` is NULL for exact data, otherwise `len * len` doubles in
/// row-major order.
///
/// # Safety
/// `orders` and `values` must point to `len` readable elements, `covariance`
/// to `len * len` or be NULL, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sac_dataset_new(
    orders: *const u32,
    values: *const f64,
    covariance: *const f64,
    len: usize,
    out: *mut *mut SacDataset,
) -> SacStatus {
    guard(|| {
        if orders.is_null() || values.is_null() || out.is_null() {
            return fail(
                SacStatus::NullPointer,
                "orders, values and out must be non-null",
            );
        }
        if len == 0 {
            return fail(SacStatus::InvalidInput, "empty dataset");
        }
        let orders = std::slice::from_raw_parts(orders, len).to_vec();
        let values = std::slice::from_raw_parts(values, len).to_vec();
        let cov = (!covariance.is_null()).then(|| {
            DMatrix::from_row_slice(len, len, std::slice::from_raw_parts(covariance, len * len))
        });
        match RenyiDataset::new(orders, values, cov) {
            Ok(d) => {
                *out = Box::into_raw(Box::new(SacDataset(d)));
                SacStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `dataset` must come from [`sac_dataset_new`] and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn sac_dataset_free(dataset: *mut SacDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of orders in the dataset, 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sac_dataset_len(dataset: *const SacDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.len())
}

/// True when the dataset carries a covariance and takes the noisy path.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sac_dataset_is_noisy(dataset: *const SacDataset) -> bool {
    dataset.as_ref().is_some_and(|d| d.0.covariance().is_some())
}

/// Runs the estimator. `options` may be NULL for the defaults.
///
/// # Safety
/// `dataset` must be a live handle, `options` NULL or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sac_estimate(
    dataset: *const SacDataset,
    options: *const SacOptions,
    out: *mut *mut SacEstimate,
) -> SacStatus {
    guard(|| {
        let (Some(d), false) = (dataset.as_ref(), out.is_null()) else {
            return fail(SacStatus::NullPointer, "dataset and out must be non-null");
        };
        let o = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| sac_options_default());
        let params = match ConformalParams::new(o.epsilon, o.eta) {
            Ok(p) => p,
            Err(e) => return from_core(e),
        };
        let opts = EstimatorOptions {
            chi2_0: (o.chi2_0 > 0.0).then_some(o.chi2_0),
            ..EstimatorOptions::with_params(params)
        };
        match sac_core::estimate(&d.0, &opts) {
            Ok(e) => {
                *out = Box::into_raw(Box::new(SacEstimate(e)));
                SacStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `estimate` must come from [`sac_estimate`] and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn sac_estimate_free(estimate: *mut SacEstimate) {
    if !estimate.is_null() {
        drop(Box::from_raw(estimate));
    }
}

/// Von Neumann entropy estimate in bits; NaN for NULL.
///
/// # Safety
/// `estimate` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sac_estimate_value(estimate: *const SacEstimate) -> f64 {
    estimate.as_ref().map_or(f64::NAN, |e| e.0.alpha_min)
}

/// Minimal squared norm at the estimate; NaN for NULL.
///
/// # Safety
/// `estimate` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sac_estimate_delta2(estimate: *const SacEstimate) -> f64 {
    estimate.as_ref().map_or(f64::NAN, |e| e.0.delta2_min)
}

/// # Safety
/// `estimate` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sac_estimate_kernel_condition(estimate: *const SacEstimate) -> f64 {
    estimate.as_ref().map_or(f64::NAN, |e| e.0.kernel_condition)
}

/// # Safety
/// `estimate` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sac_estimate_regime(
    estimate: *const SacEstimate,
    out: *mut SacRegime,
) -> SacStatus {
    guard(|| {
        let (Some(e), false) = (estimate.as_ref(), out.is_null()) else {
            return fail(SacStatus::NullPointer, "estimate and out must be non-null");
        };
        *out = match e.0.regime {
            Regime::Noiseless => SacRegime::Noiseless,
            Regime::Constrained => SacRegime::Constrained,
            Regime::ConstraintInactive => SacRegime::ConstraintInactive,
        };
        SacStatus::Ok
    })
}

/// Chebyshev interpolation of the supplied orders, evaluated at `k = 1`.
///
/// # Safety
/// `dataset` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sac_chebyshev(dataset: *const SacDataset, out: *mut f64) -> SacStatus {
    baseline(dataset, out, chebyshev_extrapolate)
}

/// Least-squares polynomial of the given degree, evaluated at `k = 1`.
///
/// # Safety
/// `dataset` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sac_least_squares(
    dataset: *const SacDataset,
    degree: usize,
    out: *mut f64,
) -> SacStatus {
    baseline(dataset, out, |d| least_squares_poly(d, degree))
}

unsafe fn baseline(
    dataset: *const SacDataset,
    out: *mut f64,
    f: impl FnOnce(&RenyiDataset) -> sac_core::Result<f64>,
) -> SacStatus {
    guard(|| {
        let (Some(d), false) = (dataset.as_ref(), out.is_null()) else {
            return fail(SacStatus::NullPointer, "dataset and out must be non-null");
        };
        match f(&d.0) {
            Ok(v) => {
                *out = v;
                SacStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

//! C ABI over the `eifeval` estimators.
//!
//! Every fallible function returns an [`EifStatus`]; on failure a message is
//! stored per thread and can be read with [`eif_last_error_message`]. Output
//! pointers are written only on success. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::{c_char, size_t};

use eifeval::estimate::{improvement_metric, naive_estimate, one_step_crossfit, one_step_fixed};
use eifeval::io::load_bench_dataset;
use eifeval::ranking::{kendall_tau, Permutation};
use eifeval::{gen_sim_dataset, BenchRecord, Error, EstimateReport, Method, MetricKind, OracleParams, SimConfig, Stream};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EifStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidConfig = 3,
    Contract = 4,
    Parse = 5,
    Io = 6,
    SingularDesign = 7,
    EmptyDataset = 8,
    Panic = 99,
}

impl From<&Error> for EifStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidFolds { .. } | Error::DegenerateSignal => {
                EifStatus::InvalidConfig
            }
            Error::Contract(_) | Error::MissingTau { .. } | Error::InvalidM => EifStatus::Contract,
            Error::Parse { .. } => EifStatus::Parse,
            Error::Io { .. } => EifStatus::Io,
            Error::SingularDesign(_) => EifStatus::SingularDesign,
            Error::EmptyDataset => EifStatus::EmptyDataset,
            _ => EifStatus::InvalidInput,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EifMethod {
    Naive = 0,
    OneStepCrossfit = 1,
    OneStepFixed = 2,
}

/// Flat copy of an estimate report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EifReport {
    pub method: EifMethod,
    pub theta_hat: f64,
    pub theta_hat_clamped: f64,
    pub var_influence: f64,
    pub std_error: f64,
    pub level: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: size_t,
    pub m: size_t,
    pub k: size_t,
}

impl From<&EstimateReport> for EifReport {
    fn from(r: &EstimateReport) -> Self {
        EifReport {
            method: match r.method {
                Method::Naive => EifMethod::Naive,
                Method::OneStepCrossfit => EifMethod::OneStepCrossfit,
                Method::OneStepFixed => EifMethod::OneStepFixed,
            },
            theta_hat: r.theta_hat,
            theta_hat_clamped: r.theta_hat_clamped,
            var_influence: r.var_influence,
            std_error: r.std_error,
            level: r.level,
            ci_lo: r.ci.0,
            ci_hi: r.ci.1,
            n: r.n,
            m: r.m,
            k: r.k,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EifVariances {
    pub var_naive: f64,
    pub var_onestep: f64,
    pub vr: f64,
}

/// Simulation settings for a single model.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EifSimParams {
    pub n: size_t,
    pub m: size_t,
    pub sigma_sq: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub sigma_eta: f64,
    pub folds: size_t,
    pub seed: u64,
}

/// Opaque handle to a loaded benchmark dataset.
pub struct EifBenchDataset {
    records: Vec<BenchRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> EifStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EifStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            EifStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            EifStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            EifStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn in_slice<'a, T>(p: *const T, len: size_t, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn eif_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a benchmark JSONL file. Free the handle with [`eif_bench_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eif_bench_load(path: *const c_char, out: *mut *mut EifBenchDataset) -> EifStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Error::InvalidInput("path is not valid UTF-8".into()))?;
        let records = load_bench_dataset(path)?;
        *out = Box::into_raw(Box::new(EifBenchDataset { records }));
        Ok(())
    })
}

/// # Safety
/// `dataset` must come from [`eif_bench_load`] and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn eif_bench_free(dataset: *mut EifBenchDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of records, or 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eif_bench_len(dataset: *const EifBenchDataset) -> size_t {
    dataset.as_ref().map_or(0, |d| d.records.len())
}

/// Auxiliary samples per record used for integration (`M`), or 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eif_bench_m(dataset: *const EifBenchDataset) -> size_t {
    dataset
        .as_ref()
        .and_then(|d| d.records.first())
        .map_or(0, |r| r.m())
}

/// Naive accuracy estimate over a loaded dataset.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eif_bench_naive(
    dataset: *const EifBenchDataset,
    level: f64,
    out: *mut EifReport,
) -> EifStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or(Failure::Null("dataset"))?;
        let out = out_ref(out, "out")?;
        let phis: Vec<f64> = d.records.iter().map(BenchRecord::phi_value).collect();
        *out = EifReport::from(&naive_estimate(&phis, level)?);
        Ok(())
    })
}

/// One-step estimate from the dataset's fixed tau predictions.
/// `clamped_out` may be NULL; otherwise it receives the number of clamped predictions.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eif_bench_one_step_fixed(
    dataset: *const EifBenchDataset,
    level: f64,
    out: *mut EifReport,
    clamped_out: *mut size_t,
) -> EifStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or(Failure::Null("dataset"))?;
        let out = out_ref(out, "out")?;
        let (report, parts) = one_step_fixed(&d.records, level)?;
        *out = EifReport::from(&report);
        if let Some(c) = clamped_out.as_mut() {
            *c = parts.clamped_predictions;
        }
        Ok(())
    })
}

/// Naive estimate from raw metric values.
///
/// # Safety
/// `phis` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eif_naive_from_scores(
    phis: *const f64,
    len: size_t,
    level: f64,
    out: *mut EifReport,
) -> EifStatus {
    guard(|| {
        let phis = in_slice(phis, len, "phis")?;
        let out = out_ref(out, "out")?;
        *out = EifReport::from(&naive_estimate(phis, level)?);
        Ok(())
    })
}

/// Closed-form variances for the simulation model.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eif_oracle_variances(
    sigma_sq: f64,
    rho: f64,
    sigma_eta: f64,
    out: *mut EifVariances,
) -> EifStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let v = OracleParams::new(sigma_sq, rho, sigma_eta)?.variances();
        *out = EifVariances {
            var_naive: v.var_naive,
            var_onestep: v.var_onestep,
            vr: v.vr,
        };
        Ok(())
    })
}

/// Kendall tau between two rankings given as 1-based model ids.
///
/// # Safety
/// `a` and `b` must each point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eif_kendall_tau(
    a: *const size_t,
    b: *const size_t,
    len: size_t,
    out: *mut f64,
) -> EifStatus {
    guard(|| {
        let a = Permutation::new(in_slice(a, len, "a")?.to_vec())?;
        let b = Permutation::new(in_slice(b, len, "b")?.to_vec())?;
        let out = out_ref(out, "out")?;
        *out = kendall_tau(&a, &b)?;
        Ok(())
    })
}

/// `|naive - gt| - |onestep - gt|`; positive when the one-step estimate is closer.
#[no_mangle]
pub extern "C" fn eif_improvement(naive: f64, onestep: f64, gt: f64) -> f64 {
    improvement_metric(naive, onestep, gt)
}

/// Simulates one model's dataset and returns naive and cross-fitted one-step
/// estimates of its squared error.
///
/// # Safety
/// `params` must be readable; `naive_out` and `onestep_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eif_simulate_estimate(
    params: *const EifSimParams,
    level: f64,
    naive_out: *mut EifReport,
    onestep_out: *mut EifReport,
) -> EifStatus {
    guard(|| {
        let p = params.as_ref().ok_or(Failure::Null("params"))?;
        let naive_out = out_ref(naive_out, "naive_out")?;
        let onestep_out = out_ref(onestep_out, "onestep_out")?;
        let config = SimConfig {
            n: p.n,
            m: p.m,
            sigma_sq_per_model: vec![p.sigma_sq],
            rho1: p.rho1,
            rho2: p.rho2,
            sigma_eta: p.sigma_eta,
            seed: p.seed,
            trials: 1,
            folds: p.folds,
        };
        let stream = Stream::trial(p.seed, 0);
        let data = gen_sim_dataset(&config, 0, stream)?;
        let phis: Vec<f64> = data.iter().map(|r| (r.y - r.g).powi(2)).collect();
        let naive = naive_estimate(&phis, level)?;
        let (one_step, _) =
            one_step_crossfit(&data, MetricKind::SquaredError, p.folds, level, stream.child(0))?;
        *naive_out = EifReport::from(&naive);
        *onestep_out = EifReport::from(&one_step);
        Ok(())
    })
}

//! C ABI over the `mcs-hybrid` engine.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_run`
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`McsStatus`]; on failure, [`mcs_last_error`] describes the
//! problem for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mcs_hybrid::futures::{run_oia3m, FuturesOutcome};
use mcs_hybrid::harness::io::write_experiment;
use mcs_hybrid::harness::{generate_market, parse_spec, run_experiment, ExperimentResult, Method};
use mcs_hybrid::model::{validate_market, Market, MarketConfig, PairData, Task, ValidatedMarket, Worker};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMarket = 3,
    EngineFailure = 4,
    OutOfRange = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McsMetric {
    ServiceQuality = 0,
    Rosq = 1,
    Fodsq = 2,
    WorkerUtility = 3,
    Ni = 4,
    Dip = 5,
    Ecip = 6,
    RunningTimeMs = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McsTaskData {
    pub budget: f64,
    pub desired_quality: f64,
    pub risk_scale: f64,
    pub tx_power: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McsWorkerData {
    pub participation_prob: f64,
    pub tx_power: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McsPairData {
    pub quality: f64,
    pub cost: f64,
    pub desired_payment: f64,
    pub uplink_latency: f64,
    pub downlink_latency: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McsConfig {
    pub overbooking_rate: f64,
    pub payment_step: f64,
    pub risk_tolerance: f64,
    pub money_scale: i64,
    pub max_rounds_cap: usize,
}

/// A validated market.
pub struct McsMarket {
    inner: ValidatedMarket,
}

/// A futures contract book.
pub struct McsFutures {
    inner: FuturesOutcome,
    money_scale: f64,
}

/// A finished Monte Carlo experiment.
pub struct McsExperiment {
    inner: ExperimentResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn fail(status: McsStatus, msg: impl std::fmt::Display) -> McsStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> McsStatus) -> McsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == McsStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(McsStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, McsStatus> {
    if s.is_null() {
        return Err(fail(McsStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(McsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_or_empty<'a, T>(p: *const T, n: usize) -> &'a [T] {
    if n == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(p, n)
    }
}

fn boxed<T>(out: *mut *mut T, value: T) -> McsStatus {
    // SAFETY: callers check `out` for null before building `value`.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    McsStatus::Ok
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mcs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mcs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Fills `out` with the default configuration.
///
/// # Safety
/// `out` must be null or point to writable memory for one `McsConfig`.
#[no_mangle]
pub unsafe extern "C" fn mcs_config_default(out: *mut McsConfig) -> McsStatus {
    if out.is_null() {
        return fail(McsStatus::NullPointer, "out is null");
    }
    let d = MarketConfig::default();
    *out = McsConfig {
        overbooking_rate: d.overbooking_rate,
        payment_step: d.payment_step,
        risk_tolerance: d.risk_tolerance,
        money_scale: d.money_scale,
        max_rounds_cap: d.max_rounds_cap,
    };
    McsStatus::Ok
}

/// Builds a market from flat arrays. `pairs` is row-major, `n_tasks * n_workers` long.
///
/// # Safety
/// Each array pointer must be valid for its stated length (it may be null
/// when that length is zero); `config` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcs_market_new(
    tasks: *const McsTaskData,
    n_tasks: usize,
    workers: *const McsWorkerData,
    n_workers: usize,
    pairs: *const McsPairData,
    config: *const McsConfig,
    out: *mut *mut McsMarket,
) -> McsStatus {
    guard(|| {
        if out.is_null() || config.is_null() {
            return fail(McsStatus::NullPointer, "config and out must not be null");
        }
        let n_pairs = n_tasks * n_workers;
        if (n_tasks > 0 && tasks.is_null()) || (n_workers > 0 && workers.is_null()) || (n_pairs > 0 && pairs.is_null())
        {
            return fail(McsStatus::NullPointer, "array pointer is null");
        }
        let tasks = slice_or_empty(tasks, n_tasks);
        let workers = slice_or_empty(workers, n_workers);
        let pairs = slice_or_empty(pairs, n_pairs);
        let c = &*config;
        let market = Market {
            tasks: tasks
                .iter()
                .map(|t| Task {
                    budget: t.budget,
                    desired_quality: t.desired_quality,
                    risk_scale: t.risk_scale,
                    tx_power: t.tx_power,
                })
                .collect(),
            workers: workers
                .iter()
                .map(|w| Worker { participation_prob: w.participation_prob, tx_power: w.tx_power })
                .collect(),
            pairs: (0..n_tasks)
                .map(|i| {
                    pairs[i * n_workers..(i + 1) * n_workers]
                        .iter()
                        .map(|p| PairData {
                            quality: p.quality,
                            cost: p.cost,
                            desired_payment: p.desired_payment,
                            uplink_latency: p.uplink_latency,
                            downlink_latency: p.downlink_latency,
                        })
                        .collect()
                })
                .collect(),
        };
        let cfg = MarketConfig {
            overbooking_rate: c.overbooking_rate,
            payment_step: c.payment_step,
            step_overrides: Default::default(),
            risk_tolerance: c.risk_tolerance,
            money_scale: c.money_scale,
            max_rounds_cap: c.max_rounds_cap,
        };
        match validate_market(market, cfg) {
            Ok(inner) => boxed(out, McsMarket { inner }),
            Err(errs) => fail(
                McsStatus::InvalidMarket,
                errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "),
            ),
        }
    })
}

/// Samples a market from scenario text (the CLI's key-value format).
///
/// # Safety
/// `spec_text` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcs_market_generate(spec_text: *const c_char, seed: u64, out: *mut *mut McsMarket) -> McsStatus {
    guard(|| {
        if out.is_null() {
            return fail(McsStatus::NullPointer, "out is null");
        }
        let spec = match text(spec_text, "spec_text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let spec = match parse_spec(spec) {
            Ok(s) => s,
            Err(e) => return fail(McsStatus::InvalidArgument, e),
        };
        let market = match generate_market(&spec, seed) {
            Ok(m) => m,
            Err(e) => return fail(McsStatus::InvalidArgument, e),
        };
        match validate_market(market, spec.market_config()) {
            Ok(inner) => boxed(out, McsMarket { inner }),
            Err(errs) => fail(McsStatus::InvalidMarket, format!("{errs:?}")),
        }
    })
}

/// # Safety
/// `market` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn mcs_market_free(market: *mut McsMarket) {
    if !market.is_null() {
        drop(Box::from_raw(market));
    }
}

/// # Safety
/// `market` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcs_market_n_tasks(market: *const McsMarket) -> usize {
    market.as_ref().map_or(0, |m| m.inner.n_tasks())
}

/// # Safety
/// `market` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcs_market_n_workers(market: *const McsMarket) -> usize {
    market.as_ref().map_or(0, |m| m.inner.n_workers())
}

/// Runs the futures-market matching.
///
/// # Safety
/// `market` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcs_futures_run(market: *const McsMarket, out: *mut *mut McsFutures) -> McsStatus {
    guard(|| {
        let Some(m) = market.as_ref() else {
            return fail(McsStatus::NullPointer, "market is null");
        };
        if out.is_null() {
            return fail(McsStatus::NullPointer, "out is null");
        }
        match run_oia3m(&m.inner) {
            Ok(inner) => boxed(
                out,
                McsFutures { inner, money_scale: m.inner.config().money_scale as f64 },
            ),
            Err(e) => fail(McsStatus::EngineFailure, e),
        }
    })
}

/// # Safety
/// `futures` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcs_futures_free(futures: *mut McsFutures) {
    if !futures.is_null() {
        drop(Box::from_raw(futures));
    }
}

/// # Safety
/// `futures` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcs_futures_rounds(futures: *const McsFutures) -> usize {
    futures.as_ref().map_or(0, |f| f.inner.rounds_used)
}

/// # Safety
/// `futures` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcs_futures_total_contracts(futures: *const McsFutures) -> usize {
    futures.as_ref().map_or(0, |f| f.inner.total_contracts())
}

/// Copies the workers contracted to `task` into `buf` (ascending) and stores
/// their count in `len`. With a short buffer, `len` still receives the count
/// and the call returns `BUFFER_TOO_SMALL`.
///
/// # Safety
/// `futures` must be a live handle, `len` a valid pointer, and `buf` valid for `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn mcs_futures_task_contracts(
    futures: *const McsFutures,
    task: usize,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> McsStatus {
    guard(|| {
        let Some(f) = futures.as_ref() else {
            return fail(McsStatus::NullPointer, "futures is null");
        };
        if len.is_null() {
            return fail(McsStatus::NullPointer, "len is null");
        }
        let Some(set) = f.inner.contracts_by_task.get(task) else {
            return fail(McsStatus::OutOfRange, format!("task {task} out of range"));
        };
        *len = set.len();
        if set.len() > cap {
            return fail(McsStatus::BufferTooSmall, format!("need {} slots", set.len()));
        }
        if !set.is_empty() {
            if buf.is_null() {
                return fail(McsStatus::NullPointer, "buf is null");
            }
            ptr::copy_nonoverlapping(set.as_ptr(), buf, set.len());
        }
        McsStatus::Ok
    })
}

/// Locked payment of a contract, in currency. Returns `OUT_OF_RANGE` if the pair has no contract.
///
/// # Safety
/// `futures` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcs_futures_payment(
    futures: *const McsFutures,
    task: usize,
    worker: usize,
    out: *mut f64,
) -> McsStatus {
    guard(|| {
        let Some(f) = futures.as_ref() else {
            return fail(McsStatus::NullPointer, "futures is null");
        };
        if out.is_null() {
            return fail(McsStatus::NullPointer, "out is null");
        }
        match f.inner.payment(task, worker) {
            Some(p) => {
                *out = p.0 as f64 / f.money_scale;
                McsStatus::Ok
            }
            None => fail(McsStatus::OutOfRange, format!("no contract between task {task} and worker {worker}")),
        }
    })
}

/// Runs a full experiment described by scenario text.
///
/// # Safety
/// `spec_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcs_experiment_run(spec_text: *const c_char, out: *mut *mut McsExperiment) -> McsStatus {
    guard(|| {
        if out.is_null() {
            return fail(McsStatus::NullPointer, "out is null");
        }
        let spec = match text(spec_text, "spec_text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let spec = match parse_spec(spec) {
            Ok(s) => s,
            Err(e) => return fail(McsStatus::InvalidArgument, e),
        };
        match run_experiment(&spec) {
            Ok(inner) => boxed(out, McsExperiment { inner }),
            Err(e) => fail(McsStatus::EngineFailure, e),
        }
    })
}

/// Mean of `metric` for the method named `method` (e.g. `"hybrid"`).
/// RoSQ is NaN when it was undefined on every trial.
///
/// # Safety
/// `experiment` must be a live handle, `method` a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcs_experiment_mean(
    experiment: *const McsExperiment,
    method: *const c_char,
    metric: McsMetric,
    out: *mut f64,
) -> McsStatus {
    guard(|| {
        let Some(e) = experiment.as_ref() else {
            return fail(McsStatus::NullPointer, "experiment is null");
        };
        if out.is_null() {
            return fail(McsStatus::NullPointer, "out is null");
        }
        let name = match text(method, "method") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let method: Method = match name.parse() {
            Ok(m) => m,
            Err(msg) => return fail(McsStatus::InvalidArgument, msg),
        };
        let Some(a) = e.inner.aggregate(method) else {
            return fail(McsStatus::OutOfRange, format!("method {name} was not run"));
        };
        let m = &a.mean;
        *out = match metric {
            McsMetric::ServiceQuality => m.service_quality,
            McsMetric::Rosq => m.rosq.unwrap_or(f64::NAN),
            McsMetric::Fodsq => m.fodsq,
            McsMetric::WorkerUtility => m.worker_utility,
            McsMetric::Ni => m.ni,
            McsMetric::Dip => m.dip,
            McsMetric::Ecip => m.ecip,
            McsMetric::RunningTimeMs => m.running_time_ms,
        };
        McsStatus::Ok
    })
}

/// Writes `results.csv` and `aggregate.json` into directory `dir`.
///
/// # Safety
/// `experiment` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mcs_experiment_write(experiment: *const McsExperiment, dir: *const c_char) -> McsStatus {
    guard(|| {
        let Some(e) = experiment.as_ref() else {
            return fail(McsStatus::NullPointer, "experiment is null");
        };
        let dir = match text(dir, "dir") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match write_experiment(Path::new(dir), &e.inner, false) {
            Ok(()) => McsStatus::Ok,
            Err(err) => fail(McsStatus::EngineFailure, err),
        }
    })
}

/// # Safety
/// `experiment` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcs_experiment_free(experiment: *mut McsExperiment) {
    if !experiment.is_null() {
        drop(Box::from_raw(experiment));
    }
}

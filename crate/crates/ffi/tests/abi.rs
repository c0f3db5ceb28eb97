use std::ffi::{CStr, CString};
use std::ptr;

use mcs_hybrid_ffi::*;

const SPEC: &str = "n_tasks = 3\nn_workers = 8\ntrials = 5\nmaster_seed = 11\n";

fn last_error() -> String {
    unsafe { CStr::from_ptr(mcs_last_error()) }.to_string_lossy().into_owned()
}

fn one_task_market() -> *mut McsMarket {
    let mut cfg = std::mem::MaybeUninit::<McsConfig>::uninit();
    assert_eq!(unsafe { mcs_config_default(cfg.as_mut_ptr()) }, McsStatus::Ok);
    let mut cfg = unsafe { cfg.assume_init() };
    cfg.overbooking_rate = 0.0;
    cfg.payment_step = 1.0;
    let tasks = [McsTaskData { budget: 10.0, desired_quality: 5.0, risk_scale: 1.0, tx_power: 1.0 }];
    let workers = [
        McsWorkerData { participation_prob: 1.0, tx_power: 1.0 },
        McsWorkerData { participation_prob: 1.0, tx_power: 1.0 },
    ];
    let pair = |q, c, p| McsPairData { quality: q, cost: c, desired_payment: p, uplink_latency: 0.1, downlink_latency: 0.1 };
    let pairs = [pair(3.0, 2.0, 4.0), pair(2.0, 1.0, 5.0)];
    let mut m = ptr::null_mut();
    let s = unsafe { mcs_market_new(tasks.as_ptr(), 1, workers.as_ptr(), 2, pairs.as_ptr(), &cfg, &mut m) };
    assert_eq!(s, McsStatus::Ok, "{}", last_error());
    m
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(mcs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn array_market_contracts_both_workers() {
    let m = one_task_market();
    assert_eq!(unsafe { mcs_market_n_tasks(m) }, 1);
    assert_eq!(unsafe { mcs_market_n_workers(m) }, 2);
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { mcs_futures_run(m, &mut f) }, McsStatus::Ok);
    // asks 4 + 5 fit the budget of 10 at once
    assert_eq!(unsafe { mcs_futures_total_contracts(f) }, 2);
    let mut buf = [usize::MAX; 2];
    let mut len = 0;
    assert_eq!(unsafe { mcs_futures_task_contracts(f, 0, buf.as_mut_ptr(), 2, &mut len) }, McsStatus::Ok);
    assert_eq!((len, buf), (2, [0, 1]));
    let mut p = 0.0;
    assert_eq!(unsafe { mcs_futures_payment(f, 0, 1, &mut p) }, McsStatus::Ok);
    assert_eq!(p, 5.0);
    unsafe {
        mcs_futures_free(f);
        mcs_market_free(m);
    }
}

#[test]
fn short_buffer_reports_needed_length() {
    let m = one_task_market();
    let mut f = ptr::null_mut();
    unsafe { mcs_futures_run(m, &mut f) };
    let mut buf = [0usize; 1];
    let mut len = 0;
    let s = unsafe { mcs_futures_task_contracts(f, 0, buf.as_mut_ptr(), 1, &mut len) };
    assert_eq!((s, len), (McsStatus::BufferTooSmall, 2));
    let s = unsafe { mcs_futures_task_contracts(f, 4, buf.as_mut_ptr(), 1, &mut len) };
    assert_eq!(s, McsStatus::OutOfRange);
    assert!(last_error().contains("task 4"));
    unsafe {
        mcs_futures_free(f);
        mcs_market_free(m);
    }
}

#[test]
fn invalid_market_is_rejected_with_message() {
    let mut cfg = std::mem::MaybeUninit::<McsConfig>::uninit();
    unsafe { mcs_config_default(cfg.as_mut_ptr()) };
    let cfg = unsafe { cfg.assume_init() };
    let tasks = [McsTaskData { budget: -1.0, desired_quality: 5.0, risk_scale: 1.0, tx_power: 1.0 }];
    let workers = [McsWorkerData { participation_prob: 1.5, tx_power: 1.0 }];
    let pairs = [McsPairData { quality: 1.0, cost: 1.0, desired_payment: 2.0, uplink_latency: 0.1, downlink_latency: 0.1 }];
    let mut m = ptr::null_mut();
    let s = unsafe { mcs_market_new(tasks.as_ptr(), 1, workers.as_ptr(), 1, pairs.as_ptr(), &cfg, &mut m) };
    assert_eq!(s, McsStatus::InvalidMarket);
    assert!(m.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_arguments_are_reported() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { mcs_market_generate(ptr::null(), 0, &mut m) }, McsStatus::NullPointer);
    let spec = CString::new(SPEC).unwrap();
    assert_eq!(unsafe { mcs_market_generate(spec.as_ptr(), 0, ptr::null_mut()) }, McsStatus::NullPointer);
    assert_eq!(unsafe { mcs_futures_run(ptr::null(), ptr::null_mut()) }, McsStatus::NullPointer);
    assert_eq!(unsafe { mcs_market_n_tasks(ptr::null()) }, 0);
    unsafe { mcs_market_free(ptr::null_mut()) };
}

#[test]
fn bad_spec_is_an_invalid_argument() {
    let spec = CString::new("n_tasks = 2\nbogus = 1\n").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { mcs_market_generate(spec.as_ptr(), 0, &mut m) }, McsStatus::InvalidArgument);
    assert!(last_error().contains("bogus"));
}

#[test]
fn generated_market_has_spec_size() {
    let spec = CString::new(SPEC).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { mcs_market_generate(spec.as_ptr(), 3, &mut m) }, McsStatus::Ok);
    assert_eq!(unsafe { (mcs_market_n_tasks(m), mcs_market_n_workers(m)) }, (3, 8));
    unsafe { mcs_market_free(m) };
}

#[test]
fn experiment_matches_library_and_writes_outputs() {
    let spec = CString::new(SPEC).unwrap();
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { mcs_experiment_run(spec.as_ptr(), &mut e) }, McsStatus::Ok, "{}", last_error());

    let direct = mcs_hybrid::harness::run_experiment(&mcs_hybrid::harness::parse_spec(SPEC).unwrap()).unwrap();
    let want = direct.aggregate(mcs_hybrid::harness::Method::Hybrid).unwrap().mean.service_quality;
    let method = CString::new("hybrid").unwrap();
    let mut got = f64::NAN;
    let s = unsafe { mcs_experiment_mean(e, method.as_ptr(), McsMetric::ServiceQuality, &mut got) };
    assert_eq!(s, McsStatus::Ok);
    assert_eq!(got, want);

    let unknown = CString::new("auction").unwrap();
    let s = unsafe { mcs_experiment_mean(e, unknown.as_ptr(), McsMetric::Ni, &mut got) };
    assert_eq!(s, McsStatus::InvalidArgument);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { mcs_experiment_write(e, path.as_ptr()) }, McsStatus::Ok);
    assert!(dir.path().join("results.csv").is_file());
    assert!(dir.path().join("aggregate.json").is_file());
    unsafe { mcs_experiment_free(e) };
}

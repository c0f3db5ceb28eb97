use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::experiment::ExperimentResult;
use crate::model::{Market, PairData, Task, Worker};

/// Column order of the per-trial results CSV.
pub const RESULT_COLUMNS: [&str; 13] = [
    "method",
    "trial",
    "service_quality",
    "rosq",
    "fodsq",
    "worker_utility",
    "ni",
    "dip",
    "ecip",
    "futures_ni",
    "futures_dip",
    "futures_ecip",
    "running_time_ms",
];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.display().to_string(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv { path: path.display().to_string(), source }
}

/// Writes one row per (trial, method). Running time is nondeterministic, so
/// its column is only present when `include_runtime` is set.
pub fn write_results_csv<W: Write>(out: W, result: &ExperimentResult, include_runtime: bool) -> csv::Result<()> {
    let n = if include_runtime { RESULT_COLUMNS.len() } else { RESULT_COLUMNS.len() - 1 };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&RESULT_COLUMNS[..n])?;
    for r in &result.records {
        let m = &r.metrics;
        let mut row = vec![
            r.method.name().to_string(),
            r.trial.to_string(),
            m.service_quality.to_string(),
            m.rosq.map(|x| x.to_string()).unwrap_or_default(),
            m.fodsq.to_string(),
            m.worker_utility.to_string(),
            m.ni.to_string(),
            m.dip.to_string(),
            m.ecip.to_string(),
            m.futures_ni.to_string(),
            m.futures_dip.to_string(),
            m.futures_ecip.to_string(),
        ];
        if include_runtime {
            row.push(m.running_time_ms.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn strip_runtime(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.remove("running_time_ms");
            map.values_mut().for_each(strip_runtime);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_runtime),
        _ => {}
    }
}

/// Aggregate document: spec, per-method mean/std, futures summary and diagnostics.
pub fn aggregate_json(result: &ExperimentResult, include_runtime: bool) -> serde_json::Value {
    let mut v = serde_json::json!({
        "spec": result.spec,
        "aggregates": result.aggregates,
        "futures": result.futures,
        "diagnostics": result.diagnostics,
    });
    if !include_runtime {
        strip_runtime(&mut v);
    }
    v
}

pub fn write_experiment(dir: &Path, result: &ExperimentResult, include_runtime: bool) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join("results.csv");
    let f = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    write_results_csv(io::BufWriter::new(f), result, include_runtime).map_err(csv_err(&csv_path))?;
    let json_path = dir.join("aggregate.json");
    let mut text = serde_json::to_string_pretty(&aggregate_json(result, include_runtime))
        .expect("aggregate serializes");
    text.push('\n');
    fs::write(&json_path, text).map_err(io_err(&json_path))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct TaskRow {
    task: usize,
    budget: f64,
    desired_quality: f64,
    risk_scale: f64,
    tx_power: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct WorkerRow {
    worker: usize,
    participation_prob: f64,
    tx_power: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PairRow {
    task: usize,
    worker: usize,
    quality: f64,
    cost: f64,
    desired_payment: f64,
    uplink_latency: f64,
    downlink_latency: f64,
}

fn write_rows<T: Serialize>(path: &Path, rows: impl Iterator<Item = T>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|x| x.map_err(csv_err(path))).collect()
}

/// Writes `tasks.csv`, `workers.csv` and `pairs.csv` into `dir`.
pub fn write_market_bundle(dir: &Path, market: &Market) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_rows(
        &dir.join("tasks.csv"),
        market.tasks.iter().enumerate().map(|(i, t)| TaskRow {
            task: i,
            budget: t.budget,
            desired_quality: t.desired_quality,
            risk_scale: t.risk_scale,
            tx_power: t.tx_power,
        }),
    )?;
    write_rows(
        &dir.join("workers.csv"),
        market.workers.iter().enumerate().map(|(j, w)| WorkerRow {
            worker: j,
            participation_prob: w.participation_prob,
            tx_power: w.tx_power,
        }),
    )?;
    write_rows(
        &dir.join("pairs.csv"),
        market.pairs.iter().enumerate().flat_map(|(i, row)| {
            row.iter().enumerate().map(move |(j, p)| PairRow {
                task: i,
                worker: j,
                quality: p.quality,
                cost: p.cost,
                desired_payment: p.desired_payment,
                uplink_latency: p.uplink_latency,
                downlink_latency: p.downlink_latency,
            })
        }),
    )
}

pub fn read_market_bundle(dir: &Path) -> Result<Market, IoError> {
    let tasks: Vec<TaskRow> = read_rows(&dir.join("tasks.csv"))?;
    let workers: Vec<WorkerRow> = read_rows(&dir.join("workers.csv"))?;
    let pairs_path = dir.join("pairs.csv");
    let pair_rows: Vec<PairRow> = read_rows(&pairs_path)?;
    let format = |reason: String| IoError::Format { path: pairs_path.display().to_string(), reason };
    if tasks.iter().enumerate().any(|(i, t)| t.task != i) || workers.iter().enumerate().any(|(j, w)| w.worker != j) {
        return Err(IoError::Format {
            path: dir.display().to_string(),
            reason: "task and worker ids must be 0, 1, 2, ... in order".into(),
        });
    }
    let (nt, nw) = (tasks.len(), workers.len());
    if pair_rows.len() != nt * nw {
        return Err(format(format!("expected {} pair rows, found {}", nt * nw, pair_rows.len())));
    }
    let mut pairs: Vec<Vec<Option<PairData>>> = vec![vec![None; nw]; nt];
    for r in pair_rows {
        let slot = pairs
            .get_mut(r.task)
            .and_then(|row| row.get_mut(r.worker))
            .ok_or_else(|| format(format!("pair ({}, {}) out of range", r.task, r.worker)))?;
        if slot.is_some() {
            return Err(format(format!("pair ({}, {}) listed twice", r.task, r.worker)));
        }
        *slot = Some(PairData {
            quality: r.quality,
            cost: r.cost,
            desired_payment: r.desired_payment,
            uplink_latency: r.uplink_latency,
            downlink_latency: r.downlink_latency,
        });
    }
    Ok(Market {
        tasks: tasks
            .into_iter()
            .map(|t| Task {
                budget: t.budget,
                desired_quality: t.desired_quality,
                risk_scale: t.risk_scale,
                tx_power: t.tx_power,
            })
            .collect(),
        workers: workers
            .into_iter()
            .map(|w| Worker { participation_prob: w.participation_prob, tx_power: w.tx_power })
            .collect(),
        pairs: pairs
            .into_iter()
            .map(|row| row.into_iter().map(|p| p.expect("every pair filled")).collect())
            .collect(),
    })
}

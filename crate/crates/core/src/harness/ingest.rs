use std::collections::BTreeMap;
use std::io::Read;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::spec::{Range, ScenarioSpec};
use crate::model::{seeded_stream, Market, PairData, Task, Worker};

/// Guards the inverse-distance quality against zero distances, km.
pub const DISTANCE_EPSILON: f64 = 1e-6;
pub const DAYS_IN_MONTH: u32 = 31;

/// One `(worker, task anchor)` sample derived from trip data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub worker_id: u64,
    pub active_days: u32,
    pub trip_km: f64,
    pub pickup_km: f64,
    pub dropoff_km: f64,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("no trip records")]
    EmptyInput,
    #[error("record {row}: distances must be finite and non-negative")]
    NonFiniteDistance { row: usize },
    #[error("record {row}: active_days {days} exceeds {DAYS_IN_MONTH}")]
    BadDayCount { row: usize, days: u32 },
    #[error("trip CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("trip CSV header must be `worker_id,active_days,trip_km,pickup_km,dropoff_km`")]
    Header,
}

pub fn read_trips<R: Read>(reader: R) -> Result<Vec<TripRecord>, IngestError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != ["worker_id", "active_days", "trip_km", "pickup_km", "dropoff_km"] {
        return Err(IngestError::Header);
    }
    rdr.deserialize().map(|r| r.map_err(IngestError::from)).collect()
}

/// Min-max scaling into `target`; a constant input maps to the midpoint.
fn scale(x: f64, lo: f64, hi: f64, target: Range) -> f64 {
    if hi > lo {
        target.min + (x - lo) / (hi - lo) * (target.max - target.min)
    } else {
        (target.min + target.max) / 2.0
    }
}

fn bounds(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Builds a market from trip samples.
///
/// Workers are the distinct `worker_id`s in ascending order, with
/// `a_j = active_days / 31` taken from the worker's first record. Task `i`
/// uses the worker's `(i mod k)`-th record, `k` being its record count.
/// Costs scale the total distance `trip + pickup + dropoff` into the cost
/// range, qualities scale `1 / (pickup + dropoff + ε)` into the quality
/// range, and both latencies scale the pickup distance into their ranges.
/// Task-side fields, desired payments and worker powers are sampled from the
/// spec's ranges with `seed`.
pub fn ingest_trips(records: &[TripRecord], spec: &ScenarioSpec, seed: u64) -> Result<Market, IngestError> {
    if records.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    for (row, r) in records.iter().enumerate() {
        let ok = [r.trip_km, r.pickup_km, r.dropoff_km]
            .iter()
            .all(|d| d.is_finite() && *d >= 0.0);
        if !ok {
            return Err(IngestError::NonFiniteDistance { row });
        }
        if r.active_days > DAYS_IN_MONTH {
            return Err(IngestError::BadDayCount { row, days: r.active_days });
        }
    }
    let mut by_worker: BTreeMap<u64, Vec<&TripRecord>> = BTreeMap::new();
    for r in records {
        by_worker.entry(r.worker_id).or_default().push(r);
    }
    let n_tasks = spec.n_tasks;
    let rows: Vec<Vec<&TripRecord>> = by_worker.values().cloned().collect();
    let sample_for = |i: usize, j: usize| rows[j][i % rows[j].len()];

    let used = || (0..n_tasks).flat_map(|i| (0..rows.len()).map(move |j| (i, j)));
    let total = |r: &TripRecord| r.trip_km + r.pickup_km + r.dropoff_km;
    let inverse = |r: &TripRecord| 1.0 / (r.pickup_km + r.dropoff_km + DISTANCE_EPSILON);
    let (c_lo, c_hi) = bounds(used().map(|(i, j)| total(sample_for(i, j))));
    let (q_lo, q_hi) = bounds(used().map(|(i, j)| inverse(sample_for(i, j))));
    let (d_lo, d_hi) = bounds(used().map(|(i, j)| sample_for(i, j).pickup_km));

    let mut rng = seeded_stream(seed, 0);
    let tasks = (0..n_tasks)
        .map(|_| Task {
            budget: rng.gen_range(spec.budget.min..=spec.budget.max),
            desired_quality: rng.gen_range(spec.desired_quality.min..=spec.desired_quality.max),
            risk_scale: rng.gen_range(spec.risk_scale.min..=spec.risk_scale.max),
            tx_power: rng.gen_range(spec.task_power.min..=spec.task_power.max),
        })
        .collect();
    let workers = rows
        .iter()
        .map(|rs| Worker {
            participation_prob: rs[0].active_days as f64 / DAYS_IN_MONTH as f64,
            tx_power: rng.gen_range(spec.worker_power.min..=spec.worker_power.max),
        })
        .collect();
    let pairs = (0..n_tasks)
        .map(|i| {
            (0..rows.len())
                .map(|j| {
                    let r = sample_for(i, j);
                    let cost = scale(total(r), c_lo, c_hi, spec.cost);
                    let desired: f64 = rng.gen_range(spec.desired_payment.min..=spec.desired_payment.max);
                    PairData {
                        quality: scale(inverse(r), q_lo, q_hi, spec.quality),
                        cost,
                        desired_payment: desired.max(cost),
                        uplink_latency: scale(r.pickup_km, d_lo, d_hi, spec.uplink_latency),
                        downlink_latency: scale(r.pickup_km, d_lo, d_hi, spec.downlink_latency),
                    }
                })
                .collect()
        })
        .collect();
    Ok(Market { tasks, workers, pairs })
}

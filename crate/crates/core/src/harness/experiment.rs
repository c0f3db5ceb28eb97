use std::collections::BTreeMap;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::generate::{generate_market, generate_market_with, GenerateError};
use super::spec::{Method, ScenarioSpec, SpecError};
use crate::baselines::{
    run_conventional_f, run_conventional_s, run_negotiation, run_quality_p, run_random_m, BaselineOutcome,
};
use crate::futures::{run_oia3m, FuturesOutcome};
use crate::matching::MatchingError;
use crate::metrics::{compute_dip_ecip, compute_quality_metrics, compute_rosq, compute_worker_utility, MetricsReport};
use crate::model::{
    draw_participation, seeded_stream, validate_market, InteractionCounts, Market, Money, ParticipationDraw,
    ValidatedMarket, ValidationError,
};
use crate::spot::{run_omom, run_o3m, realize_transaction, settle, HybridError, RealizedPartition, Trade};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("generated market is invalid: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<ValidationError>),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Hybrid(#[from] HybridError),
}

/// A validated market with its standing futures contracts.
#[derive(Debug, Clone)]
pub struct PreparedMarket {
    pub market: ValidatedMarket,
    pub futures: FuturesOutcome,
    pub futures_time_ms: f64,
    pub futures_dip: f64,
    pub futures_ecip: f64,
}

pub fn prepare(spec: &ScenarioSpec, market: Market) -> Result<PreparedMarket, EngineError> {
    let market = validate_market(market, spec.market_config()).map_err(EngineError::Validation)?;
    let start = Instant::now();
    let futures = run_oia3m(&market)?;
    let futures_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let (futures_dip, futures_ecip) = compute_dip_ecip(&market, &futures.interaction_counts);
    Ok(PreparedMarket {
        market,
        futures,
        futures_time_ms,
        futures_dip,
        futures_ecip,
    })
}

/// One method's settled transaction.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub method: Method,
    pub trades: Vec<Trade>,
    pub realized_quality: Vec<f64>,
    pub task_outlay: Vec<Money>,
    pub interactions: InteractionCounts,
    /// Largest round count of any matching the method ran on this draw.
    pub rounds: usize,
    pub runtime_ms: f64,
}

impl MethodRun {
    fn from_baseline(method: Method, b: BaselineOutcome, runtime_ms: f64) -> MethodRun {
        MethodRun {
            method,
            trades: b.trades,
            realized_quality: b.realized_quality,
            task_outlay: b.task_outlay,
            interactions: b.interaction_counts,
            rounds: b.rounds,
            runtime_ms,
        }
    }

    pub fn total_quality(&self) -> f64 {
        self.realized_quality.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: usize,
    pub draw: ParticipationDraw,
    pub partition: RealizedPartition,
    /// Every method that ran, in canonical order. Conventional_S always runs as the RoSQ reference.
    pub runs: Vec<MethodRun>,
}

impl TrialOutcome {
    pub fn run(&self, method: Method) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.method == method)
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

/// Runs every requested method (plus Conventional_S) on one participation draw.
/// `rng` supplies the draw and then Random_M's shuffles.
pub fn run_trial(
    prepared: &PreparedMarket,
    methods: &[Method],
    trial: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TrialOutcome, EngineError> {
    let m = &prepared.market;
    let draw = draw_participation(m, rng);
    let partition = realize_transaction(m, &prepared.futures, &draw);
    let mut runs = Vec::new();
    for method in Method::ALL {
        if method != Method::ConventionalS && !methods.contains(&method) {
            continue;
        }
        let run = match method {
            Method::Hybrid => {
                let (res, ms) = timed(|| -> Result<_, HybridError> {
                    let omom = partition
                        .over_budget
                        .iter()
                        .map(|&i| run_omom(m, i, &partition.present_long_term[i]))
                        .collect::<Result<Vec<_>, _>>()?;
                    let o3m = run_o3m(m, &prepared.futures, &partition)?;
                    Ok(settle(m, &prepared.futures, &partition, &omom, &o3m)?)
                });
                let r = res?;
                MethodRun {
                    method,
                    rounds: r.omom_rounds.max(r.o3m_rounds),
                    trades: r.trades,
                    realized_quality: r.realized_quality,
                    task_outlay: r.task_outlay,
                    interactions: r.interaction_counts,
                    runtime_ms: ms,
                }
            }
            Method::ConventionalS => {
                let (res, ms) = timed(|| run_conventional_s(m, &draw));
                MethodRun::from_baseline(method, res?, ms)
            }
            Method::ConventionalF => {
                let (res, ms) = timed(|| run_conventional_f(m, &prepared.futures, &draw));
                MethodRun::from_baseline(method, res, ms)
            }
            Method::QualityP => {
                let (res, ms) = timed(|| run_quality_p(m, &draw));
                MethodRun::from_baseline(method, res, ms)
            }
            Method::RandomM => {
                let (res, ms) = timed(|| run_random_m(m, &draw, rng));
                MethodRun::from_baseline(method, res, ms)
            }
            Method::Negotiation => {
                let (res, ms) = timed(|| run_negotiation(m, &draw));
                MethodRun::from_baseline(method, res, ms)
            }
        };
        runs.push(run);
    }
    Ok(TrialOutcome { trial, draw, partition, runs })
}

/// Indicators of every requested method on one trial.
pub fn trial_metrics(prepared: &PreparedMarket, methods: &[Method], outcome: &TrialOutcome) -> Vec<(Method, MetricsReport)> {
    let m = &prepared.market;
    let reference = outcome
        .run(Method::ConventionalS)
        .map(|r| r.total_quality())
        .unwrap_or(0.0);
    outcome
        .runs
        .iter()
        .filter(|r| methods.contains(&r.method))
        .map(|r| {
            let (service_quality, fodsq) = compute_quality_metrics(m, &r.realized_quality);
            let (dip, ecip) = compute_dip_ecip(m, &r.interactions);
            let uses_futures = matches!(r.method, Method::Hybrid | Method::ConventionalF);
            let report = MetricsReport {
                service_quality,
                rosq: compute_rosq(service_quality, reference).ok(),
                fodsq,
                worker_utility: compute_worker_utility(m, &r.trades),
                ni: r.interactions.total(),
                dip,
                ecip,
                futures_ni: if uses_futures { prepared.futures.interaction_counts.total() } else { 0 },
                futures_dip: if uses_futures { prepared.futures_dip } else { 0.0 },
                futures_ecip: if uses_futures { prepared.futures_ecip } else { 0.0 },
                running_time_ms: r.runtime_ms,
            };
            (r.method, report)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub method: Method,
    pub metrics: MetricsReport,
}

/// Mean or standard deviation of each indicator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub service_quality: f64,
    /// Over the trials where RoSQ is defined.
    pub rosq: Option<f64>,
    pub fodsq: f64,
    pub worker_utility: f64,
    pub ni: f64,
    pub dip: f64,
    pub ecip: f64,
    pub futures_ni: f64,
    pub futures_dip: f64,
    pub futures_ecip: f64,
    pub running_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub method: Method,
    pub trials: usize,
    pub mean: MetricsSummary,
    /// Sample standard deviation (zero for a single trial).
    pub std: MetricsSummary,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn aggregate(method: Method, reports: &[&MetricsReport]) -> MethodAggregate {
    let col = |f: &dyn Fn(&MetricsReport) -> f64| -> (f64, f64) {
        mean_std(&reports.iter().map(|r| f(r)).collect::<Vec<_>>())
    };
    let rosq: Vec<f64> = reports.iter().filter_map(|r| r.rosq).collect();
    let (rosq_mean, rosq_std) = if rosq.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&rosq);
        (Some(m), Some(s))
    };
    let q = col(&|r| r.service_quality);
    let fodsq = col(&|r| r.fodsq);
    let wu = col(&|r| r.worker_utility);
    let ni = col(&|r| r.ni as f64);
    let dip = col(&|r| r.dip);
    let ecip = col(&|r| r.ecip);
    let fni = col(&|r| r.futures_ni as f64);
    let fdip = col(&|r| r.futures_dip);
    let fecip = col(&|r| r.futures_ecip);
    let rt = col(&|r| r.running_time_ms);
    MethodAggregate {
        method,
        trials: reports.len(),
        mean: MetricsSummary {
            service_quality: q.0,
            rosq: rosq_mean,
            fodsq: fodsq.0,
            worker_utility: wu.0,
            ni: ni.0,
            dip: dip.0,
            ecip: ecip.0,
            futures_ni: fni.0,
            futures_dip: fdip.0,
            futures_ecip: fecip.0,
            running_time_ms: rt.0,
        },
        std: MetricsSummary {
            service_quality: q.1,
            rosq: rosq_std,
            fodsq: fodsq.1,
            worker_utility: wu.1,
            ni: ni.1,
            dip: dip.1,
            ecip: ecip.1,
            futures_ni: fni.1,
            futures_dip: fdip.1,
            futures_ecip: fecip.1,
            running_time_ms: rt.1,
        },
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FuturesSummary {
    /// Means over the markets used (one unless markets are resampled).
    pub rounds: f64,
    pub contracts: f64,
    pub tasks_screened_out: f64,
    pub ni: f64,
    pub running_time_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest round count seen per mechanism.
    pub max_rounds: BTreeMap<String, usize>,
    /// Round bound `⌈max(p^D - c)/Δp⌉ + 2` of the (largest) market.
    pub round_bound: usize,
    pub settled_trades: u64,
    pub budget_violations: u64,
    pub payment_violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ScenarioSpec,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<MethodAggregate>,
    pub futures: FuturesSummary,
    pub diagnostics: Diagnostics,
}

impl ExperimentResult {
    pub fn aggregate(&self, method: Method) -> Option<&MethodAggregate> {
        self.aggregates.iter().find(|a| a.method == method)
    }
}

/// `⌈max_{i,j}(p^D_ij - c_ij) / Δp_j⌉ + 2`.
pub fn round_bound(market: &ValidatedMarket) -> usize {
    let mut worst = 0i64;
    for i in 0..market.n_tasks() {
        for j in 0..market.n_workers() {
            let gap = (market.desire(i, j) - market.cost(i, j)).0;
            let step = market.step(j).0.max(1);
            worst = worst.max((gap + step - 1) / step);
        }
    }
    worst as usize + 2
}

struct TrialSummary {
    records: Vec<TrialRecord>,
    futures: Option<FuturesSummary>,
    rounds: Vec<(String, usize)>,
    round_bound: usize,
    trades: u64,
    budget_violations: u64,
    payment_violations: u64,
}

fn summarize_trial(spec: &ScenarioSpec, prepared: &PreparedMarket, outcome: &TrialOutcome, fresh: bool) -> TrialSummary {
    let m = &prepared.market;
    let mut rounds = vec![("oia3m".to_string(), prepared.futures.rounds_used)];
    let mut trades = 0;
    let mut budget_violations = 0;
    let mut payment_violations = 0;
    for r in &outcome.runs {
        rounds.push((r.method.name().to_string(), r.rounds));
        trades += r.trades.len() as u64;
        budget_violations += r
            .task_outlay
            .iter()
            .enumerate()
            .filter(|&(i, &o)| o > m.budget(i))
            .count() as u64;
        payment_violations += r
            .trades
            .iter()
            .filter(|t| t.payment < m.cost(t.task, t.worker) || t.payment > m.desire(t.task, t.worker))
            .count() as u64;
    }
    let records = trial_metrics(prepared, &spec.methods, outcome)
        .into_iter()
        .map(|(method, metrics)| TrialRecord { trial: outcome.trial, method, metrics })
        .collect();
    let futures = fresh.then(|| FuturesSummary {
        rounds: prepared.futures.rounds_used as f64,
        contracts: prepared.futures.total_contracts() as f64,
        tasks_screened_out: prepared.futures.risk_ok.iter().filter(|ok| !**ok).count() as f64,
        ni: prepared.futures.interaction_counts.total() as f64,
        running_time_ms: prepared.futures_time_ms,
    });
    TrialSummary {
        records,
        futures,
        rounds,
        round_bound: round_bound(m),
        trades,
        budget_violations,
        payment_violations,
    }
}

/// Stream of trial `t`: stream 0 is reserved for the shared market.
pub fn trial_stream(master_seed: u64, trial: usize) -> ChaCha8Rng {
    seeded_stream(master_seed, trial as u64 + 1)
}

/// Runs `spec.trials` paired transactions. Results depend only on `spec`,
/// regardless of how many threads rayon uses.
pub fn run_experiment(spec: &ScenarioSpec) -> Result<ExperimentResult, EngineError> {
    spec.validate()?;
    if spec.resample_market {
        run_trials(spec, None)
    } else {
        run_experiment_on(spec, generate_market(spec, spec.master_seed)?)
    }
}

/// Like [`run_experiment`] on a given market; `resample_market` is ignored.
pub fn run_experiment_on(spec: &ScenarioSpec, market: Market) -> Result<ExperimentResult, EngineError> {
    spec.validate()?;
    run_trials(spec, Some(prepare(spec, market)?))
}

fn run_trials(spec: &ScenarioSpec, shared: Option<PreparedMarket>) -> Result<ExperimentResult, EngineError> {
    let summaries: Vec<TrialSummary> = (0..spec.trials)
        .into_par_iter()
        .map(|t| -> Result<TrialSummary, EngineError> {
            let mut rng = trial_stream(spec.master_seed, t);
            match &shared {
                Some(p) => {
                    let outcome = run_trial(p, &spec.methods, t, &mut rng)?;
                    Ok(summarize_trial(spec, p, &outcome, t == 0))
                }
                None => {
                    let p = prepare(spec, generate_market_with(spec, &mut rng)?)?;
                    let outcome = run_trial(&p, &spec.methods, t, &mut rng)?;
                    Ok(summarize_trial(spec, &p, &outcome, true))
                }
            }
        })
        .collect::<Result<_, _>>()?;

    let mut records = Vec::with_capacity(spec.trials * spec.methods.len());
    let mut diagnostics = Diagnostics::default();
    let mut futures = Vec::new();
    for s in summaries {
        records.extend(s.records);
        futures.extend(s.futures);
        for (name, r) in s.rounds {
            let e = diagnostics.max_rounds.entry(name).or_insert(0);
            *e = (*e).max(r);
        }
        diagnostics.round_bound = diagnostics.round_bound.max(s.round_bound);
        diagnostics.settled_trades += s.trades;
        diagnostics.budget_violations += s.budget_violations;
        diagnostics.payment_violations += s.payment_violations;
    }
    let n = futures.len().max(1) as f64;
    let futures = FuturesSummary {
        rounds: futures.iter().map(|f| f.rounds).sum::<f64>() / n,
        contracts: futures.iter().map(|f| f.contracts).sum::<f64>() / n,
        tasks_screened_out: futures.iter().map(|f| f.tasks_screened_out).sum::<f64>() / n,
        ni: futures.iter().map(|f| f.ni).sum::<f64>() / n,
        running_time_ms: futures.iter().map(|f| f.running_time_ms).sum::<f64>() / n,
    };
    let aggregates = spec
        .methods
        .iter()
        .map(|&method| {
            let reports: Vec<&MetricsReport> = records
                .iter()
                .filter(|r| r.method == method)
                .map(|r| &r.metrics)
                .collect();
            aggregate(method, &reports)
        })
        .collect();
    Ok(ExperimentResult {
        spec: spec.clone(),
        records,
        aggregates,
        futures,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    OverbookingRate,
    RiskTolerance,
    NWorkers,
    NTasks,
}

impl std::str::FromStr for SweepParameter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tau" | "overbooking_rate" => Ok(SweepParameter::OverbookingRate),
            "lambda2" | "risk_tolerance" => Ok(SweepParameter::RiskTolerance),
            "n_workers" => Ok(SweepParameter::NWorkers),
            "n_tasks" => Ok(SweepParameter::NTasks),
            _ => Err(format!("unknown sweep parameter `{s}` (tau, lambda2, n_workers, n_tasks)")),
        }
    }
}

impl SweepParameter {
    pub fn apply(self, spec: &ScenarioSpec, value: f64) -> Result<ScenarioSpec, SpecError> {
        let mut s = spec.clone();
        let count = || -> Result<usize, SpecError> {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(SpecError::Invalid { key: "grid".into(), reason: format!("{value} is not a count") })
            }
        };
        match self {
            SweepParameter::OverbookingRate => s.overbooking_rate = value,
            SweepParameter::RiskTolerance => s.risk_tolerance = value,
            SweepParameter::NWorkers => s.n_workers = count()?,
            SweepParameter::NTasks => s.n_tasks = count()?,
        }
        s.validate()?;
        Ok(s)
    }
}

/// One experiment per grid point, all with the spec's master seed.
pub fn sweep(
    spec: &ScenarioSpec,
    parameter: SweepParameter,
    grid: &[f64],
) -> Result<Vec<(f64, ExperimentResult)>, EngineError> {
    if grid.is_empty() {
        return Err(SpecError::Invalid { key: "grid".into(), reason: "grid is empty".into() }.into());
    }
    grid.iter()
        .map(|&v| Ok((v, run_experiment(&parameter.apply(spec, v)?)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_small_cases() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sweep_parameter_names() {
        assert_eq!("tau".parse::<SweepParameter>(), Ok(SweepParameter::OverbookingRate));
        assert_eq!("lambda2".parse::<SweepParameter>(), Ok(SweepParameter::RiskTolerance));
        assert!("alpha".parse::<SweepParameter>().is_err());
        let spec = ScenarioSpec::with_size(2, 3);
        assert!(SweepParameter::NWorkers.apply(&spec, 2.5).is_err());
        assert_eq!(SweepParameter::NWorkers.apply(&spec, 7.0).unwrap().n_workers, 7);
    }
}

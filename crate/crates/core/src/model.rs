//! Market domain types, validation, and the participation model.
//!
//! Raw inputs ([`Market`], [`MarketConfig`]) carry plain floating point values.
//! [`validate_market`] checks every invariant and converts the quantities the
//! matching engines compare into exact integers:
//!
//! * currency becomes [`Money`], fixed point with `money_scale` units per currency unit;
//! * participation probabilities become parts per million ([`PROB_SCALE`]);
//! * service qualities become units of 10⁻⁴ ([`QUALITY_SCALE`]).
//!
//! Every budget comparison, knapsack capacity and stability check downstream
//! works on these integers, so results are exact and reproducible.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Participation probabilities are stored in parts per million.
pub const PROB_SCALE: u64 = 1_000_000;
/// Service qualities are stored in units of 10⁻⁴.
pub const QUALITY_SCALE: u64 = 10_000;
/// One unit of expected quality (`a_j * q_ij`) in the integer representation.
pub const EXPECTED_QUALITY_SCALE: u64 = PROB_SCALE * QUALITY_SCALE;

/// Fixed-point currency amount, in `money_scale` units per currency unit.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Money(pub i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn units(self) -> i64 {
        self.0
    }
}

impl std::ops::Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl std::ops::AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl std::iter::Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}u", self.0)
    }
}

/// A sensing task. Its id is its position in [`Market::tasks`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub budget: f64,
    pub desired_quality: f64,
    /// Quality threshold multiplier applied to `desired_quality` by the risk model.
    pub risk_scale: f64,
    /// Transmit power of the task owner, watts.
    pub tx_power: f64,
}

/// A worker. Its id is its position in [`Market::workers`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Worker {
    /// Probability that the worker shows up to a transaction.
    pub participation_prob: f64,
    /// Transmit power, watts.
    pub tx_power: f64,
}

/// Per (task, worker) data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairData {
    pub quality: f64,
    pub cost: f64,
    pub desired_payment: f64,
    /// Milliseconds.
    pub uplink_latency: f64,
    /// Milliseconds.
    pub downlink_latency: f64,
}

/// An unvalidated problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Market {
    pub tasks: Vec<Task>,
    pub workers: Vec<Worker>,
    /// One row per task, one column per worker.
    pub pairs: Vec<Vec<PairData>>,
}

impl Market {
    pub fn pair(&self, task: usize, worker: usize) -> &PairData {
        &self.pairs[task][worker]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    /// Overbooking rate τ: futures contracts may commit up to `(1 + τ) B_i` in expectation.
    pub overbooking_rate: f64,
    /// Payment reduction Δp applied after each rejection, in currency.
    pub payment_step: f64,
    /// Per-worker overrides of `payment_step`, keyed by worker id.
    #[serde(default)]
    pub step_overrides: BTreeMap<usize, f64>,
    /// Risk tolerance λ₂ in (0, 1].
    pub risk_tolerance: f64,
    /// Fixed-point units per currency unit.
    pub money_scale: i64,
    /// Safety bound on matching rounds.
    pub max_rounds_cap: usize,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig {
            overbooking_rate: 0.2,
            payment_step: 1.0,
            step_overrides: BTreeMap::new(),
            risk_tolerance: 0.2,
            money_scale: 100,
            max_rounds_cap: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("task {task}: budget must be positive and finite")]
    NonPositiveBudget { task: usize },
    #[error("task {task}: desired quality must be positive and finite")]
    NonPositiveDesiredQuality { task: usize },
    #[error("task {task}: risk scale must be finite and at least 1")]
    RiskScaleBelowOne { task: usize },
    #[error("task {task}: transmit power must be positive and finite")]
    NonPositiveTaskPower { task: usize },
    #[error("worker {worker}: participation probability {value} outside (0, 1]")]
    BadProbability { worker: usize, value: f64 },
    #[error("worker {worker}: transmit power must be positive and finite")]
    NonPositiveWorkerPower { worker: usize },
    #[error("pair ({task}, {worker}): quality must be positive and finite")]
    NonPositiveQuality { task: usize, worker: usize },
    #[error("pair ({task}, {worker}): cost must be positive and finite")]
    NonPositiveCost { task: usize, worker: usize },
    #[error("pair ({task}, {worker}): desired payment below cost")]
    PaymentBelowCost { task: usize, worker: usize },
    #[error("pair ({task}, {worker}): latencies must be positive and finite")]
    NonPositiveLatency { task: usize, worker: usize },
    #[error("pair matrix is {rows}x{cols:?}, expected {tasks}x{workers}")]
    DimensionMismatch {
        tasks: usize,
        workers: usize,
        rows: usize,
        cols: Option<usize>,
    },
    #[error("config: {0}")]
    Config(String),
}

/// A market whose invariants hold, with exact integer views of its quantities.
#[derive(Debug, Clone)]
pub struct ValidatedMarket {
    market: Market,
    config: MarketConfig,
    budget: Vec<Money>,
    capacity: Vec<Money>,
    cost: Vec<Money>,
    desire: Vec<Money>,
    quality: Vec<u64>,
    prob: Vec<u64>,
    step: Vec<Money>,
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn to_money(x: f64, scale: i64) -> Money {
    Money((x * scale as f64).round() as i64)
}

fn validate_config(config: &MarketConfig, n_workers: usize, errors: &mut Vec<ValidationError>) {
    let cfg = |msg: String| ValidationError::Config(msg);
    if !(config.overbooking_rate.is_finite() && config.overbooking_rate >= 0.0) {
        errors.push(cfg(format!(
            "overbooking rate {} must be finite and >= 0",
            config.overbooking_rate
        )));
    }
    if config.money_scale < 1 {
        errors.push(cfg(format!("money scale {} must be >= 1", config.money_scale)));
    }
    if config.max_rounds_cap < 1 {
        errors.push(cfg("max rounds cap must be >= 1".into()));
    }
    if !(config.risk_tolerance > 0.0 && config.risk_tolerance <= 1.0) {
        errors.push(cfg(format!(
            "risk tolerance {} outside (0, 1]",
            config.risk_tolerance
        )));
    }
    let scale = config.money_scale.max(1);
    let steps = std::iter::once((None, config.payment_step))
        .chain(config.step_overrides.iter().map(|(&j, &s)| (Some(j), s)));
    for (worker, step) in steps {
        if !positive(step) || to_money(step, scale).0 < 1 {
            errors.push(cfg(format!(
                "payment step {step} must be at least one fixed-point unit"
            )));
        }
        if let Some(j) = worker {
            if j >= n_workers {
                errors.push(cfg(format!("step override for unknown worker {j}")));
            }
        }
    }
}

/// Checks every market and config invariant, collecting all violations.
pub fn validate_market(
    market: Market,
    config: MarketConfig,
) -> Result<ValidatedMarket, Vec<ValidationError>> {
    let n_tasks = market.tasks.len();
    let n_workers = market.workers.len();
    let mut errors = Vec::new();

    validate_config(&config, n_workers, &mut errors);

    if market.pairs.len() != n_tasks || market.pairs.iter().any(|row| row.len() != n_workers) {
        errors.push(ValidationError::DimensionMismatch {
            tasks: n_tasks,
            workers: n_workers,
            rows: market.pairs.len(),
            cols: market
                .pairs
                .iter()
                .map(|r| r.len())
                .find(|&len| len != n_workers),
        });
        return Err(errors);
    }

    for (i, t) in market.tasks.iter().enumerate() {
        if !positive(t.budget) {
            errors.push(ValidationError::NonPositiveBudget { task: i });
        }
        if !positive(t.desired_quality) {
            errors.push(ValidationError::NonPositiveDesiredQuality { task: i });
        }
        if !(t.risk_scale.is_finite() && t.risk_scale >= 1.0) {
            errors.push(ValidationError::RiskScaleBelowOne { task: i });
        }
        if !positive(t.tx_power) {
            errors.push(ValidationError::NonPositiveTaskPower { task: i });
        }
    }
    for (j, w) in market.workers.iter().enumerate() {
        let a = w.participation_prob;
        if !(a > 0.0 && a <= 1.0) || (a * PROB_SCALE as f64).round() < 1.0 {
            errors.push(ValidationError::BadProbability { worker: j, value: a });
        }
        if !positive(w.tx_power) {
            errors.push(ValidationError::NonPositiveWorkerPower { worker: j });
        }
    }
    for (i, row) in market.pairs.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            if !positive(p.quality) {
                errors.push(ValidationError::NonPositiveQuality { task: i, worker: j });
            }
            if !positive(p.cost) {
                errors.push(ValidationError::NonPositiveCost { task: i, worker: j });
            }
            if !p.desired_payment.is_finite() || p.desired_payment < p.cost {
                errors.push(ValidationError::PaymentBelowCost { task: i, worker: j });
            }
            if !positive(p.uplink_latency) || !positive(p.downlink_latency) {
                errors.push(ValidationError::NonPositiveLatency { task: i, worker: j });
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let scale = config.money_scale;
    let budget: Vec<Money> = market.tasks.iter().map(|t| to_money(t.budget, scale)).collect();
    let capacity = budget
        .iter()
        .map(|b| Money(((1.0 + config.overbooking_rate) * b.0 as f64 + 1e-9).floor() as i64))
        .collect();
    let mut cost = Vec::with_capacity(n_tasks * n_workers);
    let mut desire = Vec::with_capacity(n_tasks * n_workers);
    let mut quality = Vec::with_capacity(n_tasks * n_workers);
    for row in &market.pairs {
        for p in row {
            cost.push(to_money(p.cost, scale));
            desire.push(to_money(p.desired_payment, scale));
            quality.push((p.quality * QUALITY_SCALE as f64).round().max(1.0) as u64);
        }
    }
    let prob = market
        .workers
        .iter()
        .map(|w| (w.participation_prob * PROB_SCALE as f64).round() as u64)
        .collect();
    let step = (0..n_workers)
        .map(|j| {
            let s = config.step_overrides.get(&j).copied().unwrap_or(config.payment_step);
            to_money(s, scale)
        })
        .collect();

    Ok(ValidatedMarket {
        market,
        config,
        budget,
        capacity,
        cost,
        desire,
        quality,
        prob,
        step,
    })
}

impl ValidatedMarket {
    /// Re-validates the same market under a different configuration.
    pub fn with_config(&self, config: MarketConfig) -> Result<ValidatedMarket, Vec<ValidationError>> {
        validate_market(self.market.clone(), config)
    }

    pub fn market(&self) -> &Market {
        &self.market
    }

    pub fn config(&self) -> &MarketConfig {
        &self.config
    }

    pub fn n_tasks(&self) -> usize {
        self.market.tasks.len()
    }

    pub fn n_workers(&self) -> usize {
        self.market.workers.len()
    }

    fn idx(&self, task: usize, worker: usize) -> usize {
        task * self.n_workers() + worker
    }

    pub fn budget(&self, task: usize) -> Money {
        self.budget[task]
    }

    /// Overbooked budget `(1 + τ) B_i`, rounded down to whole units.
    pub fn overbooked_capacity(&self, task: usize) -> Money {
        self.capacity[task]
    }

    pub fn cost(&self, task: usize, worker: usize) -> Money {
        self.cost[self.idx(task, worker)]
    }

    pub fn desire(&self, task: usize, worker: usize) -> Money {
        self.desire[self.idx(task, worker)]
    }

    /// Quality in units of 10⁻⁴.
    pub fn quality_units(&self, task: usize, worker: usize) -> u64 {
        self.quality[self.idx(task, worker)]
    }

    /// Participation probability in parts per million.
    pub fn prob_ppm(&self, worker: usize) -> u64 {
        self.prob[worker]
    }

    pub fn prob(&self, worker: usize) -> f64 {
        self.prob[worker] as f64 / PROB_SCALE as f64
    }

    pub fn quality(&self, task: usize, worker: usize) -> f64 {
        self.quality_units(task, worker) as f64 / QUALITY_SCALE as f64
    }

    /// `a_j * q_ij` in units of 10⁻¹⁰.
    pub fn expected_quality_units(&self, task: usize, worker: usize) -> u64 {
        self.prob[worker] * self.quality_units(task, worker)
    }

    /// Payment reduction step Δp_j.
    pub fn step(&self, worker: usize) -> Money {
        self.step[worker]
    }

    /// Expected payment `a_j * p`, rounded up to whole units so that sums of
    /// these weights never understate the real expected outlay.
    pub fn expected_payment(&self, worker: usize, payment: Money) -> Money {
        let num = self.prob[worker] as i128 * payment.0 as i128;
        let den = PROB_SCALE as i128;
        Money(((num + den - 1).div_euclid(den)) as i64)
    }

    pub fn to_currency(&self, m: Money) -> f64 {
        m.0 as f64 / self.config.money_scale as f64
    }

    pub fn from_currency(&self, x: f64) -> Money {
        to_money(x, self.config.money_scale)
    }

    pub fn task(&self, task: usize) -> &Task {
        &self.market.tasks[task]
    }

    pub fn pair(&self, task: usize, worker: usize) -> &PairData {
        self.market.pair(task, worker)
    }
}

/// One transaction's realized participation vector α.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParticipationDraw {
    pub alpha: Vec<bool>,
}

impl ParticipationDraw {
    pub fn all_present(n_workers: usize) -> Self {
        ParticipationDraw { alpha: vec![true; n_workers] }
    }

    pub fn present(&self, worker: usize) -> bool {
        self.alpha[worker]
    }

    pub fn present_workers(&self) -> impl Iterator<Item = usize> + '_ {
        self.alpha.iter().enumerate().filter(|(_, &a)| a).map(|(j, _)| j)
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// Per (task, worker) count of proposal/decision exchanges, |T| x |W|.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionCounts {
    n_tasks: usize,
    n_workers: usize,
    counts: Vec<u64>,
}

impl InteractionCounts {
    pub fn new(n_tasks: usize, n_workers: usize) -> Self {
        InteractionCounts {
            n_tasks,
            n_workers,
            counts: vec![0; n_tasks * n_workers],
        }
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    pub fn n_workers(&self) -> usize {
        self.n_workers
    }

    pub fn get(&self, task: usize, worker: usize) -> u64 {
        self.counts[task * self.n_workers + worker]
    }

    pub fn add(&mut self, task: usize, worker: usize, n: u64) {
        self.counts[task * self.n_workers + worker] += n;
    }

    /// Adds `other` elementwise. Both must have the same shape.
    pub fn merge(&mut self, other: &InteractionCounts) {
        assert_eq!((self.n_tasks, self.n_workers), (other.n_tasks, other.n_workers));
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Deterministic random stream for `(seed, stream)`.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples α_j ~ Bernoulli(a_j) independently for every worker.
pub fn draw_participation<R: Rng + ?Sized>(market: &ValidatedMarket, rng: &mut R) -> ParticipationDraw {
    let alpha = (0..market.n_workers())
        .map(|j| rng.gen_range(0..PROB_SCALE) < market.prob_ppm(j))
        .collect();
    ParticipationDraw { alpha }
}

/// Expected service quality `Σ a_j q_ij` of a worker set for one task.
pub fn expected_quality(market: &ValidatedMarket, task: usize, workers: &[usize]) -> f64 {
    let units: u128 = workers
        .iter()
        .map(|&j| market.expected_quality_units(task, j) as u128)
        .sum();
    units as f64 / EXPECTED_QUALITY_SCALE as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UtilityError {
    #[error("no payment recorded for task {task}")]
    MissingPayment { task: usize },
}

/// Expected worker utility `Σ a_j (p_ij - c_ij)` over a task set, in currency.
pub fn expected_worker_utility(
    market: &ValidatedMarket,
    worker: usize,
    tasks: &[usize],
    payments: &BTreeMap<usize, Money>,
) -> Result<f64, UtilityError> {
    let mut margin = 0i64;
    for &i in tasks {
        let p = payments.get(&i).ok_or(UtilityError::MissingPayment { task: i })?;
        margin += p.0 - market.cost(i, worker).0;
    }
    Ok(market.prob(worker) * market.to_currency(Money(margin)))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn pair(quality: f64, cost: f64, desired_payment: f64) -> PairData {
        PairData {
            quality,
            cost,
            desired_payment,
            uplink_latency: 1.0,
            downlink_latency: 1.0,
        }
    }

    pub fn task(budget: f64, desired_quality: f64) -> Task {
        Task {
            budget,
            desired_quality,
            risk_scale: 1.0,
            tx_power: 10.0,
        }
    }

    pub fn worker(a: f64) -> Worker {
        Worker {
            participation_prob: a,
            tx_power: 0.3,
        }
    }
}

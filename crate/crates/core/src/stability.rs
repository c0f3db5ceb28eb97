//! Exhaustive certification of matching outcomes on small markets.
//!
//! A worker `w_j` and a task `t_i` block an outcome when, at some payment
//! `p̃` on the Δp lattice of the pair, the worker strictly gains by adding
//! `t_i` to its current tasks (`p̃ > c_ij`) and the task strictly raises its
//! service quality by taking `w_j`, either on top of its current workers
//! (type 2) or after evicting up to `max_eviction` of them (type 1), while
//! staying within its capacity. In the futures market quality and payments
//! are taken in expectation and the new set must also pass risk screening.
//!
//! Witnesses are reported in a fixed order (task, worker, payment, eviction
//! set size, eviction set) so results are reproducible.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::futures::FuturesOutcome;
use crate::model::{expected_worker_utility, Money, ValidatedMarket};
use crate::risk::risk_surrogate;
use crate::spot::{O3mResult, OmomResult, RealizedPartition, TradeKind, TransactionResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityBounds {
    pub max_tasks: usize,
    pub max_workers: usize,
    pub max_eviction: usize,
}

impl Default for StabilityBounds {
    fn default() -> Self {
        StabilityBounds {
            max_tasks: 8,
            max_workers: 10,
            max_eviction: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StabilityError {
    #[error("market has {tasks} tasks and {workers} workers; search is limited to {max_tasks} x {max_workers}")]
    BoundsExceeded {
        tasks: usize,
        workers: usize,
        max_tasks: usize,
        max_workers: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mechanism {
    Futures,
    Omom,
    O3m,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BlockingKind {
    /// The task evicts some current workers to make room.
    Type1,
    /// The task adds the worker on top of its current set.
    Type2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub mechanism: Mechanism,
    pub kind: BlockingKind,
    pub task: usize,
    pub worker: usize,
    pub payment: Money,
    /// Evicted workers, ascending; empty for type 2.
    pub evicted: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum IrViolation {
    /// Expected (futures) or practical (spot) outlay above the task's capacity.
    BudgetExceeded { task: usize },
    RiskScreenFailed { task: usize },
    PaymentOutOfRange { task: usize, worker: usize },
    NegativeUtility { worker: usize },
    AsymmetricContract { task: usize, worker: usize },
    IneligibleWorker { task: usize, worker: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub mechanism: Mechanism,
    pub individually_rational: bool,
    pub ir_violations: Vec<IrViolation>,
    pub type1_blocking: Option<Witness>,
    pub type2_blocking: Option<Witness>,
    pub certified_strongly_stable: bool,
}

impl StabilityReport {
    fn new(mechanism: Mechanism, ir_violations: Vec<IrViolation>, t1: Option<Witness>, t2: Option<Witness>) -> Self {
        let individually_rational = ir_violations.is_empty();
        let certified_strongly_stable = individually_rational && t1.is_none() && t2.is_none();
        StabilityReport {
            mechanism,
            individually_rational,
            ir_violations,
            type1_blocking: t1,
            type2_blocking: t2,
            certified_strongly_stable,
        }
    }
}

/// One task's side of an outcome, as seen by the search.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskView {
    pub task: usize,
    pub capacity: Money,
    /// Current workers, ascending, with their payments.
    pub assigned: Vec<(usize, Money)>,
    /// Workers the task could still take, ascending.
    pub candidates: Vec<usize>,
}

fn check_bounds(market: &ValidatedMarket, bounds: &StabilityBounds) -> Result<(), StabilityError> {
    if market.n_tasks() > bounds.max_tasks || market.n_workers() > bounds.max_workers {
        return Err(StabilityError::BoundsExceeded {
            tasks: market.n_tasks(),
            workers: market.n_workers(),
            max_tasks: bounds.max_tasks,
            max_workers: bounds.max_workers,
        });
    }
    Ok(())
}

/// Payments on the pair's Δp lattice: `c + kΔp` and `p^D - kΔp`, within `[c, p^D]`, ascending.
pub fn payment_grid(market: &ValidatedMarket, task: usize, worker: usize) -> Vec<Money> {
    let c = market.cost(task, worker);
    let d = market.desire(task, worker);
    let step = market.step(worker);
    let mut grid = vec![c, d];
    let mut p = c + step;
    while p < d {
        grid.push(p);
        p += step;
    }
    let mut p = d - step;
    while p > c {
        grid.push(p);
        p = p - step;
    }
    grid.sort_unstable();
    grid.dedup();
    grid
}

fn subsets_up_to(items: &[usize], max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(items: &[usize], start: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for k in start..items.len() {
            cur.push(items[k]);
            rec(items, k + 1, size, cur, out);
            cur.pop();
        }
    }
    for size in 1..=max_size.min(items.len()) {
        rec(items, 0, size, &mut Vec::with_capacity(size), &mut out);
    }
    out
}

struct Evaluator<'a> {
    market: &'a ValidatedMarket,
    mechanism: Mechanism,
}

impl Evaluator<'_> {
    fn value(&self, task: usize, workers: &[usize]) -> u128 {
        workers
            .iter()
            .map(|&j| match self.mechanism {
                Mechanism::Futures => self.market.expected_quality_units(task, j) as u128,
                _ => self.market.quality_units(task, j) as u128,
            })
            .sum()
    }

    fn weight(&self, worker: usize, payment: Money) -> Money {
        match self.mechanism {
            Mechanism::Futures => self.market.expected_payment(worker, payment),
            _ => payment,
        }
    }

    fn acceptable(&self, task: usize, capacity: Money, set: &[(usize, Money)]) -> bool {
        let outlay: Money = set.iter().map(|&(j, p)| self.weight(j, p)).sum();
        if outlay > capacity {
            return false;
        }
        match self.mechanism {
            Mechanism::Futures => {
                let ids: Vec<usize> = set.iter().map(|&(j, _)| j).collect();
                risk_surrogate(self.market, task, &ids, self.market.config().risk_tolerance)
            }
            _ => true,
        }
    }
}

fn search(
    market: &ValidatedMarket,
    mechanism: Mechanism,
    views: &[TaskView],
    kind: BlockingKind,
    bounds: &StabilityBounds,
) -> Option<Witness> {
    let eval = Evaluator { market, mechanism };
    for view in views {
        let i = view.task;
        let ids: Vec<usize> = view.assigned.iter().map(|&(j, _)| j).collect();
        let base = eval.value(i, &ids);
        let evictions = match kind {
            BlockingKind::Type2 => vec![Vec::new()],
            BlockingKind::Type1 => subsets_up_to(&ids, bounds.max_eviction),
        };
        for &j in &view.candidates {
            let c = market.cost(i, j);
            for p in payment_grid(market, i, j).into_iter().filter(|&p| p > c) {
                for evicted in &evictions {
                    let mut set: Vec<(usize, Money)> = view
                        .assigned
                        .iter()
                        .copied()
                        .filter(|(k, _)| !evicted.contains(k))
                        .collect();
                    set.push((j, p));
                    let ids: Vec<usize> = set.iter().map(|&(k, _)| k).collect();
                    if eval.value(i, &ids) > base && eval.acceptable(i, view.capacity, &set) {
                        return Some(Witness {
                            mechanism,
                            kind,
                            task: i,
                            worker: j,
                            payment: p,
                            evicted: evicted.clone(),
                        });
                    }
                }
            }
        }
    }
    None
}

/// Re-checks a witness against the blocking conditions without the search machinery.
pub fn verify_witness(market: &ValidatedMarket, views: &[TaskView], w: &Witness) -> bool {
    let Some(view) = views.iter().find(|v| v.task == w.task) else {
        return false;
    };
    let (i, j) = (w.task, w.worker);
    let c = market.cost(i, j);
    if !view.candidates.contains(&j) || w.payment <= c || w.payment > market.desire(i, j) {
        return false;
    }
    if !payment_grid(market, i, j).contains(&w.payment) {
        return false;
    }
    match w.kind {
        BlockingKind::Type2 if !w.evicted.is_empty() => return false,
        BlockingKind::Type1 if w.evicted.is_empty() => return false,
        _ => {}
    }
    if !w.evicted.iter().all(|k| view.assigned.iter().any(|(a, _)| a == k)) {
        return false;
    }

    let futures = w.mechanism == Mechanism::Futures;
    let mut old_value = 0u128;
    let mut new_value = 0u128;
    let mut new_outlay = 0i128;
    let mut new_ids = Vec::new();
    for &(k, p) in &view.assigned {
        let v = if futures {
            market.prob_ppm(k) as u128 * market.quality_units(i, k) as u128
        } else {
            market.quality_units(i, k) as u128
        };
        old_value += v;
        if !w.evicted.contains(&k) {
            new_value += v;
            new_outlay += if futures { market.expected_payment(k, p).0 } else { p.0 } as i128;
            new_ids.push(k);
        }
    }
    new_value += if futures {
        market.prob_ppm(j) as u128 * market.quality_units(i, j) as u128
    } else {
        market.quality_units(i, j) as u128
    };
    new_outlay += if futures { market.expected_payment(j, w.payment).0 } else { w.payment.0 } as i128;
    new_ids.push(j);
    if new_value <= old_value || new_outlay > view.capacity.0 as i128 {
        return false;
    }
    !futures || risk_surrogate(market, i, &new_ids, market.config().risk_tolerance)
}

pub fn futures_views(market: &ValidatedMarket, outcome: &FuturesOutcome) -> Vec<TaskView> {
    (0..market.n_tasks())
        .map(|i| {
            let assigned = outcome.contracts_by_task[i]
                .iter()
                .map(|&j| (j, outcome.payment(i, j).unwrap_or(Money::ZERO)))
                .collect();
            TaskView {
                task: i,
                capacity: market.overbooked_capacity(i),
                assigned,
                candidates: (0..market.n_workers())
                    .filter(|&j| !outcome.is_contracted(i, j))
                    .collect(),
            }
        })
        .collect()
}

pub fn omom_views(omom: &[OmomResult], partition: &RealizedPartition, market: &ValidatedMarket) -> Vec<TaskView> {
    omom.iter()
        .map(|r| TaskView {
            task: r.task,
            capacity: market.budget(r.task),
            assigned: r.retained.iter().map(|&j| (j, r.asks[&j])).collect(),
            candidates: partition.present_long_term[r.task]
                .iter()
                .copied()
                .filter(|j| r.retained.binary_search(j).is_err())
                .collect(),
        })
        .collect()
}

pub fn o3m_views(outcome: &FuturesOutcome, partition: &RealizedPartition, o3m: &O3mResult) -> Vec<TaskView> {
    partition
        .surplus
        .iter()
        .map(|&i| {
            let recruited = &o3m.recruited[i];
            TaskView {
                task: i,
                capacity: partition.remaining_budget[i],
                assigned: recruited.iter().map(|&j| (j, o3m.payments[&(i, j)])).collect(),
                candidates: partition
                    .spot_pool
                    .iter()
                    .copied()
                    .filter(|&j| !outcome.is_contracted(i, j) && recruited.binary_search(&j).is_err())
                    .collect(),
            }
        })
        .collect()
}

pub fn find_blocking_coalition_futures(
    market: &ValidatedMarket,
    outcome: &FuturesOutcome,
    kind: BlockingKind,
    bounds: &StabilityBounds,
) -> Result<Option<Witness>, StabilityError> {
    check_bounds(market, bounds)?;
    Ok(search(market, Mechanism::Futures, &futures_views(market, outcome), kind, bounds))
}

pub fn find_blocking_pair_omom(
    market: &ValidatedMarket,
    omom: &[OmomResult],
    partition: &RealizedPartition,
    kind: BlockingKind,
    bounds: &StabilityBounds,
) -> Result<Option<Witness>, StabilityError> {
    check_bounds(market, bounds)?;
    Ok(search(market, Mechanism::Omom, &omom_views(omom, partition, market), kind, bounds))
}

pub fn find_blocking_coalition_o3m(
    market: &ValidatedMarket,
    outcome: &FuturesOutcome,
    partition: &RealizedPartition,
    o3m: &O3mResult,
    kind: BlockingKind,
    bounds: &StabilityBounds,
) -> Result<Option<Witness>, StabilityError> {
    check_bounds(market, bounds)?;
    Ok(search(market, Mechanism::O3m, &o3m_views(outcome, partition, o3m), kind, bounds))
}

fn payment_in_range(market: &ValidatedMarket, i: usize, j: usize, p: Money) -> bool {
    market.cost(i, j) <= p && p <= market.desire(i, j)
}

pub fn check_ir_futures(market: &ValidatedMarket, outcome: &FuturesOutcome) -> Vec<IrViolation> {
    let mut v = Vec::new();
    let tolerance = market.config().risk_tolerance;
    for (i, set) in outcome.contracts_by_task.iter().enumerate() {
        let mut outlay = Money::ZERO;
        for &j in set {
            if !outcome.contracts_by_worker[j].contains(&i) {
                v.push(IrViolation::AsymmetricContract { task: i, worker: j });
            }
            match outcome.payment(i, j) {
                Some(p) if payment_in_range(market, i, j, p) => outlay += market.expected_payment(j, p),
                Some(p) => {
                    outlay += market.expected_payment(j, p);
                    v.push(IrViolation::PaymentOutOfRange { task: i, worker: j });
                }
                None => v.push(IrViolation::PaymentOutOfRange { task: i, worker: j }),
            }
        }
        if outlay > market.overbooked_capacity(i) {
            v.push(IrViolation::BudgetExceeded { task: i });
        }
        if !set.is_empty() && !risk_surrogate(market, i, set, tolerance) {
            v.push(IrViolation::RiskScreenFailed { task: i });
        }
    }
    for (j, tasks) in outcome.contracts_by_worker.iter().enumerate() {
        for &i in tasks {
            if !outcome.contracts_by_task[i].contains(&j) {
                v.push(IrViolation::AsymmetricContract { task: i, worker: j });
            }
        }
        let payments: BTreeMap<usize, Money> = tasks
            .iter()
            .filter_map(|&i| outcome.payment(i, j).map(|p| (i, p)))
            .collect();
        let tasks: Vec<usize> = payments.keys().copied().collect();
        let u = expected_worker_utility(market, j, &tasks, &payments).unwrap_or(f64::NEG_INFINITY);
        if u < 0.0 {
            v.push(IrViolation::NegativeUtility { worker: j });
        }
    }
    v
}

fn check_ir_views(market: &ValidatedMarket, views: &[TaskView]) -> Vec<IrViolation> {
    let mut v = Vec::new();
    let mut margin = vec![Money::ZERO; market.n_workers()];
    for view in views {
        let i = view.task;
        let outlay: Money = view.assigned.iter().map(|&(_, p)| p).sum();
        if outlay > view.capacity {
            v.push(IrViolation::BudgetExceeded { task: i });
        }
        for &(j, p) in &view.assigned {
            if !payment_in_range(market, i, j, p) {
                v.push(IrViolation::PaymentOutOfRange { task: i, worker: j });
            }
            margin[j] += p - market.cost(i, j);
        }
    }
    for (j, m) in margin.into_iter().enumerate() {
        if m < Money::ZERO {
            v.push(IrViolation::NegativeUtility { worker: j });
        }
    }
    v
}

/// Individual rationality of a settled transaction: every task within `B_i`,
/// every spot payment in `[c, p^D]`, contracts paid at their locked price,
/// and no spot recruit drawn from the task's own contracts or from absent workers.
pub fn check_ir_settlement(
    market: &ValidatedMarket,
    outcome: &FuturesOutcome,
    partition: &RealizedPartition,
    result: &TransactionResult,
) -> Vec<IrViolation> {
    let mut v = Vec::new();
    for (i, &outlay) in result.task_outlay.iter().enumerate() {
        if outlay > market.budget(i) {
            v.push(IrViolation::BudgetExceeded { task: i });
        }
    }
    for t in &result.trades {
        let (i, j) = (t.task, t.worker);
        if !payment_in_range(market, i, j, t.payment) {
            v.push(IrViolation::PaymentOutOfRange { task: i, worker: j });
        }
        let eligible = match t.kind {
            TradeKind::Contract => outcome.payment(i, j) == Some(t.payment) && partition.spot_pool.contains(&j),
            TradeKind::Retained => partition.present_long_term[i].contains(&j),
            TradeKind::Recruited => !outcome.is_contracted(i, j) && partition.spot_pool.contains(&j),
        };
        if !eligible {
            v.push(IrViolation::IneligibleWorker { task: i, worker: j });
        }
    }
    for (j, &u) in result.worker_utilities.iter().enumerate() {
        if u < 0.0 {
            v.push(IrViolation::NegativeUtility { worker: j });
        }
    }
    v
}

pub fn certify_futures(
    market: &ValidatedMarket,
    outcome: &FuturesOutcome,
    bounds: &StabilityBounds,
) -> Result<StabilityReport, StabilityError> {
    let t1 = find_blocking_coalition_futures(market, outcome, BlockingKind::Type1, bounds)?;
    let t2 = find_blocking_coalition_futures(market, outcome, BlockingKind::Type2, bounds)?;
    Ok(StabilityReport::new(Mechanism::Futures, check_ir_futures(market, outcome), t1, t2))
}

pub fn certify_omom(
    market: &ValidatedMarket,
    omom: &[OmomResult],
    partition: &RealizedPartition,
    bounds: &StabilityBounds,
) -> Result<StabilityReport, StabilityError> {
    let t1 = find_blocking_pair_omom(market, omom, partition, BlockingKind::Type1, bounds)?;
    let t2 = find_blocking_pair_omom(market, omom, partition, BlockingKind::Type2, bounds)?;
    let ir = check_ir_views(market, &omom_views(omom, partition, market));
    Ok(StabilityReport::new(Mechanism::Omom, ir, t1, t2))
}

pub fn certify_o3m(
    market: &ValidatedMarket,
    outcome: &FuturesOutcome,
    partition: &RealizedPartition,
    o3m: &O3mResult,
    bounds: &StabilityBounds,
) -> Result<StabilityReport, StabilityError> {
    let t1 = find_blocking_coalition_o3m(market, outcome, partition, o3m, BlockingKind::Type1, bounds)?;
    let t2 = find_blocking_coalition_o3m(market, outcome, partition, o3m, BlockingKind::Type2, bounds)?;
    let ir = check_ir_views(market, &o3m_views(outcome, partition, o3m));
    Ok(StabilityReport::new(Mechanism::O3m, ir, t1, t2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::futures::run_oia3m;
    use crate::model::fixtures::*;
    use crate::model::{validate_market, InteractionCounts, Market, MarketConfig, ParticipationDraw};
    use crate::spot::realize_transaction;

    fn market(budget: f64, q_desired: f64, pairs: Vec<crate::model::PairData>) -> ValidatedMarket {
        let n = pairs.len();
        let m = Market {
            tasks: vec![task(budget, q_desired)],
            workers: (0..n).map(|_| worker(1.0)).collect(),
            pairs: vec![pairs],
        };
        let cfg = MarketConfig { overbooking_rate: 0.0, ..MarketConfig::default() };
        validate_market(m, cfg).unwrap()
    }

    #[test]
    fn grid_covers_both_lattices() {
        let m = market(30.0, 3.0, vec![pair(1.0, 3.0, 6.5)]);
        let g: Vec<i64> = payment_grid(&m, 0, 0).into_iter().map(|p| p.0).collect();
        assert_eq!(g, vec![300, 350, 400, 450, 500, 550, 600, 650]);
    }

    #[test]
    fn empty_market_has_no_witness() {
        let m = validate_market(Market { tasks: vec![], workers: vec![], pairs: vec![] }, MarketConfig::default())
            .unwrap();
        let out = run_oia3m(&m).unwrap();
        let r = certify_futures(&m, &out, &StabilityBounds::default()).unwrap();
        assert!(r.certified_strongly_stable);
    }

    #[test]
    fn skipped_affordable_worker_is_type2() {
        let m = market(30.0, 3.0, vec![pair(4.0, 3.0, 6.0), pair(2.0, 3.0, 6.0)]);
        let out = FuturesOutcome::from_contracts(&m, vec![vec![0]], BTreeMap::from([((0, 0), Money(600))]));
        let w = find_blocking_coalition_futures(&m, &out, BlockingKind::Type2, &StabilityBounds::default())
            .unwrap()
            .unwrap();
        assert_eq!((w.task, w.worker, w.payment), (0, 1, Money(400)));
        assert!(verify_witness(&m, &futures_views(&m, &out), &w));
        let r = certify_futures(&m, &out, &StabilityBounds::default()).unwrap();
        assert!(r.individually_rational && !r.certified_strongly_stable);
    }

    #[test]
    fn worse_worker_kept_is_type1() {
        // Budget fits one worker; the task holds the weaker one.
        let m = market(6.0, 1.0, vec![pair(4.0, 3.0, 6.0), pair(2.0, 3.0, 6.0)]);
        let out = FuturesOutcome::from_contracts(&m, vec![vec![1]], BTreeMap::from([((0, 1), Money(600))]));
        let w = find_blocking_coalition_futures(&m, &out, BlockingKind::Type1, &StabilityBounds::default())
            .unwrap()
            .unwrap();
        assert_eq!((w.worker, w.evicted.clone()), (0, vec![1]));
        assert!(verify_witness(&m, &futures_views(&m, &out), &w));
        assert_eq!(
            find_blocking_coalition_futures(&m, &out, BlockingKind::Type2, &StabilityBounds::default()).unwrap(),
            None
        );
    }

    #[test]
    fn tampered_witness_fails_verification() {
        let m = market(6.0, 1.0, vec![pair(4.0, 3.0, 6.0), pair(2.0, 3.0, 6.0)]);
        let out = FuturesOutcome::from_contracts(&m, vec![vec![1]], BTreeMap::from([((0, 1), Money(600))]));
        let views = futures_views(&m, &out);
        let w = Witness {
            mechanism: Mechanism::Futures,
            kind: BlockingKind::Type2,
            task: 0,
            worker: 0,
            payment: Money(400),
            evicted: vec![],
        };
        assert!(!verify_witness(&m, &views, &w));
    }

    #[test]
    fn ir_violations_are_reported() {
        let m = market(10.0, 1.0, vec![pair(4.0, 3.0, 6.0), pair(2.0, 3.0, 6.0)]);
        let out = FuturesOutcome::from_contracts(&m, vec![vec![0]], BTreeMap::from([((0, 0), Money(250))]));
        let v = check_ir_futures(&m, &out);
        assert!(v.contains(&IrViolation::PaymentOutOfRange { task: 0, worker: 0 }));
        assert!(v.contains(&IrViolation::NegativeUtility { worker: 0 }));

        let payments = BTreeMap::from([((0, 0), Money(600)), ((0, 1), Money(600))]);
        let out = FuturesOutcome::from_contracts(&m, vec![vec![0, 1]], payments);
        assert_eq!(check_ir_futures(&m, &out), vec![IrViolation::BudgetExceeded { task: 0 }]);
    }

    #[test]
    fn wasteful_retention_is_omom_type2() {
        let m = market(20.0, 1.0, vec![pair(4.0, 3.0, 8.0), pair(2.0, 3.0, 7.0), pair(3.0, 3.0, 9.0)]);
        let payments = BTreeMap::from([((0, 0), Money(800)), ((0, 1), Money(700)), ((0, 2), Money(900))]);
        let out = FuturesOutcome::from_contracts(&m, vec![vec![0, 1, 2]], payments);
        let p = realize_transaction(&m, &out, &ParticipationDraw::all_present(3));
        assert_eq!(p.over_budget, vec![0]);
        let omom = vec![OmomResult {
            task: 0,
            retained: vec![0],
            asks: BTreeMap::from([(0, Money(800)), (1, Money(300)), (2, Money(300))]),
            rounds: 1,
            interactions: InteractionCounts::new(1, 3),
        }];
        let w = find_blocking_pair_omom(&m, &omom, &p, BlockingKind::Type2, &StabilityBounds::default())
            .unwrap()
            .unwrap();
        assert_eq!((w.worker, w.payment), (1, Money(400)));
        assert!(verify_witness(&m, &omom_views(&omom, &p, &m), &w));
    }

    #[test]
    fn bounds_are_enforced() {
        let m = market(30.0, 1.0, (0..11).map(|_| pair(1.0, 3.0, 6.0)).collect());
        let out = run_oia3m(&m).unwrap();
        assert!(matches!(
            certify_futures(&m, &out, &StabilityBounds::default()),
            Err(StabilityError::BoundsExceeded { workers: 11, .. })
        ));
    }
}

//! Spot market: transaction-time repair of the futures contract book.
//!
//! Once participation is realized, each task falls into one of three groups:
//!
//! * over budget (`Σ α_j p^F > B_i`): on-site many-to-one matching (OMOM)
//!   picks which present long-term workers to keep under `B_i`;
//! * surplus (`Σ α_j p^F < B_i`): on-site many-to-many matching (O3M)
//!   recruits extra present workers under the remaining budget `B'_i`,
//!   never re-recruiting the task's own long-term workers;
//! * exactly on budget: contracts settle unchanged.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::futures::FuturesOutcome;
use crate::matching::{run_descent, DescentRules, DescentTask, MatchingError, ValueRule, WeightRule};
use crate::model::{InteractionCounts, Money, ParticipationDraw, ValidatedMarket, QUALITY_SCALE};

pub const SPOT_RULES: DescentRules = DescentRules {
    value: ValueRule::Quality,
    weight: WeightRule::Payment,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedPartition {
    /// T′, ascending.
    pub over_budget: Vec<usize>,
    /// T″, ascending.
    pub surplus: Vec<usize>,
    /// W′_i for every task: contracted workers that showed up.
    pub present_long_term: Vec<Vec<usize>>,
    /// W″: every present worker.
    pub spot_pool: Vec<usize>,
    /// `Σ_{γ(t_i)} α_j p^F` per task.
    pub realized_contract_outlay: Vec<Money>,
    /// `B'_i = B_i - Σ α_j p^F` per task; only meaningful (and non-negative) for T″.
    pub remaining_budget: Vec<Money>,
}

impl RealizedPartition {
    pub fn is_over_budget(&self, task: usize) -> bool {
        self.over_budget.binary_search(&task).is_ok()
    }

    pub fn is_surplus(&self, task: usize) -> bool {
        self.surplus.binary_search(&task).is_ok()
    }
}

pub fn realize_transaction(
    market: &ValidatedMarket,
    outcome: &FuturesOutcome,
    draw: &ParticipationDraw,
) -> RealizedPartition {
    let mut over_budget = Vec::new();
    let mut surplus = Vec::new();
    let mut present_long_term = Vec::with_capacity(market.n_tasks());
    let mut realized_contract_outlay = Vec::with_capacity(market.n_tasks());
    let mut remaining_budget = Vec::with_capacity(market.n_tasks());
    for (i, contracts) in outcome.contracts_by_task.iter().enumerate() {
        let present: Vec<usize> = contracts.iter().copied().filter(|&j| draw.present(j)).collect();
        let outlay: Money = present
            .iter()
            .map(|&j| outcome.payment(i, j).expect("contracted pair has a payment"))
            .sum();
        let budget = market.budget(i);
        if outlay > budget {
            over_budget.push(i);
        } else if outlay < budget {
            surplus.push(i);
        }
        present_long_term.push(present);
        realized_contract_outlay.push(outlay);
        remaining_budget.push(budget - outlay);
    }
    RealizedPartition {
        over_budget,
        surplus,
        present_long_term,
        spot_pool: draw.present_workers().collect(),
        realized_contract_outlay,
        remaining_budget,
    }
}

/// Result of on-site many-to-one matching for one over-budget task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmomResult {
    pub task: usize,
    /// μ(t_i), ascending.
    pub retained: Vec<usize>,
    /// Final asked spot payment of every present long-term worker.
    pub asks: BTreeMap<usize, Money>,
    pub rounds: usize,
    pub interactions: InteractionCounts,
}

impl OmomResult {
    pub fn payment(&self, worker: usize) -> Option<Money> {
        self.retained
            .binary_search(&worker)
            .ok()
            .map(|_| self.asks[&worker])
    }
}

/// Picks which present long-term workers an over-budget task keeps under `B_i`.
pub fn run_omom(market: &ValidatedMarket, task: usize, present: &[usize]) -> Result<OmomResult, MatchingError> {
    let mut workers = present.to_vec();
    workers.sort_unstable();
    workers.dedup();
    let d = run_descent(
        market,
        vec![DescentTask {
            task,
            capacity: market.budget(task),
            workers,
        }],
        SPOT_RULES,
    )?;
    let asks = d.tasks[0]
        .workers
        .iter()
        .copied()
        .zip(d.asks[0].iter().copied())
        .collect();
    Ok(OmomResult {
        task,
        retained: d.accepted[0].clone(),
        asks,
        rounds: d.rounds,
        interactions: d.interactions,
    })
}

/// Result of on-site many-to-many matching over the surplus tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct O3mResult {
    /// φ(t_i) per task (empty outside T″).
    pub recruited: Vec<Vec<usize>>,
    /// Spot payment of every recruited pair.
    pub payments: BTreeMap<(usize, usize), Money>,
    /// Final ask of every eligible pair.
    pub asks: BTreeMap<(usize, usize), Money>,
    pub rounds: usize,
    pub interactions: InteractionCounts,
}

/// Workers task `i` may recruit on the spot: present, and not already under contract with it.
pub fn o3m_eligible(outcome: &FuturesOutcome, partition: &RealizedPartition, task: usize) -> Vec<usize> {
    partition
        .spot_pool
        .iter()
        .copied()
        .filter(|&j| !outcome.is_contracted(task, j))
        .collect()
}

pub fn run_o3m(
    market: &ValidatedMarket,
    outcome: &FuturesOutcome,
    partition: &RealizedPartition,
) -> Result<O3mResult, MatchingError> {
    let mut result = O3mResult {
        recruited: vec![Vec::new(); market.n_tasks()],
        payments: BTreeMap::new(),
        asks: BTreeMap::new(),
        rounds: 0,
        interactions: InteractionCounts::new(market.n_tasks(), market.n_workers()),
    };
    if partition.surplus.is_empty() {
        return Ok(result);
    }
    let tasks = partition
        .surplus
        .iter()
        .map(|&i| DescentTask {
            task: i,
            capacity: partition.remaining_budget[i],
            workers: o3m_eligible(outcome, partition, i),
        })
        .collect();
    let d = run_descent(market, tasks, SPOT_RULES)?;
    for (slot, t) in d.tasks.iter().enumerate() {
        for (&j, &ask) in t.workers.iter().zip(&d.asks[slot]) {
            result.asks.insert((t.task, j), ask);
        }
        for &j in &d.accepted[slot] {
            result.payments.insert((t.task, j), result.asks[&(t.task, j)]);
        }
        result.recruited[t.task] = d.accepted[slot].clone();
    }
    result.rounds = d.rounds;
    result.interactions = d.interactions;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TradeKind {
    /// A present long-term worker paid its contract price.
    Contract,
    /// A long-term worker kept by an over-budget task at its spot price.
    Retained,
    /// A worker recruited on the spot by a surplus task.
    Recruited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub task: usize,
    pub worker: usize,
    pub payment: Money,
    pub kind: TradeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionResult {
    /// Executed trades, sorted by (task, worker).
    pub trades: Vec<Trade>,
    /// μ(t_i) for each over-budget task.
    pub retained: BTreeMap<usize, Vec<usize>>,
    /// φ(t_i) for each surplus task.
    pub recruited: BTreeMap<usize, Vec<usize>>,
    pub realized_quality: Vec<f64>,
    pub task_outlay: Vec<Money>,
    /// Σ (p - c) over each worker's executed trades, in currency.
    pub worker_utilities: Vec<f64>,
    /// Spot-phase interactions only.
    pub interaction_counts: InteractionCounts,
    pub omom_rounds: usize,
    pub o3m_rounds: usize,
}

impl TransactionResult {
    pub fn total_quality(&self) -> f64 {
        self.realized_quality.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SettlementError {
    #[error("task {task}: OMOM retained worker {worker} that is not a present long-term worker")]
    RetainedOutsidePresent { task: usize, worker: usize },
    #[error("task {task}: O3M recruited worker {worker} that is absent or already under contract")]
    IneligibleRecruit { task: usize, worker: usize },
    #[error("task {task}: spot results supplied for a task outside its partition group")]
    WrongGroup { task: usize },
    #[error("task {task}: over-budget task has no OMOM result")]
    MissingOmom { task: usize },
    #[error("pair ({task}, {worker}) has no payment")]
    MissingPayment { task: usize, worker: usize },
}

/// Builds a list of trades into per-task and per-worker totals.
pub(crate) fn tally(
    market: &ValidatedMarket,
    trades: &[Trade],
) -> (Vec<f64>, Vec<Money>, Vec<f64>) {
    let mut quality_units = vec![0u64; market.n_tasks()];
    let mut outlay = vec![Money::ZERO; market.n_tasks()];
    let mut margin = vec![Money::ZERO; market.n_workers()];
    for t in trades {
        quality_units[t.task] += market.quality_units(t.task, t.worker);
        outlay[t.task] += t.payment;
        margin[t.worker] += t.payment - market.cost(t.task, t.worker);
    }
    (
        quality_units
            .into_iter()
            .map(|u| u as f64 / QUALITY_SCALE as f64)
            .collect(),
        outlay,
        margin.into_iter().map(|m| market.to_currency(m)).collect(),
    )
}

pub fn settle(
    market: &ValidatedMarket,
    outcome: &FuturesOutcome,
    partition: &RealizedPartition,
    omom: &[OmomResult],
    o3m: &O3mResult,
) -> Result<TransactionResult, SettlementError> {
    let mut trades = Vec::new();
    let mut retained = BTreeMap::new();
    let mut recruited = BTreeMap::new();
    let omom_by_task: BTreeMap<usize, &OmomResult> = omom.iter().map(|r| (r.task, r)).collect();

    for r in omom {
        if !partition.is_over_budget(r.task) {
            return Err(SettlementError::WrongGroup { task: r.task });
        }
    }
    for (i, set) in o3m.recruited.iter().enumerate() {
        if !set.is_empty() && !partition.is_surplus(i) {
            return Err(SettlementError::WrongGroup { task: i });
        }
    }

    for i in 0..market.n_tasks() {
        let present = &partition.present_long_term[i];
        if partition.is_over_budget(i) {
            let r = omom_by_task
                .get(&i)
                .ok_or(SettlementError::MissingOmom { task: i })?;
            for &j in &r.retained {
                if present.binary_search(&j).is_err() {
                    return Err(SettlementError::RetainedOutsidePresent { task: i, worker: j });
                }
                let payment = r
                    .payment(j)
                    .ok_or(SettlementError::MissingPayment { task: i, worker: j })?;
                trades.push(Trade { task: i, worker: j, payment, kind: TradeKind::Retained });
            }
            retained.insert(i, r.retained.clone());
            continue;
        }
        for &j in present {
            let payment = outcome
                .payment(i, j)
                .ok_or(SettlementError::MissingPayment { task: i, worker: j })?;
            trades.push(Trade { task: i, worker: j, payment, kind: TradeKind::Contract });
        }
        if partition.is_surplus(i) {
            let set = &o3m.recruited[i];
            for &j in set {
                if outcome.is_contracted(i, j) || partition.spot_pool.binary_search(&j).is_err() {
                    return Err(SettlementError::IneligibleRecruit { task: i, worker: j });
                }
                let payment = *o3m
                    .payments
                    .get(&(i, j))
                    .ok_or(SettlementError::MissingPayment { task: i, worker: j })?;
                trades.push(Trade { task: i, worker: j, payment, kind: TradeKind::Recruited });
            }
            recruited.insert(i, set.clone());
        }
    }
    trades.sort_by_key(|t| (t.task, t.worker));

    let (realized_quality, task_outlay, worker_utilities) = tally(market, &trades);
    let mut interaction_counts = o3m.interactions.clone();
    for r in omom {
        interaction_counts.merge(&r.interactions);
    }
    Ok(TransactionResult {
        trades,
        retained,
        recruited,
        realized_quality,
        task_outlay,
        worker_utilities,
        interaction_counts,
        omom_rounds: omom.iter().map(|r| r.rounds).max().unwrap_or(0),
        o3m_rounds: o3m.rounds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HybridError {
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Settlement(#[from] SettlementError),
}

/// Runs the whole spot phase for one participation draw.
pub fn run_spot_phase(
    market: &ValidatedMarket,
    outcome: &FuturesOutcome,
    draw: &ParticipationDraw,
) -> Result<TransactionResult, HybridError> {
    let partition = realize_transaction(market, outcome, draw);
    let omom = partition
        .over_budget
        .iter()
        .map(|&i| run_omom(market, i, &partition.present_long_term[i]))
        .collect::<Result<Vec<_>, _>>()?;
    let o3m = run_o3m(market, outcome, &partition)?;
    Ok(settle(market, outcome, &partition, &omom, &o3m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{validate_market, Market, MarketConfig};

    fn market(budget: f64, pairs: Vec<crate::model::PairData>) -> ValidatedMarket {
        let n = pairs.len();
        let m = Market {
            tasks: vec![task(budget, 30.0)],
            workers: (0..n).map(|_| worker(0.9)).collect(),
            pairs: vec![pairs],
        };
        validate_market(m, MarketConfig::default()).unwrap()
    }

    fn book(m: &ValidatedMarket, contracts: &[(usize, f64)]) -> FuturesOutcome {
        let payments = contracts
            .iter()
            .map(|&(j, p)| ((0, j), m.from_currency(p)))
            .collect();
        FuturesOutcome::from_contracts(m, vec![contracts.iter().map(|&(j, _)| j).collect()], payments)
    }

    #[test]
    fn partition_cases() {
        let m = market(30.0, vec![pair(3.0, 3.0, 20.0), pair(4.0, 3.0, 13.0)]);
        let out = book(&m, &[(0, 20.0), (1, 13.0)]);

        let p = realize_transaction(&m, &out, &ParticipationDraw { alpha: vec![true, true] });
        assert_eq!(p.over_budget, vec![0]);
        assert!(p.surplus.is_empty());

        let p = realize_transaction(&m, &out, &ParticipationDraw { alpha: vec![false, true] });
        assert_eq!(p.surplus, vec![0]);
        assert_eq!(p.remaining_budget[0], Money(1700));
        assert_eq!(p.present_long_term[0], vec![1]);
        assert_eq!(p.spot_pool, vec![1]);

        let out = book(&m, &[(0, 17.0), (1, 13.0)]);
        let p = realize_transaction(&m, &out, &ParticipationDraw { alpha: vec![true, true] });
        assert!(p.over_budget.is_empty() && p.surplus.is_empty());
    }

    #[test]
    fn omom_singleton_keeps_desired_payment() {
        let m = market(10.0, vec![pair(5.0, 3.0, 8.0)]);
        let r = run_omom(&m, 0, &[0]).unwrap();
        assert_eq!(r.retained, vec![0]);
        assert_eq!(r.payment(0), Some(Money(800)));
        assert_eq!(r.rounds, 1);
    }

    #[test]
    fn omom_nothing_affordable() {
        let m = market(2.0, vec![pair(5.0, 3.0, 8.0), pair(4.0, 2.5, 6.0)]);
        let r = run_omom(&m, 0, &[0, 1]).unwrap();
        assert!(r.retained.is_empty());
    }

    #[test]
    fn o3m_single_worker_descends_into_budget() {
        // B' = 5, ask starts at 6, rejected once, accepted at 5.
        let m = market(5.0, vec![pair(2.0, 3.0, 6.0)]);
        let out = FuturesOutcome::from_contracts(&m, vec![vec![]], BTreeMap::new());
        let p = realize_transaction(&m, &out, &ParticipationDraw { alpha: vec![true] });
        let r = run_o3m(&m, &out, &p).unwrap();
        assert_eq!(r.recruited[0], vec![0]);
        assert_eq!(r.payments[&(0, 0)], Money(500));
        assert_eq!(r.rounds, 2);
    }

    #[test]
    fn o3m_skips_long_term_workers() {
        let m = market(30.0, vec![pair(3.0, 3.0, 6.0), pair(2.0, 3.0, 6.0)]);
        let out = book(&m, &[(0, 6.0)]);
        let p = realize_transaction(&m, &out, &ParticipationDraw { alpha: vec![true, true] });
        assert_eq!(p.surplus, vec![0]);
        let r = run_o3m(&m, &out, &p).unwrap();
        assert_eq!(r.recruited[0], vec![1]);
        assert!(!r.asks.contains_key(&(0, 0)));
    }

    #[test]
    fn o3m_without_surplus_is_empty() {
        let m = market(5.0, vec![pair(2.0, 3.0, 6.0)]);
        let out = book(&m, &[(0, 6.0)]);
        let p = realize_transaction(&m, &out, &ParticipationDraw { alpha: vec![true] });
        let r = run_o3m(&m, &out, &p).unwrap();
        assert!(r.recruited.iter().all(|s| s.is_empty()));
        assert_eq!(r.rounds, 0);
    }

    #[test]
    fn settle_all_absent() {
        let m = market(30.0, vec![pair(3.0, 3.0, 6.0), pair(4.0, 3.0, 7.0)]);
        let out = book(&m, &[(0, 6.0), (1, 7.0)]);
        let res = run_spot_phase(&m, &out, &ParticipationDraw { alpha: vec![false, false] }).unwrap();
        assert!(res.trades.is_empty());
        assert_eq!(res.realized_quality, vec![0.0]);
        assert_eq!(res.task_outlay, vec![Money::ZERO]);
    }

    #[test]
    fn settle_surplus_task_arithmetic() {
        let m = market(30.0, vec![pair(3.0, 3.0, 6.0), pair(4.0, 3.0, 7.0), pair(2.0, 3.0, 5.0)]);
        let out = book(&m, &[(0, 6.0), (1, 7.0)]);
        let p = realize_transaction(&m, &out, &ParticipationDraw { alpha: vec![true, true, true] });
        let o3m = O3mResult {
            recruited: vec![vec![2]],
            payments: BTreeMap::from([((0, 2), Money(500))]),
            asks: BTreeMap::from([((0, 2), Money(500))]),
            rounds: 1,
            interactions: InteractionCounts::new(1, 3),
        };
        let res = settle(&m, &out, &p, &[], &o3m).unwrap();
        assert_eq!(res.realized_quality, vec![9.0]);
        assert_eq!(res.task_outlay, vec![Money(1800)]);
        assert_eq!(res.worker_utilities, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn settle_rejects_recruiting_long_term_worker() {
        let m = market(30.0, vec![pair(3.0, 3.0, 6.0)]);
        let out = book(&m, &[(0, 6.0)]);
        let p = realize_transaction(&m, &out, &ParticipationDraw { alpha: vec![true] });
        let o3m = O3mResult {
            recruited: vec![vec![0]],
            payments: BTreeMap::from([((0, 0), Money(500))]),
            asks: BTreeMap::new(),
            rounds: 1,
            interactions: InteractionCounts::new(1, 1),
        };
        assert_eq!(
            settle(&m, &out, &p, &[], &o3m),
            Err(SettlementError::IneligibleRecruit { task: 0, worker: 0 })
        );
    }
}

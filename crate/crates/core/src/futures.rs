//! Futures market: overbooking-enabled in-advance many-to-many matching.
//!
//! Tasks sign long-term contracts with workers before any transaction, using
//! each worker's participation probability. Selection maximizes expected
//! service quality `Σ a_j q_ij` subject to the expected outlay
//! `Σ a_j p_ij <= (1 + τ) B_i`. After the payment descent settles, every task
//! whose contracts fail the risk surrogate gives up futures trading entirely.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::matching::{
    run_descent_observed, select_workers, DescentRules, DescentTask, MatchingError, RoundView, ValueRule,
    WeightRule,
};
use crate::model::{InteractionCounts, Money, ValidatedMarket};
use crate::risk::risk_surrogate;

pub use crate::matching::reduce_payment;

pub const FUTURES_RULES: DescentRules = DescentRules {
    value: ValueRule::ExpectedQuality,
    weight: WeightRule::ExpectedPayment,
};

/// The contract book produced by the futures market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuturesOutcome {
    /// γ(t_i), ascending worker ids.
    pub contracts_by_task: Vec<Vec<usize>>,
    /// γ(w_j), ascending task ids.
    pub contracts_by_worker: Vec<Vec<usize>>,
    /// p^F for every signed contract.
    pub locked_payments: BTreeMap<(usize, usize), Money>,
    /// Whether each task's matched set passed risk screening.
    pub risk_ok: Vec<bool>,
    /// Matched sets before risk screening.
    pub matched: Vec<Vec<usize>>,
    /// Final asked payment of every pair, |T| x |W|.
    pub final_asks: Vec<Vec<Money>>,
    pub rounds_used: usize,
    pub interaction_counts: InteractionCounts,
}

impl FuturesOutcome {
    /// Builds an outcome from explicit contracts, e.g. for certifying an
    /// externally produced contract book. Asks default to the locked payment
    /// for contracted pairs and to cost elsewhere.
    pub fn from_contracts(
        market: &ValidatedMarket,
        contracts: Vec<Vec<usize>>,
        payments: BTreeMap<(usize, usize), Money>,
    ) -> FuturesOutcome {
        let n_tasks = market.n_tasks();
        let n_workers = market.n_workers();
        let mut by_worker = vec![Vec::new(); n_workers];
        for (i, set) in contracts.iter().enumerate() {
            for &j in set {
                by_worker[j].push(i);
            }
        }
        let final_asks = (0..n_tasks)
            .map(|i| {
                (0..n_workers)
                    .map(|j| payments.get(&(i, j)).copied().unwrap_or(market.cost(i, j)))
                    .collect()
            })
            .collect();
        let risk_ok = contracts
            .iter()
            .enumerate()
            .map(|(i, set)| risk_surrogate(market, i, set, market.config().risk_tolerance))
            .collect();
        FuturesOutcome {
            matched: contracts.clone(),
            contracts_by_task: contracts,
            contracts_by_worker: by_worker,
            locked_payments: payments,
            risk_ok,
            final_asks,
            rounds_used: 0,
            interaction_counts: InteractionCounts::new(n_tasks, n_workers),
        }
    }

    pub fn payment(&self, task: usize, worker: usize) -> Option<Money> {
        self.locked_payments.get(&(task, worker)).copied()
    }

    pub fn is_contracted(&self, task: usize, worker: usize) -> bool {
        self.locked_payments.contains_key(&(task, worker))
    }

    pub fn total_contracts(&self) -> usize {
        self.locked_payments.len()
    }
}

/// Tasks whose current asked payment from `worker` covers its cost.
pub fn candidate_tasks(market: &ValidatedMarket, worker: usize, asks: &[Vec<Money>]) -> Vec<usize> {
    (0..market.n_tasks())
        .filter(|&i| asks[i][worker] >= market.cost(i, worker))
        .collect()
}

/// One task's selection among `(worker, asked payment)` proposals under its overbooked budget.
pub fn task_select_round(market: &ValidatedMarket, task: usize, proposals: &[(usize, Money)]) -> Vec<usize> {
    let mut sorted = proposals.to_vec();
    sorted.sort_by_key(|&(j, _)| j);
    let workers: Vec<usize> = sorted.iter().map(|&(j, _)| j).collect();
    let asks: Vec<Money> = sorted.iter().map(|&(_, p)| p).collect();
    select_workers(
        market,
        FUTURES_RULES,
        task,
        market.overbooked_capacity(task),
        &workers,
        &asks,
    )
}

pub fn run_oia3m(market: &ValidatedMarket) -> Result<FuturesOutcome, MatchingError> {
    run_oia3m_observed(market, |_| {})
}

/// Like [`run_oia3m`], calling `observe` after every round's selections.
pub fn run_oia3m_observed<F>(market: &ValidatedMarket, observe: F) -> Result<FuturesOutcome, MatchingError>
where
    F: FnMut(&RoundView<'_>),
{
    let n_tasks = market.n_tasks();
    let n_workers = market.n_workers();
    let tasks: Vec<DescentTask> = (0..n_tasks)
        .map(|i| DescentTask {
            task: i,
            capacity: market.overbooked_capacity(i),
            workers: (0..n_workers).collect(),
        })
        .collect();
    let descent = run_descent_observed(market, tasks, FUTURES_RULES, observe)?;

    let tolerance = market.config().risk_tolerance;
    let mut contracts_by_task = vec![Vec::new(); n_tasks];
    let mut contracts_by_worker = vec![Vec::new(); n_workers];
    let mut locked_payments = BTreeMap::new();
    let mut risk_ok = Vec::with_capacity(n_tasks);
    for (slot, set) in descent.accepted.iter().enumerate() {
        let i = descent.tasks[slot].task;
        let ok = risk_surrogate(market, i, set, tolerance);
        risk_ok.push(ok);
        if !ok {
            continue;
        }
        for &j in set {
            let p = descent.ask(slot, j).expect("accepted worker has an ask");
            locked_payments.insert((i, j), p);
            contracts_by_worker[j].push(i);
        }
        contracts_by_task[i] = set.clone();
    }
    Ok(FuturesOutcome {
        contracts_by_task,
        contracts_by_worker,
        locked_payments,
        risk_ok,
        matched: descent.accepted,
        final_asks: descent.asks,
        rounds_used: descent.rounds,
        interaction_counts: descent.interactions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{validate_market, Market, MarketConfig};

    fn config(tau: f64) -> MarketConfig {
        MarketConfig {
            overbooking_rate: tau,
            ..MarketConfig::default()
        }
    }

    #[test]
    fn zero_workers_is_vacuous() {
        let m = Market {
            tasks: vec![task(30.0, 30.0)],
            workers: vec![],
            pairs: vec![vec![]],
        };
        let m = validate_market(m, config(0.2)).unwrap();
        let out = run_oia3m(&m).unwrap();
        assert_eq!(out.rounds_used, 1);
        assert!(out.contracts_by_task[0].is_empty());
        assert_eq!(out.interaction_counts.total(), 0);
    }

    #[test]
    fn single_worker_contract() {
        // 0.8 * 6 = 4.8 <= 30, accepted in round 1; 0.8 * 4 / 3 >= 0.8 passes screening.
        let m = Market {
            tasks: vec![task(30.0, 3.0)],
            workers: vec![worker(0.8)],
            pairs: vec![vec![pair(4.0, 3.0, 6.0)]],
        };
        let m = validate_market(m, config(0.0)).unwrap();
        let out = run_oia3m(&m).unwrap();
        assert_eq!(out.contracts_by_task, vec![vec![0]]);
        assert_eq!(out.contracts_by_worker, vec![vec![0]]);
        assert_eq!(out.payment(0, 0), Some(Money(600)));
        assert_eq!(out.risk_ok, vec![true]);
        assert_eq!(out.rounds_used, 1);
        assert_eq!(out.interaction_counts.get(0, 0), 1);
    }

    #[test]
    fn risky_task_gives_up() {
        let m = Market {
            tasks: vec![task(30.0, 30.0)],
            workers: vec![worker(0.8)],
            pairs: vec![vec![pair(4.0, 3.0, 6.0)]],
        };
        let m = validate_market(m, config(0.0)).unwrap();
        let out = run_oia3m(&m).unwrap();
        assert_eq!(out.matched, vec![vec![0]]);
        assert!(out.contracts_by_task[0].is_empty());
        assert!(out.contracts_by_worker[0].is_empty());
        assert_eq!(out.risk_ok, vec![false]);
        assert!(out.locked_payments.is_empty());
    }

    #[test]
    fn candidate_predicate_is_inclusive() {
        let m = Market {
            tasks: vec![task(30.0, 3.0), task(30.0, 3.0), task(30.0, 3.0)],
            workers: vec![worker(0.8)],
            pairs: vec![
                vec![pair(4.0, 3.0, 6.0)],
                vec![pair(4.0, 3.0, 6.0)],
                vec![pair(4.0, 3.0, 6.0)],
            ],
        };
        let m = validate_market(m, config(0.0)).unwrap();
        let asks = vec![vec![Money(600)], vec![Money(300)], vec![Money(450)]];
        assert_eq!(candidate_tasks(&m, 0, &asks), vec![0, 1, 2]);
        // Below cost never happens in the mechanism but the predicate must still exclude it.
        let asks = vec![vec![Money(600)], vec![Money(299)], vec![Money(450)]];
        assert_eq!(candidate_tasks(&m, 0, &asks), vec![0, 2]);
    }

    #[test]
    fn select_round_respects_overbooked_budget() {
        // B = 30, τ = 0.2: capacity 36. Expected payments 20 / 18 / 10 with values 8 / 7 / 2.
        // Subsets within 36: {0,2} = 10, {1,2} = 9, {0} = 8, ... so {0,2} wins.
        let m = Market {
            tasks: vec![task(30.0, 3.0)],
            workers: vec![worker(1.0), worker(1.0), worker(1.0)],
            pairs: vec![vec![pair(8.0, 3.0, 20.0), pair(7.0, 3.0, 18.0), pair(2.0, 3.0, 10.0)]],
        };
        let m = validate_market(m, config(0.2)).unwrap();
        let proposals = [(0, Money(2000)), (1, Money(1800)), (2, Money(1000))];
        assert_eq!(task_select_round(&m, 0, &proposals), vec![0, 2]);
        assert_eq!(task_select_round(&m, 0, &proposals[..1]), vec![0]);
        assert!(task_select_round(&m, 0, &[(0, Money(3700))]).is_empty());
    }
}

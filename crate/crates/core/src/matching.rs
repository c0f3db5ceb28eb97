//! Round-synchronous payment-descent matching.
//!
//! Every round, each worker proposes its current asked payment to every
//! eligible task; each task keeps the knapsack-optimal subset of proposals
//! under its capacity; each rejected worker whose ask is above cost lowers it
//! by its step (never below cost). The process stops after the first round in
//! which no ask changes.
//!
//! The futures mechanism, both spot mechanisms and the pure-spot baseline are
//! all instances of this loop with different value/weight rules, capacities
//! and eligibility.

use thiserror::Error;

use crate::knapsack::{solve_knapsack, KnapsackItem};
use crate::model::{InteractionCounts, Money, ValidatedMarket};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueRule {
    /// `a_j * q_ij`
    ExpectedQuality,
    /// `q_ij`
    Quality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRule {
    /// `a_j * p_ij`, rounded up to whole units.
    ExpectedPayment,
    /// `p_ij`
    Payment,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchingError {
    #[error("matching did not settle within {cap} rounds")]
    RoundCapExceeded { cap: usize },
}

/// One side of a descent run: a task, its capacity and the workers allowed to propose to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescentTask {
    pub task: usize,
    pub capacity: Money,
    /// Eligible workers, ascending.
    pub workers: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct DescentRules {
    pub value: ValueRule,
    pub weight: WeightRule,
}

/// Final state of a descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentOutcome {
    pub tasks: Vec<DescentTask>,
    /// Accepted workers per entry of `tasks`, ascending.
    pub accepted: Vec<Vec<usize>>,
    /// Final asked payment per entry of `tasks`, aligned with `DescentTask::workers`.
    pub asks: Vec<Vec<Money>>,
    pub rounds: usize,
    pub interactions: InteractionCounts,
}

impl DescentOutcome {
    pub fn ask(&self, slot: usize, worker: usize) -> Option<Money> {
        let t = &self.tasks[slot];
        t.workers
            .binary_search(&worker)
            .ok()
            .map(|pos| self.asks[slot][pos])
    }
}

/// State visible to an observer after each round's selections.
#[derive(Debug)]
pub struct RoundView<'a> {
    pub round: usize,
    /// Asks in force during this round.
    pub asks: &'a [Vec<Money>],
    pub accepted: &'a [Vec<bool>],
}

fn item_value(market: &ValidatedMarket, rules: DescentRules, task: usize, worker: usize) -> u64 {
    match rules.value {
        ValueRule::ExpectedQuality => market.expected_quality_units(task, worker),
        ValueRule::Quality => market.quality_units(task, worker),
    }
}

fn item_weight(market: &ValidatedMarket, rules: DescentRules, worker: usize, ask: Money) -> u64 {
    let w = match rules.weight {
        WeightRule::ExpectedPayment => market.expected_payment(worker, ask),
        WeightRule::Payment => ask,
    };
    w.0.max(0) as u64
}

/// Selects the knapsack-optimal subset of `workers` at the given asks.
pub fn select_workers(
    market: &ValidatedMarket,
    rules: DescentRules,
    task: usize,
    capacity: Money,
    workers: &[usize],
    asks: &[Money],
) -> Vec<usize> {
    let items: Vec<KnapsackItem<u64>> = workers
        .iter()
        .zip(asks)
        .map(|(&j, &p)| KnapsackItem {
            item_id: j,
            value: item_value(market, rules, task, j),
            weight: item_weight(market, rules, j, p),
        })
        .collect();
    solve_knapsack(&items, capacity.0.max(0) as u64).chosen
}

/// `max(current - step, cost)`
pub fn reduce_payment(current: Money, step: Money, cost: Money) -> Money {
    (current - step).max(cost)
}

pub fn run_descent(
    market: &ValidatedMarket,
    tasks: Vec<DescentTask>,
    rules: DescentRules,
) -> Result<DescentOutcome, MatchingError> {
    run_descent_observed(market, tasks, rules, |_| {})
}

pub fn run_descent_observed<F>(
    market: &ValidatedMarket,
    tasks: Vec<DescentTask>,
    rules: DescentRules,
    mut observe: F,
) -> Result<DescentOutcome, MatchingError>
where
    F: FnMut(&RoundView<'_>),
{
    let cap = market.config().max_rounds_cap;
    let mut asks: Vec<Vec<Money>> = tasks
        .iter()
        .map(|t| t.workers.iter().map(|&j| market.desire(t.task, j)).collect())
        .collect();
    let mut accepted: Vec<Vec<bool>> = tasks.iter().map(|t| vec![false; t.workers.len()]).collect();
    let mut dirty = vec![true; tasks.len()];
    let mut interactions = InteractionCounts::new(market.n_tasks(), market.n_workers());
    let mut round = 0;

    loop {
        round += 1;
        if round > cap {
            return Err(MatchingError::RoundCapExceeded { cap });
        }

        for (slot, t) in tasks.iter().enumerate() {
            // Asks never fall below cost, so every eligible worker proposes.
            for &j in &t.workers {
                interactions.add(t.task, j, 1);
            }
            if !dirty[slot] {
                continue;
            }
            let chosen = select_workers(market, rules, t.task, t.capacity, &t.workers, &asks[slot]);
            let flags = &mut accepted[slot];
            flags.iter_mut().for_each(|f| *f = false);
            for j in chosen {
                let pos = t.workers.binary_search(&j).expect("chosen worker is eligible");
                flags[pos] = true;
            }
        }

        observe(&RoundView {
            round,
            asks: &asks,
            accepted: &accepted,
        });

        let mut changed_any = false;
        for (slot, t) in tasks.iter().enumerate() {
            let mut changed = false;
            for (pos, &j) in t.workers.iter().enumerate() {
                let ask = asks[slot][pos];
                let cost = market.cost(t.task, j);
                if !accepted[slot][pos] && ask > cost {
                    asks[slot][pos] = reduce_payment(ask, market.step(j), cost);
                    changed = true;
                }
            }
            dirty[slot] = changed;
            changed_any |= changed;
        }
        if !changed_any {
            break;
        }
    }

    let accepted_ids = tasks
        .iter()
        .zip(&accepted)
        .map(|(t, flags)| {
            t.workers
                .iter()
                .zip(flags)
                .filter(|(_, &f)| f)
                .map(|(&j, _)| j)
                .collect()
        })
        .collect();
    Ok(DescentOutcome {
        tasks,
        accepted: accepted_ids,
        asks,
        rounds: round,
        interactions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_payment_cases() {
        assert_eq!(reduce_payment(Money(800), Money(100), Money(300)), Money(700));
        assert_eq!(reduce_payment(Money(350), Money(100), Money(300)), Money(300));
        assert_eq!(reduce_payment(Money(300), Money(100), Money(300)), Money(300));
    }
}

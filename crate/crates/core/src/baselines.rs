//! Comparison mechanisms.
//!
//! `Conventional_S` and `Conventional_F` reuse the payment-descent engine.
//! `Quality_P`, `Random_M` and `Negotiation` are deterministic stand-ins for
//! externally published mechanisms:
//!
//! * `Quality_P`: tasks in ascending id take present workers by descending
//!   quality (ties by ascending id) at their desired payment, skipping any
//!   worker the remaining budget cannot cover;
//! * `Random_M`: the same, in an order shuffled by the task's own stream;
//! * `Negotiation`: one uniform price per task descends from the highest
//!   desired payment; see [`run_negotiation`].

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::futures::FuturesOutcome;
use crate::knapsack::{solve_knapsack, KnapsackItem};
use crate::matching::{run_descent, DescentTask, MatchingError};
use crate::model::{InteractionCounts, Money, ParticipationDraw, ValidatedMarket};
use crate::spot::{tally, Trade, TradeKind, SPOT_RULES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineOutcome {
    /// Served workers per task, ascending.
    pub assignment: Vec<Vec<usize>>,
    pub trades: Vec<Trade>,
    pub realized_quality: Vec<f64>,
    pub task_outlay: Vec<Money>,
    pub worker_utilities: Vec<f64>,
    pub interaction_counts: InteractionCounts,
    pub rounds: usize,
}

impl BaselineOutcome {
    fn build(
        market: &ValidatedMarket,
        mut trades: Vec<Trade>,
        interaction_counts: InteractionCounts,
        rounds: usize,
    ) -> BaselineOutcome {
        trades.sort_by_key(|t| (t.task, t.worker));
        let mut assignment = vec![Vec::new(); market.n_tasks()];
        for t in &trades {
            assignment[t.task].push(t.worker);
        }
        let (realized_quality, task_outlay, worker_utilities) = tally(market, &trades);
        BaselineOutcome {
            assignment,
            trades,
            realized_quality,
            task_outlay,
            worker_utilities,
            interaction_counts,
            rounds,
        }
    }

    pub fn payment(&self, task: usize, worker: usize) -> Option<Money> {
        self.trades
            .binary_search_by_key(&(task, worker), |t| (t.task, t.worker))
            .ok()
            .map(|k| self.trades[k].payment)
    }

    pub fn total_quality(&self) -> f64 {
        self.realized_quality.iter().sum()
    }
}

/// Pure spot trading: payment descent over the present workers with the real budget.
pub fn run_conventional_s(
    market: &ValidatedMarket,
    draw: &ParticipationDraw,
) -> Result<BaselineOutcome, MatchingError> {
    let present: Vec<usize> = draw.present_workers().collect();
    let tasks = (0..market.n_tasks())
        .map(|i| DescentTask {
            task: i,
            capacity: market.budget(i),
            workers: present.clone(),
        })
        .collect();
    let d = run_descent(market, tasks, SPOT_RULES)?;
    let mut trades = Vec::new();
    for (slot, set) in d.accepted.iter().enumerate() {
        for &j in set {
            trades.push(Trade {
                task: d.tasks[slot].task,
                worker: j,
                payment: d.ask(slot, j).expect("accepted worker has an ask"),
                kind: TradeKind::Recruited,
            });
        }
    }
    Ok(BaselineOutcome::build(market, trades, d.interactions, d.rounds))
}

/// Pure futures trading: present contract workers are paid their contract
/// price in ascending worker order until the next one no longer fits `B_i`;
/// the rest are released unpaid. No spot interactions take place.
pub fn run_conventional_f(
    market: &ValidatedMarket,
    outcome: &FuturesOutcome,
    draw: &ParticipationDraw,
) -> BaselineOutcome {
    let mut trades = Vec::new();
    for (i, contracts) in outcome.contracts_by_task.iter().enumerate() {
        let mut spent = Money::ZERO;
        for &j in contracts.iter().filter(|&&j| draw.present(j)) {
            let p = outcome.payment(i, j).expect("contracted pair has a payment");
            if spent + p > market.budget(i) {
                break;
            }
            spent += p;
            trades.push(Trade { task: i, worker: j, payment: p, kind: TradeKind::Contract });
        }
    }
    BaselineOutcome::build(
        market,
        trades,
        InteractionCounts::new(market.n_tasks(), market.n_workers()),
        0,
    )
}

fn greedy_take(
    market: &ValidatedMarket,
    task: usize,
    order: &[usize],
    trades: &mut Vec<Trade>,
    interactions: &mut InteractionCounts,
) {
    let mut left = market.budget(task);
    for &j in order {
        interactions.add(task, j, 1);
        let p = market.desire(task, j);
        if p <= left {
            left = left - p;
            trades.push(Trade { task, worker: j, payment: p, kind: TradeKind::Recruited });
        }
    }
}

pub fn run_quality_p(market: &ValidatedMarket, draw: &ParticipationDraw) -> BaselineOutcome {
    let mut trades = Vec::new();
    let mut interactions = InteractionCounts::new(market.n_tasks(), market.n_workers());
    for i in 0..market.n_tasks() {
        let mut order: Vec<usize> = draw.present_workers().collect();
        order.sort_by_key(|&j| (std::cmp::Reverse(market.quality_units(i, j)), j));
        greedy_take(market, i, &order, &mut trades, &mut interactions);
    }
    let rounds = usize::from(market.n_tasks() > 0 && !draw.alpha.iter().all(|a| !a));
    BaselineOutcome::build(market, trades, interactions, rounds)
}

/// Tasks shuffle the present workers in ascending task order, all from `rng`.
pub fn run_random_m<R: Rng + ?Sized>(
    market: &ValidatedMarket,
    draw: &ParticipationDraw,
    rng: &mut R,
) -> BaselineOutcome {
    let mut trades = Vec::new();
    let mut interactions = InteractionCounts::new(market.n_tasks(), market.n_workers());
    for i in 0..market.n_tasks() {
        let mut order: Vec<usize> = draw.present_workers().collect();
        order.shuffle(rng);
        greedy_take(market, i, &order, &mut trades, &mut interactions);
    }
    let rounds = usize::from(market.n_tasks() > 0 && !draw.alpha.iter().all(|a| !a));
    BaselineOutcome::build(market, trades, interactions, rounds)
}

/// Uniform-price negotiation for one task.
///
/// At price π the participants are the present workers with `c_ij <= π` and
/// the task keeps the quality-maximal subset with `|S| π <= B_i`. The price
/// drops by Δp each round and negotiation stops when everyone is accepted,
/// when the accepted set is the same as in the previous round, or when the
/// next price would be below every participant's cost. Accepted workers are
/// paid the final π.
pub fn negotiate_task(
    market: &ValidatedMarket,
    task: usize,
    present: &[usize],
    interactions: &mut InteractionCounts,
) -> (Vec<usize>, Money, usize) {
    let Some(mut price) = present.iter().map(|&j| market.desire(task, j)).max() else {
        return (Vec::new(), Money::ZERO, 0);
    };
    let step = market.from_currency(market.config().payment_step);
    let mut previous: Option<Vec<usize>> = None;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let participants: Vec<usize> = present
            .iter()
            .copied()
            .filter(|&j| market.cost(task, j) <= price)
            .collect();
        for &j in &participants {
            interactions.add(task, j, 1);
        }
        let items: Vec<KnapsackItem<u64>> = participants
            .iter()
            .map(|&j| KnapsackItem {
                item_id: j,
                value: market.quality_units(task, j),
                weight: price.0 as u64,
            })
            .collect();
        let chosen = solve_knapsack(&items, market.budget(task).0.max(0) as u64).chosen;
        let min_cost = participants.iter().map(|&j| market.cost(task, j)).min();
        let settled = chosen.len() == participants.len()
            || previous.as_ref() == Some(&chosen)
            || min_cost.is_none_or(|c| price - step < c);
        if settled {
            return (chosen, price, rounds);
        }
        previous = Some(chosen);
        price = price - step;
    }
}

pub fn run_negotiation(market: &ValidatedMarket, draw: &ParticipationDraw) -> BaselineOutcome {
    let present: Vec<usize> = draw.present_workers().collect();
    let mut trades = Vec::new();
    let mut interactions = InteractionCounts::new(market.n_tasks(), market.n_workers());
    let mut rounds = 0;
    for i in 0..market.n_tasks() {
        let (chosen, price, r) = negotiate_task(market, i, &present, &mut interactions);
        rounds = rounds.max(r);
        for j in chosen {
            trades.push(Trade { task: i, worker: j, payment: price, kind: TradeKind::Recruited });
        }
    }
    BaselineOutcome::build(market, trades, interactions, rounds)
}

/// Payment of each trade keyed by pair, for callers that want a map.
pub fn payment_map(trades: &[Trade]) -> BTreeMap<(usize, usize), Money> {
    trades.iter().map(|t| ((t.task, t.worker), t.payment)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{seeded_stream, validate_market, Market, MarketConfig, PairData};

    fn one_task(budget: f64, pairs: Vec<PairData>) -> ValidatedMarket {
        let n = pairs.len();
        let m = Market {
            tasks: vec![task(budget, 30.0)],
            workers: (0..n).map(|_| worker(0.9)).collect(),
            pairs: vec![pairs],
        };
        validate_market(m, MarketConfig::default()).unwrap()
    }

    #[test]
    fn quality_p_hand_example() {
        let m = one_task(10.0, vec![pair(5.0, 3.0, 7.0), pair(4.0, 3.0, 6.0), pair(3.0, 3.0, 5.0)]);
        let out = run_quality_p(&m, &ParticipationDraw::all_present(3));
        assert_eq!(out.assignment, vec![vec![0]]);
        assert_eq!(out.task_outlay, vec![Money(700)]);
    }

    #[test]
    fn quality_p_ties_by_worker_id() {
        let m = one_task(7.0, vec![pair(4.0, 3.0, 6.0), pair(4.0, 3.0, 6.0)]);
        let out = run_quality_p(&m, &ParticipationDraw::all_present(2));
        assert_eq!(out.assignment, vec![vec![0]]);
    }

    #[test]
    fn quality_p_takes_everyone_when_affordable() {
        let m = one_task(100.0, vec![pair(5.0, 3.0, 7.0), pair(4.0, 3.0, 6.0), pair(3.0, 3.0, 5.0)]);
        let out = run_quality_p(&m, &ParticipationDraw { alpha: vec![true, false, true] });
        assert_eq!(out.assignment, vec![vec![0, 2]]);
    }

    #[test]
    fn random_m_is_seed_deterministic() {
        let pairs = (0..8).map(|k| pair(1.0 + k as f64 * 0.5, 3.0, 6.0 + (k % 3) as f64)).collect();
        let m = one_task(20.0, pairs);
        let draw = ParticipationDraw::all_present(8);
        let a = run_random_m(&m, &draw, &mut seeded_stream(7, 0));
        let b = run_random_m(&m, &draw, &mut seeded_stream(7, 0));
        assert_eq!(a, b);
        assert!(a.task_outlay[0] <= Money(2000));
    }

    #[test]
    fn negotiation_single_worker_keeps_desired_price() {
        let m = one_task(30.0, vec![pair(4.0, 3.0, 8.0)]);
        let out = run_negotiation(&m, &ParticipationDraw::all_present(1));
        assert_eq!(out.assignment, vec![vec![0]]);
        assert_eq!(out.payment(0, 0), Some(Money(800)));
        assert_eq!(out.rounds, 1);
    }

    #[test]
    fn negotiation_identical_workers_symmetric() {
        let m = one_task(30.0, vec![pair(4.0, 3.0, 8.0); 3]);
        let out = run_negotiation(&m, &ParticipationDraw::all_present(3));
        assert_eq!(out.assignment, vec![vec![0, 1, 2]]);
        let m = one_task(2.0, vec![pair(4.0, 3.0, 8.0); 3]);
        let out = run_negotiation(&m, &ParticipationDraw::all_present(3));
        assert!(out.assignment[0].is_empty());
    }

    #[test]
    fn conventional_f_stops_at_budget() {
        let m = one_task(30.0, vec![pair(3.0, 3.0, 20.0), pair(4.0, 3.0, 13.0), pair(2.0, 3.0, 5.0)]);
        let payments = BTreeMap::from([
            ((0, 0), Money(2000)),
            ((0, 1), Money(1300)),
            ((0, 2), Money(500)),
        ]);
        let out = FuturesOutcome::from_contracts(&m, vec![vec![0, 1, 2]], payments);
        let res = run_conventional_f(&m, &out, &ParticipationDraw::all_present(3));
        assert_eq!(res.assignment, vec![vec![0]]);
        let res = run_conventional_f(&m, &out, &ParticipationDraw { alpha: vec![false, true, true] });
        assert_eq!(res.assignment, vec![vec![1, 2]]);
        assert_eq!(res.realized_quality, vec![6.0]);
    }

    #[test]
    fn conventional_s_empty_draw() {
        let m = one_task(30.0, vec![pair(3.0, 3.0, 6.0)]);
        let res = run_conventional_s(&m, &ParticipationDraw { alpha: vec![false] }).unwrap();
        assert!(res.trades.is_empty());
        assert_eq!(res.interaction_counts.total(), 0);
    }
}

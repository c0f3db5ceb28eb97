#![allow(dead_code)]

use mcs_hybrid::harness::{generate_market, ScenarioSpec};
use mcs_hybrid::model::{validate_market, Money, ValidatedMarket};

pub fn random_market(spec: &ScenarioSpec, seed: u64) -> ValidatedMarket {
    let market = generate_market(spec, seed).expect("ranges are feasible");
    validate_market(market, spec.market_config()).expect("generated markets validate")
}

pub fn sized_market(n_tasks: usize, n_workers: usize, seed: u64) -> ValidatedMarket {
    random_market(&ScenarioSpec::with_size(n_tasks, n_workers), seed)
}

/// Best subset by enumeration; among equal values the lexicographically
/// smallest ascending id list wins. Zero-value items are never useful.
pub fn brute_knapsack(ids: &[usize], values: &[u64], weights: &[u64], capacity: u64) -> (u64, Vec<usize>) {
    let n = ids.len();
    let mut best_value = 0u64;
    let mut best: Vec<usize> = Vec::new();
    for mask in 0u32..(1 << n) {
        let mut v = 0u64;
        let mut w = 0u64;
        let mut set = Vec::new();
        let mut useless = false;
        for k in 0..n {
            if mask >> k & 1 == 1 {
                v += values[k];
                w += weights[k];
                set.push(ids[k]);
                useless |= values[k] == 0;
            }
        }
        if w > capacity || useless {
            continue;
        }
        set.sort_unstable();
        if v > best_value || (v == best_value && set < best) {
            best_value = v;
            best = set;
        }
    }
    (best_value, best)
}

pub struct RefTask {
    pub task: usize,
    pub capacity: Money,
    pub workers: Vec<usize>,
}

pub struct RefOutcome {
    pub accepted: Vec<Vec<usize>>,
    pub asks: Vec<Vec<Money>>,
    pub rounds: usize,
    pub interactions: u64,
}

/// Plain payment descent: every round each task takes its best subset at the
/// current asks, then every rejected worker still above cost lowers its ask by
/// one step. Stops after the first round in which nobody lowers.
pub fn reference_descent(
    market: &ValidatedMarket,
    tasks: &[RefTask],
    value: impl Fn(usize, usize) -> u64,
    weight: impl Fn(usize, Money) -> u64,
) -> RefOutcome {
    let mut asks: Vec<Vec<Money>> = tasks
        .iter()
        .map(|t| t.workers.iter().map(|&j| market.desire(t.task, j)).collect())
        .collect();
    let mut accepted = vec![Vec::new(); tasks.len()];
    let mut rounds = 0;
    let mut interactions = 0u64;
    loop {
        rounds += 1;
        for (s, t) in tasks.iter().enumerate() {
            interactions += t.workers.len() as u64;
            let values: Vec<u64> = t.workers.iter().map(|&j| value(t.task, j)).collect();
            let weights: Vec<u64> = t.workers.iter().zip(&asks[s]).map(|(&j, &p)| weight(j, p)).collect();
            accepted[s] = brute_knapsack(&t.workers, &values, &weights, t.capacity.0 as u64).1;
        }
        let mut changed = false;
        for (s, t) in tasks.iter().enumerate() {
            for (k, &j) in t.workers.iter().enumerate() {
                let c = market.cost(t.task, j);
                if !accepted[s].contains(&j) && asks[s][k] > c {
                    let lowered = Money(asks[s][k].0 - market.step(j).0);
                    asks[s][k] = if lowered < c { c } else { lowered };
                    changed = true;
                }
            }
        }
        if !changed {
            return RefOutcome { accepted, asks, rounds, interactions };
        }
    }
}

pub fn expected_value(market: &ValidatedMarket, task: usize, worker: usize) -> u64 {
    market.prob_ppm(worker) * market.quality_units(task, worker)
}

pub fn expected_weight(market: &ValidatedMarket, worker: usize, p: Money) -> u64 {
    (market.prob_ppm(worker) * p.0 as u64).div_ceil(1_000_000)
}

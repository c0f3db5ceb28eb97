//! Exact 0-1 knapsack by dynamic programming over integer capacities.
//!
//! Values are generic (integers for the matching engines, `f64` for callers
//! that want plain reals); weights and capacity are integers.

use std::ops::Add;

pub trait KnapsackValue: Copy + PartialOrd + Add<Output = Self> {
    const ZERO: Self;
}

impl KnapsackValue for u64 {
    const ZERO: Self = 0;
}

impl KnapsackValue for u128 {
    const ZERO: Self = 0;
}

impl KnapsackValue for i64 {
    const ZERO: Self = 0;
}

impl KnapsackValue for f64 {
    const ZERO: Self = 0.0;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnapsackItem<V> {
    pub item_id: usize,
    pub value: V,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackSolution<V> {
    /// Chosen ids in ascending order.
    pub chosen: Vec<usize>,
    pub total_value: V,
    pub total_weight: u64,
    /// Cells in the DP table actually filled (items considered × reduced capacity).
    pub table_cells: usize,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Maximizes total value subject to `total_weight <= capacity`.
///
/// Among equal-value optima the lexicographically smallest id sequence wins.
/// Items heavier than the capacity are skipped, and items with zero (or
/// negative) value are never chosen since they cannot raise the objective.
pub fn solve_knapsack<V: KnapsackValue>(items: &[KnapsackItem<V>], capacity: u64) -> KnapsackSolution<V> {
    let mut usable: Vec<&KnapsackItem<V>> = items
        .iter()
        .filter(|it| it.weight <= capacity && it.value > V::ZERO)
        .collect();
    usable.sort_by_key(|it| it.item_id);

    let total: u64 = usable.iter().map(|it| it.weight).sum();
    let divisor = usable.iter().fold(0, |g, it| gcd(g, it.weight)).max(1);
    let cap = (capacity.min(total) / divisor) as usize;
    let n = usable.len();

    // take[i] bit w: item i belongs to some optimal selection from items i.. with capacity w.
    let words = cap / 64 + 1;
    let mut take = vec![0u64; n * words];
    let mut best = vec![V::ZERO; cap + 1];
    for (i, item) in usable.iter().enumerate().rev() {
        let w_i = (item.weight / divisor) as usize;
        let row = &mut take[i * words..(i + 1) * words];
        for w in (w_i..=cap).rev() {
            let cand = best[w - w_i] + item.value;
            if cand >= best[w] {
                best[w] = cand;
                row[w / 64] |= 1 << (w % 64);
            }
        }
    }

    let mut chosen = Vec::new();
    let mut total_value = V::ZERO;
    let mut total_weight = 0;
    let mut w = cap;
    for (i, item) in usable.iter().enumerate() {
        if take[i * words + w / 64] >> (w % 64) & 1 == 1 {
            chosen.push(item.item_id);
            total_value = total_value + item.value;
            total_weight += item.weight;
            w -= (item.weight / divisor) as usize;
        }
    }
    KnapsackSolution {
        chosen,
        total_value,
        total_weight,
        table_cells: n * (cap + 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(spec: &[(u64, u64)]) -> Vec<KnapsackItem<u64>> {
        spec.iter()
            .enumerate()
            .map(|(id, &(value, weight))| KnapsackItem { item_id: id, value, weight })
            .collect()
    }

    #[test]
    fn empty_instance() {
        let s = solve_knapsack::<u64>(&[], 100);
        assert!(s.chosen.is_empty());
        assert_eq!(s.total_value, 0);
        assert_eq!(s.total_weight, 0);
    }

    #[test]
    fn three_item_example() {
        // Brute force over the 8 subsets: {1,2} is the unique optimum (value 5, weight 7).
        let s = solve_knapsack(&items(&[(4, 5), (3, 4), (2, 3)]), 7);
        assert_eq!(s.chosen, vec![1, 2]);
        assert_eq!(s.total_value, 5);
        assert_eq!(s.total_weight, 7);
    }

    #[test]
    fn ties_prefer_smaller_ids() {
        // {0} and {1} and {2} all have value 3; only one fits.
        let s = solve_knapsack(&items(&[(3, 5), (3, 5), (3, 5)]), 7);
        assert_eq!(s.chosen, vec![0]);
        // {1,3} and {2,3} both reach value 7 at weight 8.
        let s = solve_knapsack(&items(&[(2, 4), (3, 4), (3, 4), (4, 4)]), 8);
        assert_eq!(s.total_value, 7);
        assert_eq!(s.chosen, vec![1, 3]);
        let s = solve_knapsack(&items(&[(3, 4), (3, 4), (3, 4), (3, 4)]), 8);
        assert_eq!(s.chosen, vec![0, 1]);
    }

    #[test]
    fn ids_need_not_be_sorted_or_dense() {
        let its = vec![
            KnapsackItem { item_id: 9, value: 3u64, weight: 4 },
            KnapsackItem { item_id: 2, value: 3, weight: 4 },
            KnapsackItem { item_id: 5, value: 1, weight: 1 },
        ];
        let s = solve_knapsack(&its, 5);
        assert_eq!(s.chosen, vec![2, 5]);
    }

    #[test]
    fn oversized_and_zero_value_items_skipped() {
        let s = solve_knapsack(&items(&[(10, 11), (0, 0), (1, 2)]), 10);
        assert_eq!(s.chosen, vec![2]);
    }

    #[test]
    fn zero_weight_items_are_free() {
        let s = solve_knapsack(&items(&[(2, 0), (5, 3), (1, 0)]), 0);
        assert_eq!(s.chosen, vec![0, 2]);
        assert_eq!(s.total_value, 3);
    }

    #[test]
    fn float_values() {
        let its = vec![
            KnapsackItem { item_id: 0, value: 2.5f64, weight: 3 },
            KnapsackItem { item_id: 1, value: 1.25, weight: 2 },
            KnapsackItem { item_id: 2, value: 1.5, weight: 2 },
        ];
        let s = solve_knapsack(&its, 4);
        assert_eq!(s.chosen, vec![1, 2]);
        assert_eq!(s.total_value, 2.75);
    }

    #[test]
    fn common_divisor_is_factored_out() {
        let s = solve_knapsack(&items(&[(5, 100), (4, 200), (3, 300)]), 450);
        assert_eq!(s.chosen, vec![0, 1]);
        assert_eq!(s.table_cells, 3 * (4 + 1));
    }
}

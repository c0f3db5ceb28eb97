//! Performance indicators of a settled transaction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{InteractionCounts, ValidatedMarket};
use crate::spot::Trade;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("Conventional_S delivered zero service quality; RoSQ is undefined")]
    DivisionByZero,
}

/// Indicators for one method on one transaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub service_quality: f64,
    /// Undefined when Conventional_S delivered nothing on the same draw.
    pub rosq: Option<f64>,
    pub fodsq: f64,
    pub worker_utility: f64,
    /// Transaction-time interactions.
    pub ni: u64,
    /// Decision delay, ms.
    pub dip: f64,
    /// Decision energy, W·ms.
    pub ecip: f64,
    /// Interactions spent signing the futures contracts this transaction relies on.
    pub futures_ni: u64,
    pub futures_dip: f64,
    pub futures_ecip: f64,
    /// Wall clock of the decision phase, ms.
    pub running_time_ms: f64,
}

/// `(Σ_i quality_i, |{i : quality_i >= Q_i}| / |T|)`.
pub fn compute_quality_metrics(market: &ValidatedMarket, realized_quality: &[f64]) -> (f64, f64) {
    let total = realized_quality.iter().sum();
    if market.n_tasks() == 0 {
        return (total, 0.0);
    }
    let met = realized_quality
        .iter()
        .enumerate()
        .filter(|&(i, &q)| q >= market.task(i).desired_quality)
        .count();
    (total, met as f64 / market.n_tasks() as f64)
}

pub fn compute_rosq(method_quality: f64, conventional_s_quality: f64) -> Result<f64, MetricsError> {
    if conventional_s_quality <= 0.0 {
        return Err(MetricsError::DivisionByZero);
    }
    Ok(method_quality / conventional_s_quality)
}

/// `DIP = Σ N_ij (t^D + t^U)` and `ECIP = Σ N_ij (e^T t^D + e^W t^U)`.
pub fn compute_dip_ecip(market: &ValidatedMarket, counts: &InteractionCounts) -> (f64, f64) {
    let mut dip = 0.0;
    let mut ecip = 0.0;
    for i in 0..counts.n_tasks() {
        let e_t = market.task(i).tx_power;
        for j in 0..counts.n_workers() {
            let n = counts.get(i, j);
            if n == 0 {
                continue;
            }
            let pair = market.pair(i, j);
            let e_w = market.market().workers[j].tx_power;
            dip += n as f64 * (pair.downlink_latency + pair.uplink_latency);
            ecip += n as f64 * (e_t * pair.downlink_latency + e_w * pair.uplink_latency);
        }
    }
    (dip, ecip)
}

/// `Σ (p - c)` over executed trades, in currency.
pub fn compute_worker_utility(market: &ValidatedMarket, trades: &[Trade]) -> f64 {
    let margin: i64 = trades
        .iter()
        .map(|t| (t.payment - market.cost(t.task, t.worker)).0)
        .sum();
    market.to_currency(crate::model::Money(margin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{validate_market, Market, MarketConfig, Money};
    use crate::spot::TradeKind;

    fn three_tasks() -> ValidatedMarket {
        let m = Market {
            tasks: vec![task(30.0, 30.0), task(30.0, 30.0), task(30.0, 35.0)],
            workers: vec![worker(0.8)],
            pairs: vec![vec![pair(3.0, 3.0, 6.0)]; 3],
        };
        validate_market(m, MarketConfig::default()).unwrap()
    }

    #[test]
    fn quality_and_fodsq() {
        let m = three_tasks();
        let (total, fodsq) = compute_quality_metrics(&m, &[31.0, 29.0, 40.0]);
        assert_eq!(total, 100.0);
        assert!((fodsq - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(compute_quality_metrics(&m, &[0.0; 3]), (0.0, 0.0));
    }

    #[test]
    fn rosq_cases() {
        assert_eq!(compute_rosq(80.0, 100.0), Ok(0.8));
        assert_eq!(compute_rosq(5.0, 5.0), Ok(1.0));
        assert_eq!(compute_rosq(5.0, 0.0), Err(MetricsError::DivisionByZero));
    }

    #[test]
    fn dip_ecip_single_pair() {
        let mut p = pair(3.0, 3.0, 6.0);
        p.downlink_latency = 1.0;
        p.uplink_latency = 2.0;
        let m = Market { tasks: vec![task(30.0, 30.0)], workers: vec![worker(0.8)], pairs: vec![vec![p]] };
        let m = validate_market(m, MarketConfig::default()).unwrap();
        let mut n = InteractionCounts::new(1, 1);
        n.add(0, 0, 2);
        let (dip, ecip) = compute_dip_ecip(&m, &n);
        assert_eq!(dip, 6.0);
        assert!((ecip - 21.2).abs() < 1e-12);
    }

    #[test]
    fn worker_utility_single_trade() {
        let m = three_tasks();
        assert_eq!(compute_worker_utility(&m, &[]), 0.0);
        let t = Trade { task: 0, worker: 0, payment: Money(600), kind: TradeKind::Contract };
        assert_eq!(compute_worker_utility(&m, &[t]), 3.0);
    }
}

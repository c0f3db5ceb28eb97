//! Risk of an unsatisfying service quality: the deterministic surrogate the
//! futures mechanism screens with, and exact enumeration for comparison.

use thiserror::Error;

use crate::model::ValidatedMarket;

/// Largest worker set [`risk_exact`] will enumerate.
pub const MAX_EXACT_WORKERS: usize = 20;

const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RiskError {
    #[error("exact risk needs at most {MAX_EXACT_WORKERS} workers, got {size}")]
    SetTooLarge { size: usize },
}

/// Quality threshold `λ₁ Q_i` below which a task counts as unsatisfied.
pub fn quality_threshold(market: &ValidatedMarket, task: usize) -> f64 {
    let t = market.task(task);
    t.risk_scale * t.desired_quality
}

/// `Σ a_j q_ij / (λ₁ Q_i) >= 1 - λ₂`, inclusive at equality.
pub fn risk_surrogate(market: &ValidatedMarket, task: usize, workers: &[usize], risk_tolerance: f64) -> bool {
    let expected = crate::model::expected_quality(market, task, workers);
    let required = (1.0 - risk_tolerance) * quality_threshold(market, task);
    expected >= required - REL_TOL * required.abs().max(1.0)
}

fn enumerate<F>(market: &ValidatedMarket, task: usize, workers: &[usize], hit: F) -> Result<f64, RiskError>
where
    F: Fn(f64) -> bool,
{
    if workers.len() > MAX_EXACT_WORKERS {
        return Err(RiskError::SetTooLarge { size: workers.len() });
    }
    let probs: Vec<f64> = workers.iter().map(|&j| market.prob(j)).collect();
    let quals: Vec<f64> = workers.iter().map(|&j| market.quality(task, j)).collect();
    let mut total = 0.0;
    for mask in 0u32..(1u32 << workers.len()) {
        let mut p = 1.0;
        let mut q = 0.0;
        for k in 0..workers.len() {
            if mask >> k & 1 == 1 {
                p *= probs[k];
                q += quals[k];
            } else {
                p *= 1.0 - probs[k];
            }
        }
        if hit(q) {
            total += p;
        }
    }
    Ok(total)
}

/// Exact `Pr{Σ α_j q_ij <= λ₁ Q_i}` by enumerating all participation outcomes.
pub fn risk_exact(market: &ValidatedMarket, task: usize, workers: &[usize]) -> Result<f64, RiskError> {
    let threshold = quality_threshold(market, task);
    let tol = REL_TOL * threshold.max(1.0);
    enumerate(market, task, workers, |q| q <= threshold + tol)
}

/// Exact `Pr{Σ α_j q_ij >= λ₁ Q_i}`.
pub fn success_probability(market: &ValidatedMarket, task: usize, workers: &[usize]) -> Result<f64, RiskError> {
    let threshold = quality_threshold(market, task);
    let tol = REL_TOL * threshold.max(1.0);
    enumerate(market, task, workers, |q| q >= threshold - tol)
}

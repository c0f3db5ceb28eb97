use rand::Rng;
use thiserror::Error;

use super::spec::{Range, ScenarioSpec};
use crate::model::{seeded_stream, Market, PairData, Task, Worker};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("desired payments (max {p_max}) can never cover costs (min {c_min})")]
    InfeasibleRanges { p_max: String, c_min: String },
}

fn sample<R: Rng + ?Sized>(rng: &mut R, r: Range) -> f64 {
    if r.min == r.max {
        r.min
    } else {
        rng.gen_range(r.min..=r.max)
    }
}

fn round_to(x: f64, resolution: f64) -> f64 {
    let k = (x / resolution).round();
    // Printing through the resolution's decimal digits keeps values like 0.1 * 63 tidy.
    let digits = (-resolution.log10()).ceil().max(0.0) as usize;
    format!("{:.*}", digits, k * resolution).parse().unwrap_or(k * resolution)
}

fn check_ranges(spec: &ScenarioSpec) -> Result<(), GenerateError> {
    if spec.desired_payment.max < spec.cost.min {
        return Err(GenerateError::InfeasibleRanges {
            p_max: spec.desired_payment.max.to_string(),
            c_min: spec.cost.min.to_string(),
        });
    }
    Ok(())
}

/// Samples a market uniformly from the spec's ranges using `rng`.
///
/// Draw order is fixed: tasks, then workers, then pairs in row-major order.
/// Currency amounts are rounded to `currency_resolution`; a desired payment
/// below its pair's cost is raised to the cost.
pub fn generate_market_with<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<Market, GenerateError> {
    check_ranges(spec)?;
    let res = spec.currency_resolution;
    let tasks = (0..spec.n_tasks)
        .map(|_| Task {
            budget: round_to(sample(rng, spec.budget), res),
            desired_quality: sample(rng, spec.desired_quality),
            risk_scale: sample(rng, spec.risk_scale),
            tx_power: sample(rng, spec.task_power),
        })
        .collect();
    let workers = (0..spec.n_workers)
        .map(|_| Worker {
            participation_prob: sample(rng, spec.participation),
            tx_power: sample(rng, spec.worker_power),
        })
        .collect();
    let pairs = (0..spec.n_tasks)
        .map(|_| {
            (0..spec.n_workers)
                .map(|_| {
                    let quality = sample(rng, spec.quality);
                    let cost = round_to(sample(rng, spec.cost), res);
                    let desired = round_to(sample(rng, spec.desired_payment), res).max(cost);
                    PairData {
                        quality,
                        cost,
                        desired_payment: desired,
                        uplink_latency: sample(rng, spec.uplink_latency),
                        downlink_latency: sample(rng, spec.downlink_latency),
                    }
                })
                .collect()
        })
        .collect();
    Ok(Market { tasks, workers, pairs })
}

/// Stream reserved for the shared market of an experiment.
pub const MARKET_STREAM: u64 = 0;

pub fn generate_market(spec: &ScenarioSpec, seed: u64) -> Result<Market, GenerateError> {
    generate_market_with(spec, &mut seeded_stream(seed, MARKET_STREAM))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_clean() {
        assert_eq!(round_to(6.349, 0.1), 6.3);
        assert_eq!(round_to(6.35001, 0.1), 6.4);
        assert_eq!(round_to(7.0, 0.01), 7.0);
        assert_eq!(round_to(2.6, 1.0), 3.0);
    }

    #[test]
    fn infeasible_ranges() {
        let mut s = ScenarioSpec::with_size(1, 1);
        s.cost = Range::new(11.0, 12.0);
        assert!(matches!(generate_market(&s, 1), Err(GenerateError::InfeasibleRanges { .. })));
    }
}

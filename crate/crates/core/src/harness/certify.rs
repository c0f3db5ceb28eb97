use rand::Rng;
use serde::{Deserialize, Serialize};

use super::experiment::EngineError;
use super::generate::generate_market_with;
use super::spec::ScenarioSpec;
use crate::futures::run_oia3m;
use crate::model::{draw_participation, seeded_stream, validate_market};
use crate::spot::{realize_transaction, run_o3m, run_omom, settle};
use crate::stability::{
    certify_futures, certify_o3m, certify_omom, check_ir_settlement, futures_views, o3m_views, omom_views,
    verify_witness, IrViolation, Mechanism, StabilityBounds, StabilityError, StabilityReport, Witness,
};

/// Deliberate defects for exercising the certification pipeline itself.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// O3M recruits are discarded before certification.
    DropSpotRecruits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub instance: usize,
    pub n_tasks: usize,
    pub n_workers: usize,
    pub reports: Vec<StabilityReport>,
    pub settlement_violations: Vec<IrViolation>,
    /// Witnesses whose independent re-check failed.
    pub unverified_witnesses: Vec<Witness>,
}

impl InstanceReport {
    pub fn witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.reports
            .iter()
            .flat_map(|r| r.type1_blocking.iter().chain(r.type2_blocking.iter()))
    }

    pub fn is_clean(&self) -> bool {
        self.reports.iter().all(|r| r.certified_strongly_stable) && self.settlement_violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub instances: Vec<InstanceReport>,
}

impl CampaignReport {
    pub fn witness_count(&self) -> usize {
        self.instances.iter().map(|i| i.witnesses().count()).sum()
    }

    pub fn is_clean(&self) -> bool {
        self.instances.iter().all(InstanceReport::is_clean)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

/// Certifies OIA3M, OMOM and O3M on `instances` random markets.
///
/// Instance `k` uses stream `k` of `seed`: its size is uniform in
/// `1..=max_tasks` x `1..=max_workers`, its values come from `ranges`, and one
/// participation draw feeds the spot mechanisms.
pub fn run_stability_campaign(
    ranges: &ScenarioSpec,
    instances: usize,
    bounds: &StabilityBounds,
    seed: u64,
    fault: Option<Fault>,
) -> Result<CampaignReport, CampaignError> {
    let mut out = Vec::with_capacity(instances);
    for k in 0..instances {
        let mut rng = seeded_stream(seed, k as u64);
        let mut spec = ranges.clone();
        spec.n_tasks = rng.gen_range(1..=bounds.max_tasks.max(1));
        spec.n_workers = rng.gen_range(1..=bounds.max_workers.max(1));
        let market = generate_market_with(&spec, &mut rng).map_err(EngineError::from)?;
        let market = validate_market(market, spec.market_config()).map_err(EngineError::Validation)?;
        let futures = run_oia3m(&market).map_err(EngineError::from)?;
        let draw = draw_participation(&market, &mut rng);
        let partition = realize_transaction(&market, &futures, &draw);
        let omom = partition
            .over_budget
            .iter()
            .map(|&i| run_omom(&market, i, &partition.present_long_term[i]))
            .collect::<Result<Vec<_>, _>>()
            .map_err(EngineError::from)?;
        let mut o3m = run_o3m(&market, &futures, &partition).map_err(EngineError::from)?;
        if fault == Some(Fault::DropSpotRecruits) {
            o3m.recruited.iter_mut().for_each(Vec::clear);
            o3m.payments.clear();
        }
        let settled = settle(&market, &futures, &partition, &omom, &o3m)
            .map_err(|e| EngineError::Hybrid(e.into()))?;

        let reports = vec![
            certify_futures(&market, &futures, bounds)?,
            certify_omom(&market, &omom, &partition, bounds)?,
            certify_o3m(&market, &futures, &partition, &o3m, bounds)?,
        ];
        let mut unverified = Vec::new();
        for r in &reports {
            let views = match r.mechanism {
                Mechanism::Futures => futures_views(&market, &futures),
                Mechanism::Omom => omom_views(&omom, &partition, &market),
                Mechanism::O3m => o3m_views(&futures, &partition, &o3m),
            };
            for w in r.type1_blocking.iter().chain(r.type2_blocking.iter()) {
                if !verify_witness(&market, &views, w) {
                    unverified.push(w.clone());
                }
            }
        }
        out.push(InstanceReport {
            instance: k,
            n_tasks: spec.n_tasks,
            n_workers: spec.n_workers,
            reports,
            settlement_violations: check_ir_settlement(&market, &futures, &partition, &settled),
            unverified_witnesses: unverified,
        });
    }
    Ok(CampaignReport { instances: out })
}

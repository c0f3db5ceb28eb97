//! Scenario generation, trip ingestion and the Monte Carlo experiment driver.

pub mod certify;
pub mod experiment;
pub mod generate;
pub mod ingest;
pub mod io;
pub mod spec;

pub use experiment::{
    prepare, run_experiment, run_experiment_on, run_trial, sweep, trial_stream, EngineError, ExperimentResult, MethodRun,
    PreparedMarket, SweepParameter, TrialOutcome,
};
pub use generate::{generate_market, generate_market_with, GenerateError};
pub use ingest::{ingest_trips, read_trips, IngestError, TripRecord};
pub use spec::{parse_spec, Method, Range, ScenarioSpec, SpecError};
pub use certify::{run_stability_campaign, CampaignReport, InstanceReport};

//! Hybrid futures/spot matching for mobile crowdsensing.
//!
//! Tasks sign overbooked long-term contracts with workers in a futures
//! market ([`futures::run_oia3m`]); at each transaction the realized
//! participation is repaired on a spot market ([`spot::run_spot_phase`]).
//! The [`harness`] reproduces comparative experiments against the
//! [`baselines`], and [`stability`] certifies small outcomes by exhaustive
//! search.

pub mod knapsack;
pub mod matching;
pub mod model;
pub mod risk;
pub mod futures;
pub mod spot;
pub mod baselines;
pub mod stability;
pub mod metrics;
pub mod harness;

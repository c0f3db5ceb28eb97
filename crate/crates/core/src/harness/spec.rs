use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::MarketConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Hybrid,
    ConventionalS,
    ConventionalF,
    QualityP,
    RandomM,
    Negotiation,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Hybrid,
        Method::ConventionalS,
        Method::ConventionalF,
        Method::QualityP,
        Method::RandomM,
        Method::Negotiation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Hybrid => "hybrid",
            Method::ConventionalS => "conventional_s",
            Method::ConventionalF => "conventional_f",
            Method::QualityP => "quality_p",
            Method::RandomM => "random_m",
            Method::Negotiation => "negotiation",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| format!("unknown method `{}`", s.trim()))
    }
}

/// Parses a comma-separated method list, keeping the canonical order and dropping duplicates.
pub fn parse_methods(s: &str) -> Result<Vec<Method>, String> {
    let mut out: Vec<Method> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err("method list is empty".into());
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Closed sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Range {
        Range { min, max }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.min <= x && x <= self.max
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n_tasks: usize,
    pub n_workers: usize,
    pub cost: Range,
    pub desired_payment: Range,
    pub quality: Range,
    pub budget: Range,
    pub desired_quality: Range,
    pub participation: Range,
    pub risk_scale: Range,
    pub uplink_latency: Range,
    pub downlink_latency: Range,
    pub worker_power: Range,
    pub task_power: Range,
    pub risk_tolerance: f64,
    pub overbooking_rate: f64,
    pub payment_step: f64,
    /// Generated currency amounts are rounded to this resolution.
    pub currency_resolution: f64,
    pub money_scale: i64,
    pub max_rounds_cap: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    /// Draw a fresh market for every trial instead of reusing one.
    pub resample_market: bool,
}

impl ScenarioSpec {
    /// Default parameter ranges for the given market size.
    pub fn with_size(n_tasks: usize, n_workers: usize) -> ScenarioSpec {
        ScenarioSpec {
            n_tasks,
            n_workers,
            cost: Range::new(3.0, 6.0),
            desired_payment: Range::new(6.0, 10.0),
            quality: Range::new(1.0, 5.0),
            budget: Range::new(30.0, 50.0),
            desired_quality: Range::new(30.0, 35.0),
            participation: Range::new(0.6452, 0.9677),
            risk_scale: Range::new(1.0, 1.05),
            uplink_latency: Range::new(0.5, 11.0),
            downlink_latency: Range::new(0.5, 4.0),
            worker_power: Range::new(0.2, 0.4),
            task_power: Range::new(6.0, 20.0),
            risk_tolerance: 0.2,
            overbooking_rate: 0.2,
            payment_step: 1.0,
            currency_resolution: 0.1,
            money_scale: 100,
            max_rounds_cap: 10_000,
            trials: 200,
            master_seed: 0,
            methods: Method::ALL.to_vec(),
            resample_market: false,
        }
    }

    pub fn market_config(&self) -> MarketConfig {
        MarketConfig {
            overbooking_rate: self.overbooking_rate,
            payment_step: self.payment_step,
            step_overrides: Default::default(),
            risk_tolerance: self.risk_tolerance,
            money_scale: self.money_scale,
            max_rounds_cap: self.max_rounds_cap,
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let ranges = [
            ("cost", self.cost),
            ("desired_payment", self.desired_payment),
            ("quality", self.quality),
            ("budget", self.budget),
            ("desired_quality", self.desired_quality),
            ("participation", self.participation),
            ("risk_scale", self.risk_scale),
            ("uplink_latency", self.uplink_latency),
            ("downlink_latency", self.downlink_latency),
            ("worker_power", self.worker_power),
            ("task_power", self.task_power),
        ];
        for (key, r) in ranges {
            if !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max && r.min > 0.0) {
                return Err(SpecError::invalid(key, format!("range {r} must be positive and ordered")));
            }
        }
        if self.participation.max > 1.0 {
            return Err(SpecError::invalid("participation", "probabilities must not exceed 1"));
        }
        if self.risk_scale.min < 1.0 {
            return Err(SpecError::invalid("risk_scale", "must be at least 1"));
        }
        if !(self.risk_tolerance > 0.0 && self.risk_tolerance <= 1.0) {
            return Err(SpecError::invalid("risk_tolerance", "must lie in (0, 1]"));
        }
        if !(self.overbooking_rate >= 0.0 && self.overbooking_rate.is_finite()) {
            return Err(SpecError::invalid("overbooking_rate", "must be non-negative"));
        }
        if !(self.payment_step > 0.0 && self.payment_step.is_finite()) {
            return Err(SpecError::invalid("payment_step", "must be positive"));
        }
        if !(self.currency_resolution > 0.0 && self.currency_resolution.is_finite()) {
            return Err(SpecError::invalid("currency_resolution", "must be positive"));
        }
        if self.money_scale < 1 {
            return Err(SpecError::invalid("money_scale", "must be at least 1"));
        }
        if self.max_rounds_cap < 1 {
            return Err(SpecError::invalid("max_rounds_cap", "must be at least 1"));
        }
        if self.trials < 1 {
            return Err(SpecError::invalid("trials", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(SpecError::invalid("methods", "at least one method is required"));
        }
        Ok(())
    }

    /// Renders the spec in the key-value format accepted by [`parse_spec`].
    pub fn to_text(&self) -> String {
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        format!(
            "n_tasks = {}\nn_workers = {}\ncost = {}\ndesired_payment = {}\nquality = {}\nbudget = {}\n\
             desired_quality = {}\nparticipation = {}\nrisk_scale = {}\nuplink_latency = {}\n\
             downlink_latency = {}\nworker_power = {}\ntask_power = {}\nrisk_tolerance = {}\n\
             overbooking_rate = {}\npayment_step = {}\ncurrency_resolution = {}\nmoney_scale = {}\n\
             max_rounds_cap = {}\ntrials = {}\nmaster_seed = {}\nmethods = {}\nresample_market = {}\n",
            self.n_tasks,
            self.n_workers,
            self.cost,
            self.desired_payment,
            self.quality,
            self.budget,
            self.desired_quality,
            self.participation,
            self.risk_scale,
            self.uplink_latency,
            self.downlink_latency,
            self.worker_power,
            self.task_power,
            self.risk_tolerance,
            self.overbooking_rate,
            self.payment_step,
            self.currency_resolution,
            self.money_scale,
            self.max_rounds_cap,
            self.trials,
            self.master_seed,
            methods.join(","),
            self.resample_market,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {reason}")]
    BadValue { line: usize, key: String, reason: String },
    #[error("missing required key `{key}`")]
    MissingKey { key: String },
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

impl SpecError {
    fn invalid(key: &str, reason: impl Into<String>) -> SpecError {
        SpecError::Invalid { key: key.into(), reason: reason.into() }
    }
}

fn parse_range(v: &str) -> Result<Range, String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok(Range::new(
            a.parse().map_err(|e| format!("{e}"))?,
            b.parse().map_err(|e| format!("{e}"))?,
        )),
        [a] => {
            let x = a.parse().map_err(|e| format!("{e}"))?;
            Ok(Range::new(x, x))
        }
        _ => Err("expected `min,max`".into()),
    }
}

fn parse_num<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse().map_err(|e: T::Err| e.to_string())
}

/// Parses the flat `key = value` scenario format. `#` starts a comment.
/// `n_tasks` and `n_workers` are required; everything else defaults to
/// the ranges of [`ScenarioSpec::with_size`].
pub fn parse_spec(text: &str) -> Result<ScenarioSpec, SpecError> {
    let mut spec = ScenarioSpec::with_size(0, 0);
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(SpecError::Syntax { line });
        };
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(SpecError::DuplicateKey { line, key: key.into() });
        }
        let bad = |reason: String| SpecError::BadValue { line, key: key.into(), reason };
        match key {
            "n_tasks" => spec.n_tasks = parse_num(value).map_err(bad)?,
            "n_workers" => spec.n_workers = parse_num(value).map_err(bad)?,
            "cost" => spec.cost = parse_range(value).map_err(bad)?,
            "desired_payment" => spec.desired_payment = parse_range(value).map_err(bad)?,
            "quality" => spec.quality = parse_range(value).map_err(bad)?,
            "budget" => spec.budget = parse_range(value).map_err(bad)?,
            "desired_quality" => spec.desired_quality = parse_range(value).map_err(bad)?,
            "participation" => spec.participation = parse_range(value).map_err(bad)?,
            "risk_scale" => spec.risk_scale = parse_range(value).map_err(bad)?,
            "uplink_latency" => spec.uplink_latency = parse_range(value).map_err(bad)?,
            "downlink_latency" => spec.downlink_latency = parse_range(value).map_err(bad)?,
            "worker_power" => spec.worker_power = parse_range(value).map_err(bad)?,
            "task_power" => spec.task_power = parse_range(value).map_err(bad)?,
            "risk_tolerance" => spec.risk_tolerance = parse_num(value).map_err(bad)?,
            "overbooking_rate" => spec.overbooking_rate = parse_num(value).map_err(bad)?,
            "payment_step" => spec.payment_step = parse_num(value).map_err(bad)?,
            "currency_resolution" => spec.currency_resolution = parse_num(value).map_err(bad)?,
            "money_scale" => spec.money_scale = parse_num(value).map_err(bad)?,
            "max_rounds_cap" => spec.max_rounds_cap = parse_num(value).map_err(bad)?,
            "trials" => spec.trials = parse_num(value).map_err(bad)?,
            "master_seed" => spec.master_seed = parse_num(value).map_err(bad)?,
            "methods" => spec.methods = parse_methods(value).map_err(bad)?,
            "resample_market" => spec.resample_market = parse_num(value).map_err(bad)?,
            _ => return Err(SpecError::UnknownKey { line, key: key.into() }),
        }
        seen.push(key.to_string());
    }
    for key in ["n_tasks", "n_workers"] {
        if !seen.iter().any(|k| k == key) {
            return Err(SpecError::MissingKey { key: key.into() });
        }
    }
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_spec_uses_defaults() {
        let s = parse_spec("n_tasks = 3\nn_workers = 5 # small\n").unwrap();
        assert_eq!(s, ScenarioSpec::with_size(3, 5));
    }

    #[test]
    fn round_trips_through_text() {
        let mut s = ScenarioSpec::with_size(4, 9);
        s.methods = vec![Method::Hybrid, Method::Negotiation];
        s.overbooking_rate = 0.15;
        s.master_seed = 99;
        assert_eq!(parse_spec(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn errors_name_the_problem() {
        assert_eq!(
            parse_spec("n_tasks = 3\n"),
            Err(SpecError::MissingKey { key: "n_workers".into() })
        );
        assert_eq!(
            parse_spec("n_tasks = 3\nn_workers = 2\ncolour = red\n"),
            Err(SpecError::UnknownKey { line: 3, key: "colour".into() })
        );
        assert!(matches!(
            parse_spec("n_tasks = x\nn_workers = 2\n"),
            Err(SpecError::BadValue { line: 1, .. })
        ));
        assert!(matches!(parse_spec("n_tasks 3\n"), Err(SpecError::Syntax { line: 1 })));
        assert!(matches!(
            parse_spec("n_tasks = 3\nn_workers = 2\ntrials = 0\n"),
            Err(SpecError::Invalid { .. })
        ));
        assert!(matches!(
            parse_spec("n_tasks = 3\nn_workers = 2\ncost = 6,3\n"),
            Err(SpecError::Invalid { .. })
        ));
    }

    #[test]
    fn method_lists() {
        assert_eq!(
            parse_methods("conventional_s,hybrid,hybrid").unwrap(),
            vec![Method::Hybrid, Method::ConventionalS]
        );
        assert!(parse_methods("hybrid,bogus").is_err());
    }
}

//! Scenario configuration: the environment of resource sites, the built-in
//! presets and the JSON scenario file format.
//!
//! ```json
//! {
//!   "sites": [{ "label": "site1", "m0": 1.0 }, { "label": "site2", "m0": 2.0 }],
//!   "r_off": 100.0,
//!   "beta": 1.0,
//!   "supply_v": 5.0,
//!   "dt": 0.001,
//!   "max_steps": 10000000
//! }
//! ```
//!
//! `dt` and `max_steps` are optional.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::{RunOptions, SimulationState, SimulationTrace};
use crate::error::{Error, Result};
use crate::memristor::{MemristorParams, MemristorState};
use crate::strategy::{Strategy, StrategySchedule};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

pub const PRESET_NAMES: [&str; 2] = ["rich", "poor"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteSpec {
    pub label: String,
    /// Initial memristance; lower means a richer, closer site.
    pub m0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    pub sites: Vec<SiteSpec>,
    pub r_off: f64,
    pub beta: f64,
    pub supply_v: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_max_steps() -> u64 {
    DEFAULT_MAX_STEPS
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidField { field: field.into(), reason: reason.into() }
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        if self.sites.is_empty() {
            return Err(invalid("sites", "at least one site is required"));
        }
        if !(self.r_off.is_finite() && self.r_off > 0.0) {
            return Err(invalid("r_off", format!("must be positive, got {}", self.r_off)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(invalid("beta", format!("must be positive, got {}", self.beta)));
        }
        if !(self.supply_v.is_finite() && self.supply_v > 0.0) {
            return Err(invalid("supply_v", format!("must be positive, got {}", self.supply_v)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.max_steps < 1 {
            return Err(invalid("max_steps", "must be at least 1"));
        }
        let mut labels = std::collections::BTreeSet::new();
        for (i, site) in self.sites.iter().enumerate() {
            if site.label.is_empty() || site.label.contains([',', '"', '\n', '\r']) {
                return Err(invalid(
                    format!("sites[{i}].label"),
                    "must be non-empty and free of commas, quotes and newlines",
                ));
            }
            if !labels.insert(site.label.as_str()) {
                return Err(invalid(format!("sites[{i}].label"), format!("duplicate label `{}`", site.label)));
            }
            if !(site.m0.is_finite() && site.m0 > 0.0 && site.m0 <= self.r_off) {
                return Err(invalid(
                    format!("sites[{i}].m0"),
                    format!("must satisfy 0 < m0 <= r_off ({}), got {}", self.r_off, site.m0),
                ));
            }
        }
        Ok(())
    }

    pub fn initial_memristances(&self) -> Vec<f64> {
        self.sites.iter().map(|s| s.m0).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.sites.iter().map(|s| s.label.clone()).collect()
    }

    pub fn params(&self) -> Vec<MemristorParams> {
        self.sites
            .iter()
            .map(|s| MemristorParams { r_on: s.m0, r_off: self.r_off, beta: self.beta })
            .collect()
    }

    pub fn initial_states(&self) -> Vec<MemristorState> {
        self.sites
            .iter()
            .zip(self.params())
            .map(|(s, p)| MemristorState::new(s.label.clone(), p))
            .collect()
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions { dt: self.dt, max_steps: self.max_steps, record_every: 1 }
    }

    /// Same environment with the supply multiplied by `factor` and the time
    /// step divided by it.
    pub fn scaled_supply(&self, factor: f64) -> Self {
        Self { supply_v: self.supply_v * factor, dt: self.dt / factor, ..self.clone() }
    }

    /// Builds the initial state and schedule for `strategy` and runs it.
    pub fn simulate(&self, strategy: Strategy, options: &RunOptions) -> Result<SimulationTrace> {
        self.validate()?;
        let mut schedule = StrategySchedule::new(strategy, &self.initial_memristances())?;
        let state = SimulationState::new(self.initial_states(), self.supply_v, schedule.topology().clone())?;
        crate::circuit::run(state, &mut schedule, options)
    }
}

fn labelled(m0: &[f64]) -> Vec<SiteSpec> {
    m0.iter()
        .enumerate()
        .map(|(i, &m0)| SiteSpec { label: format!("site{}", i + 1), m0 })
        .collect()
}

/// Built-in environments: `rich` (five good sites of similar quality) and
/// `poor` (one very good site, four poor ones).
pub fn preset(name: &str) -> Result<Environment> {
    let m0: &[f64] = match name {
        "rich" => &[1.0, 2.0, 0.5, 15.0, 4.0],
        "poor" => &[0.5, 60.0, 70.0, 80.0, 90.0],
        _ => {
            return Err(Error::UnknownPreset { name: name.to_string(), valid: PRESET_NAMES.join(", ") });
        }
    };
    Ok(Environment {
        sites: labelled(m0),
        r_off: 100.0,
        beta: 1.0,
        supply_v: 5.0,
        dt: DEFAULT_DT,
        max_steps: DEFAULT_MAX_STEPS,
    })
}

/// Name of the preset whose sites and device constants `env` reproduces.
/// Site order, supply and step size are ignored.
pub fn matching_preset(env: &Environment) -> Option<&'static str> {
    let mut m0 = env.initial_memristances();
    m0.sort_by(f64::total_cmp);
    PRESET_NAMES.into_iter().find(|name| {
        let p = preset(name).expect("built-in preset");
        let mut pm = p.initial_memristances();
        pm.sort_by(f64::total_cmp);
        pm == m0 && p.r_off == env.r_off && p.beta == env.beta
    })
}

pub fn parse_scenario(text: &str) -> std::result::Result<Environment, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Environment> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let env = parse_scenario(&text).map_err(|source| Error::Json { path: path.into(), source })?;
    env.validate()?;
    Ok(env)
}

pub fn save_scenario(env: &Environment, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(env).map_err(|source| Error::Json { path: path.into(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_published_values() {
        let rich = preset("rich").unwrap();
        assert_eq!(rich.initial_memristances(), vec![1.0, 2.0, 0.5, 15.0, 4.0]);
        assert_eq!(rich.initial_memristances().iter().sum::<f64>(), 22.5);
        let poor = preset("poor").unwrap();
        assert_eq!(poor.initial_memristances(), vec![0.5, 60.0, 70.0, 80.0, 90.0]);
        for env in [rich, poor] {
            assert_eq!((env.r_off, env.beta, env.supply_v, env.dt), (100.0, 1.0, 5.0, 1e-3));
            assert_eq!(env.max_steps, 10_000_000);
            env.validate().unwrap();
        }
    }

    #[test]
    fn unknown_preset_lists_valid_names() {
        let err = preset("unknown").unwrap_err();
        assert!(err.to_string().contains("rich, poor"), "{err}");
    }

    #[test]
    fn missing_dt_gets_default() {
        let env = parse_scenario(r#"{"sites":[{"label":"a","m0":3}],"r_off":100,"beta":1,"supply_v":5}"#).unwrap();
        assert_eq!(env.dt, DEFAULT_DT);
        assert_eq!(env.max_steps, DEFAULT_MAX_STEPS);
    }

    #[test]
    fn out_of_range_m0_names_the_field() {
        let mut env = preset("rich").unwrap();
        env.sites[2].m0 = 150.0;
        match env.validate() {
            Err(Error::InvalidField { field, .. }) => assert_eq!(field, "sites[2].m0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_and_unsafe_labels() {
        let mut env = preset("rich").unwrap();
        env.sites[1].label = "site1".into();
        assert!(env.validate().is_err());
        env.sites[1].label = "a,b".into();
        assert!(env.validate().is_err());
    }

    #[test]
    fn preset_matching_ignores_order_and_supply() {
        let mut env = preset("poor").unwrap();
        env.sites.reverse();
        env.supply_v = 10.0;
        assert_eq!(matching_preset(&env), Some("poor"));
        env.sites[0].m0 = 89.0;
        assert_eq!(matching_preset(&env), None);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(parse_scenario(r#"{"sites":[],"r_off":100,"beta":1,"supply_v":5,"dtt":1}"#).is_err());
    }
}

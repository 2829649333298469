//! Engine-versus-oracle harness: runs each strategy at `dt` and `dt / 2`,
//! compares interpolated depletion times with the closed form and checks
//! first-order convergence.

use serde::{Deserialize, Serialize};

use crate::circuit::SimulationTrace;
use crate::error::Result;
use crate::oracle::strategy_oracle_time;
use crate::scenario::Environment;
use crate::strategy::Strategy;

pub const DEFAULT_REL_TOL: f64 = 0.005;
pub const DEFAULT_RATIO_RANGE: (f64, f64) = (0.3, 0.7);
pub const SCALING_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative error bound on every depletion time at the base `dt`.
    pub rel_tol: f64,
    /// Admissible `err(dt/2) / err(dt)`.
    pub ratio_range: (f64, f64),
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel_tol: DEFAULT_REL_TOL, ratio_range: DEFAULT_RATIO_RANGE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationCase {
    pub environment: String,
    pub strategy: String,
    pub dt: f64,
    pub oracle_total: f64,
    pub engine_total: Option<f64>,
    pub engine_total_half: Option<f64>,
    pub abs_error: f64,
    pub abs_error_half: f64,
    /// Largest relative error over per-site depletion times at `dt`.
    pub max_site_rel_error: f64,
    pub halving_ratio: f64,
    pub within_tolerance: bool,
    pub converges: bool,
}

impl ValidationCase {
    pub fn passed(&self) -> bool {
        self.within_tolerance && self.converges
    }
}

fn site_errors(trace: &SimulationTrace, oracle_sites: &[f64]) -> f64 {
    trace
        .site_depletion_times()
        .iter()
        .zip(oracle_sites)
        .map(|(t, &o)| match t {
            Some(t) if o > 0.0 => (t - o).abs() / o,
            Some(t) => t.abs(),
            None => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

pub fn validate_case(
    name: &str,
    env: &Environment,
    strategy: Strategy,
    dt: f64,
    tol: &Tolerances,
) -> Result<ValidationCase> {
    let oracle = strategy_oracle_time(env, strategy)?;
    let base = crate::circuit::RunOptions { dt, ..env.run_options() };
    let half = crate::circuit::RunOptions { dt: dt / 2.0, max_steps: base.max_steps.saturating_mul(2), ..base };
    let (coarse, fine) = std::thread::scope(|s| {
        let a = s.spawn(|| env.simulate(strategy, &base));
        let b = s.spawn(|| env.simulate(strategy, &half));
        (a.join().expect("simulation thread panicked"), b.join().expect("simulation thread panicked"))
    });
    let (coarse, fine) = (coarse?, fine?);
    let engine_total = coarse.depletion_time();
    let engine_total_half = fine.depletion_time();
    let err = |t: Option<f64>| t.map_or(f64::INFINITY, |t| (t - oracle.total).abs());
    let abs_error = err(engine_total);
    let abs_error_half = err(engine_total_half);
    let max_site_rel_error = site_errors(&coarse, &oracle.site_times);
    let halving_ratio = abs_error_half / abs_error;
    let rel_total = if oracle.total > 0.0 { abs_error / oracle.total } else { abs_error };
    Ok(ValidationCase {
        environment: name.to_string(),
        strategy: strategy.display_name(),
        dt,
        oracle_total: oracle.total,
        engine_total,
        engine_total_half,
        abs_error,
        abs_error_half,
        max_site_rel_error,
        halving_ratio,
        within_tolerance: rel_total <= tol.rel_tol && max_site_rel_error <= tol.rel_tol,
        converges: halving_ratio >= tol.ratio_range.0 && halving_ratio <= tol.ratio_range.1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub environment: String,
    pub strategy: String,
    pub factor: f64,
    pub max_rel_deviation: f64,
    pub passed: bool,
}

/// Multiplies the supply by `factor` and divides `dt` by it; every
/// interpolated depletion time must shrink by exactly `factor`.
pub fn check_supply_scaling(name: &str, env: &Environment, strategy: Strategy, factor: f64) -> Result<ScalingCheck> {
    let base = env.simulate(strategy, &env.run_options())?;
    let scaled_env = env.scaled_supply(factor);
    let options = crate::circuit::RunOptions {
        max_steps: scaled_env.max_steps.saturating_mul(factor.ceil() as u64),
        ..scaled_env.run_options()
    };
    let scaled = scaled_env.simulate(strategy, &options)?;
    let max_rel_deviation = base
        .site_depletion_times()
        .iter()
        .zip(scaled.site_depletion_times())
        .map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) if *a > 0.0 => (b * factor - a).abs() / a,
            (Some(a), Some(b)) => (b * factor - a).abs(),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    Ok(ScalingCheck {
        environment: name.to_string(),
        strategy: strategy.display_name(),
        factor,
        max_rel_deviation,
        passed: max_rel_deviation <= SCALING_REL_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub cases: Vec<ValidationCase>,
    pub scaling: Vec<ScalingCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(ValidationCase::passed) && self.scaling.iter().all(|s| s.passed)
    }
}

/// Every environment × strategy (Sequential in both modes).
pub fn validate_all(
    environments: &[(String, Environment)],
    dt: f64,
    tol: &Tolerances,
    scaling_factor: Option<f64>,
) -> Result<ValidationReport> {
    let jobs: Vec<(&str, &Environment, Strategy)> = environments
        .iter()
        .flat_map(|(name, env)| Strategy::ALL.into_iter().map(move |s| (name.as_str(), env, s)))
        .collect();
    let cases = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(name, env, strategy)| scope.spawn(move || validate_case(name, env, strategy, dt, tol)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("validation thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    let scaling = match scaling_factor {
        Some(factor) => jobs
            .iter()
            .map(|&(name, env, strategy)| {
                let env = Environment { dt, ..env.clone() };
                check_supply_scaling(name, &env, strategy, factor)
            })
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    Ok(ValidationReport { cases, scaling })
}

//! Gatherer allocation across known resource sites, modelled as a network
//! of boundary-clamped memristors.
//!
//! Each resource site is a memristor whose memristance rises with the
//! charge drawn through it until it saturates at `r_off` (the site is
//! depleted). The supply voltage stands for the available gatherers and the
//! total current for the rate at which resource reaches the nest. Three
//! gathering strategies decide how sites are wired over time:
//!
//! - **All Sites**: every site in one series branch.
//! - **Sequential**: one site at a time, richest first.
//! - **Leafcutter**: the richest site alone, then All Sites on the rest.
//!
//! [`circuit`] integrates the dynamics numerically and [`oracle`] gives the
//! exact piecewise solution used to validate it.

pub mod circuit;
pub mod error;
pub mod io;
pub mod memristor;
pub mod metrics;
pub mod oracle;
pub mod scenario;
pub mod strategy;
pub mod validation;

pub use circuit::{
    allocation_share, branch_current, run, step, voltages_across, DepletionEvent, RunOptions, RunStatus,
    SimulationState, SimulationTrace, StepRecord, Topology,
};
pub use error::{Error, Result};
pub use memristor::{MemristorParams, MemristorState};
pub use metrics::{compare, cumulative_fraction, influx, time_to_fraction, Comparison, StrategySummary, Verdict};
pub use oracle::{series_depletion_plan, series_phase_time, strategy_oracle_time, OracleTimes, PhasePlan};
pub use scenario::{load_scenario, preset, save_scenario, Environment, SiteSpec};
pub use strategy::{SequentialMode, Strategy, StrategyKind, StrategySchedule};

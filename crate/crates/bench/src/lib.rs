//! Fixtures shared by the engine benchmarks.

use memforage::circuit::{SimulationState, Topology};
use memforage::scenario::{preset, Environment, SiteSpec};
use memforage::strategy::{Strategy, StrategySchedule};

/// A built-in environment by name. Panics on an unknown name.
pub fn environment(name: &str) -> Environment {
    preset(name).expect("built-in preset")
}

/// `n` sites with initial memristances spread over `[0.5, 95]`, in an
/// interleaved order so richness sorting has work to do.
pub fn wide_environment(n: usize) -> Environment {
    let sites = (0..n)
        .map(|i| {
            let k = (i * 7919) % n;
            let m0 = 0.5 + 94.5 * k as f64 / n.max(2).saturating_sub(1) as f64;
            SiteSpec { label: format!("s{i}"), m0 }
        })
        .collect();
    Environment { sites, ..environment("rich") }
}

/// Initial engine state and schedule for `strategy` on `env`.
pub fn initial(env: &Environment, strategy: Strategy) -> (SimulationState, StrategySchedule) {
    let schedule = StrategySchedule::new(strategy, &env.initial_memristances()).expect("valid schedule");
    let topology: Topology = schedule.topology().clone();
    let state = SimulationState::new(env.initial_states(), env.supply_v, topology).expect("valid state");
    (state, schedule)
}

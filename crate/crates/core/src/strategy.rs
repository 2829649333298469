//! Gathering strategies as event-driven wiring schedules.
//!
//! A schedule maps the set of depleted sites to the topology the engine
//! should use. Richness order is ascending initial memristance, ties broken
//! by site index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::Topology;
use crate::error::{Error, Result};
use crate::scenario::Environment;

/// How sites already depleted by the Sequential strategy stay connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequentialMode {
    /// Each depleted site sits alone across the supply and draws `V / r_off`.
    #[default]
    ParallelResidual,
    /// Depleted sites stay in series with the active site.
    SharedSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    AllSites,
    Sequential,
    Leafcutter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    AllSites,
    Sequential(SequentialMode),
    Leafcutter,
}

impl Strategy {
    /// All Sites, Sequential in both modes, Leafcutter.
    pub const ALL: [Strategy; 4] = [
        Strategy::AllSites,
        Strategy::Sequential(SequentialMode::ParallelResidual),
        Strategy::Sequential(SequentialMode::SharedSeries),
        Strategy::Leafcutter,
    ];

    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::AllSites => StrategyKind::AllSites,
            Strategy::Sequential(_) => StrategyKind::Sequential,
            Strategy::Leafcutter => StrategyKind::Leafcutter,
        }
    }

    pub fn sequential_mode(&self) -> Option<SequentialMode> {
        match self {
            Strategy::Sequential(mode) => Some(*mode),
            _ => None,
        }
    }

    pub fn from_parts(kind: StrategyKind, mode: SequentialMode) -> Self {
        match kind {
            StrategyKind::AllSites => Strategy::AllSites,
            StrategyKind::Sequential => Strategy::Sequential(mode),
            StrategyKind::Leafcutter => Strategy::Leafcutter,
        }
    }

    /// Human-readable name, e.g. `Sequential (shared-series)`.
    pub fn display_name(&self) -> String {
        match self {
            Strategy::AllSites => "All Sites".into(),
            Strategy::Sequential(mode) => format!("Sequential ({mode})"),
            Strategy::Leafcutter => "Leafcutter".into(),
        }
    }
}

impl fmt::Display for SequentialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SequentialMode::ParallelResidual => "parallel-residual",
            SequentialMode::SharedSeries => "shared-series",
        })
    }
}

impl FromStr for SequentialMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parallel-residual" => Ok(SequentialMode::ParallelResidual),
            "shared-series" => Ok(SequentialMode::SharedSeries),
            other => Err(format!("unknown sequential mode `{other}` (expected parallel-residual or shared-series)")),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::AllSites => "all-sites",
            StrategyKind::Sequential => "sequential",
            StrategyKind::Leafcutter => "leafcutter",
        })
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-sites" => Ok(StrategyKind::AllSites),
            "sequential" => Ok(StrategyKind::Sequential),
            "leafcutter" => Ok(StrategyKind::Leafcutter),
            other => Err(format!("unknown strategy `{other}` (expected all-sites, sequential or leafcutter)")),
        }
    }
}

/// Site indices sorted richest first: ascending initial memristance, then index.
pub fn richness_order(initial_memristance: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..initial_memristance.len()).collect();
    order.sort_by(|&a, &b| initial_memristance[a].total_cmp(&initial_memristance[b]).then(a.cmp(&b)));
    order
}

/// Event-driven wiring schedule for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySchedule {
    strategy: Strategy,
    order: Vec<usize>,
    /// Number of completed phases; only changes on depletion events.
    phase: usize,
    topology: Topology,
}

impl StrategySchedule {
    pub fn new(strategy: Strategy, initial_memristance: &[f64]) -> Result<Self> {
        if initial_memristance.is_empty() {
            return Err(Error::EmptyEnvironment);
        }
        let order = richness_order(initial_memristance);
        let clamped = vec![false; order.len()];
        let topology = wiring(strategy, &order, &clamped);
        Ok(Self { strategy, order, phase: 0, topology })
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn richness_order(&self) -> &[usize] {
        &self.order
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Wiring for an arbitrary depletion state, without touching the cursor.
    pub fn topology_for(&self, clamped: &[bool]) -> Topology {
        wiring(self.strategy, &self.order, clamped)
    }

    /// Reacts to a depletion state. Returns the new topology if the wiring
    /// changed.
    pub fn update(&mut self, clamped: &[bool]) -> Option<Topology> {
        self.phase = match self.strategy {
            Strategy::AllSites => 0,
            Strategy::Sequential(_) => self.order.iter().take_while(|&&i| clamped[i]).count(),
            Strategy::Leafcutter => usize::from(clamped[self.order[0]]),
        };
        let next = self.topology_for(clamped);
        if next == self.topology {
            return None;
        }
        self.topology = next.clone();
        Some(next)
    }
}

fn wiring(strategy: Strategy, order: &[usize], clamped: &[bool]) -> Topology {
    let n = order.len();
    let branches = match strategy {
        Strategy::AllSites => vec![(0..n).collect()],
        Strategy::Sequential(mode) => {
            let active = order.iter().copied().find(|&i| !clamped[i]);
            let depleted = order.iter().copied().filter(|&i| clamped[i]);
            match mode {
                SequentialMode::ParallelResidual => active
                    .map(|a| vec![a])
                    .into_iter()
                    .chain(depleted.map(|d| vec![d]))
                    .collect(),
                SequentialMode::SharedSeries => vec![depleted.chain(active).collect()],
            }
        }
        Strategy::Leafcutter => {
            let best = order[0];
            if !clamped[best] {
                vec![vec![best]]
            } else {
                let rest: Vec<usize> = (0..n).filter(|&i| i != best).collect();
                if rest.is_empty() {
                    vec![vec![best]]
                } else {
                    vec![rest, vec![best]]
                }
            }
        }
    };
    Topology::new(branches).expect("strategy wiring is always a valid topology")
}

pub fn all_sites_schedule(env: &Environment) -> Result<StrategySchedule> {
    StrategySchedule::new(Strategy::AllSites, &env.initial_memristances())
}

pub fn sequential_schedule(env: &Environment, mode: SequentialMode) -> Result<StrategySchedule> {
    StrategySchedule::new(Strategy::Sequential(mode), &env.initial_memristances())
}

pub fn leafcutter_schedule(env: &Environment) -> Result<StrategySchedule> {
    StrategySchedule::new(Strategy::Leafcutter, &env.initial_memristances())
}

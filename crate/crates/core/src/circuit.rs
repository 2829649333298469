//! Circuit engine: wires site memristors into series branches across a fixed
//! supply and advances their charges with explicit Euler steps.
//!
//! Within a step each branch current is held constant, which makes the
//! instant at which a site reaches its depletion charge exact for that
//! step. The engine splits the step at every such crossing, re-evaluates
//! the branch currents and lets the schedule rewire the sites before
//! integrating the remainder. Trace records stay on the uniform `dt` grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memristor::MemristorState;
use crate::strategy::StrategySchedule;

/// Ordered site indices wired in series across the full supply.
pub type Branch = Vec<usize>;

/// How sites are wired across the supply at one instant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    branches: Vec<Branch>,
}

impl Topology {
    pub fn new(branches: Vec<Branch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidTopology("at least one branch is required".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for branch in &branches {
            if branch.is_empty() {
                return Err(Error::InvalidTopology("empty branch".into()));
            }
            for &site in branch {
                if !seen.insert(site) {
                    return Err(Error::InvalidTopology(format!("site {site} wired twice")));
                }
            }
        }
        Ok(Self { branches })
    }

    /// One series branch holding `sites` in order.
    pub fn series(sites: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::new(vec![sites.into_iter().collect()])
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch_of(&self, site: usize) -> Option<usize> {
        self.branches.iter().position(|b| b.contains(&site))
    }

    pub fn contains(&self, site: usize) -> bool {
        self.branch_of(site).is_some()
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.branches.iter().flatten().copied()
    }

    fn check_bounds(&self, n_sites: usize) -> Result<()> {
        match self.sites().find(|&s| s >= n_sites) {
            Some(s) => Err(Error::InvalidTopology(format!(
                "site index {s} out of range for {n_sites} sites"
            ))),
            None => Ok(()),
        }
    }
}

/// Current through a series branch: `supply_v / sum(M_i)`.
pub fn branch_current(branch: &[usize], sites: &[MemristorState], supply_v: f64) -> f64 {
    let total: f64 = branch.iter().map(|&i| sites[i].memristance()).sum();
    supply_v / total
}

/// Voltage drop across each site of a series branch, in branch order.
pub fn voltages_across(branch: &[usize], sites: &[MemristorState], supply_v: f64) -> Vec<f64> {
    let current = branch_current(branch, sites, supply_v);
    branch.iter().map(|&i| current * sites[i].memristance()).collect()
}

/// Fraction of the total dissipated power taken by `site`. Inside a single
/// series branch this is the site's share of the supply voltage.
pub fn allocation_share(
    site: usize,
    topology: &Topology,
    sites: &[MemristorState],
    supply_v: f64,
) -> Result<f64> {
    if !topology.contains(site) {
        return Err(Error::SiteNotWired(site));
    }
    let mut total = 0.0;
    let mut own = 0.0;
    for branch in topology.branches() {
        let current = branch_current(branch, sites, supply_v);
        for &i in branch {
            let power = current * current * sites[i].memristance();
            total += power;
            if i == site {
                own = power;
            }
        }
    }
    Ok(if total > 0.0 { own / total } else { 0.0 })
}

/// Complete state of a running simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub sites: Vec<MemristorState>,
    pub supply_v: f64,
    pub time: f64,
    pub step: u64,
    pub topology: Topology,
    /// Charge delivered at the supply so far.
    pub delivered: f64,
}

impl SimulationState {
    pub fn new(sites: Vec<MemristorState>, supply_v: f64, topology: Topology) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::EmptyEnvironment);
        }
        if !(supply_v.is_finite() && supply_v > 0.0) {
            return Err(Error::InvalidField {
                field: "supply_v".into(),
                reason: format!("must be positive, got {supply_v}"),
            });
        }
        topology.check_bounds(sites.len())?;
        Ok(Self { sites, supply_v, time: 0.0, step: 0, topology, delivered: 0.0 })
    }

    pub fn all_clamped(&self) -> bool {
        self.sites.iter().all(|s| s.clamped)
    }

    pub fn clamped(&self) -> Vec<bool> {
        self.sites.iter().map(|s| s.clamped).collect()
    }

    /// Per-site currents under the present topology; zero for unwired sites.
    fn site_currents(&self) -> (Vec<f64>, Vec<f64>) {
        let mut per_site = vec![0.0; self.sites.len()];
        let branch_currents: Vec<f64> = self
            .topology
            .branches()
            .iter()
            .map(|branch| {
                let current = branch_current(branch, &self.sites, self.supply_v);
                for &i in branch {
                    per_site[i] = current;
                }
                current
            })
            .collect();
        (per_site, branch_currents)
    }

    /// Record of the instantaneous state; `topology_id` is filled by [`run`].
    pub fn snapshot(&self) -> StepRecord {
        let (_, branch_currents) = self.site_currents();
        let mut voltage = vec![0.0; self.sites.len()];
        for branch in self.topology.branches() {
            for (&i, v) in branch.iter().zip(voltages_across(branch, &self.sites, self.supply_v)) {
                voltage[i] = v;
            }
        }
        StepRecord {
            step: self.step,
            time: self.time,
            q: self.sites.iter().map(|s| s.q).collect(),
            memristance: self.sites.iter().map(|s| s.memristance()).collect(),
            voltage,
            influx: branch_currents.iter().sum(),
            branch_currents,
            delivered: self.delivered,
            topology_id: 0,
        }
    }
}

/// State at the start of step `step`, plus the cumulative delivered charge
/// through the end of that step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub time: f64,
    pub q: Vec<f64>,
    pub memristance: Vec<f64>,
    /// Voltage across each site; zero for unwired sites.
    pub voltage: Vec<f64>,
    /// One current per branch of `SimulationTrace::topologies[topology_id]`.
    pub branch_currents: Vec<f64>,
    pub influx: f64,
    pub delivered: f64,
    pub topology_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepletionEvent {
    pub site: usize,
    /// Interpolated depletion time.
    pub time: f64,
    /// Step during which the crossing happened.
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpan {
    pub start_time: f64,
    pub start_step: u64,
    pub topology: Topology,
}

/// Outcome of one call to [`step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub record: StepRecord,
    pub events: Vec<DepletionEvent>,
    /// Topology switches made inside the step, with the switch instant.
    pub rewirings: Vec<(f64, Topology)>,
    /// Every site is depleted; the step was cut short at the final crossing.
    pub finished: bool,
}

/// Advances `state` by one step of size `dt`.
pub fn step(
    state: &mut SimulationState,
    schedule: &mut StrategySchedule,
    dt: f64,
) -> Result<StepOutput> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::NonPositiveStep(dt));
    }
    let record = state.snapshot();
    let step_start = state.step as f64 * dt;
    let mut elapsed = 0.0;
    let mut events = Vec::new();
    let mut rewirings = Vec::new();
    let mut finished = state.all_clamped();

    // Every pass either finishes the step or clamps at least one site.
    for _ in 0..=state.sites.len() {
        if finished {
            break;
        }
        let remaining = dt - elapsed;
        if remaining <= 0.0 {
            break;
        }
        let (currents, branch_currents) = state.site_currents();
        let influx: f64 = branch_currents.iter().sum();

        let wired: Vec<usize> = state.topology.sites().collect();
        let crossings: Vec<(usize, f64)> = wired
            .iter()
            .filter(|&&i| !state.sites[i].clamped && currents[i] > 0.0)
            .map(|&i| (i, state.sites[i].charge_to_depletion() / currents[i]))
            .collect();
        let segment = crossings.iter().map(|&(_, t)| t).fold(remaining, f64::min);

        for &i in &wired {
            state.sites[i].q += currents[i] * segment;
        }
        state.delivered += influx * segment;

        let segment_start = step_start + elapsed;
        let mut crossed: Vec<(usize, f64)> = crossings
            .into_iter()
            .filter(|&(i, t)| t <= segment || state.sites[i].q >= state.sites[i].depletion_charge())
            .collect();
        crossed.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        for &(i, t) in &crossed {
            state.sites[i].snap_to_depletion();
            events.push(DepletionEvent {
                site: i,
                time: segment_start + t.min(segment),
                step: state.step,
            });
        }
        elapsed += segment;

        if state.all_clamped() {
            finished = true;
            break;
        }
        if !crossed.is_empty() {
            if let Some(next) = schedule.update(&state.clamped()) {
                next.check_bounds(state.sites.len())?;
                rewirings.push((step_start + elapsed, next.clone()));
                state.topology = next;
            }
        }
        if segment >= remaining {
            break;
        }
    }

    state.step += 1;
    state.time = if finished && !events.is_empty() {
        step_start + elapsed
    } else {
        state.step as f64 * dt
    };
    Ok(StepOutput { record, events, rewirings, finished })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub dt: f64,
    pub max_steps: u64,
    /// Keep one record every `record_every` steps. The depletion step is
    /// always recorded.
    pub record_every: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { dt: 1e-3, max_steps: 10_000_000, record_every: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed { depletion_step: u64, depletion_time: f64 },
    Incomplete { steps: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub labels: Vec<String>,
    pub supply_v: f64,
    pub dt: f64,
    pub record_every: u64,
    pub records: Vec<StepRecord>,
    pub events: Vec<DepletionEvent>,
    pub topologies: Vec<TopologySpan>,
    /// State when the run stopped.
    pub terminal: StepRecord,
    pub status: RunStatus,
}

impl SimulationTrace {
    pub fn is_complete(&self) -> bool {
        matches!(self.status, RunStatus::Completed { .. })
    }

    pub fn depletion_time(&self) -> Option<f64> {
        match self.status {
            RunStatus::Completed { depletion_time, .. } => Some(depletion_time),
            RunStatus::Incomplete { .. } => None,
        }
    }

    pub fn depletion_step(&self) -> Option<u64> {
        match self.status {
            RunStatus::Completed { depletion_step, .. } => Some(depletion_step),
            RunStatus::Incomplete { .. } => None,
        }
    }

    /// Interpolated depletion time per site, in site order.
    pub fn site_depletion_times(&self) -> Vec<Option<f64>> {
        let mut times = vec![None; self.labels.len()];
        for event in &self.events {
            times[event.site].get_or_insert(event.time);
        }
        times
    }

    /// Sites in the order they depleted.
    pub fn depletion_order(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.site).collect()
    }

    /// Durations between successive topology changes, ending at depletion.
    pub fn phase_durations(&self) -> Vec<f64> {
        let end = self.depletion_time().unwrap_or(self.terminal.time);
        let starts: Vec<f64> = self.topologies.iter().map(|s| s.start_time).collect();
        starts
            .iter()
            .enumerate()
            .map(|(k, &start)| starts.get(k + 1).copied().unwrap_or(end) - start)
            .collect()
    }

    pub fn topology_of(&self, record: &StepRecord) -> &Topology {
        &self.topologies[record.topology_id].topology
    }

    pub fn record_at(&self, step: u64) -> Option<&StepRecord> {
        self.records
            .binary_search_by_key(&step, |r| r.step)
            .ok()
            .map(|i| &self.records[i])
    }
}

/// Runs `state` under `schedule` until every site is depleted or
/// `max_steps` steps have been taken.
pub fn run(
    mut state: SimulationState,
    schedule: &mut StrategySchedule,
    options: &RunOptions,
) -> Result<SimulationTrace> {
    if !(options.dt > 0.0 && options.dt.is_finite()) {
        return Err(Error::NonPositiveStep(options.dt));
    }
    if options.max_steps == 0 {
        return Err(Error::InvalidField { field: "max_steps".into(), reason: "must be at least 1".into() });
    }
    let record_every = options.record_every.max(1);

    let clamped = state.clamped();
    schedule.update(&clamped);
    state.topology = schedule.topology().clone();
    state.topology.check_bounds(state.sites.len())?;

    let mut events: Vec<DepletionEvent> = clamped
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c)
        .map(|(site, _)| DepletionEvent { site, time: state.time, step: state.step })
        .collect();
    let mut topologies = vec![TopologySpan {
        start_time: state.time,
        start_step: state.step,
        topology: state.topology.clone(),
    }];
    let mut records = Vec::new();
    let labels = state.sites.iter().map(|s| s.label.clone()).collect();

    let mut status = RunStatus::Incomplete { steps: options.max_steps };
    if state.all_clamped() {
        records.push(state.snapshot());
        status = RunStatus::Completed { depletion_step: state.step, depletion_time: state.time };
    } else {
        for _ in 0..options.max_steps {
            let out = step(&mut state, schedule, options.dt)?;
            let mut record = out.record;
            record.topology_id = topologies.len() - 1;
            record.delivered = state.delivered;
            for (time, topology) in out.rewirings {
                topologies.push(TopologySpan { start_time: time, start_step: record.step, topology });
            }
            events.extend(out.events);
            if out.finished {
                let depletion_time = events.iter().map(|e| e.time).fold(0.0, f64::max);
                status = RunStatus::Completed { depletion_step: record.step, depletion_time };
                records.push(record);
                break;
            }
            if record.step % record_every == 0 {
                records.push(record);
            }
        }
    }

    let mut terminal = state.snapshot();
    terminal.topology_id = topologies.len() - 1;
    Ok(SimulationTrace {
        labels,
        supply_v: state.supply_v,
        dt: options.dt,
        record_every,
        records,
        events,
        topologies,
        terminal,
        status,
    })
}

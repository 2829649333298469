//! Resource-influx measures over simulation traces and cross-strategy
//! comparison.
//!
//! Influx is the total supply current. The gathered fraction at step `n` is
//! the charge delivered through step `n` divided by the charge delivered by
//! the time the environment is fully depleted, so every completed run ends
//! at exactly 1.

use serde::{Deserialize, Serialize};

use crate::circuit::{RunOptions, SimulationTrace};
use crate::error::{Error, Result};
use crate::scenario::{matching_preset, Environment};
use crate::strategy::{SequentialMode, Strategy, StrategyKind};

pub const DEFAULT_MILESTONES: [f64; 5] = [0.25, 0.5, 0.75, 0.9, 1.0];

/// Early-time window, in reduced time, for the reported surge fraction.
pub const DEFAULT_SURGE_WINDOW: f64 = 1.0;

pub fn influx(trace: &SimulationTrace, step: u64) -> Result<f64> {
    trace.record_at(step).map(|r| r.influx).ok_or(Error::StepOutOfRange { step })
}

fn completed_total(trace: &SimulationTrace) -> Result<f64> {
    match trace.status {
        crate::circuit::RunStatus::Completed { .. } => Ok(trace.terminal.delivered),
        crate::circuit::RunStatus::Incomplete { steps } => Err(Error::IncompleteRun { steps }),
    }
}

fn ratio(delivered: f64, total: f64) -> f64 {
    // Nothing to gather in an environment that starts depleted.
    if total > 0.0 {
        delivered / total
    } else {
        1.0
    }
}

/// Fraction of the total resource gathered by the end of step `n`.
pub fn cumulative_fraction(trace: &SimulationTrace, n: u64) -> Result<f64> {
    let total = completed_total(trace)?;
    let record = trace.record_at(n).ok_or(Error::StepOutOfRange { step: n })?;
    Ok(ratio(record.delivered, total))
}

/// `(time, delivered charge)` at the end of each recorded step, starting
/// from the run's origin.
fn delivery_curve(trace: &SimulationTrace) -> Vec<(f64, f64)> {
    let end = trace.depletion_time().unwrap_or(trace.terminal.time);
    let origin = trace.records.first().map_or(0.0, |r| r.time);
    let mut points = vec![(origin, 0.0)];
    points.extend(
        trace
            .records
            .iter()
            .map(|r| (((r.step + 1) as f64 * trace.dt).min(end), r.delivered)),
    );
    points
}

/// Gathered fraction against time, from the origin to full depletion.
pub fn cumulative_curve(trace: &SimulationTrace) -> Result<Vec<(f64, f64)>> {
    let total = completed_total(trace)?;
    Ok(delivery_curve(trace).into_iter().map(|(t, c)| (t, ratio(c, total))).collect())
}

/// Earliest (interpolated) time at which the gathered fraction reaches `frac`.
pub fn time_to_fraction(trace: &SimulationTrace, frac: f64) -> Result<f64> {
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::FractionOutOfRange(frac));
    }
    let total = completed_total(trace)?;
    if frac == 1.0 {
        return Ok(trace.depletion_time().expect("completed"));
    }
    let target = frac * total;
    let curve = delivery_curve(trace);
    for w in curve.windows(2) {
        let ((t0, c0), (t1, c1)) = (w[0], w[1]);
        if c1 >= target {
            if c1 == c0 {
                return Ok(t0);
            }
            return Ok(t0 + (t1 - t0) * (target - c0) / (c1 - c0));
        }
    }
    Ok(trace.depletion_time().expect("completed"))
}

/// Gathered fraction at time `t`, interpolated between recorded steps.
pub fn fraction_at_time(trace: &SimulationTrace, t: f64) -> Result<f64> {
    let total = completed_total(trace)?;
    let curve = delivery_curve(trace);
    for w in curve.windows(2) {
        let ((t0, c0), (t1, c1)) = (w[0], w[1]);
        if t <= t1 {
            let c = if t1 > t0 { c0 + (c1 - c0) * ((t - t0) / (t1 - t0)).max(0.0) } else { c1 };
            return Ok(ratio(c, total));
        }
    }
    Ok(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteDepletion {
    pub label: String,
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Milestone {
    pub fraction: f64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: StrategyKind,
    pub seq_mode: Option<SequentialMode>,
    pub completed: bool,
    pub steps: u64,
    pub depletion_step: Option<u64>,
    pub depletion_time: Option<f64>,
    pub phase_durations: Vec<f64>,
    pub site_depletion: Vec<SiteDepletion>,
    pub milestones: Vec<Milestone>,
    pub total_delivered: f64,
    pub surge_window: f64,
    pub surge_fraction: Option<f64>,
}

impl StrategySummary {
    pub fn strategy(&self) -> Strategy {
        Strategy::from_parts(self.strategy, self.seq_mode.unwrap_or_default())
    }

    pub fn milestone(&self, fraction: f64) -> Option<f64> {
        self.milestones.iter().find(|m| m.fraction == fraction).map(|m| m.time)
    }
}

pub fn summarize(trace: &SimulationTrace, strategy: Strategy, surge_window: f64) -> StrategySummary {
    let completed = trace.is_complete();
    let milestones = if completed {
        DEFAULT_MILESTONES
            .iter()
            .map(|&fraction| Milestone {
                fraction,
                time: time_to_fraction(trace, fraction).expect("completed trace"),
            })
            .collect()
    } else {
        Vec::new()
    };
    StrategySummary {
        strategy: strategy.kind(),
        seq_mode: strategy.sequential_mode(),
        completed,
        steps: trace.terminal.step,
        depletion_step: trace.depletion_step(),
        depletion_time: trace.depletion_time(),
        phase_durations: trace.phase_durations(),
        site_depletion: trace
            .labels
            .iter()
            .zip(trace.site_depletion_times())
            .map(|(label, time)| SiteDepletion { label: label.clone(), time })
            .collect(),
        milestones,
        total_delivered: trace.terminal.delivered,
        surge_window,
        surge_fraction: fraction_at_time(trace, surge_window).ok(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Agree,
    Disagree,
    /// A strategy involved is missing or did not complete.
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub claim: String,
    /// Reference step counts the ordering was read from.
    pub reference: String,
    pub verdict: Verdict,
    /// Implemented values as `faster vs slower`.
    pub implemented: String,
}

impl Relation {
    pub fn line(&self) -> String {
        let verdict = match self.verdict {
            Verdict::Agree => "AGREE",
            Verdict::Disagree => "DISAGREE under implemented semantics",
            Verdict::Unavailable => "UNAVAILABLE",
        };
        format!("{} (reference: {}): {} [{}]", self.claim, self.reference, verdict, self.implemented)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Measure {
    HalfGathered,
    Depletion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Subject {
    AllSites,
    Sequential,
    Leafcutter,
}

/// A published ordering `first < second` of two strategies on a preset.
struct ReferenceClaim {
    preset: &'static str,
    measure: Measure,
    first: Subject,
    second: Subject,
    claim: &'static str,
    reference: &'static str,
}

const REFERENCE_CLAIMS: [ReferenceClaim; 7] = [
    ReferenceClaim {
        preset: "rich",
        measure: Measure::HalfGathered,
        first: Subject::Leafcutter,
        second: Subject::AllSites,
        claim: "Leafcutter reaches 50% before All Sites",
        reference: "44 vs 173 steps",
    },
    ReferenceClaim {
        preset: "rich",
        measure: Measure::Depletion,
        first: Subject::AllSites,
        second: Subject::Sequential,
        claim: "Sequential slower than All Sites",
        reference: "967 vs 1274 steps",
    },
    ReferenceClaim {
        preset: "rich",
        measure: Measure::Depletion,
        first: Subject::AllSites,
        second: Subject::Leafcutter,
        claim: "Leafcutter slower than All Sites",
        reference: "967 vs 2978 steps",
    },
    ReferenceClaim {
        preset: "rich",
        measure: Measure::Depletion,
        first: Subject::Sequential,
        second: Subject::Leafcutter,
        claim: "Sequential depletes before Leafcutter",
        reference: "1274 vs 2978 steps",
    },
    ReferenceClaim {
        preset: "poor",
        measure: Measure::Depletion,
        first: Subject::Leafcutter,
        second: Subject::AllSites,
        claim: "Leafcutter depletes before All Sites",
        reference: "967 vs 2801 steps",
    },
    ReferenceClaim {
        preset: "poor",
        measure: Measure::Depletion,
        first: Subject::Leafcutter,
        second: Subject::Sequential,
        claim: "Leafcutter depletes before Sequential",
        reference: "967 vs 1321 steps",
    },
    ReferenceClaim {
        preset: "poor",
        measure: Measure::Depletion,
        first: Subject::Sequential,
        second: Subject::AllSites,
        claim: "Sequential depletes before All Sites",
        reference: "1321 vs 2801 steps",
    },
];

fn matches_subject(summary: &StrategySummary, subject: Subject) -> bool {
    matches!(
        (summary.strategy, subject),
        (StrategyKind::AllSites, Subject::AllSites)
            | (StrategyKind::Sequential, Subject::Sequential)
            | (StrategyKind::Leafcutter, Subject::Leafcutter)
    )
}

fn measure_of(summary: &StrategySummary, measure: Measure) -> Option<f64> {
    match measure {
        Measure::HalfGathered => summary.milestone(0.5),
        Measure::Depletion => summary.depletion_time,
    }
}

fn label_of(summary: &StrategySummary) -> String {
    summary.strategy().display_name()
}

/// Checks every reference ordering for `preset` against the summaries. A
/// claim about Sequential yields one relation per Sequential mode present.
pub fn relation_report(preset: &str, summaries: &[StrategySummary]) -> Vec<Relation> {
    let mut relations = Vec::new();
    for claim in REFERENCE_CLAIMS.iter().filter(|c| c.preset == preset) {
        let firsts: Vec<&StrategySummary> = summaries.iter().filter(|s| matches_subject(s, claim.first)).collect();
        let seconds: Vec<&StrategySummary> = summaries.iter().filter(|s| matches_subject(s, claim.second)).collect();
        let sequential_split = claim.first == Subject::Sequential || claim.second == Subject::Sequential;
        if firsts.is_empty() || seconds.is_empty() {
            relations.push(Relation {
                claim: claim.claim.to_string(),
                reference: claim.reference.to_string(),
                verdict: Verdict::Unavailable,
                implemented: "strategy not run".into(),
            });
            continue;
        }
        for a in &firsts {
            for b in &seconds {
                let (va, vb) = (measure_of(a, claim.measure), measure_of(b, claim.measure));
                let verdict = match (va, vb) {
                    (Some(x), Some(y)) if x < y => Verdict::Agree,
                    (Some(_), Some(_)) => Verdict::Disagree,
                    _ => Verdict::Unavailable,
                };
                let fmt = |v: Option<f64>| v.map_or("incomplete".to_string(), |t| format!("{t:.4}"));
                let mode_tag = [a, b]
                    .iter()
                    .find_map(|s| s.seq_mode)
                    .filter(|_| sequential_split)
                    .map(|m| format!(" [{m}]"))
                    .unwrap_or_default();
                relations.push(Relation {
                    claim: format!("{}{}", claim.claim, mode_tag),
                    reference: claim.reference.to_string(),
                    verdict,
                    implemented: format!("{} {} vs {} {}", label_of(a), fmt(va), label_of(b), fmt(vb)),
                });
            }
        }
    }
    relations
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Preset the environment reproduces, if any; reference orderings are
    /// only checked for presets.
    pub preset: Option<String>,
    pub summaries: Vec<StrategySummary>,
    pub relations: Vec<Relation>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub run: RunOptions,
    pub surge_window: f64,
}

impl CompareOptions {
    pub fn for_environment(env: &Environment) -> Self {
        Self { run: env.run_options(), surge_window: DEFAULT_SURGE_WINDOW }
    }
}

/// Runs every strategy on `env` (concurrently) and assembles summaries in
/// the order given, plus the reference-ordering report.
pub fn compare(env: &Environment, strategies: &[Strategy], options: &CompareOptions) -> Result<Comparison> {
    env.validate()?;
    let traces: Vec<Result<SimulationTrace>> = std::thread::scope(|scope| {
        let handles: Vec<_> = strategies
            .iter()
            .map(|&strategy| scope.spawn(move || env.simulate(strategy, &options.run)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    });
    let mut summaries = Vec::with_capacity(strategies.len());
    for (trace, &strategy) in traces.into_iter().zip(strategies) {
        summaries.push(summarize(&trace?, strategy, options.surge_window));
    }
    let preset = matching_preset(env);
    let relations = preset.map(|p| relation_report(p, &summaries)).unwrap_or_default();
    Ok(Comparison { preset: preset.map(str::to_string), summaries, relations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::preset;

    fn coarse(env: &Environment) -> RunOptions {
        RunOptions { dt: 1e-2, ..env.run_options() }
    }

    #[test]
    fn influx_at_first_step_is_supply_over_total_memristance() {
        let env = preset("rich").unwrap();
        let trace = env.simulate(Strategy::AllSites, &coarse(&env)).unwrap();
        assert!((influx(&trace, 0).unwrap() - 5.0 / 22.5).abs() < 1e-12);
        assert!(matches!(influx(&trace, u64::MAX), Err(Error::StepOutOfRange { .. })));
    }

    #[test]
    fn leafcutter_residual_branch_carries_small_current() {
        let env = preset("rich").unwrap();
        let trace = env.simulate(Strategy::Leafcutter, &coarse(&env)).unwrap();
        let phase2 = trace.records.iter().find(|r| r.topology_id == 1).unwrap();
        assert_eq!(phase2.branch_currents.len(), 2);
        assert!((phase2.branch_currents[1] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn fractions_are_normalized_and_monotone() {
        let env = preset("rich").unwrap();
        for strategy in Strategy::ALL {
            let trace = env.simulate(strategy, &coarse(&env)).unwrap();
            let d = trace.depletion_step().unwrap();
            assert_eq!(cumulative_fraction(&trace, d).unwrap(), 1.0);
            let first = cumulative_fraction(&trace, 0).unwrap();
            assert!(first > 0.0);
            assert!((first - influx(&trace, 0).unwrap() * 1e-2 / trace.terminal.delivered).abs() < 1e-12);
            let mut last = 0.0;
            for r in &trace.records {
                let f = cumulative_fraction(&trace, r.step).unwrap();
                assert!(f >= last);
                last = f;
            }
            let mut last = 0.0;
            for frac in [0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0] {
                let t = time_to_fraction(&trace, frac).unwrap();
                assert!(t >= last);
                last = t;
            }
            assert_eq!(time_to_fraction(&trace, 1.0).unwrap(), trace.depletion_time().unwrap());
        }
    }

    #[test]
    fn fraction_errors() {
        let env = preset("rich").unwrap();
        let trace = env.simulate(Strategy::AllSites, &coarse(&env)).unwrap();
        assert!(matches!(time_to_fraction(&trace, 0.0), Err(Error::FractionOutOfRange(_))));
        assert!(matches!(time_to_fraction(&trace, 1.5), Err(Error::FractionOutOfRange(_))));
        let short = env.simulate(Strategy::AllSites, &RunOptions { max_steps: 10, ..coarse(&env) }).unwrap();
        assert!(matches!(cumulative_fraction(&short, 0), Err(Error::IncompleteRun { .. })));
        let summary = summarize(&short, Strategy::AllSites, 1.0);
        assert!(!summary.completed && summary.milestones.is_empty());
    }

    #[test]
    fn all_sites_fraction_tracks_common_charge() {
        // Delivered charge of one static series branch equals its charge, so
        // the fraction at q = 0.49 is 0.49 / 1.99.
        let env = preset("rich").unwrap();
        let trace = env.simulate(Strategy::AllSites, &env.run_options()).unwrap();
        let record = trace.records.iter().find(|r| r.q[0] >= 0.49).unwrap();
        let prev = trace.record_at(record.step - 1).unwrap();
        assert!((cumulative_fraction(&trace, prev.step).unwrap() - 0.49 / 1.99).abs() < 1e-3);
        assert!((record.time - 25.56).abs() < 0.02);
    }

    #[test]
    fn relation_report_splits_sequential_modes() {
        let env = preset("rich").unwrap();
        let cmp = compare(&env, &Strategy::ALL, &CompareOptions { run: coarse(&env), surge_window: 1.0 }).unwrap();
        assert_eq!(cmp.preset.as_deref(), Some("rich"));
        let seq: Vec<&Relation> = cmp
            .relations
            .iter()
            .filter(|r| r.claim.starts_with("Sequential slower than All Sites"))
            .collect();
        assert_eq!(seq.len(), 2);
        assert!(seq.iter().all(|r| r.verdict == Verdict::Disagree));
        let half = cmp.relations.iter().find(|r| r.claim.starts_with("Leafcutter reaches 50%")).unwrap();
        assert_eq!(half.verdict, Verdict::Agree);
    }

    #[test]
    fn missing_strategy_is_unavailable() {
        let env = preset("poor").unwrap();
        let cmp = compare(&env, &[Strategy::AllSites], &CompareOptions { run: coarse(&env), surge_window: 1.0 }).unwrap();
        assert!(cmp.relations.iter().all(|r| r.verdict == Verdict::Unavailable));
    }

    #[test]
    fn custom_environment_has_no_reference_relations() {
        let mut env = preset("rich").unwrap();
        env.sites[0].m0 = 3.0;
        let cmp = compare(&env, &[Strategy::AllSites], &CompareOptions { run: coarse(&env), surge_window: 1.0 }).unwrap();
        assert!(cmp.preset.is_none() && cmp.relations.is_empty());
    }
}

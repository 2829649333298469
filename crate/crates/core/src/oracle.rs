//! Closed-form depletion times for series chains and independent
//! singletons, the only wirings the strategies produce.
//!
//! Every site of a series branch carries the same charge `q`. With `C`
//! sites already at `r_off` and active sites whose `r_on` values sum to `S`,
//! the branch resistance is `C*r_off + S*(1 + beta*r_off*q)`, so
//! `dq/dt = V / (C*r_off + S*(1 + beta*r_off*q))` integrates exactly to
//!
//! ```text
//! t = [(C*r_off + S)(q_b - q_a) + (S*beta*r_off/2)(q_b^2 - q_a^2)] / V
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memristor::MemristorParams;
use crate::scenario::Environment;
use crate::strategy::{SequentialMode, Strategy};

/// Time for the common charge of a series branch to go from `q_a` to `q_b`.
pub fn series_phase_time(
    clamped_count: usize,
    active_sum: f64,
    q_a: f64,
    q_b: f64,
    supply_v: f64,
    r_off: f64,
    beta: f64,
) -> Result<f64> {
    if !(q_b >= q_a && q_a >= 0.0) {
        return Err(Error::Oracle(format!("charge interval [{q_a}, {q_b}] is not ordered")));
    }
    if active_sum < 0.0 {
        return Err(Error::Oracle(format!("active resistance sum must be non-negative, got {active_sum}")));
    }
    if q_b == q_a {
        return Ok(0.0);
    }
    if active_sum == 0.0 {
        return Err(Error::Oracle("no active device can advance the charge".into()));
    }
    let base = clamped_count as f64 * r_off + active_sum;
    let curvature = active_sum * beta * r_off / 2.0;
    Ok((base * (q_b - q_a) + curvature * (q_b * q_b - q_a * q_a)) / supply_v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub clamped_count: usize,
    pub active_sum: f64,
    pub q_start: f64,
    pub q_end: f64,
    pub elapsed: f64,
    /// Site (index into the plan's input) that depletes at `q_end`.
    pub depleting_site: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub phases: Vec<Phase>,
    /// Cumulative depletion time of each input site, in input order.
    pub site_times: Vec<f64>,
}

impl PhasePlan {
    pub fn total(&self) -> f64 {
        self.phases.iter().map(|p| p.elapsed).sum()
    }
}

fn shared_constants(params: &[MemristorParams]) -> Result<(f64, f64)> {
    let first = params.first().ok_or(Error::EmptyEnvironment)?;
    for p in params {
        p.validate()?;
        if p.r_off != first.r_off || p.beta != first.beta {
            return Err(Error::Oracle("sites in one branch must share r_off and beta".into()));
        }
    }
    Ok((first.r_off, first.beta))
}

/// Plan for sites wired in one series branch from zero charge.
pub fn series_depletion_plan(params: &[MemristorParams], supply_v: f64) -> Result<PhasePlan> {
    series_depletion_plan_with_burden(params, 0, supply_v)
}

/// Like [`series_depletion_plan`], with `burden` extra devices already at
/// `r_off` in the branch.
pub fn series_depletion_plan_with_burden(
    params: &[MemristorParams],
    burden: usize,
    supply_v: f64,
) -> Result<PhasePlan> {
    let (r_off, beta) = shared_constants(params)?;
    // Ascending depletion charge is descending r_on.
    let mut order: Vec<usize> = (0..params.len()).collect();
    order.sort_by(|&a, &b| params[b].r_on.total_cmp(&params[a].r_on).then(a.cmp(&b)));

    let mut active_sum: f64 = params.iter().map(|p| p.r_on).sum();
    let mut q_start = 0.0;
    let mut elapsed_total = 0.0;
    let mut phases = Vec::with_capacity(params.len());
    let mut site_times = vec![0.0; params.len()];
    for (clamped_count, (k, &site)) in (burden..).zip(order.iter().enumerate()) {
        let q_end = params[site].depletion_charge().max(q_start);
        let elapsed = series_phase_time(clamped_count, active_sum, q_start, q_end, supply_v, r_off, beta)?;
        elapsed_total += elapsed;
        site_times[site] = elapsed_total;
        phases.push(Phase { clamped_count, active_sum, q_start, q_end, elapsed, depleting_site: site });
        // Recomputed instead of decremented to avoid cancellation drift.
        active_sum = order[k + 1..].iter().map(|&i| params[i].r_on).sum();
        q_start = q_end;
    }
    Ok(PhasePlan { phases, site_times })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePhase {
    pub description: String,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTimes {
    pub total: f64,
    /// One entry per wiring phase of the strategy.
    pub phases: Vec<OraclePhase>,
    /// Exact depletion time per site, in environment order.
    pub site_times: Vec<f64>,
}

/// Exact depletion times of `env` under `strategy`.
pub fn strategy_oracle_time(env: &Environment, strategy: Strategy) -> Result<OracleTimes> {
    env.validate()?;
    let params = env.params();
    let v = env.supply_v;
    let n = params.len();
    // Richest first, ties by index.
    let mut richness: Vec<usize> = (0..n).collect();
    richness.sort_by(|&a, &b| params[a].r_on.total_cmp(&params[b].r_on).then(a.cmp(&b)));

    let mut site_times = vec![0.0; n];
    let mut phases = Vec::new();
    match strategy {
        Strategy::AllSites => {
            let plan = series_depletion_plan(&params, v)?;
            site_times = plan.site_times.clone();
            phases.push(OraclePhase { description: "all sites in series".into(), duration: plan.total() });
        }
        Strategy::Sequential(mode) => {
            let initially_depleted = params.iter().filter(|p| p.depletion_charge() == 0.0).count();
            let mut now = 0.0;
            let live = richness.iter().filter(|&&i| params[i].depletion_charge() > 0.0);
            for (depleted, &site) in (initially_depleted..).zip(live) {
                let burden = match mode {
                    SequentialMode::ParallelResidual => 0,
                    SequentialMode::SharedSeries => depleted,
                };
                let plan = series_depletion_plan_with_burden(&params[site..=site], burden, v)?;
                now += plan.total();
                site_times[site] = now;
                phases.push(OraclePhase {
                    description: format!("{} alone", env.sites[site].label),
                    duration: plan.total(),
                });
            }
        }
        Strategy::Leafcutter => {
            let best = richness[0];
            let first = series_depletion_plan(&params[best..=best], v)?;
            site_times[best] = first.total();
            phases.push(OraclePhase {
                description: format!("{} alone", env.sites[best].label),
                duration: first.total(),
            });
            let rest: Vec<usize> = (0..n).filter(|&i| i != best).collect();
            if !rest.is_empty() {
                let rest_params: Vec<MemristorParams> = rest.iter().map(|&i| params[i]).collect();
                let plan = series_depletion_plan(&rest_params, v)?;
                for (k, &i) in rest.iter().enumerate() {
                    site_times[i] = first.total() + plan.site_times[k];
                }
                phases.push(OraclePhase {
                    description: "remaining sites in series".into(),
                    duration: plan.total(),
                });
            }
        }
    }
    let total = site_times.iter().copied().fold(0.0, f64::max);
    Ok(OracleTimes { total, phases, site_times })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::preset;
    use proptest::prelude::*;
    use crate::strategy::Strategy;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn p(r_on: f64) -> MemristorParams {
        MemristorParams::new(r_on, 100.0, 1.0).unwrap()
    }

    /// Midpoint-rule quadrature of dt = R(q)/V dq, independent of the
    /// closed form.
    fn quadrature_time(clamped: usize, active_sum: f64, q_a: f64, q_b: f64, v: f64) -> f64 {
        let n = 20_000;
        let h = (q_b - q_a) / n as f64;
        (0..n)
            .map(|k| {
                let q = q_a + (k as f64 + 0.5) * h;
                (clamped as f64 * 100.0 + active_sum * (1.0 + 100.0 * q)) / v * h
            })
            .sum()
    }

    #[test]
    fn phase_time_examples() {
        assert_eq!(series_phase_time(0, 22.5, 0.3, 0.3, 5.0, 100.0, 1.0).unwrap(), 0.0);
        let t = series_phase_time(0, 22.5, 0.0, 17.0 / 300.0, 5.0, 100.0, 1.0).unwrap();
        assert!(rel(t, 0.9775) < 1e-12);
        let t = series_phase_time(4, 0.5, 0.99, 1.99, 5.0, 100.0, 1.0).unwrap();
        assert!(rel(t, 95.0) < 1e-12);
        assert!(series_phase_time(3, 0.0, 0.1, 0.2, 5.0, 100.0, 1.0).is_err());
        assert!(series_phase_time(0, 1.0, 0.2, 0.1, 5.0, 100.0, 1.0).is_err());
    }

    #[test]
    fn phase_time_matches_quadrature() {
        for &(c, s, qa, qb) in &[(0, 22.5, 0.0, 0.0567), (2, 3.0, 0.24, 0.49), (4, 0.5, 0.99, 1.99)] {
            let exact = series_phase_time(c, s, qa, qb, 5.0, 100.0, 1.0).unwrap();
            assert!(rel(exact, quadrature_time(c, s, qa, qb, 5.0)) < 1e-8);
        }
    }

    #[test]
    fn rich_series_plan() {
        let env = preset("rich").unwrap();
        let plan = series_depletion_plan(&env.params(), 5.0).unwrap();
        // m0 order in the preset is [1, 2, 0.5, 15, 4].
        let expected = [66.8108333333, 25.5608333333, 161.8108333333, 0.9775, 8.9983333333];
        for (t, e) in plan.site_times.iter().zip(expected) {
            assert!(rel(*t, e) < 1e-9, "{t} vs {e}");
        }
        let depleting: Vec<usize> = plan.phases.iter().map(|p| p.depleting_site).collect();
        assert_eq!(depleting, vec![3, 4, 1, 0, 2]);
        assert!(rel(plan.phases[4].elapsed, 95.0) < 1e-12);
    }

    #[test]
    fn poor_series_plan() {
        let env = preset("poor").unwrap();
        let plan = series_depletion_plan(&env.params(), 5.0).unwrap();
        assert!(rel(plan.total(), 179.1538650794) < 1e-9);
        assert!((plan.phases[4].elapsed - 178.665).abs() < 1e-3);
    }

    #[test]
    fn singleton_plan() {
        let plan = series_depletion_plan(&[p(0.5)], 5.0).unwrap();
        assert!(rel(plan.total(), 19.9995) < 1e-12);
    }

    #[test]
    fn duplicate_initial_memristance_gives_zero_length_phase() {
        let plan = series_depletion_plan(&[p(4.0), p(4.0), p(1.0)], 5.0).unwrap();
        assert_eq!(plan.phases[1].elapsed, 0.0);
        assert_eq!(plan.site_times[0], plan.site_times[1]);
    }

    #[test]
    fn mixed_constants_rejected() {
        let other = MemristorParams::new(1.0, 50.0, 1.0).unwrap();
        assert!(series_depletion_plan(&[p(1.0), other], 5.0).is_err());
        assert!(series_depletion_plan(&[], 5.0).is_err());
    }

    #[test]
    fn strategy_totals() {
        let rich = preset("rich").unwrap();
        let poor = preset("poor").unwrap();
        let cases = [
            (&rich, Strategy::AllSites, 161.8108333333),
            (&rich, Strategy::Leafcutter, 81.8108333333),
            (&rich, Strategy::Sequential(SequentialMode::ParallelResidual), 38.1441666667),
            (&rich, Strategy::Sequential(SequentialMode::SharedSeries), 96.4775),
            (&poor, Strategy::AllSites, 179.1538650794),
            (&poor, Strategy::Leafcutter, 20.4871984127),
        ];
        for (env, strategy, expected) in cases {
            let t = strategy_oracle_time(env, strategy).unwrap();
            assert!(rel(t.total, expected) < 1e-9, "{strategy:?}: {} vs {expected}", t.total);
        }
        let leaf = strategy_oracle_time(&rich, Strategy::Leafcutter).unwrap();
        assert!(rel(leaf.phases[0].duration, 19.9995) < 1e-12);
        assert!(rel(leaf.phases[1].duration, 61.8113333333) < 1e-9);
        let leaf = strategy_oracle_time(&poor, Strategy::Leafcutter).unwrap();
        assert!(rel(leaf.phases[1].duration, 0.4876984127) < 1e-8);

        let seq = strategy_oracle_time(&rich, Strategy::Sequential(SequentialMode::ParallelResidual)).unwrap();
        let durations: Vec<f64> = seq.phases.iter().map(|p| p.duration).collect();
        for (d, e) in durations.iter().zip([19.9995, 9.999, 4.998, 2.496, 0.6516666667]) {
            assert!(rel(*d, e) < 1e-6, "{d} vs {e}");
        }
    }

    proptest! {
        #[test]
        fn phase_time_is_additive(
            c in 0usize..5,
            s in 0.1f64..50.0,
            qa in 0.0f64..1.0,
            d1 in 0.0f64..1.0,
            d2 in 0.0f64..1.0,
        ) {
            let whole = series_phase_time(c, s, qa, qa + d1 + d2, 5.0, 100.0, 1.0).unwrap();
            let split = series_phase_time(c, s, qa, qa + d1, 5.0, 100.0, 1.0).unwrap()
                + series_phase_time(c, s, qa + d1, qa + d1 + d2, 5.0, 100.0, 1.0).unwrap();
            prop_assert!((whole - split).abs() <= 1e-9 * (1.0 + whole));
        }

        #[test]
        fn site_times_increase_along_descending_m0(
            m0 in prop::collection::btree_set(1u32..9900, 2..7),
            scale in 0.5f64..4.0,
        ) {
            let params: Vec<MemristorParams> = m0.iter().map(|&m| p(m as f64 / 100.0)).collect();
            let plan = series_depletion_plan(&params, 5.0).unwrap();
            let mut by_m0: Vec<(f64, f64)> = params.iter().map(|p| p.r_on).zip(plan.site_times.iter().copied()).collect();
            by_m0.sort_by(|a, b| b.0.total_cmp(&a.0));
            for w in by_m0.windows(2) {
                prop_assert!(w[1].1 > w[0].1);
            }
            let scaled = series_depletion_plan(&params, 5.0 * scale).unwrap();
            prop_assert!(rel(scaled.total() * scale, plan.total()) < 1e-12);
        }
    }
}

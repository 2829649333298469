//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Expected depletion times are frozen from the closed-form piecewise
//! solution (evaluated independently in double precision) and re-derived
//! through `memforage::oracle` at run time.

use std::collections::BTreeMap;
use std::time::Instant;

use memforage::circuit::{RunOptions, SimulationTrace};
use memforage::metrics::{self, CompareOptions, Verdict};
use memforage::oracle::strategy_oracle_time;
use memforage::scenario::{self, preset, Environment, SiteSpec};
use memforage::strategy::{SequentialMode, Strategy};
use memforage::{io, validation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DT: f64 = 1e-3;
const REL_TOL: f64 = 0.005;
const RATIO_RANGE: (f64, f64) = (0.3, 0.7);
const CONSERVATION_TOL: f64 = 1e-9;
const SCALING_TOL: f64 = 1e-6;
const NORMALIZATION_TOL: f64 = 1e-9;

/// Rich preset, All Sites: exact depletion times for M(0) = 15, 4, 2, 1, 0.5.
const RICH_ALL_SITES: [f64; 5] = [0.9775, 8.998333333, 25.56083333, 66.81083333, 161.8108333];
const POOR_ALL_SITES: f64 = 179.1538651;
const RICH_LEAFCUTTER: f64 = 81.81083333;
const RICH_SEQUENTIAL_PARALLEL: f64 = 38.14416667;
const RICH_SEQUENTIAL_SHARED: f64 = 96.4775;
const POOR_LEAFCUTTER: f64 = 20.48719841;

struct Gate {
    results: Vec<(String, bool, String)>,
}

impl Gate {
    fn record(&mut self, id: &str, passed: bool, detail: String) {
        println!("[{}] {id}: {detail}", if passed { "PASS" } else { "FAIL" });
        self.results.push((id.to_string(), passed, detail));
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn strategy_tag(s: Strategy) -> String {
    s.display_name()
}

fn runs(envs: &[(&str, Environment)], dt: f64) -> BTreeMap<(String, String), SimulationTrace> {
    let mut out = BTreeMap::new();
    for (name, env) in envs {
        for strategy in Strategy::ALL {
            let options = RunOptions { dt, ..env.run_options() };
            let trace = env.simulate(strategy, &options).expect("simulation");
            out.insert((name.to_string(), strategy_tag(strategy)), trace);
        }
    }
    out
}

fn main() {
    let mut gate = Gate { results: Vec::new() };
    let rich = preset("rich").unwrap();
    let poor = preset("poor").unwrap();
    let envs = [("rich", rich.clone()), ("poor", poor.clone())];

    // 1. Rich All Sites per-site depletion times, and runtime.
    let start = Instant::now();
    let trace = rich.simulate(Strategy::AllSites, &rich.run_options()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let mut engine_times: Vec<f64> = trace.site_depletion_times().into_iter().map(Option::unwrap).collect();
    engine_times.sort_by(f64::total_cmp);
    let oracle = strategy_oracle_time(&rich, Strategy::AllSites).unwrap();
    let mut oracle_times = oracle.site_times.clone();
    oracle_times.sort_by(f64::total_cmp);
    let worst = engine_times.iter().zip(RICH_ALL_SITES).map(|(t, e)| rel(*t, e)).fold(0.0, f64::max);
    let oracle_consistent = oracle_times.iter().zip(RICH_ALL_SITES).all(|(o, e)| rel(*o, e) < 1e-8);
    gate.record(
        "AC1 oracle agreement (rich, All Sites)",
        worst <= REL_TOL && oracle_consistent && elapsed < 1.0,
        format!("engine {engine_times:.4?} max rel err {worst:.2e} (tol {REL_TOL}); runtime {elapsed:.3}s (< 1 s)"),
    );

    // 2. Totals for the remaining oracle cases.
    let base = runs(&envs, DT);
    let checks = [
        ("poor", Strategy::AllSites, POOR_ALL_SITES),
        ("rich", Strategy::Leafcutter, RICH_LEAFCUTTER),
        ("rich", Strategy::Sequential(SequentialMode::ParallelResidual), RICH_SEQUENTIAL_PARALLEL),
        ("rich", Strategy::Sequential(SequentialMode::SharedSeries), RICH_SEQUENTIAL_SHARED),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, strategy, expected) in checks {
        let env = if name == "rich" { &rich } else { &poor };
        let t = base[&(name.to_string(), strategy_tag(strategy))].depletion_time().unwrap();
        let o = strategy_oracle_time(env, strategy).unwrap().total;
        let err = rel(t, expected);
        ok &= err <= REL_TOL && rel(o, expected) < 1e-8;
        parts.push(format!("{name}/{}: {t:.4} vs {expected:.4} ({err:.1e})", strategy.display_name()));
    }
    gate.record("AC2 oracle agreement (totals)", ok, parts.join("; "));

    // 3. First-order convergence when dt is halved.
    let half = runs(&envs, DT / 2.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, env) in &envs {
        for strategy in Strategy::ALL {
            let key = (name.to_string(), strategy_tag(strategy));
            let o = strategy_oracle_time(env, strategy).unwrap().total;
            let e1 = (base[&key].depletion_time().unwrap() - o).abs();
            let e2 = (half[&key].depletion_time().unwrap() - o).abs();
            let ratio = e2 / e1;
            ok &= ratio >= RATIO_RANGE.0 && ratio <= RATIO_RANGE.1;
            parts.push(format!("{name}/{}={ratio:.3}", strategy.display_name()));
        }
    }
    gate.record("AC3 convergence ratio in [0.3, 0.7]", ok, parts.join(", "));

    // 4. Conservation and monotonicity over every recorded step.
    let mut worst_v: f64 = 0.0;
    let mut bounded = true;
    let mut monotone = true;
    for ((name, _), trace) in &base {
        let env = if name == "rich" { &rich } else { &poor };
        let params = env.params();
        let mut prev: Option<&memforage::StepRecord> = None;
        for r in trace.records.iter().chain(std::iter::once(&trace.terminal)) {
            for branch in trace.topology_of(r).branches() {
                let sum: f64 = branch.iter().map(|&i| r.voltage[i]).sum();
                worst_v = worst_v.max(rel(sum, trace.supply_v));
            }
            for (i, p) in params.iter().enumerate() {
                bounded &= r.memristance[i] >= p.r_on && r.memristance[i] <= p.r_off;
            }
            if let Some(p) = prev {
                monotone &= r.delivered >= p.delivered;
                monotone &= (0..params.len()).all(|i| r.memristance[i] >= p.memristance[i] && r.q[i] >= p.q[i]);
            }
            prev = Some(r);
        }
    }
    gate.record(
        "AC4 conservation and monotonicity",
        worst_v <= CONSERVATION_TOL && bounded && monotone,
        format!("max branch voltage rel dev {worst_v:.1e}; M within bounds: {bounded}; M, q, delivered nondecreasing: {monotone}"),
    );

    // 5. Static series branch: clamp order is descending M(0).
    let descending = |env: &Environment, trace: &SimulationTrace| {
        let order = trace.depletion_order();
        order.len() == env.sites.len() && order.windows(2).all(|w| env.sites[w[0]].m0 > env.sites[w[1]].m0)
    };
    let mut ok = descending(&rich, &base[&("rich".into(), strategy_tag(Strategy::AllSites))])
        && descending(&poor, &base[&("poor".into(), strategy_tag(Strategy::AllSites))]);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut random_ok = 0;
    for k in 0..100 {
        let mut m0: Vec<f64> = Vec::new();
        while m0.len() < 5 {
            let candidate: f64 = rng.random_range(0.5..99.0);
            if m0.iter().all(|&m| (m - candidate).abs() > 1e-3) {
                m0.push(candidate);
            }
        }
        let env = Environment {
            sites: m0.iter().enumerate().map(|(i, &m0)| SiteSpec { label: format!("r{k}_{i}"), m0 }).collect(),
            ..rich.clone()
        };
        let trace = env.simulate(Strategy::AllSites, &RunOptions { dt: 1e-2, ..env.run_options() }).unwrap();
        if descending(&env, &trace) {
            random_ok += 1;
        }
    }
    ok &= random_ok == 100;
    gate.record(
        "AC5 series depletion order is descending M(0)",
        ok,
        format!("both presets + {random_ok}/100 randomized 5-site environments"),
    );

    // 6. Directional relations.
    let half_time = |name: &str, s: Strategy| {
        metrics::time_to_fraction(&base[&(name.to_string(), strategy_tag(s))], 0.5).unwrap()
    };
    let leaf_half = half_time("rich", Strategy::Leafcutter);
    let all_half = half_time("rich", Strategy::AllSites);
    let poor_leaf = base[&("poor".into(), strategy_tag(Strategy::Leafcutter))].depletion_time().unwrap();
    let poor_all = base[&("poor".into(), strategy_tag(Strategy::AllSites))].depletion_time().unwrap();
    gate.record(
        "AC6a rich time-to-50%: Leafcutter < All Sites",
        leaf_half < all_half,
        format!("{leaf_half:.3} vs {all_half:.3}"),
    );
    gate.record(
        "AC6b poor depletion: Leafcutter < All Sites",
        poor_leaf < poor_all && rel(poor_leaf, POOR_LEAFCUTTER) <= REL_TOL,
        format!("{poor_leaf:.3} vs {poor_all:.3}"),
    );

    // 7. Documented Sequential divergence in the comparison report.
    let cmp = metrics::compare(&rich, &Strategy::ALL, &CompareOptions::for_environment(&rich)).unwrap();
    let seq: Vec<&metrics::Relation> =
        cmp.relations.iter().filter(|r| r.claim.starts_with("Sequential slower than All Sites")).collect();
    let both_modes = [SequentialMode::ParallelResidual, SequentialMode::SharedSeries]
        .iter()
        .all(|m| seq.iter().any(|r| r.claim.contains(&m.to_string()) && r.verdict == Verdict::Disagree));
    let shows_times = seq.iter().all(|r| r.implemented.chars().any(|c| c.is_ascii_digit()));
    gate.record(
        "AC7 Sequential-vs-All-Sites divergence reported",
        seq.len() == 2 && both_modes && shows_times,
        seq.iter().map(|r| r.line()).collect::<Vec<_>>().join(" | "),
    );

    // 8. Supply scaling.
    let mut worst: f64 = 0.0;
    for (name, env) in &envs {
        for strategy in Strategy::ALL {
            let check = validation::check_supply_scaling(name, env, strategy, 2.0).unwrap();
            worst = worst.max(check.max_rel_deviation);
        }
    }
    gate.record(
        "AC8 supply x2 with dt/2 halves depletion times",
        worst <= SCALING_TOL,
        format!("max rel deviation {worst:.1e} (tol {SCALING_TOL:.0e})"),
    );

    // 9. Normalization at the depletion step.
    let mut worst: f64 = 0.0;
    for trace in base.values().chain(half.values()) {
        let d = trace.depletion_step().unwrap();
        worst = worst.max((metrics::cumulative_fraction(trace, d).unwrap() - 1.0).abs());
    }
    gate.record(
        "AC9 cumulative fraction is 1 at depletion",
        worst <= NORMALIZATION_TOL,
        format!("max |frac(D) - 1| = {worst:.1e} over {} runs", base.len() + half.len()),
    );

    // 10. Determinism and scenario round-trip.
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    for (name, env) in &envs {
        for strategy in Strategy::ALL {
            let mut bytes = Vec::new();
            for k in 0..2 {
                let trace = env.simulate(strategy, &env.run_options()).unwrap();
                let csv = dir.path().join(format!("{name}_{k}.csv"));
                io::write_trace(&trace, &csv).unwrap();
                bytes.push(std::fs::read(&csv).unwrap());
            }
            identical &= bytes[0] == bytes[1];
        }
        let mut docs = Vec::new();
        for k in 0..2 {
            let cmp = metrics::compare(env, &Strategy::ALL, &CompareOptions::for_environment(env)).unwrap();
            let json = dir.path().join(format!("{name}_{k}.json"));
            io::write_summary(&cmp, &json).unwrap();
            docs.push(std::fs::read(&json).unwrap());
        }
        identical &= docs[0] == docs[1];
    }
    let mut round_trip = true;
    for (name, env) in &envs {
        let path = dir.path().join(format!("{name}_scenario.json"));
        scenario::save_scenario(env, &path).unwrap();
        round_trip &= scenario::load_scenario(&path).unwrap() == *env;
    }
    gate.record(
        "AC10 determinism and scenario round-trip",
        identical && round_trip,
        format!("byte-identical CSV/JSON: {identical}; write-then-load equal: {round_trip}"),
    );

    let failed: Vec<&str> = gate.results.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
    println!("acceptance: {}/{} criteria passed", gate.results.len() - failed.len(), gate.results.len());
    if !failed.is_empty() {
        eprintln!("failed: {failed:?}");
        std::process::exit(1);
    }
}

mod chart;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use memforage::circuit::{RunOptions, SimulationTrace};
use memforage::metrics::{self, CompareOptions, Comparison, DEFAULT_SURGE_WINDOW};
use memforage::scenario::{self, Environment, PRESET_NAMES};
use memforage::strategy::{SequentialMode, Strategy, StrategyKind};
use memforage::validation::{self, Tolerances};
use memforage::{io, oracle};

use chart::{LineChart, Series};

const EXIT_USAGE: u8 = 1;
const EXIT_INCOMPLETE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

#[derive(Parser)]
#[command(name = "memforage", version, about = "Memristor-network models of gatherer allocation strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one strategy to full depletion and write its trace.
    Run(RunArgs),
    /// Run every strategy on one environment and report orderings.
    Compare(CompareArgs),
    /// Check the numerical engine against the closed-form solution.
    Validate(ValidateArgs),
    /// Emit SVG charts from traces or fresh runs.
    Plot(PlotArgs),
    /// List the built-in environments, or write one as a scenario file.
    Presets(PresetsArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ScenarioSource {
    /// Built-in environment (rich, poor).
    #[arg(long)]
    preset: Option<String>,
    /// JSON scenario file.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct OptionalScenarioSource {
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Args)]
struct Overrides {
    /// Integration step (reduced time units).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    max_steps: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    AllSites,
    Sequential,
    Leafcutter,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeqModeArg {
    ParallelResidual,
    SharedSeries,
}

impl From<SeqModeArg> for SequentialMode {
    fn from(m: SeqModeArg) -> Self {
        match m {
            SeqModeArg::ParallelResidual => SequentialMode::ParallelResidual,
            SeqModeArg::SharedSeries => SequentialMode::SharedSeries,
        }
    }
}

fn strategy_of(kind: StrategyArg, mode: SeqModeArg) -> Strategy {
    let kind = match kind {
        StrategyArg::AllSites => StrategyKind::AllSites,
        StrategyArg::Sequential => StrategyKind::Sequential,
        StrategyArg::Leafcutter => StrategyKind::Leafcutter,
    };
    Strategy::from_parts(kind, mode.into())
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: ScenarioSource,
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "parallel-residual")]
    seq_mode: SeqModeArg,
    #[command(flatten)]
    overrides: Overrides,
    /// Keep one trace row every N steps.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    record_every: u64,
    /// Trace CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary JSON output.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Per-site voltage chart (SVG).
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    source: ScenarioSource,
    #[command(flatten)]
    overrides: Overrides,
    /// Early-time window for the reported surge fraction.
    #[arg(long, default_value_t = DEFAULT_SURGE_WINDOW)]
    surge_window: f64,
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Cumulative-fraction chart (SVG).
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Defaults to both built-in environments.
    #[command(flatten)]
    source: OptionalScenarioSource,
    #[arg(long, default_value_t = scenario::DEFAULT_DT)]
    dt: f64,
    /// Supply multiplier for the scaling check (dt is divided by it).
    #[arg(long, default_value_t = 2.0)]
    supply_scale: f64,
    /// JSON report output.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    /// Voltage across each site against time.
    Voltage,
    /// Gathered fraction against time, one curve per strategy.
    Cumulative,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, value_enum)]
    kind: PlotKind,
    /// Trace CSV written by `run`; repeat for several cumulative curves.
    #[arg(long = "trace", conflicts_with_all = ["preset", "scenario"])]
    traces: Vec<PathBuf>,
    #[command(flatten)]
    source: OptionalScenarioSource,
    /// Strategy for voltage charts of a fresh run.
    #[arg(long, value_enum, default_value = "all-sites")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "parallel-residual")]
    seq_mode: SeqModeArg,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    svg: PathBuf,
}

#[derive(Args)]
struct PresetsArgs {
    /// Preset to write with --out.
    #[arg(long, requires = "out")]
    name: Option<String>,
    /// Scenario JSON output.
    #[arg(long, requires = "name")]
    out: Option<PathBuf>,
}

fn load_environment(preset: &Option<String>, path: &Option<PathBuf>) -> anyhow::Result<(String, Environment)> {
    match (preset, path) {
        (Some(name), None) => Ok((name.clone(), scenario::preset(name)?)),
        (None, Some(path)) => Ok((path.display().to_string(), scenario::load_scenario(path)?)),
        _ => bail!("exactly one of --preset or --scenario is required"),
    }
}

fn apply_overrides(mut env: Environment, overrides: &Overrides) -> anyhow::Result<Environment> {
    if let Some(dt) = overrides.dt {
        env.dt = dt;
    }
    if let Some(max_steps) = overrides.max_steps {
        env.max_steps = max_steps;
    }
    env.validate()?;
    Ok(env)
}

fn fmt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "-".to_string(), |t| format!("{t:.4}"))
}

fn voltage_chart(title: &str, trace: &SimulationTrace) -> LineChart {
    let series = trace
        .labels
        .iter()
        .enumerate()
        .map(|(i, label)| Series {
            name: label.clone(),
            points: trace
                .records
                .iter()
                .chain(std::iter::once(&trace.terminal))
                .map(|r| (r.time, r.voltage[i]))
                .collect(),
        })
        .collect();
    LineChart { title: title.into(), x_label: "time".into(), y_label: "voltage across site".into(), series }
}

fn write_svg(path: &Path, chart: &LineChart) -> anyhow::Result<()> {
    std::fs::write(path, chart.to_svg()).with_context(|| format!("writing {}", path.display()))
}

fn run_command(args: RunArgs) -> anyhow::Result<ExitCode> {
    let (name, env) = load_environment(&args.source.preset, &args.source.scenario)?;
    let env = apply_overrides(env, &args.overrides)?;
    let strategy = strategy_of(args.strategy, args.seq_mode);
    let options = RunOptions { record_every: args.record_every, ..env.run_options() };
    let trace = env.simulate(strategy, &options)?;
    let summary = metrics::summarize(&trace, strategy, DEFAULT_SURGE_WINDOW);

    println!("environment: {name} ({} sites), strategy: {}, dt = {}", env.sites.len(), strategy.display_name(), env.dt);
    match (summary.depletion_step, summary.depletion_time) {
        (Some(step), Some(time)) => println!("status: completed at step {step}, D = {time:.6}"),
        _ => println!("status: INCOMPLETE after {} steps", summary.steps),
    }
    let phases: Vec<String> = summary.phase_durations.iter().map(|d| format!("{d:.4}")).collect();
    println!("phase times: {}", phases.join(" / "));
    if let Ok(oracle) = oracle::strategy_oracle_time(&env, strategy) {
        let exact: Vec<String> = oracle.phases.iter().map(|p| format!("{:.4}", p.duration)).collect();
        println!("exact phase times: {} (total {:.4})", exact.join(" / "), oracle.total);
    }
    println!("site depletion times:");
    let mut sites: Vec<_> = summary.site_depletion.iter().collect();
    sites.sort_by(|a, b| a.time.unwrap_or(f64::INFINITY).total_cmp(&b.time.unwrap_or(f64::INFINITY)));
    for site in sites {
        println!("  {:<12} {}", site.label, fmt_time(site.time));
    }
    if !summary.milestones.is_empty() {
        println!("milestones:");
        for m in &summary.milestones {
            println!("  {:>5.1}%  t = {:.4}", m.fraction * 100.0, m.time);
        }
    }
    println!("total delivered charge: {:.6}", summary.total_delivered);

    if let Some(path) = &args.out {
        io::write_trace(&trace, path)?;
        println!("trace: {}", path.display());
    }
    if let Some(path) = &args.summary {
        let doc = Comparison { preset: scenario::matching_preset(&env).map(str::to_string), summaries: vec![summary.clone()], relations: vec![] };
        io::write_summary(&doc, path)?;
        println!("summary: {}", path.display());
    }
    if let Some(path) = &args.svg {
        write_svg(path, &voltage_chart(&format!("{name}: {}", strategy.display_name()), &trace))?;
        println!("chart: {}", path.display());
    }
    Ok(if summary.completed { ExitCode::SUCCESS } else { ExitCode::from(EXIT_INCOMPLETE) })
}

fn compare_command(args: CompareArgs) -> anyhow::Result<ExitCode> {
    let (name, env) = load_environment(&args.source.preset, &args.source.scenario)?;
    let env = apply_overrides(env, &args.overrides)?;
    let options = CompareOptions { run: env.run_options(), surge_window: args.surge_window };
    let cmp = metrics::compare(&env, &Strategy::ALL, &options)?;

    println!("environment: {name}, dt = {}", env.dt);
    println!(
        "{:<32} {:>12} {:>10} {:>10} {:>10} {:>10} {:>12}",
        "strategy", "D", "t(25%)", "t(50%)", "t(75%)", "t(90%)", format!("frac@{}", args.surge_window)
    );
    for s in &cmp.summaries {
        println!(
            "{:<32} {:>12} {:>10} {:>10} {:>10} {:>10} {:>12}",
            s.strategy().display_name(),
            fmt_time(s.depletion_time),
            fmt_time(s.milestone(0.25)),
            fmt_time(s.milestone(0.5)),
            fmt_time(s.milestone(0.75)),
            fmt_time(s.milestone(0.9)),
            s.surge_fraction.map_or("-".into(), |f| format!("{f:.4}")),
        );
    }
    if cmp.relations.is_empty() {
        println!("no reference orderings for this environment");
    } else {
        println!("reference orderings:");
        for r in &cmp.relations {
            println!("  {}", r.line());
        }
    }
    if let Some(path) = &args.summary {
        io::write_summary(&cmp, path)?;
        println!("summary: {}", path.display());
    }
    if let Some(path) = &args.svg {
        let mut series = Vec::new();
        for strategy in Strategy::ALL {
            let trace = env.simulate(strategy, &env.run_options())?;
            if let Ok(points) = metrics::cumulative_curve(&trace) {
                series.push(Series { name: strategy.display_name(), points });
            }
        }
        let chart = LineChart {
            title: format!("{name}: gathered fraction"),
            x_label: "time".into(),
            y_label: "fraction of resource gathered".into(),
            series,
        };
        write_svg(path, &chart)?;
        println!("chart: {}", path.display());
    }
    let complete = cmp.summaries.iter().all(|s| s.completed);
    Ok(if complete { ExitCode::SUCCESS } else { ExitCode::from(EXIT_INCOMPLETE) })
}

fn validate_command(args: ValidateArgs) -> anyhow::Result<ExitCode> {
    let environments: Vec<(String, Environment)> = match (&args.source.preset, &args.source.scenario) {
        (None, None) => PRESET_NAMES
            .iter()
            .map(|n| Ok((n.to_string(), scenario::preset(n)?)))
            .collect::<anyhow::Result<_>>()?,
        (preset, path) => vec![load_environment(preset, path)?],
    };
    if !(args.dt > 0.0 && args.dt.is_finite()) {
        bail!("--dt must be positive");
    }
    if !(args.supply_scale > 0.0 && args.supply_scale.is_finite()) {
        bail!("--supply-scale must be positive");
    }
    let tol = Tolerances::default();
    let report = validation::validate_all(&environments, args.dt, &tol, Some(args.supply_scale))?;

    println!(
        "tolerances: |t - t_exact| / t_exact <= {} at dt = {}; halving ratio in [{}, {}]",
        tol.rel_tol, args.dt, tol.ratio_range.0, tol.ratio_range.1
    );
    println!(
        "{:<10} {:<32} {:>12} {:>12} {:>10} {:>10} {:>10} {:>7} {:>6}",
        "env", "strategy", "exact", "engine", "abs err", "site rel", "err(dt/2)", "ratio", ""
    );
    for c in &report.cases {
        println!(
            "{:<10} {:<32} {:>12.4} {:>12} {:>10.2e} {:>10.2e} {:>10.2e} {:>7.3} {:>6}",
            c.environment,
            c.strategy,
            c.oracle_total,
            fmt_time(c.engine_total),
            c.abs_error,
            c.max_site_rel_error,
            c.abs_error_half,
            c.halving_ratio,
            if c.passed() { "PASS" } else { "FAIL" }
        );
    }
    println!("supply scaling (x{} with dt/{}):", args.supply_scale, args.supply_scale);
    for s in &report.scaling {
        println!(
            "  {:<10} {:<32} max rel dev {:.2e} {}",
            s.environment,
            s.strategy,
            s.max_rel_deviation,
            if s.passed { "PASS" } else { "FAIL" }
        );
    }
    if let Some(path) = &args.summary {
        io::write_summary(&report, path)?;
    }
    if report.passed() {
        println!("validation: PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("validation: FAIL");
        Ok(ExitCode::from(EXIT_VALIDATION))
    }
}

fn plot_command(args: PlotArgs) -> anyhow::Result<ExitCode> {
    let chart = if !args.traces.is_empty() {
        let tables = args
            .traces
            .iter()
            .map(|p| io::read_trace(p).map(|t| (p, t)))
            .collect::<Result<Vec<_>, _>>()?;
        match args.kind {
            PlotKind::Voltage => {
                if tables.len() != 1 {
                    bail!("a voltage chart takes exactly one --trace");
                }
                let (path, table) = &tables[0];
                LineChart {
                    title: format!("{}: voltage across each site", path.display()),
                    x_label: "time".into(),
                    y_label: "voltage across site".into(),
                    series: table
                        .labels
                        .iter()
                        .enumerate()
                        .map(|(i, label)| Series {
                            name: label.clone(),
                            points: table.time.iter().copied().zip(table.voltage[i].iter().copied()).collect(),
                        })
                        .collect(),
                }
            }
            PlotKind::Cumulative => LineChart {
                title: "gathered fraction".into(),
                x_label: "time".into(),
                y_label: "fraction of resource gathered".into(),
                series: tables
                    .iter()
                    .map(|(path, table)| Series {
                        name: path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into()),
                        points: table.time.iter().copied().zip(table.cum_frac.iter().copied()).filter(|p| p.1.is_finite()).collect(),
                    })
                    .collect(),
            },
        }
    } else {
        if args.source.preset.is_none() && args.source.scenario.is_none() {
            bail!("plot needs --trace files or one of --preset / --scenario");
        }
        let (name, env) = load_environment(&args.source.preset, &args.source.scenario)?;
        let env = apply_overrides(env, &args.overrides)?;
        match args.kind {
            PlotKind::Voltage => {
                let strategy = strategy_of(args.strategy, args.seq_mode);
                let trace = env.simulate(strategy, &env.run_options())?;
                voltage_chart(&format!("{name}: {}", strategy.display_name()), &trace)
            }
            PlotKind::Cumulative => {
                let mut series = Vec::new();
                for strategy in Strategy::ALL {
                    let trace = env.simulate(strategy, &env.run_options())?;
                    let points = metrics::cumulative_curve(&trace)
                        .with_context(|| format!("{} did not deplete the environment", strategy.display_name()))?;
                    series.push(Series { name: strategy.display_name(), points });
                }
                LineChart {
                    title: format!("{name}: gathered fraction"),
                    x_label: "time".into(),
                    y_label: "fraction of resource gathered".into(),
                    series,
                }
            }
        }
    };
    write_svg(&args.svg, &chart)?;
    println!("chart: {}", args.svg.display());
    Ok(ExitCode::SUCCESS)
}

fn presets_command(args: PresetsArgs) -> anyhow::Result<ExitCode> {
    if let (Some(name), Some(out)) = (&args.name, &args.out) {
        scenario::save_scenario(&scenario::preset(name)?, out)?;
        println!("wrote {name} to {}", out.display());
        return Ok(ExitCode::SUCCESS);
    }
    for name in PRESET_NAMES {
        let env = scenario::preset(name)?;
        let m0: Vec<String> = env.sites.iter().map(|s| format!("{}={}", s.label, s.m0)).collect();
        println!(
            "{name}: {} (r_off={}, beta={}, supply_v={}, dt={})",
            m0.join(" "),
            env.r_off,
            env.beta,
            env.supply_v,
            env.dt
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Compare(args) => compare_command(args),
        Command::Validate(args) => validate_command(args),
        Command::Plot(args) => plot_command(args),
        Command::Presets(args) => presets_command(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

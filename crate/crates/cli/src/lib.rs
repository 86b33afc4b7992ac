//! Command-line front end: explain plans, verify the optimality theorems,
//! run the filter break-even benchmark and compare optimizers on a
//! workload.

pub mod compare;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bvqo_core::executor::{
    breakeven_benchmark, exact_provider, generate_data, BenchConfig, Dataset,
};
use bvqo_core::{
    baseline_plan, classify, cout, filter_eliminations, load_catalog_file, optimize_join_graph,
    run_theorem_suite, theorem_suite_shapes, verify_theorem, CardinalityProvider, FilterCostModel,
    FilterMode, JoinGraph, OptimizerConfig, Plan, StatisticalProvider, Verdict,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "bvqo", version, about = "Bitvector-aware join ordering and verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the baseline and the bitvector-aware plan of a workload.
    Explain(ExplainArgs),
    /// Compare the candidate plans with exhaustive enumeration.
    Verify(VerifyArgs),
    /// Sweep the eliminated fraction of a single join's filter.
    Bench(BenchArgs),
    /// Execute baseline and bitvector-aware plans over a set of queries.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Seed for generated data.
    #[arg(long, env = "BVQO_SEED")]
    pub seed: Option<u64>,
    /// Minimum eliminated fraction for a filter to be kept.
    #[arg(long, default_value_t = 0.05, value_parser = parse_threshold)]
    pub threshold: f64,
    /// `perfect` or `lossy:<false positive rate>`.
    #[arg(long = "filter-mode", default_value = "perfect")]
    pub filter_mode: FilterMode,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub workload: PathBuf,
    /// Directory with one `<relation>.csv` per relation.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Verify this workload instead of the built-in shape suite.
    #[arg(long)]
    pub workload: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Largest relation count to enumerate.
    #[arg(long, default_value_t = bvqo_core::DEFAULT_CAP)]
    pub cap: usize,
    /// Datasets per suite shape.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long = "min-relations", default_value_t = 3)]
    pub min_relations: usize,
    #[arg(long = "max-relations", default_value_t = 7)]
    pub max_relations: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long = "fact-size", default_value_t = 100_000)]
    pub fact_size: usize,
    #[arg(long = "dim-size", default_value_t = 1_000)]
    pub dim_size: usize,
    /// Comma-separated eliminated fractions, or `start:stop:step`.
    #[arg(long, default_value = "0:0.95:0.05")]
    pub grid: String,
    /// Record wall-clock times.
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// A workload file or a directory of them.
    #[arg(long)]
    pub workload: PathBuf,
    /// Directory with one sub-directory of CSV tables per query.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|_| format!("invalid threshold `{s}`"))?;
    if !(0.0..=1.0).contains(&t) {
        return Err(format!("threshold {t} is outside [0, 1]"));
    }
    Ok(t)
}

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable or invalid inputs, unwritable outputs.
    Input(String),
    /// Optimization or execution failed on valid input.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Explain(a) => {
            let report = explain(&a)?;
            emit(&a.common, report)
        }
        Command::Verify(a) => verify(&a),
        Command::Bench(a) => bench(&a),
        Command::Compare(a) => {
            let report = compare::run(&a)?;
            emit(&a.common, report)
        }
    }
}

fn emit(common: &CommonArgs, text: String) -> Result<Outcome, CliError> {
    match &common.out {
        Some(path) => {
            write_file(path, &text)?;
            Ok(Outcome::default())
        }
        None => Ok(Outcome {
            stdout: text,
            ..Outcome::default()
        }),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

pub fn load_graph(path: &Path) -> Result<JoinGraph, CliError> {
    let catalog = load_catalog_file(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    JoinGraph::new(catalog).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Tables from `dir` when given, generated from `seed` otherwise.
pub fn load_data(graph: &JoinGraph, dir: Option<&Path>, seed: u64) -> Result<Dataset, CliError> {
    match dir {
        Some(d) => Dataset::load_dir(graph, d).map_err(input),
        None => generate_data(graph, seed).map_err(input),
    }
}

fn config(common: &CommonArgs) -> OptimizerConfig {
    OptimizerConfig {
        filter_mode: common.filter_mode,
        ..OptimizerConfig::default()
    }
}

pub fn cost_model(common: &CommonArgs) -> FilterCostModel {
    FilterCostModel {
        gate_threshold: common.threshold,
        ..FilterCostModel::default()
    }
}

#[derive(Serialize)]
struct PlanReport {
    explain: String,
    cout: f64,
    per_node: Vec<f64>,
    plan: Plan,
}

#[derive(Serialize)]
struct GateDecision {
    filter: usize,
    elimination: f64,
    kept: bool,
}

#[derive(Serialize)]
struct ExplainReport {
    workload: String,
    shape: String,
    provider: &'static str,
    baseline: PlanReport,
    aware: PlanReport,
    threshold: f64,
    gating: Vec<GateDecision>,
}

fn plan_report(plan: Plan, provider: &dyn CardinalityProvider) -> Result<PlanReport, CliError> {
    let report = cout(&plan, provider).map_err(internal)?;
    Ok(PlanReport {
        explain: plan.explain_with_cardinalities(&report.per_node),
        cout: report.total,
        per_node: report.per_node,
        plan,
    })
}

fn explain(a: &ExplainArgs) -> Result<String, CliError> {
    let graph = load_graph(&a.workload)?;
    let exact;
    let statistical;
    let (provider, name): (&dyn CardinalityProvider, _) = if a.data.is_some() || a.common.seed.is_some() {
        let data = load_data(&graph, a.data.as_deref(), a.common.seed.unwrap_or(0))?;
        exact = exact_provider(data, &graph);
        (&exact, "exact")
    } else {
        statistical = StatisticalProvider::new(&graph);
        (&statistical, "statistical")
    };
    let shape = classify(&graph).map_err(input)?;
    let baseline = baseline_plan(&graph, a.common.filter_mode).map_err(internal)?;
    let aware = optimize_join_graph(&graph, provider, &config(&a.common)).map_err(internal)?;
    let gating = filter_eliminations(&aware, provider)
        .map_err(internal)?
        .into_iter()
        .map(|(filter, elimination)| GateDecision {
            filter,
            elimination,
            kept: elimination >= a.common.threshold,
        })
        .collect();
    let report = ExplainReport {
        workload: a.workload.display().to_string(),
        shape: shape.to_string(),
        provider: name,
        baseline: plan_report(baseline, provider)?,
        aware: plan_report(aware, provider)?,
        threshold: a.common.threshold,
        gating,
    };
    if a.common.format == Format::Json {
        return Ok(to_json(&report));
    }
    let mut out = String::new();
    let _ = writeln!(out, "workload: {}", report.workload);
    let _ = writeln!(out, "relations: {}  shape: {}  cardinalities: {}", graph.len(), report.shape, report.provider);
    let _ = writeln!(out, "\nbaseline plan:\n{}", report.baseline.explain);
    let _ = writeln!(out, "bitvector-aware plan:\n{}", report.aware.explain);
    let _ = writeln!(out, "filter gating (threshold {}):", report.threshold);
    if report.gating.is_empty() {
        let _ = writeln!(out, "  (no filters)");
    }
    for g in &report.gating {
        let _ = writeln!(
            out,
            "  F{}: eliminates {:.4} -> {}",
            g.filter,
            g.elimination,
            if g.kept { "keep" } else { "drop" }
        );
    }
    Ok(out)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let mode = a.common.filter_mode;
    let mut lines = Vec::new();
    let mut reports = Vec::new();
    if let Some(path) = &a.workload {
        let graph = load_graph(path)?;
        if graph.len() > a.cap {
            return Err(CliError::Input(format!(
                "{} relations exceed the enumeration cap of {}",
                graph.len(),
                a.cap
            )));
        }
        let seed = a.common.seed.unwrap_or(0);
        let data = load_data(&graph, a.data.as_deref(), seed)?;
        let provider = exact_provider(data, &graph);
        let report = verify_theorem(&graph, &provider, mode, a.cap, Some(seed)).map_err(input)?;
        lines.push(format!("{} {}", path.display(), report.summary()));
        reports.push(serde_json::to_value(&report).expect("report serializes"));
        let verdicts = vec![report.verdict];
        return finish_verify(a, lines, reports, &verdicts);
    }
    if a.max_relations > a.cap {
        return Err(CliError::Input(format!(
            "suite shapes of up to {} relations exceed the enumeration cap of {}",
            a.max_relations, a.cap
        )));
    }
    let shapes = theorem_suite_shapes(a.min_relations, a.max_relations);
    let base = a.common.seed.unwrap_or(0);
    let seeds: Vec<u64> = (base..base + a.seeds).collect();
    let runs = run_theorem_suite(&shapes, &seeds, mode, a.cap).map_err(internal)?;
    let mut verdicts = Vec::new();
    for run in &runs {
        lines.push(format!("{} {}", run.shape.label(), run.report.summary()));
        reports.push(serde_json::to_value(run).expect("run serializes"));
        verdicts.push(run.report.verdict);
    }
    finish_verify(a, lines, reports, &verdicts)
}

fn finish_verify(
    a: &VerifyArgs,
    mut lines: Vec<String>,
    reports: Vec<serde_json::Value>,
    verdicts: &[Verdict],
) -> Result<Outcome, CliError> {
    let failures = verdicts.iter().filter(|&&v| v == Verdict::CounterexampleFound).count();
    let text = if a.common.format == Format::Json {
        to_json(&reports)
    } else {
        lines.push(format!(
            "runs={} holds={} counterexamples={} filter_mode={}",
            verdicts.len(),
            verdicts.len() - failures,
            failures,
            a.common.filter_mode
        ));
        lines.join("\n") + "\n"
    };
    let mut outcome = emit(&a.common, text)?;
    if failures > 0 && a.common.filter_mode == FilterMode::Perfect {
        outcome.code = 3;
    }
    Ok(outcome)
}

pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let bad = || format!("invalid grid `{spec}`");
    if let [start, stop, step] = spec.split(':').collect::<Vec<_>>()[..] {
        let (start, stop, step): (f64, f64, f64) = (
            start.parse().map_err(|_| bad())?,
            stop.parse().map_err(|_| bad())?,
            step.parse().map_err(|_| bad())?,
        );
        if step <= 0.0 || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

fn bench(a: &BenchArgs) -> Result<Outcome, CliError> {
    let config = BenchConfig {
        fact_size: a.fact_size,
        dim_size: a.dim_size,
        grid: parse_grid(&a.grid).map_err(CliError::Input)?,
        model: cost_model(&a.common),
        mode: a.common.filter_mode,
        timing: a.timing,
    };
    let report = breakeven_benchmark(&config).map_err(input)?;
    let body = match a.common.format {
        Format::Text => report.to_csv(),
        Format::Json => to_json(&report),
    };
    let summary = match report.break_even {
        Some(e) => format!(
            "break-even elimination: {e:.4} (fact={}, dim={}, probe cost {}, check cost {})\n",
            report.fact_size, report.dim_size, config.model.probe_cost, config.model.check_cost
        ),
        None => "break-even elimination: none on this grid\n".to_string(),
    };
    match &a.common.out {
        Some(path) => {
            write_file(path, &body)?;
            Ok(Outcome {
                stdout: summary,
                ..Outcome::default()
            })
        }
        None => Ok(Outcome {
            stdout: body,
            stderr: summary,
            code: 0,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0:0.95:0.05").unwrap().len(), 20);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("0, 0.25,0.5").unwrap(), vec![0.0, 0.25, 0.5]);
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("x").is_err());
    }

    #[test]
    fn threshold_range() {
        assert_eq!(parse_threshold("0.05").unwrap(), 0.05);
        assert!(parse_threshold("1.5").is_err());
    }
}

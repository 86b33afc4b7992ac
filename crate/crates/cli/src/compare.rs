//! Paired execution of the baseline and the bitvector-aware plan over a
//! set of queries.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bvqo_core::executor::{exact_provider, execute, tuple_breakdown, ExecOptions, TupleBreakdown};
use bvqo_core::{baseline_plan, gate_bitvectors, optimize_join_graph, JoinGraph, Plan};
use serde::Serialize;

use crate::{config, cost_model, internal, load_data, load_graph, to_json, CliError, CompareArgs, Format};

const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Serialize)]
pub struct QueryResult {
    pub query: String,
    pub relations: usize,
    pub baseline_cost: f64,
    pub aware_cost: f64,
    pub baseline_tuples: TupleBreakdown,
    pub aware_tuples: TupleBreakdown,
    /// Aware tuples per class divided by the baseline's total output.
    pub normalized: [f64; 3],
    pub result_rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupRollup {
    pub group: &'static str,
    pub queries: Vec<String>,
    pub baseline_cost: f64,
    pub aware_cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub seed: Option<u64>,
    pub threshold: f64,
    pub queries: Vec<QueryResult>,
    pub groups: Vec<GroupRollup>,
    pub baseline_total: f64,
    pub aware_total: f64,
    pub baseline_join_tuples: u64,
    pub aware_join_tuples: u64,
    /// Aware join-class tuples over baseline join-class tuples.
    pub join_tuple_ratio: f64,
}

fn workload_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = fs::read_dir(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Input(format!("no workload files in {}", path.display())));
    }
    Ok(files)
}

fn query_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn run_query(path: &Path, graph: &JoinGraph, a: &CompareArgs) -> Result<QueryResult, CliError> {
    let name = query_name(path);
    let dir = a.data.as_ref().map(|d| d.join(&name));
    let data = load_data(graph, dir.as_deref(), a.common.seed.unwrap_or(DEFAULT_SEED))?;
    let provider = exact_provider(data.clone(), graph);
    let model = cost_model(&a.common);
    let cfg = config(&a.common);
    let gate = |plan: Plan| gate_bitvectors(&plan, &model, &provider).map_err(internal);
    let baseline = gate(baseline_plan(graph, cfg.filter_mode).map_err(internal)?)?;
    let aware = gate(optimize_join_graph(graph, &provider, &cfg).map_err(internal)?)?;
    let opts = ExecOptions { cost: model, timing: false };
    let b = execute(&baseline, &data, &opts).map_err(internal)?;
    let w = execute(&aware, &data, &opts).map_err(internal)?;
    if b.rows != w.rows {
        return Err(CliError::Internal(format!("{name}: plans disagree on the result")));
    }
    let baseline_tuples = tuple_breakdown(&b.metrics);
    let aware_tuples = tuple_breakdown(&w.metrics);
    Ok(QueryResult {
        query: name,
        relations: graph.len(),
        baseline_cost: b.metrics.total_cost(),
        aware_cost: w.metrics.total_cost(),
        normalized: aware_tuples.normalized(&baseline_tuples),
        baseline_tuples,
        aware_tuples,
        result_rows: b.rows.len(),
    })
}

/// Splits queries into the cheapest third, the middle and the most
/// expensive third by baseline cost.
fn rollups(queries: &[QueryResult]) -> Vec<GroupRollup> {
    let mut order: Vec<&QueryResult> = queries.iter().collect();
    order.sort_by(|x, y| x.baseline_cost.total_cmp(&y.baseline_cost).then_with(|| x.query.cmp(&y.query)));
    let n = order.len();
    let cuts = [0, n / 3, n - n / 3, n];
    ["S", "M", "L"]
        .into_iter()
        .enumerate()
        .map(|(g, group)| {
            let members = &order[cuts[g]..cuts[g + 1]];
            GroupRollup {
                group,
                queries: members.iter().map(|q| q.query.clone()).collect(),
                baseline_cost: members.iter().map(|q| q.baseline_cost).sum(),
                aware_cost: members.iter().map(|q| q.aware_cost).sum(),
            }
        })
        .collect()
}

pub fn compare(a: &CompareArgs) -> Result<CompareReport, CliError> {
    let mut queries = Vec::new();
    for path in workload_files(&a.workload)? {
        let graph = load_graph(&path)?;
        queries.push(run_query(&path, &graph, a)?);
    }
    let baseline_join_tuples: u64 = queries.iter().map(|q| q.baseline_tuples.join).sum();
    let aware_join_tuples: u64 = queries.iter().map(|q| q.aware_tuples.join).sum();
    Ok(CompareReport {
        seed: a.common.seed,
        threshold: a.common.threshold,
        groups: rollups(&queries),
        baseline_total: queries.iter().map(|q| q.baseline_cost).sum(),
        aware_total: queries.iter().map(|q| q.aware_cost).sum(),
        join_tuple_ratio: if baseline_join_tuples == 0 {
            1.0
        } else {
            aware_join_tuples as f64 / baseline_join_tuples as f64
        },
        baseline_join_tuples,
        aware_join_tuples,
        queries,
    })
}

fn ratio(aware: f64, baseline: f64) -> f64 {
    if baseline == 0.0 {
        1.0
    } else {
        aware / baseline
    }
}

pub fn render(report: &CompareReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>4} {:>14} {:>14} {:>7} {:>10} {:>10} {:>10} {:>10}",
        "query", "rels", "baseline", "aware", "ratio", "b_leaf", "b_join", "a_leaf", "a_join"
    );
    for q in &report.queries {
        let _ = writeln!(
            out,
            "{:<8} {:>4} {:>14.1} {:>14.1} {:>7.3} {:>10} {:>10} {:>10} {:>10}",
            q.query,
            q.relations,
            q.baseline_cost,
            q.aware_cost,
            ratio(q.aware_cost, q.baseline_cost),
            q.baseline_tuples.leaf,
            q.baseline_tuples.join,
            q.aware_tuples.leaf,
            q.aware_tuples.join
        );
    }
    let _ = writeln!(out);
    for g in &report.groups {
        let _ = writeln!(
            out,
            "group {}: {} queries  baseline {:.1}  aware {:.1}  ratio {:.3}",
            g.group,
            g.queries.len(),
            g.baseline_cost,
            g.aware_cost,
            ratio(g.aware_cost, g.baseline_cost)
        );
    }
    let _ = writeln!(
        out,
        "total: baseline {:.1}  aware {:.1}  ratio {:.3}",
        report.baseline_total,
        report.aware_total,
        ratio(report.aware_total, report.baseline_total)
    );
    let _ = writeln!(
        out,
        "join tuples: baseline {}  aware {}  ratio {:.3}",
        report.baseline_join_tuples, report.aware_join_tuples, report.join_tuple_ratio
    );
    out
}

pub fn run(a: &CompareArgs) -> Result<String, CliError> {
    let report = compare(a)?;
    Ok(match a.common.format {
        Format::Text => render(&report),
        Format::Json => to_json(&report),
    })
}

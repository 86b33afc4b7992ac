//! Brute-force ground truth over the space of right-deep plans without
//! cross products.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::catalog::{Catalog, JoinEdge, PkFk, Relation};
use crate::cost_model::{cout, CardinalityProvider, CostError};
use crate::executor::{exact_provider, generate_data, ExecError};
use crate::join_graph::{bit, classify, extract_snowflake, GraphError, JoinGraph, RelSet, Shape};
use crate::optimizer::{theorem_candidates, OptimizerError};
use crate::plan::{is_partially_ordered, FilterMode, Plan, PlanError};

pub const DEFAULT_CAP: usize = 8;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{relations} relations exceed the enumeration cap of {cap}")]
    CapExceeded { relations: usize, cap: usize },
    #[error("verification needs a star, branch or snowflake query, found {0}")]
    Classification(Shape),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Data(#[from] ExecError),
}

fn check_cap(graph: &JoinGraph, cap: usize) -> Result<(), OracleError> {
    if graph.len() > cap {
        return Err(OracleError::CapExceeded {
            relations: graph.len(),
            cap,
        });
    }
    Ok(())
}

/// Every order `X0..Xn` (rightmost leaf first) in which each relation joins
/// some earlier one.
pub fn right_deep_orders(graph: &JoinGraph, cap: usize) -> Result<Vec<Vec<usize>>, OracleError> {
    check_cap(graph, cap)?;
    fn extend(graph: &JoinGraph, prefix: &mut Vec<usize>, taken: RelSet, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == graph.len() {
            out.push(prefix.clone());
            return;
        }
        for r in 0..graph.len() {
            if taken & bit(r) == 0 && (prefix.is_empty() || graph.connects(taken, bit(r))) {
                prefix.push(r);
                extend(graph, prefix, taken | bit(r), out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    if !graph.is_empty() {
        extend(graph, &mut Vec::new(), 0, &mut out);
    }
    Ok(out)
}

/// Lazily builds every right-deep plan without cross products, filters
/// pushed down in `mode`.
pub fn enumerate_right_deep_no_cp<'g>(
    graph: &'g JoinGraph,
    cap: usize,
    mode: FilterMode,
) -> Result<impl Iterator<Item = Plan> + 'g, OracleError> {
    let orders = right_deep_orders(graph, cap)?;
    Ok(orders.into_iter().map(move |order| {
        let names: Vec<&str> = order.iter().map(|&i| graph.name(i)).collect();
        Plan::right_deep(&names, graph)
            .expect("orders come from the graph")
            .with_filter_mode(mode)
    }))
}

/// Counts the same space by building a plan for every permutation and
/// rejecting those with a cross product.
pub fn naive_plan_count(graph: &JoinGraph, cap: usize) -> Result<usize, OracleError> {
    check_cap(graph, cap)?;
    fn permute(graph: &JoinGraph, names: &mut Vec<String>, k: usize, count: &mut usize) -> Result<(), PlanError> {
        if k == names.len() {
            if !Plan::right_deep(names, graph)?.has_cross_product() {
                *count += 1;
            }
            return Ok(());
        }
        for i in k..names.len() {
            names.swap(k, i);
            permute(graph, names, k + 1, count)?;
            names.swap(k, i);
        }
        Ok(())
    }
    let mut names: Vec<String> = (0..graph.len()).map(|i| graph.name(i).to_string()).collect();
    let mut count = 0;
    if !names.is_empty() {
        permute(graph, &mut names, 0, &mut count)?;
    }
    Ok(count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    TheoremHolds,
    CounterexampleFound,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::TheoremHolds => f.write_str("TheoremHolds"),
            Verdict::CounterexampleFound => f.write_str("CounterexampleFound"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub shape: Shape,
    pub relations: Vec<(String, u64)>,
    pub edges: Vec<String>,
}

impl GraphSummary {
    pub fn of(graph: &JoinGraph, shape: Shape) -> Self {
        Self {
            shape,
            relations: (0..graph.len())
                .map(|i| (graph.name(i).to_string(), graph.cardinality(i)))
                .collect(),
            edges: graph.edges().iter().map(ToString::to_string).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub graph: GraphSummary,
    pub seed: Option<u64>,
    pub filter_mode: String,
    pub plan_space_size: usize,
    pub candidate_count: usize,
    pub candidate_min: f64,
    pub candidate_plan: Vec<String>,
    pub global_min: f64,
    /// Right-deep order of the cheapest enumerated plan, rightmost first.
    pub witness_order: Vec<String>,
    pub witness_plan: Plan,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One-line summary.
    pub fn summary(&self) -> String {
        format!(
            "{} n={} seed={} plans={} candidates={} candidate_min={} global_min={} {}",
            self.graph.shape,
            self.graph.relations.len(),
            self.seed.map_or_else(|| "-".to_string(), |s| s.to_string()),
            self.plan_space_size,
            self.candidate_count,
            crate::plan::format_card(self.candidate_min),
            crate::plan::format_card(self.global_min),
            self.verdict
        )
    }
}

/// Compares the cheapest candidate of the graph's shape class with the
/// cheapest plan in the whole right-deep space.
pub fn verify_theorem(
    graph: &JoinGraph,
    provider: &dyn CardinalityProvider,
    mode: FilterMode,
    cap: usize,
    seed: Option<u64>,
) -> Result<VerificationReport, OracleError> {
    let shape = classify(graph)?;
    if !matches!(shape, Shape::Star | Shape::Branch | Shape::Snowflake) {
        return Err(OracleError::Classification(shape));
    }
    check_cap(graph, cap)?;
    let candidates = theorem_candidates(graph)?.with_filter_mode(mode);
    let (best_idx, candidate_min) = candidates
        .best(provider)?
        .expect("candidate sets are never empty");

    let mut plan_space_size = 0;
    let mut global: Option<(f64, Plan)> = None;
    for plan in enumerate_right_deep_no_cp(graph, cap, mode)? {
        plan_space_size += 1;
        let c = cout(&plan, provider)?.total;
        if global.as_ref().is_none_or(|(g, _)| c < *g) {
            global = Some((c, plan));
        }
    }
    let (global_min, witness_plan) = global.expect("non-empty plan space");
    Ok(VerificationReport {
        graph: GraphSummary::of(graph, shape),
        seed,
        filter_mode: mode.to_string(),
        plan_space_size,
        candidate_count: candidates.len(),
        candidate_min,
        candidate_plan: candidates.plans[best_idx].right_deep_order().unwrap_or_default(),
        global_min,
        witness_order: witness_plan.right_deep_order().unwrap_or_default(),
        witness_plan,
        verdict: if candidate_min == global_min {
            Verdict::TheoremHolds
        } else {
            Verdict::CounterexampleFound
        },
    })
}

/// Right-deep plans without cross products that have the fact rightmost
/// and every dimension after its parent.
pub fn partially_ordered_plans(graph: &JoinGraph, cap: usize) -> Result<Vec<Plan>, OracleError> {
    let shape = classify(graph)?;
    if !matches!(shape, Shape::Star | Shape::Branch | Shape::Snowflake) {
        return Err(OracleError::Classification(shape));
    }
    let snowflake = extract_snowflake(graph)?;
    let fact = graph.require(&snowflake.fact)?;
    let mut out = Vec::new();
    for order in right_deep_orders(graph, cap)? {
        if order[0] != fact {
            continue;
        }
        let names: Vec<&str> = order.iter().map(|&i| graph.name(i)).collect();
        let plan = Plan::right_deep(&names, graph)?.push_down_bitvectors();
        if is_partially_ordered(&plan, &snowflake, graph)? {
            out.push(plan);
        }
    }
    Ok(out)
}

/// True iff every partially-ordered fact-rightmost plan has the same C_out.
pub fn verify_equal_cost_class(
    graph: &JoinGraph,
    provider: &dyn CardinalityProvider,
    cap: usize,
) -> Result<bool, OracleError> {
    let mut first: Option<f64> = None;
    for plan in partially_ordered_plans(graph, cap)? {
        let c = cout(&plan, provider)?.total;
        match first {
            None => first = Some(c),
            Some(f) if f != c => return Ok(false),
            Some(_) => {}
        }
    }
    Ok(true)
}

/// A star, chain or snowflake by the lengths of its branches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteShape {
    pub kind: Shape,
    pub branch_lengths: Vec<usize>,
}

impl SuiteShape {
    pub fn relation_count(&self) -> usize {
        1 + self.branch_lengths.iter().sum::<usize>()
    }

    pub fn label(&self) -> String {
        let lens: Vec<String> = self.branch_lengths.iter().map(ToString::to_string).collect();
        format!("{}({})", self.kind, lens.join(","))
    }
}

/// Stars, chains and every snowflake branch-length partition (at least two
/// branches, one of them longer than a single relation) with a relation
/// count in `min..=max`.
pub fn theorem_suite_shapes(min: usize, max: usize) -> Vec<SuiteShape> {
    fn partitions(n: usize, largest: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=n.min(largest)).rev() {
            prefix.push(part);
            partitions(n - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut shapes = Vec::new();
    for total in min.max(2)..=max {
        let dims = total - 1;
        shapes.push(SuiteShape {
            kind: Shape::Star,
            branch_lengths: vec![1; dims],
        });
        if dims >= 2 {
            shapes.push(SuiteShape {
                kind: Shape::Branch,
                branch_lengths: vec![dims],
            });
        }
    }
    for total in min.max(2)..=max {
        let mut parts = Vec::new();
        partitions(total - 1, total - 1, &mut Vec::new(), &mut parts);
        for p in parts {
            if p.len() >= 2 && p[0] >= 2 {
                shapes.push(SuiteShape {
                    kind: Shape::Snowflake,
                    branch_lengths: p,
                });
            }
        }
    }
    shapes
}

/// Random PKFK graph of the given shape: fact `F`, branch `i` holding
/// `D{i}_1 -> D{i}_2 -> ..`. Cardinalities and foreign-key selectivities
/// are drawn from `seed`.
pub fn suite_graph(shape: &SuiteShape, seed: u64) -> JoinGraph {
    let mix = shape
        .label()
        .bytes()
        .fold(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15), |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    let mut rng = ChaCha8Rng::seed_from_u64(mix);
    let name = |b: usize, d: usize| format!("D{}_{}", b + 1, d + 1);
    let mut fact_cols = Vec::new();
    let mut relations = Vec::new();
    let mut edges = Vec::new();
    for (b, &len) in shape.branch_lengths.iter().enumerate() {
        for d in 0..len {
            let me = name(b, d);
            let parent = if d == 0 { "F".to_string() } else { name(b, d - 1) };
            let fk_col = format!("{parent}_{me}");
            if d == 0 {
                fact_cols.push(fk_col.clone());
            }
            let mut cols = vec![format!("{me}_id")];
            if d + 1 < len {
                cols.push(format!("{me}_{}", name(b, d + 1)));
            }
            relations.push(
                Relation::new(me.clone(), rng.gen_range(5..=60))
                    .with_columns(cols)
                    .with_key([format!("{me}_id")]),
            );
            let sel = rng.gen_range(10..=100) as f64 / 100.0;
            edges.push(
                JoinEdge::new(parent, me.clone(), [fk_col], [format!("{me}_id")])
                    .pkfk(PkFk::LeftToRight)
                    .selectivities(sel, 1.0),
            );
        }
    }
    relations.insert(0, Relation::new("F", rng.gen_range(100..=300)).with_columns(fact_cols));
    JoinGraph::new(Catalog::new(relations, edges).expect("generated catalog is valid"))
        .expect("generated graph is valid")
}

/// One verification run of the theorem suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteRun {
    pub shape: SuiteShape,
    pub report: VerificationReport,
}

/// Verifies every shape on a generated dataset per seed, in parallel.
/// Results come back in (shape, seed) order.
pub fn run_theorem_suite(
    shapes: &[SuiteShape],
    seeds: &[u64],
    mode: FilterMode,
    cap: usize,
) -> Result<Vec<SuiteRun>, OracleError> {
    let jobs: Vec<(&SuiteShape, u64)> = shapes
        .iter()
        .flat_map(|s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    jobs.par_iter()
        .map(|&(shape, seed)| {
            let graph = suite_graph(shape, seed);
            check_cap(&graph, cap)?;
            let provider = exact_provider(generate_data(&graph, seed)?, &graph);
            let report = verify_theorem(&graph, &provider, mode, cap, Some(seed))?;
            Ok(SuiteRun {
                shape: shape.clone(),
                report,
            })
        })
        .collect()
}

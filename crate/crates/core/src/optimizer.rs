//! Linear candidate plan sets for star, branch and snowflake queries, and
//! heuristic join ordering for arbitrary join graphs.

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{Catalog, JoinEdge, PkFk, Relation};
use crate::cost_model::{cout, CardinalityProvider, CostError, CostReport, FilterCostModel, FilterSpec};
use crate::join_graph::{
    bit, classify, extract_from, extract_snowflake, group_branches, members, Extraction, GraphError,
    JoinGraph, Priority, RelSet, Shape, SnowflakeShape,
};
use crate::plan::{FilterId, FilterMode, JoinTree, Plan, PlanError};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("expected a {expected} query, found {found}")]
    ShapeMismatch { expected: Shape, found: String },
    #[error("snowflake has non-conforming edges: {0}")]
    ResidualEdges(String),
    #[error("could not build the collapsed join graph: {0}")]
    Collapse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    StarTheorem,
    BranchTheorem,
    SnowflakeTheorem,
    Heuristic,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateSet {
    pub plans: Vec<Plan>,
    pub provenance: Provenance,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    /// Same plans with filters of `mode` pushed down.
    pub fn with_filter_mode(&self, mode: FilterMode) -> CandidateSet {
        CandidateSet {
            plans: self.plans.iter().map(|p| p.with_filter_mode(mode)).collect(),
            provenance: self.provenance,
        }
    }

    pub fn costs(&self, provider: &dyn CardinalityProvider) -> Result<Vec<f64>, CostError> {
        self.plans.iter().map(|p| cout(p, provider).map(|r| r.total)).collect()
    }

    /// Index and cost of the cheapest plan; the first one wins ties.
    pub fn best(&self, provider: &dyn CardinalityProvider) -> Result<Option<(usize, f64)>, CostError> {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.costs(provider)?.into_iter().enumerate() {
            if best.is_none_or(|(_, b)| c < b) {
                best = Some((i, c));
            }
        }
        Ok(best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Filter mode used while costing and for the returned plan.
    pub filter_mode: FilterMode,
    /// Order branches inside a priority group by descending eliminated
    /// fraction on the fact table; ascending when false.
    pub elimination_descending: bool,
    /// Among groups of connected branches, join larger groups first.
    pub larger_p2_first: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            filter_mode: FilterMode::Perfect,
            elimination_descending: true,
            larger_p2_first: true,
        }
    }
}

fn plans_from_orders(orders: Vec<Vec<String>>, graph: &JoinGraph) -> Result<Vec<Plan>, OptimizerError> {
    orders
        .iter()
        .map(|o| Ok(Plan::right_deep(o, graph)?.push_down_bitvectors()))
        .collect()
}

fn require_conforming(shape: &SnowflakeShape) -> Result<(), OptimizerError> {
    if shape.is_conforming() {
        return Ok(());
    }
    let edges: Vec<String> = shape.residual_edges.iter().map(ToString::to_string).collect();
    Err(OptimizerError::ResidualEdges(edges.join(", ")))
}

/// The fact-rightmost plan plus, for every dimension, the plan with that
/// dimension rightmost and the fact directly above it.
pub fn star_candidates(shape: &SnowflakeShape, graph: &JoinGraph) -> Result<CandidateSet, OptimizerError> {
    if let Some(b) = shape.branches.iter().find(|b| b.len() != 1) {
        return Err(OptimizerError::ShapeMismatch {
            expected: Shape::Star,
            found: format!("a branch of {} relations", b.len()),
        });
    }
    require_conforming(shape)?;
    let dims: Vec<&String> = shape.branches.iter().flatten().collect();
    let mut orders = vec![std::iter::once(&shape.fact).chain(dims.iter().copied()).cloned().collect()];
    for k in 0..dims.len() {
        let mut order = vec![dims[k].clone(), shape.fact.clone()];
        order.extend(dims.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, d)| (*d).clone()));
        orders.push(order);
    }
    Ok(CandidateSet {
        plans: plans_from_orders(orders, graph)?,
        provenance: Provenance::StarTheorem,
    })
}

/// Candidates for a chain `chain[0] -> chain[1] -> ..`: the reversed chain,
/// then for each start `k` the suffix from `k` followed by the prefix in
/// reverse.
pub fn branch_candidates<S: AsRef<str>>(chain: &[S], graph: &JoinGraph) -> Result<CandidateSet, OptimizerError> {
    let names: Vec<String> = chain.iter().map(|s| s.as_ref().to_string()).collect();
    if names.is_empty() {
        return Err(PlanError::Empty.into());
    }
    let idx = names
        .iter()
        .map(|r| graph.require(r))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(w) = idx.windows(2).find(|w| !graph.points_to(w[0], w[1])) {
        return Err(OptimizerError::ShapeMismatch {
            expected: Shape::Branch,
            found: format!("no `->` link from `{}` to `{}`", graph.name(w[0]), graph.name(w[1])),
        });
    }
    let n = names.len() - 1;
    let mut orders = vec![names.iter().rev().cloned().collect::<Vec<_>>()];
    if n > 0 {
        for k in (0..n).rev() {
            let mut order: Vec<String> = names[k..].to_vec();
            order.extend(names[..k].iter().rev().cloned());
            orders.push(order);
        }
    }
    Ok(CandidateSet {
        plans: plans_from_orders(orders, graph)?,
        provenance: Provenance::BranchTheorem,
    })
}

/// The fact-rightmost plan with branches in order, plus for every branch
/// and every start position in it, the plan that begins with the branch
/// suffix, walks back up the branch to the fact and appends the remaining
/// branches.
pub fn snowflake_candidates(shape: &SnowflakeShape, graph: &JoinGraph) -> Result<CandidateSet, OptimizerError> {
    require_conforming(shape)?;
    let mut orders = vec![shape.relations()];
    for (i, branch) in shape.branches.iter().enumerate() {
        let others = shape
            .branches
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, b)| b.iter().cloned());
        let others: Vec<String> = others.collect();
        for k in 0..branch.len() {
            let mut order: Vec<String> = branch[k..].to_vec();
            order.extend(branch[..k].iter().rev().cloned());
            order.push(shape.fact.clone());
            order.extend(others.iter().cloned());
            orders.push(order);
        }
    }
    Ok(CandidateSet {
        plans: plans_from_orders(orders, graph)?,
        provenance: Provenance::SnowflakeTheorem,
    })
}

/// Candidate set matching the shape class of a connected PKFK graph.
pub fn theorem_candidates(graph: &JoinGraph) -> Result<CandidateSet, OptimizerError> {
    let shape = extract_snowflake(graph)?;
    match classify(graph)? {
        Shape::Star => star_candidates(&shape, graph),
        Shape::Branch => {
            let chain: Vec<String> = std::iter::once(shape.fact.clone())
                .chain(shape.branches.iter().flatten().cloned())
                .collect();
            branch_candidates(&chain, graph)
        }
        Shape::Snowflake => snowflake_candidates(&shape, graph),
        other => Err(OptimizerError::ShapeMismatch {
            expected: Shape::Snowflake,
            found: other.to_string(),
        }),
    }
}

/// A relation or an already optimized group of relations.
#[derive(Debug, Clone)]
struct Unit {
    name: String,
    tree: JoinTree,
    rels: RelSet,
    card: u64,
    optimized: bool,
}

impl Unit {
    fn is_base(&self) -> bool {
        matches!(self.tree, JoinTree::Scan(_))
    }
}

/// Join graph whose nodes are units over a fixed base graph.
struct Workspace<'a> {
    base: &'a JoinGraph,
    units: Vec<Unit>,
}

impl<'a> Workspace<'a> {
    fn new(base: &'a JoinGraph, set: RelSet) -> Self {
        let units = members(set)
            .map(|i| Unit {
                name: base.name(i).to_string(),
                tree: JoinTree::scan(base.name(i)),
                rels: bit(i),
                card: base.cardinality(i),
                optimized: false,
            })
            .collect();
        Self { base, units }
    }

    fn unit(&self, name: &str) -> Option<&Unit> {
        self.units.iter().find(|u| u.name == name)
    }

    fn rels_of<S: AsRef<str>>(&self, names: &[S]) -> RelSet {
        names
            .iter()
            .filter_map(|n| self.unit(n.as_ref()))
            .fold(0, |acc, u| acc | u.rels)
    }

    fn unit_of_base(&self, rel: usize) -> Option<usize> {
        self.units.iter().position(|u| u.rels & bit(rel) != 0)
    }

    /// Join graph over the current units. Composite units expose qualified
    /// columns and no key; an edge keeps its key direction only when it is
    /// a single base edge whose key side is a base unit.
    fn graph(&self) -> Result<JoinGraph, OptimizerError> {
        let base = self.base;
        let relations: Vec<Relation> = self
            .units
            .iter()
            .map(|u| {
                if u.is_base() {
                    let i = u.rels.trailing_zeros() as usize;
                    base.relation(i).clone()
                } else {
                    let cols = members(u.rels).flat_map(|i| {
                        let r = base.relation(i);
                        r.columns.iter().map(move |c| format!("{}.{}", r.name, c))
                    });
                    Relation::new(u.name.clone(), u.card).with_columns(cols.collect::<Vec<_>>())
                }
            })
            .collect();
        let mut pairs: Vec<((usize, usize), Vec<usize>)> = Vec::new();
        for e in 0..base.edges().len() {
            let (l, r) = base.ends(e);
            let (Some(a), Some(b)) = (self.unit_of_base(l), self.unit_of_base(r)) else {
                continue;
            };
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            match pairs.iter_mut().find(|(k, _)| *k == key) {
                Some((_, list)) => list.push(e),
                None => pairs.push((key, vec![e])),
            }
        }
        let edges = pairs
            .into_iter()
            .map(|((a, b), list)| self.unit_edge(a, b, &list))
            .collect();
        let catalog = Catalog::new(relations, edges).map_err(|e| OptimizerError::Collapse(e.to_string()))?;
        JoinGraph::new(catalog).map_err(Into::into)
    }

    fn unit_edge(&self, a: usize, b: usize, base_edges: &[usize]) -> JoinEdge {
        let base = self.base;
        let (ua, ub) = (&self.units[a], &self.units[b]);
        if ua.is_base() && ub.is_base() {
            return base.edge(base_edges[0]).clone();
        }
        let column = |u: &Unit, rel: usize, col: &str| {
            if u.is_base() {
                col.to_string()
            } else {
                format!("{}.{}", base.name(rel), col)
            }
        };
        let mut left_cols = Vec::new();
        let mut right_cols = Vec::new();
        let (mut sel_lr, mut sel_rl) = (1.0, 1.0);
        for &e in base_edges {
            let edge = base.edge(e);
            let (l, r) = base.ends(e);
            let (ra, rb, ca, cb) = if ua.rels & bit(l) != 0 {
                (l, r, &edge.left_cols, &edge.right_cols)
            } else {
                (r, l, &edge.right_cols, &edge.left_cols)
            };
            left_cols.extend(ca.iter().map(|c| column(ua, ra, c)));
            right_cols.extend(cb.iter().map(|c| column(ub, rb, c)));
            sel_lr *= edge.selectivity_from(base.name(ra)).unwrap_or(1.0);
            sel_rl *= edge.selectivity_from(base.name(rb)).unwrap_or(1.0);
        }
        let mut pkfk = PkFk::None;
        if let [e] = base_edges {
            let key = base.edge(*e).key_side();
            if ub.is_base() && key == Some(ub.name.as_str()) {
                pkfk = PkFk::LeftToRight;
            } else if ua.is_base() && key == Some(ua.name.as_str()) {
                pkfk = PkFk::RightToLeft;
            }
        }
        JoinEdge::new(ua.name.clone(), ub.name.clone(), left_cols, right_cols)
            .pkfk(pkfk)
            .selectivities(sel_lr.clamp(0.0, 1.0), sel_rl.clamp(0.0, 1.0))
    }

    /// Replaces unit scans with the trees they stand for.
    fn expand(&self, tree: &JoinTree) -> JoinTree {
        match tree {
            JoinTree::Scan(name) => self
                .unit(name)
                .map_or_else(|| tree.clone(), |u| u.tree.clone()),
            JoinTree::Join { build, probe } => JoinTree::join(self.expand(build), self.expand(probe)),
        }
    }

    fn cost(
        &self,
        unit_tree: &JoinTree,
        provider: &dyn CardinalityProvider,
        mode: FilterMode,
    ) -> Result<(JoinTree, Plan, CostReport), OptimizerError> {
        let tree = self.expand(unit_tree);
        let plan = Plan::from_tree(&tree, self.base)?.with_filter_mode(mode);
        let report = cout(&plan, provider)?;
        Ok((tree, plan, report))
    }

    /// Merges the units in `set` (indices into the current unit graph).
    fn collapse(&mut self, set: RelSet, tree: JoinTree, card: u64) {
        let picked: Vec<usize> = members(set).collect();
        let name = format!(
            "[{}]",
            picked.iter().map(|&i| self.units[i].name.as_str()).collect::<Vec<_>>().join(",")
        );
        let rels = picked.iter().fold(0, |acc, &i| acc | self.units[i].rels);
        let slot = picked[0];
        self.units[slot] = Unit {
            name,
            tree,
            rels,
            card,
            optimized: true,
        };
        for &i in picked[1..].iter().rev() {
            self.units.remove(i);
        }
    }
}

/// Eliminated fraction of the fact's rows under a filter built from the
/// whole branch.
fn branch_elimination(
    ws: &Workspace,
    fact: &str,
    branch: &[String],
    provider: &dyn CardinalityProvider,
    mode: FilterMode,
) -> Result<f64, CostError> {
    let target = ws.rels_of(&[fact]);
    let source = ws.rels_of(branch);
    let full = provider.filtered_cardinality(target, &[])?;
    if full <= 0.0 {
        return Ok(0.0);
    }
    match provider.filtered_cardinality(target, &[FilterSpec { source, mode }]) {
        Ok(kept) => Ok((1.0 - kept / full).clamp(0.0, 1.0)),
        Err(CostError::Unresolvable { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

fn sort_in(
    ws: &Workspace,
    graph: &JoinGraph,
    shape: &SnowflakeShape,
    provider: &dyn CardinalityProvider,
    config: &OptimizerConfig,
) -> Result<Vec<Vec<String>>, OptimizerError> {
    let groups = group_branches(shape, graph)?;
    let elim = shape
        .branches
        .iter()
        .map(|b| branch_elimination(ws, &shape.fact, b, provider, config.filter_mode))
        .collect::<Result<Vec<_>, _>>()?;
    let by_elim = |a: usize, b: usize| {
        let ord = elim[b].total_cmp(&elim[a]);
        if config.elimination_descending {
            ord
        } else {
            ord.reverse()
        }
    };
    let top = shape.relation_count() + 2;
    let mut ranked: Vec<(usize, Vec<usize>)> = groups
        .into_iter()
        .map(|g| {
            let mut members = g.branches;
            members.sort_by(|&a, &b| by_elim(a, b).then(a.cmp(&b)));
            let rank = if g.priority == Priority::P2 && !config.larger_p2_first {
                top - g.rank
            } else {
                g.rank
            };
            (rank, members)
        })
        .collect();
    ranked.sort_by(|(ra, a), (rb, b)| rb.cmp(ra).then_with(|| by_elim(a[0], b[0])).then(a[0].cmp(&b[0])));
    Ok(ranked
        .into_iter()
        .flat_map(|(_, m)| m)
        .map(|i| shape.branches[i].clone())
        .collect())
}

/// Branches ordered by descending group priority; branches of one group are
/// consecutive and ordered by their eliminated fraction on the fact.
pub fn sort_branches(
    shape: &SnowflakeShape,
    graph: &JoinGraph,
    provider: &dyn CardinalityProvider,
    config: &OptimizerConfig,
) -> Result<Vec<Vec<String>>, OptimizerError> {
    let ws = Workspace::new(graph, graph.all());
    sort_in(&ws, graph, shape, provider, config)
}

/// Extends `partial` (the fact scan when `None`) with every relation of
/// `branches` in order. A relation larger than the fact goes to the probe
/// side; otherwise it is the build side.
pub fn join_branches(
    branches: &[Vec<String>],
    fact: &str,
    partial: Option<JoinTree>,
    graph: &JoinGraph,
) -> Result<JoinTree, OptimizerError> {
    let fact_card = graph.cardinality(graph.require(fact)?);
    let mut plan = partial.unwrap_or_else(|| JoinTree::scan(fact));
    for t in branches.iter().flatten() {
        let card = graph.cardinality(graph.require(t)?);
        plan = if card > fact_card {
            JoinTree::join(plan, JoinTree::scan(t))
        } else {
            JoinTree::join(JoinTree::scan(t), plan)
        };
    }
    Ok(plan)
}

/// Order of `branch` starting at position `start`: each step takes the first
/// relation, from the rest of the branch and then back towards its entry,
/// that joins something already taken.
fn chain_from(graph: &JoinGraph, branch: &[String], start: usize) -> Result<Vec<String>, OptimizerError> {
    let mut pool: Vec<&String> = branch[start + 1..].iter().collect();
    pool.extend(branch[..start].iter().rev());
    let mut order = vec![branch[start].clone()];
    let mut taken = bit(graph.require(&branch[start])?);
    while !pool.is_empty() {
        let mut pick = 0;
        for (j, r) in pool.iter().enumerate() {
            if graph.connects(taken, bit(graph.require(r)?)) {
                pick = j;
                break;
            }
        }
        let r = pool.remove(pick);
        taken |= bit(graph.require(r)?);
        order.push(r.clone());
    }
    Ok(order)
}

/// Unit-level trees evaluated by the snowflake heuristic, baseline first.
fn heuristic_trees(
    graph: &JoinGraph,
    fact: &str,
    sorted: &[Vec<String>],
) -> Result<Vec<JoinTree>, OptimizerError> {
    let mut out = vec![join_branches(sorted, fact, None, graph)?];
    for (i, branch) in sorted.iter().enumerate() {
        let rest: Vec<Vec<String>> = sorted
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, b)| b.clone())
            .collect();
        for k in 0..branch.len() {
            let order = chain_from(graph, branch, k)?;
            let chain = JoinTree::right_deep(&order).ok_or(PlanError::Empty)?;
            let partial = JoinTree::join(JoinTree::scan(fact), chain);
            out.push(join_branches(&rest, fact, Some(partial), graph)?);
        }
    }
    Ok(out)
}

/// Cheapest heuristic tree; returns the expanded tree, its plan and cost.
fn optimize_shape(
    ws: &Workspace,
    graph: &JoinGraph,
    shape: &SnowflakeShape,
    provider: &dyn CardinalityProvider,
    config: &OptimizerConfig,
) -> Result<(JoinTree, Plan, f64), OptimizerError> {
    let sorted = sort_in(ws, graph, shape, provider, config)?;
    let mut best: Option<(JoinTree, Plan, f64)> = None;
    for tree in heuristic_trees(graph, &shape.fact, &sorted)? {
        let (tree, plan, report) = ws.cost(&tree, provider, config.filter_mode)?;
        if best.as_ref().is_none_or(|(_, _, c)| report.total < *c) {
            best = Some((tree, plan, report.total));
        }
    }
    Ok(best.expect("at least the baseline candidate"))
}

/// Every plan the snowflake heuristic evaluates, baseline first.
pub fn heuristic_candidates(
    shape: &SnowflakeShape,
    graph: &JoinGraph,
    provider: &dyn CardinalityProvider,
    config: &OptimizerConfig,
) -> Result<CandidateSet, OptimizerError> {
    let sorted = sort_branches(shape, graph, provider, config)?;
    let plans = heuristic_trees(graph, &shape.fact, &sorted)?
        .iter()
        .map(|t| Ok(Plan::from_tree(t, graph)?.with_filter_mode(config.filter_mode)))
        .collect::<Result<Vec<_>, OptimizerError>>()?;
    Ok(CandidateSet {
        plans,
        provenance: Provenance::Heuristic,
    })
}

/// Cheapest of the fact-rightmost plan and, per branch, the plans that
/// start with an optimized chain of that branch under the fact.
pub fn optimize_snowflake(
    shape: &SnowflakeShape,
    graph: &JoinGraph,
    provider: &dyn CardinalityProvider,
    config: &OptimizerConfig,
) -> Result<Plan, OptimizerError> {
    let ws = Workspace::new(graph, graph.all());
    Ok(optimize_shape(&ws, graph, shape, provider, config)?.1)
}

/// Repeatedly extracts a snowflake around the smallest unoptimized fact,
/// optimizes it and collapses it into one unit. Disconnected components
/// are optimized separately and combined by cross products, cheapest
/// first.
pub fn optimize_join_graph(
    graph: &JoinGraph,
    provider: &dyn CardinalityProvider,
    config: &OptimizerConfig,
) -> Result<Plan, OptimizerError> {
    if graph.is_empty() {
        return Err(GraphError::Empty.into());
    }
    let mut parts = Vec::new();
    for component in graph.components() {
        parts.push(optimize_component(graph, component, provider, config)?);
    }
    parts.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut parts = parts.into_iter();
    let first = parts.next().expect("non-empty graph").0;
    let tree = parts.fold(first, |acc, (t, _)| JoinTree::join(t, acc));
    Ok(Plan::from_tree(&tree, graph)?.with_filter_mode(config.filter_mode))
}

fn optimize_component(
    graph: &JoinGraph,
    component: RelSet,
    provider: &dyn CardinalityProvider,
    config: &OptimizerConfig,
) -> Result<(JoinTree, f64), OptimizerError> {
    let mut ws = Workspace::new(graph, component);
    while ws.units.len() > 1 {
        let units = ws.graph()?;
        let optimized = ws
            .units
            .iter()
            .enumerate()
            .filter(|(_, u)| u.optimized)
            .fold(0, |acc, (i, _)| acc | bit(i));
        match extract_from(&units, optimized) {
            Extraction::Shape(shape, set) => {
                let (tree, plan, _) = optimize_shape(&ws, &units, &shape, provider, config)?;
                let root = provider.node_cardinalities(&plan)?[0];
                ws.collapse(set, tree, root.max(0.0).round() as u64);
            }
            Extraction::Lone(f) => ws.units[f].optimized = true,
        }
    }
    let tree = ws.units[0].tree.clone();
    let (_, _, report) = ws.cost(&tree, provider, config.filter_mode)?;
    Ok((tree, report.total))
}

/// Eliminated fraction at the landing node of each filter, comparing the
/// plan with and without that filter.
pub fn filter_eliminations(
    plan: &Plan,
    provider: &dyn CardinalityProvider,
) -> Result<Vec<(FilterId, f64)>, CostError> {
    let with = provider.node_cardinalities(plan)?;
    plan.filters()
        .iter()
        .map(|f| {
            let without = provider.node_cardinalities(&plan.without_filter(f.id))?[f.landing_node];
            let e = if without > 0.0 {
                (without - with[f.landing_node]) / without
            } else {
                0.0
            };
            Ok((f.id, e))
        })
        .collect()
}

/// Drops every filter whose eliminated fraction is below the model's gate
/// threshold.
pub fn gate_bitvectors(
    plan: &Plan,
    model: &FilterCostModel,
    provider: &dyn CardinalityProvider,
) -> Result<Plan, CostError> {
    let keep: Vec<FilterId> = filter_eliminations(plan, provider)?
        .into_iter()
        .filter(|&(_, e)| e >= model.gate_threshold)
        .map(|(id, _)| id)
        .collect();
    Ok(plan.retain_filters(|f| keep.contains(&f.id)))
}

/// Right-deep plan in catalog order, skipping ahead to the first relation
/// that joins the prefix whenever the next one would be a cross product.
/// Filters are pushed down afterwards.
pub fn baseline_plan(graph: &JoinGraph, mode: FilterMode) -> Result<Plan, OptimizerError> {
    let mut rest: Vec<usize> = (0..graph.len()).collect();
    if rest.is_empty() {
        return Err(PlanError::Empty.into());
    }
    let mut taken = bit(rest.remove(0));
    let mut order = vec![graph.name(taken.trailing_zeros() as usize).to_string()];
    while !rest.is_empty() {
        let j = rest
            .iter()
            .position(|&r| graph.connects(taken, bit(r)))
            .unwrap_or(0);
        let r = rest.remove(j);
        taken |= bit(r);
        order.push(graph.name(r).to_string());
    }
    Ok(Plan::right_deep(&order, graph)?.with_filter_mode(mode))
}

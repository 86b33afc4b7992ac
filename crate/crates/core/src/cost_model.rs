//! C_out costing with bitvector-aware cardinalities and the per-filter
//! benefit model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::join_graph::{bit, members, JoinGraph, RelSet};
use crate::plan::{FilterId, FilterMode, NodeId, NodeKind, Plan};

#[derive(Debug, Error)]
pub enum CostError {
    #[error("filter from {source_rels:?} has no join columns against {target:?}")]
    Unresolvable {
        source_rels: Vec<String>,
        target: Vec<String>,
    },
    #[error("probe cost must be positive, got {0}")]
    NonPositiveProbeCost(f64),
    #[error("cardinality provider failed: {0}")]
    Provider(String),
}

/// A semi-join filter built from the join of `source` relations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub source: RelSet,
    pub mode: FilterMode,
}

impl FilterSpec {
    pub fn perfect(source: RelSet) -> Self {
        Self {
            source,
            mode: FilterMode::Perfect,
        }
    }
}

/// Answers cardinality questions about relations, joins and plans.
pub trait CardinalityProvider: Sync {
    /// Output cardinality of every plan node, indexed by node id, with the
    /// plan's filters in effect.
    fn node_cardinalities(&self, plan: &Plan) -> Result<Vec<f64>, CostError>;

    /// `|Join(target) / (F1, .., Fk)|` where each filter carries the keys of
    /// the unfiltered join of its source relations.
    fn filtered_cardinality(&self, target: RelSet, filters: &[FilterSpec]) -> Result<f64, CostError>;

    fn relation_cardinality(&self, rel: usize) -> f64;

    /// True when answers are true row counts.
    fn is_exact(&self) -> bool;
}

pub fn filtered_cardinality(
    provider: &dyn CardinalityProvider,
    target: RelSet,
    filters: &[FilterSpec],
) -> Result<f64, CostError> {
    provider.filtered_cardinality(target, filters)
}

/// Per-node filtered cardinalities and their sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub total: f64,
    pub per_node: Vec<f64>,
}

/// Sum of the filtered output cardinalities of every leaf and join.
pub fn cout(plan: &Plan, provider: &dyn CardinalityProvider) -> Result<CostReport, CostError> {
    let per_node = provider.node_cardinalities(plan)?;
    Ok(CostReport {
        total: per_node.iter().sum(),
        per_node,
    })
}

/// For each node, the filters applied inside its subtree whose creating join
/// lies outside it. Filters created inside a subtree do not change that
/// subtree's output.
pub fn external_filters(plan: &Plan) -> Vec<Vec<FilterId>> {
    let nodes = plan.nodes();
    let mut parent: Vec<Option<NodeId>> = vec![None; nodes.len()];
    for n in nodes {
        for c in n.children() {
            parent[c] = Some(n.id);
        }
    }
    let mut out = vec![Vec::new(); nodes.len()];
    for f in plan.filters() {
        let mut cur = Some(f.landing_node);
        while let Some(n) = cur {
            if n == f.source_join {
                break;
            }
            out[n].push(f.id);
            cur = parent[n];
        }
    }
    for list in &mut out {
        list.sort_unstable();
    }
    out
}

/// Per-tuple cost constants for the filter benefit analysis and simulated
/// execution costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterCostModel {
    /// Probing one tuple into a hash table.
    pub probe_cost: f64,
    /// Checking one tuple against a bitvector filter.
    pub check_cost: f64,
    /// Inserting one build tuple into a hash table.
    pub build_cost: f64,
    /// Inserting one build key into a bitvector filter.
    pub insert_cost: f64,
    /// Reading one base-table row.
    pub scan_cost: f64,
    /// Emitting one join output tuple.
    pub output_cost: f64,
    /// Minimum eliminated fraction for a filter to be kept.
    pub gate_threshold: f64,
}

impl Default for FilterCostModel {
    fn default() -> Self {
        Self {
            probe_cost: 10.0,
            check_cost: 1.0,
            build_cost: 10.0,
            insert_cost: 1.0,
            scan_cost: 1.0,
            output_cost: 1.0,
            gate_threshold: 0.05,
        }
    }
}

impl FilterCostModel {
    /// Eliminated fraction at which a filter starts paying off, `C_f / C_p`.
    pub fn break_even_elimination(&self) -> f64 {
        self.check_cost / self.probe_cost
    }
}

/// Cost of applying a filter minus the cost of not applying it, on a probe
/// input of `probe_cardinality` tuples of which the fraction `elimination`
/// is removed: `|S| * (C_f - e * C_p)`. Negative means the filter pays off.
pub fn filter_benefit(probe_cardinality: f64, elimination: f64, model: &FilterCostModel) -> f64 {
    probe_cardinality * (model.check_cost - elimination * model.probe_cost)
}

/// `1 - C_f / C_p` clamped to `[0, 1]`: the retained fraction below which a
/// filter pays off.
pub fn lambda_threshold(model: &FilterCostModel) -> Result<f64, CostError> {
    if model.probe_cost <= 0.0 || model.probe_cost.is_nan() {
        return Err(CostError::NonPositiveProbeCost(model.probe_cost));
    }
    Ok((1.0 - model.check_cost / model.probe_cost).clamp(0.0, 1.0))
}

/// Estimates from catalog statistics, assuming independence between
/// predicates and filters.
#[derive(Debug, Clone)]
pub struct StatisticalProvider {
    graph: JoinGraph,
}

impl StatisticalProvider {
    pub fn new(graph: &JoinGraph) -> Self {
        Self {
            graph: graph.clone(),
        }
    }

    fn directional(&self, from: usize, to: usize) -> f64 {
        self.graph
            .edge_between(from, to)
            .and_then(|e| self.graph.edge(e).selectivity_from(self.graph.name(from)))
            .unwrap_or(1.0)
    }

    /// Unfiltered join size estimate.
    pub fn join_estimate(&self, set: RelSet) -> f64 {
        let g = &self.graph;
        let mut est: f64 = members(set).map(|i| g.cardinality(i) as f64).product();
        for e in g.edges_within(set) {
            let edge = g.edge(e);
            let (l, r) = g.ends(e);
            let (lc, rc) = (g.cardinality(l) as f64, g.cardinality(r) as f64);
            let js = match edge.key_side() {
                Some(k) if k == edge.right => edge.selectivity_lr / rc,
                Some(_) => edge.selectivity_rl / lc,
                None => (edge.selectivity_lr * lc).max(edge.selectivity_rl * rc) / (lc * rc),
            };
            est *= if js.is_finite() { js } else { 0.0 };
        }
        est
    }

    /// Fraction of `start`'s rows that survive joining the rest of `set`,
    /// along a breadth-first spanning tree.
    fn pass_fraction(&self, start: usize, set: RelSet) -> f64 {
        let g = &self.graph;
        let mut seen = bit(start);
        let mut frontier = vec![start];
        let mut frac = 1.0;
        while let Some(u) = frontier.pop() {
            for &(v, _) in g.neighbors(u) {
                if set & bit(v) != 0 && seen & bit(v) == 0 {
                    seen |= bit(v);
                    frac *= self.directional(u, v);
                    frontier.push(v);
                }
            }
        }
        frac
    }

    /// Retained fraction of `target` under a filter from `source` whose
    /// own output is already scaled by `source_factor`.
    fn reduction(&self, source: RelSet, target: RelSet, mode: FilterMode, source_factor: f64) -> Result<f64, CostError> {
        if source & target != 0 {
            return Ok(1.0);
        }
        let g = &self.graph;
        let edges = g.edges_between(source, target);
        if edges.is_empty() {
            return Err(CostError::Unresolvable {
                source_rels: g.names_of(source),
                target: g.names_of(target),
            });
        }
        let mut r = source_factor;
        let mut sources = 0;
        for e in edges {
            let (l, rr) = g.ends(e);
            let (s, t) = if source & bit(l) != 0 { (l, rr) } else { (rr, l) };
            r *= self.directional(t, s);
            sources |= bit(s);
        }
        for s in members(sources) {
            r *= self.pass_fraction(s, source);
        }
        let r = r.clamp(0.0, 1.0);
        let fp = mode.false_positive_rate();
        Ok(r + fp * (1.0 - r))
    }
}

impl CardinalityProvider for StatisticalProvider {
    fn node_cardinalities(&self, plan: &Plan) -> Result<Vec<f64>, CostError> {
        let external = external_filters(plan);
        let mut factor: Vec<Option<f64>> = vec![None; plan.filters().len()];
        let mut out = Vec::with_capacity(plan.nodes().len());
        for n in plan.nodes() {
            let mut card = self.join_estimate(n.relations);
            for &fid in &external[n.id] {
                card *= self.filter_factor(plan, &external, fid, &mut factor)?;
            }
            out.push(card.max(0.0));
        }
        Ok(out)
    }

    fn filtered_cardinality(&self, target: RelSet, filters: &[FilterSpec]) -> Result<f64, CostError> {
        let mut card = self.join_estimate(target);
        for f in filters {
            card *= self.reduction(f.source, target, f.mode, 1.0)?;
        }
        Ok(card.max(0.0))
    }

    fn relation_cardinality(&self, rel: usize) -> f64 {
        self.graph.cardinality(rel) as f64
    }

    fn is_exact(&self) -> bool {
        false
    }
}

impl StatisticalProvider {
    fn filter_factor(
        &self,
        plan: &Plan,
        external: &[Vec<FilterId>],
        fid: FilterId,
        memo: &mut Vec<Option<f64>>,
    ) -> Result<f64, CostError> {
        let pos = plan
            .filters()
            .iter()
            .position(|f| f.id == fid)
            .expect("filter listed in plan");
        if let Some(v) = memo[pos] {
            return Ok(v);
        }
        let f = &plan.filters()[pos];
        let NodeKind::HashJoin { build, .. } = plan.node(f.source_join).kind else {
            unreachable!("filters are created by joins")
        };
        let mut source_factor = 1.0;
        for &g in &external[build] {
            source_factor *= self.filter_factor(plan, external, g, memo)?;
        }
        let v = self.reduction(plan.node(build).relations, f.probe_relations(), f.mode, source_factor)?;
        memo[pos] = Some(v);
        Ok(v)
    }
}

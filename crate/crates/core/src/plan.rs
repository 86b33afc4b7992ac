//! Hash-join plan trees annotated with bitvector filters.
//!
//! `T(X0, X1, .., Xn)` denotes the right-deep tree whose rightmost (deepest
//! probe) leaf is `X0` and whose build sides are `X1`, .., `Xn` from the
//! bottom up. Node ids are assigned in pre-order, build child before probe
//! child.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::join_graph::{bit, JoinGraph, RelSet, SnowflakeShape};

pub type NodeId = usize;
pub type FilterId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{0}` appears more than once")]
    DuplicateRelation(String),
    #[error("a plan needs at least one relation")]
    Empty,
    #[error("{0}")]
    Precondition(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ColumnRef {
    #[serde(skip)]
    pub rel: usize,
    pub relation: String,
    pub column: String,
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.relation, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JoinKey {
    pub build: ColumnRef,
    pub probe: ColumnRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum FilterMode {
    /// Exact key set: no false positives.
    #[default]
    Perfect,
    /// Bloom filter sized for the given false-positive rate in `[0, 1)`.
    Lossy(f64),
}

impl FilterMode {
    pub fn false_positive_rate(self) -> f64 {
        match self {
            FilterMode::Perfect => 0.0,
            FilterMode::Lossy(fp) => fp,
        }
    }
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterMode::Perfect => f.write_str("perfect"),
            FilterMode::Lossy(fp) => write!(f, "lossy:{fp}"),
        }
    }
}

impl std::str::FromStr for FilterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "perfect" {
            return Ok(FilterMode::Perfect);
        }
        let fp = s
            .strip_prefix("lossy:")
            .ok_or_else(|| format!("expected `perfect` or `lossy:<fp>`, got `{s}`"))?;
        let fp: f64 = fp
            .parse()
            .map_err(|_| format!("invalid false-positive rate `{fp}`"))?;
        if !(0.0..1.0).contains(&fp) {
            return Err(format!("false-positive rate {fp} is outside [0, 1)"));
        }
        Ok(FilterMode::Lossy(fp))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum NodeKind {
    Leaf {
        relation: String,
    },
    HashJoin {
        build: NodeId,
        probe: NodeId,
        keys: Vec<JoinKey>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanNode {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Relations produced by this subtree.
    #[serde(skip)]
    pub relations: RelSet,
    /// Filters applied at this operator (on its output for joins).
    pub applied_filters: Vec<FilterId>,
}

impl PlanNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn children(&self) -> Vec<NodeId> {
        match &self.kind {
            NodeKind::Leaf { .. } => Vec::new(),
            NodeKind::HashJoin { build, probe, .. } => vec![*build, *probe],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitvectorFilter {
    pub id: FilterId,
    pub source_join: NodeId,
    pub build_columns: Vec<ColumnRef>,
    pub probe_columns: Vec<ColumnRef>,
    pub landing_node: NodeId,
    pub mode: FilterMode,
}

impl BitvectorFilter {
    /// Relations owning the probe-side key columns.
    pub fn probe_relations(&self) -> RelSet {
        self.probe_columns.iter().fold(0, |acc, c| acc | bit(c.rel))
    }
}

/// Logical join tree used to build plans.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum JoinTree {
    Scan(String),
    Join {
        build: Box<JoinTree>,
        probe: Box<JoinTree>,
    },
}

impl JoinTree {
    pub fn scan(name: impl Into<String>) -> Self {
        JoinTree::Scan(name.into())
    }

    pub fn join(build: JoinTree, probe: JoinTree) -> Self {
        JoinTree::Join {
            build: Box::new(build),
            probe: Box::new(probe),
        }
    }

    /// `T(order[0], .., order[n])`.
    pub fn right_deep<S: AsRef<str>>(order: &[S]) -> Option<Self> {
        let (first, rest) = order.split_first()?;
        Some(rest.iter().fold(JoinTree::scan(first.as_ref()), |acc, r| {
            JoinTree::join(JoinTree::scan(r.as_ref()), acc)
        }))
    }

    pub fn leaves(&self) -> Vec<&str> {
        match self {
            JoinTree::Scan(r) => vec![r.as_str()],
            JoinTree::Join { build, probe } => {
                let mut out = build.leaves();
                out.extend(probe.leaves());
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    nodes: Vec<PlanNode>,
    filters: Vec<BitvectorFilter>,
    filter_mode: FilterMode,
}

impl Plan {
    /// Builds the plan for `tree` without any filters.
    pub fn from_tree(tree: &JoinTree, graph: &JoinGraph) -> Result<Plan, PlanError> {
        let mut plan = Plan {
            nodes: Vec::new(),
            filters: Vec::new(),
            filter_mode: FilterMode::Perfect,
        };
        let mut seen: RelSet = 0;
        plan.add(tree, graph, &mut seen)?;
        Ok(plan)
    }

    fn add(&mut self, tree: &JoinTree, graph: &JoinGraph, seen: &mut RelSet) -> Result<NodeId, PlanError> {
        let id = self.nodes.len();
        match tree {
            JoinTree::Scan(name) => {
                let i = graph
                    .index_of(name)
                    .ok_or_else(|| PlanError::UnknownRelation(name.clone()))?;
                if *seen & bit(i) != 0 {
                    return Err(PlanError::DuplicateRelation(name.clone()));
                }
                *seen |= bit(i);
                self.nodes.push(PlanNode {
                    id,
                    kind: NodeKind::Leaf {
                        relation: name.clone(),
                    },
                    relations: bit(i),
                    applied_filters: Vec::new(),
                });
            }
            JoinTree::Join { build, probe } => {
                self.nodes.push(PlanNode {
                    id,
                    kind: NodeKind::Leaf {
                        relation: String::new(),
                    },
                    relations: 0,
                    applied_filters: Vec::new(),
                });
                let b = self.add(build, graph, seen)?;
                let p = self.add(probe, graph, seen)?;
                let (bset, pset) = (self.nodes[b].relations, self.nodes[p].relations);
                let keys = join_keys(graph, bset, pset);
                self.nodes[id].kind = NodeKind::HashJoin {
                    build: b,
                    probe: p,
                    keys,
                };
                self.nodes[id].relations = bset | pset;
            }
        }
        Ok(id)
    }

    /// `T(order[0], .., order[n])` over `graph`, without filters.
    pub fn right_deep<S: AsRef<str>>(order: &[S], graph: &JoinGraph) -> Result<Plan, PlanError> {
        let tree = JoinTree::right_deep(order).ok_or(PlanError::Empty)?;
        Plan::from_tree(&tree, graph)
    }

    pub fn nodes(&self) -> &[PlanNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &PlanNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> &PlanNode {
        &self.nodes[0]
    }

    pub fn filters(&self) -> &[BitvectorFilter] {
        &self.filters
    }

    pub fn filter(&self, id: FilterId) -> Option<&BitvectorFilter> {
        self.filters.iter().find(|f| f.id == id)
    }

    pub fn filter_mode(&self) -> FilterMode {
        self.filter_mode
    }

    pub fn relations(&self) -> RelSet {
        self.nodes[0].relations
    }

    /// The filter created by join `node`, if it is still present.
    pub fn filter_created_by(&self, node: NodeId) -> Option<&BitvectorFilter> {
        self.filters.iter().find(|f| f.source_join == node)
    }

    /// True iff some join has no predicate between its inputs.
    pub fn has_cross_product(&self) -> bool {
        self.nodes.iter().any(|n| matches!(&n.kind, NodeKind::HashJoin { keys, .. } if keys.is_empty()))
    }

    /// True iff every build side is a single relation.
    pub fn is_right_deep(&self) -> bool {
        self.nodes.iter().all(|n| match n.kind {
            NodeKind::HashJoin { build, .. } => self.nodes[build].is_leaf(),
            NodeKind::Leaf { .. } => true,
        })
    }

    /// `[X0, .., Xn]` for a right-deep plan `T(X0, .., Xn)`.
    pub fn right_deep_order(&self) -> Option<Vec<String>> {
        let mut builds = Vec::new();
        let mut cur = 0;
        loop {
            match &self.nodes[cur].kind {
                NodeKind::Leaf { relation } => {
                    builds.push(relation.clone());
                    builds.reverse();
                    return Some(builds);
                }
                NodeKind::HashJoin { build, probe, .. } => {
                    let NodeKind::Leaf { relation } = &self.nodes[*build].kind else {
                        return None;
                    };
                    builds.push(relation.clone());
                    cur = *probe;
                }
            }
        }
    }

    /// Leaf relation names in pre-order.
    pub fn leaf_names(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.kind {
                NodeKind::Leaf { relation } => Some(relation.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Creates one filter per join and pushes each to the lowest operator
    /// whose output holds all of its probe-side key columns. Recomputes all
    /// filters from scratch.
    pub fn push_down_bitvectors(&self) -> Plan {
        let mut plan = self.clone();
        plan.filters.clear();
        for n in &mut plan.nodes {
            n.applied_filters.clear();
        }
        plan.push_node(0, Vec::new());
        plan
    }

    /// Same tree with filters of the given mode pushed down.
    pub fn with_filter_mode(&self, mode: FilterMode) -> Plan {
        let mut plan = self.clone();
        plan.filter_mode = mode;
        plan.push_down_bitvectors()
    }

    fn push_node(&mut self, id: NodeId, incoming: Vec<FilterId>) {
        let children = self.nodes[id].children();
        let mut pushed: Vec<Vec<FilterId>> = vec![Vec::new(); children.len()];
        if let NodeKind::HashJoin { keys, .. } = &self.nodes[id].kind {
            if !keys.is_empty() {
                let fid = self.filters.len();
                self.filters.push(BitvectorFilter {
                    id: fid,
                    source_join: id,
                    build_columns: keys.iter().map(|k| k.build.clone()).collect(),
                    probe_columns: keys.iter().map(|k| k.probe.clone()).collect(),
                    landing_node: id,
                    mode: self.filter_mode,
                });
                pushed[1].push(fid);
            }
        }
        let mut residual = Vec::new();
        for fid in incoming {
            let need = self.filters[fid].probe_relations();
            let fits: Vec<usize> = children
                .iter()
                .enumerate()
                .filter(|&(_, &c)| self.nodes[c].relations & need == need)
                .map(|(k, _)| k)
                .collect();
            match fits.as_slice() {
                [k] => pushed[*k].push(fid),
                _ => residual.push(fid),
            }
        }
        for &fid in &residual {
            self.filters[fid].landing_node = id;
        }
        residual.sort_unstable();
        self.nodes[id].applied_filters = residual;
        for (k, c) in children.into_iter().enumerate() {
            let list = std::mem::take(&mut pushed[k]);
            self.push_node(c, list);
        }
    }

    /// Copy of the plan with one filter removed.
    pub fn without_filter(&self, fid: FilterId) -> Plan {
        let mut plan = self.clone();
        plan.filters.retain(|f| f.id != fid);
        for n in &mut plan.nodes {
            n.applied_filters.retain(|&f| f != fid);
        }
        plan
    }

    /// Copy of the plan keeping only filters accepted by `keep`.
    pub fn retain_filters(&self, mut keep: impl FnMut(&BitvectorFilter) -> bool) -> Plan {
        let mut plan = self.clone();
        plan.filters.retain(|f| keep(f));
        let kept: Vec<FilterId> = plan.filters.iter().map(|f| f.id).collect();
        for n in &mut plan.nodes {
            n.applied_filters.retain(|f| kept.contains(f));
        }
        plan
    }

    /// Descendants of `id` including itself, in pre-order.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            for c in self.nodes[n].children().into_iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    pub fn explain(&self) -> String {
        self.render(None)
    }

    /// Explain text with `card=` annotations and a `Cout=` footer.
    pub fn explain_with_cardinalities(&self, cards: &[f64]) -> String {
        self.render(Some(cards))
    }

    fn render(&self, cards: Option<&[f64]>) -> String {
        let mut out = String::new();
        self.render_node(0, 0, cards, &mut out);
        if !self.filters.is_empty() {
            out.push_str("bitvectors:\n");
            for f in &self.filters {
                let cols: Vec<String> = f.probe_columns.iter().map(ToString::to_string).collect();
                let _ = writeln!(
                    out,
                    "  F{}: HJ#{} -> {} on ({}) {}",
                    f.id,
                    f.source_join,
                    self.label(f.landing_node),
                    cols.join(", "),
                    f.mode
                );
            }
        }
        if let Some(cards) = cards {
            let _ = writeln!(out, "Cout={}", format_card(cards.iter().sum()));
        }
        out
    }

    fn label(&self, id: NodeId) -> String {
        match &self.nodes[id].kind {
            NodeKind::Leaf { relation } => format!("SCAN {relation}"),
            NodeKind::HashJoin { .. } => format!("HJ#{id}"),
        }
    }

    fn render_node(&self, id: NodeId, depth: usize, cards: Option<&[f64]>, out: &mut String) {
        let node = &self.nodes[id];
        let filters: Vec<String> = node.applied_filters.iter().map(|f| format!("F{f}")).collect();
        let filters = filters.join(", ");
        let indent = "  ".repeat(depth);
        match &node.kind {
            NodeKind::Leaf { relation } => {
                let _ = write!(out, "{indent}SCAN {relation} filters=[{filters}]");
            }
            NodeKind::HashJoin { build, .. } => {
                let build = match &self.nodes[*build].kind {
                    NodeKind::Leaf { relation } => relation.clone(),
                    NodeKind::HashJoin { .. } => format!("HJ#{build}"),
                };
                let _ = write!(out, "{indent}HJ#{id}(build={build}, filters=[{filters}])");
            }
        }
        if let Some(cards) = cards {
            let _ = write!(out, " card={}", format_card(cards[id]));
        }
        out.push('\n');
        for c in node.children() {
            self.render_node(c, depth + 1, cards, out);
        }
    }
}

/// Integers print without decimals, everything else with two.
pub fn format_card(x: f64) -> String {
    if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.2}")
    }
}

/// Equi-join keys between a build set and a probe set, in edge order.
pub(crate) fn join_keys(graph: &JoinGraph, build: RelSet, probe: RelSet) -> Vec<JoinKey> {
    let mut keys = Vec::new();
    for e in graph.edges_between(build, probe) {
        let edge = graph.edge(e);
        let (l, r) = graph.ends(e);
        let (b, p, bcols, pcols) = if build & bit(l) != 0 {
            (l, r, &edge.left_cols, &edge.right_cols)
        } else {
            (r, l, &edge.right_cols, &edge.left_cols)
        };
        for (bc, pc) in bcols.iter().zip(pcols) {
            keys.push(JoinKey {
                build: ColumnRef {
                    rel: b,
                    relation: graph.name(b).to_string(),
                    column: bc.clone(),
                },
                probe: ColumnRef {
                    rel: p,
                    relation: graph.name(p).to_string(),
                    column: pc.clone(),
                },
            });
        }
    }
    keys
}

/// Builds `T(order)` and pushes filters down.
pub fn right_deep<S: AsRef<str>>(order: &[S], graph: &JoinGraph) -> Result<Plan, PlanError> {
    Plan::right_deep(order, graph)
}

pub fn has_cross_product(plan: &Plan) -> bool {
    plan.has_cross_product()
}

pub fn push_down_bitvectors(plan: &Plan) -> Plan {
    plan.push_down_bitvectors()
}

/// True iff the fact-rightmost plan lists every non-entry dimension after
/// some relation that points to it.
pub fn is_partially_ordered(
    plan: &Plan,
    shape: &SnowflakeShape,
    graph: &JoinGraph,
) -> Result<bool, PlanError> {
    let order = plan
        .right_deep_order()
        .ok_or_else(|| PlanError::Precondition("plan is not right-deep".into()))?;
    if order.first() != Some(&shape.fact) {
        return Err(PlanError::Precondition(format!(
            "fact `{}` is not the rightmost leaf",
            shape.fact
        )));
    }
    let idx: Vec<usize> = order
        .iter()
        .map(|r| graph.index_of(r).ok_or_else(|| PlanError::UnknownRelation(r.clone())))
        .collect::<Result<_, _>>()?;
    Ok((1..order.len()).all(|i| {
        shape.is_entry(&order[i]) || (1..i).any(|j| graph.points_to(idx[j], idx[i]))
    }))
}

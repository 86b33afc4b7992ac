//! Join graphs over a catalog: shape classification, fact-table detection,
//! snowflake extraction and branch grouping.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, JoinEdge, Relation};

/// Bitmask over relation indices of a [`JoinGraph`].
pub type RelSet = u64;

/// Upper bound on relations per graph, imposed by the [`RelSet`] bitmask.
pub const MAX_RELATIONS: usize = 64;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("join graph is empty")]
    Empty,
    #[error("join graph has {0} relations; at most {MAX_RELATIONS} are supported")]
    TooManyRelations(usize),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
}

pub fn bit(i: usize) -> RelSet {
    1u64 << i
}

pub fn members(set: RelSet) -> impl Iterator<Item = usize> {
    let mut rest = set;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        }
    })
}

#[derive(Debug, Clone)]
pub struct JoinGraph {
    catalog: Catalog,
    index: HashMap<String, usize>,
    ends: Vec<(usize, usize)>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl JoinGraph {
    pub fn new(catalog: Catalog) -> Result<Self, GraphError> {
        let n = catalog.relations.len();
        if n > MAX_RELATIONS {
            return Err(GraphError::TooManyRelations(n));
        }
        let index: HashMap<String, usize> = catalog
            .relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.name.clone(), i))
            .collect();
        let mut adjacency = vec![Vec::new(); n];
        let mut ends = Vec::with_capacity(catalog.edges.len());
        for (e, edge) in catalog.edges.iter().enumerate() {
            let l = *index
                .get(&edge.left)
                .ok_or_else(|| GraphError::UnknownRelation(edge.left.clone()))?;
            let r = *index
                .get(&edge.right)
                .ok_or_else(|| GraphError::UnknownRelation(edge.right.clone()))?;
            adjacency[l].push((r, e));
            adjacency[r].push((l, e));
            ends.push((l, r));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Ok(Self {
            catalog,
            index,
            ends,
            adjacency,
        })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn len(&self) -> usize {
        self.catalog.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> RelSet {
        if self.len() == 64 {
            u64::MAX
        } else {
            bit(self.len()) - 1
        }
    }

    pub fn relation(&self, i: usize) -> &Relation {
        &self.catalog.relations[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.catalog.relations[i].name
    }

    pub fn cardinality(&self, i: usize) -> u64 {
        self.catalog.relations[i].cardinality
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize, GraphError> {
        self.index_of(name)
            .ok_or_else(|| GraphError::UnknownRelation(name.to_string()))
    }

    pub fn set_of<S: AsRef<str>>(&self, names: &[S]) -> Result<RelSet, GraphError> {
        names
            .iter()
            .try_fold(0, |acc, n| Ok(acc | bit(self.require(n.as_ref())?)))
    }

    pub fn names_of(&self, set: RelSet) -> Vec<String> {
        members(set).map(|i| self.name(i).to_string()).collect()
    }

    pub fn edges(&self) -> &[JoinEdge] {
        &self.catalog.edges
    }

    pub fn edge(&self, e: usize) -> &JoinEdge {
        &self.catalog.edges[e]
    }

    /// Relation indices of edge `e` as (left, right).
    pub fn ends(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }

    /// (neighbor, edge index) pairs sorted by neighbor.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn neighbor_set(&self, set: RelSet) -> RelSet {
        members(set)
            .flat_map(|i| self.adjacency[i].iter().map(|&(j, _)| bit(j)))
            .fold(0, |a, b| a | b)
            & !set
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .find(|&&(j, _)| j == b)
            .map(|&(_, e)| e)
    }

    /// Edge indices with one endpoint in `a` and the other in `b`, ascending.
    pub fn edges_between(&self, a: RelSet, b: RelSet) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.ends.len())
            .filter(|&e| {
                let (l, r) = self.ends[e];
                (a & bit(l) != 0 && b & bit(r) != 0) || (a & bit(r) != 0 && b & bit(l) != 0)
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn connects(&self, a: RelSet, b: RelSet) -> bool {
        self.neighbor_set(a) & b != 0
    }

    /// Edge indices with both endpoints in `set`.
    pub fn edges_within(&self, set: RelSet) -> Vec<usize> {
        (0..self.ends.len())
            .filter(|&e| {
                let (l, r) = self.ends[e];
                set & bit(l) != 0 && set & bit(r) != 0
            })
            .collect()
    }

    /// True iff `from -> to` holds on the edge joining them.
    pub fn points_to(&self, from: usize, to: usize) -> bool {
        self.edge_between(from, to)
            .is_some_and(|e| self.edge(e).points_to(self.name(from), self.name(to)))
    }

    /// True iff some edge uses this relation's key as its join columns.
    pub fn is_key_side(&self, i: usize) -> bool {
        self.adjacency[i]
            .iter()
            .any(|&(_, e)| self.edge(e).key_side() == Some(self.name(i)))
    }

    pub fn is_connected(&self, set: RelSet) -> bool {
        if set == 0 {
            return true;
        }
        self.reach(set.trailing_zeros() as usize, set) == set
    }

    fn reach(&self, start: usize, within: RelSet) -> RelSet {
        let mut seen = bit(start);
        let mut frontier = seen;
        while frontier != 0 {
            let next = self.neighbor_set(frontier) & within & !seen;
            seen |= next;
            frontier = next;
        }
        seen
    }

    /// Connected components, ordered by their lowest relation index.
    pub fn components(&self) -> Vec<RelSet> {
        let mut rest = self.all();
        let mut out = Vec::new();
        while rest != 0 {
            let c = self.reach(rest.trailing_zeros() as usize, self.all());
            out.push(c);
            rest &= !c;
        }
        out
    }

    /// Graph restricted to `set`; relation order and edge order are kept.
    pub fn subgraph(&self, set: RelSet) -> JoinGraph {
        let relations = members(set).map(|i| self.relation(i).clone()).collect();
        let edges = self
            .edges_within(set)
            .into_iter()
            .map(|e| self.edge(e).clone())
            .collect();
        JoinGraph::new(Catalog { relations, edges }).expect("subgraph of a valid graph")
    }
}

/// Shape classes of a join graph, checked in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Star,
    Branch,
    Snowflake,
    General,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Shape::Star => "star",
            Shape::Branch => "branch",
            Shape::Snowflake => "snowflake",
            Shape::General => "general",
        };
        f.write_str(s)
    }
}

/// Root of an all-PKFK tree whose edges all point away from it, with each
/// node's children.
fn oriented_tree(graph: &JoinGraph) -> Option<(usize, Vec<Vec<usize>>)> {
    let n = graph.len();
    if graph.edges().len() + 1 != n || !graph.is_connected(graph.all()) {
        return None;
    }
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for e in 0..graph.edges().len() {
        let (l, r) = graph.ends(e);
        let (from, to) = if graph.points_to(l, r) {
            (l, r)
        } else if graph.points_to(r, l) {
            (r, l)
        } else {
            return None;
        };
        indegree[to] += 1;
        children[from].push(to);
    }
    let roots: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    if roots.len() != 1 || indegree.iter().any(|&d| d > 1) {
        return None;
    }
    Some((roots[0], children))
}

pub fn classify(graph: &JoinGraph) -> Result<Shape, GraphError> {
    if graph.is_empty() {
        return Err(GraphError::Empty);
    }
    if graph.len() == 1 {
        return Ok(Shape::Star);
    }
    let Some((root, children)) = oriented_tree(graph) else {
        return Ok(Shape::General);
    };
    let non_root_max = (0..graph.len())
        .filter(|&i| i != root)
        .map(|i| children[i].len())
        .max()
        .unwrap_or(0);
    Ok(if non_root_max == 0 {
        Shape::Star
    } else if non_root_max > 1 {
        Shape::General
    } else if children[root].len() == 1 {
        Shape::Branch
    } else {
        Shape::Snowflake
    })
}

/// Relations never used as the key side of a join, by ascending cardinality
/// then name.
pub fn find_fact_tables(graph: &JoinGraph) -> Vec<String> {
    fact_indices(graph, 0)
        .into_iter()
        .map(|i| graph.name(i).to_string())
        .collect()
}

pub(crate) fn fact_indices(graph: &JoinGraph, exclude: RelSet) -> Vec<usize> {
    let mut facts: Vec<usize> = (0..graph.len())
        .filter(|&i| exclude & bit(i) == 0 && !graph.is_key_side(i))
        .collect();
    facts.sort_by(|&a, &b| {
        graph
            .cardinality(a)
            .cmp(&graph.cardinality(b))
            .then_with(|| graph.name(a).cmp(graph.name(b)))
    });
    facts
}

/// A fact table with its dimension branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnowflakeShape {
    pub fact: String,
    /// Each branch starts at the relation adjacent to the fact. Chains keep
    /// their order; sub-trees are linearized parent-first.
    pub branches: Vec<Vec<String>>,
    /// Parent of each dimension in the extraction tree.
    pub parents: BTreeMap<String, String>,
    /// Edges not explained by the fact-to-entry and chain-link pattern.
    pub residual_edges: Vec<JoinEdge>,
}

impl SnowflakeShape {
    pub fn relation_count(&self) -> usize {
        1 + self.branches.iter().map(Vec::len).sum::<usize>()
    }

    pub fn relations(&self) -> Vec<String> {
        std::iter::once(self.fact.clone())
            .chain(self.branches.iter().flatten().cloned())
            .collect()
    }

    pub fn is_entry(&self, name: &str) -> bool {
        self.branches.iter().any(|b| b.first().map(String::as_str) == Some(name))
    }

    pub fn branch_of(&self, name: &str) -> Option<usize> {
        self.branches.iter().position(|b| b.iter().any(|r| r == name))
    }

    /// True iff every branch is a PKFK chain hanging off the fact and there
    /// are no residual edges.
    pub fn is_conforming(&self) -> bool {
        self.residual_edges.is_empty()
    }
}

/// Result of one extraction step.
#[derive(Debug, Clone)]
pub(crate) enum Extraction {
    Shape(SnowflakeShape, RelSet),
    /// The chosen fact has no reachable dimensions.
    Lone(usize),
}

/// Snowflake rooted at the smallest fact table; the whole connected
/// component when there is a single fact.
pub fn extract_snowflake(graph: &JoinGraph) -> Result<SnowflakeShape, GraphError> {
    if graph.is_empty() {
        return Err(GraphError::Empty);
    }
    match extract_from(graph, 0) {
        Extraction::Shape(shape, _) => Ok(shape),
        Extraction::Lone(f) => Ok(build_shape(graph, bit(f), f)),
    }
}

pub(crate) fn extract_from(graph: &JoinGraph, optimized: RelSet) -> Extraction {
    let facts = fact_indices(graph, optimized);
    let component = |f: usize| graph.reach(f, graph.all());
    match facts.as_slice() {
        [] => {
            let fact = (0..graph.len())
                .max_by(|&a, &b| {
                    graph
                        .cardinality(a)
                        .cmp(&graph.cardinality(b))
                        .then_with(|| graph.name(b).cmp(graph.name(a)))
                })
                .expect("non-empty graph");
            Extraction::Shape(build_shape(graph, component(fact), fact), component(fact))
        }
        [fact] => Extraction::Shape(
            build_shape(graph, component(*fact), *fact),
            component(*fact),
        ),
        [fact, ..] => {
            let closure = pkfk_closure(graph, *fact);
            if closure == bit(*fact) {
                Extraction::Lone(*fact)
            } else {
                Extraction::Shape(build_shape(graph, closure, *fact), closure)
            }
        }
    }
}

/// Relations reachable from `start` by following `->` edges.
fn pkfk_closure(graph: &JoinGraph, start: usize) -> RelSet {
    let mut seen = bit(start);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in graph.neighbors(u) {
            if seen & bit(v) == 0 && graph.points_to(u, v) {
                seen |= bit(v);
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Eliminated fraction on `parent` when joined with `child`, from catalog
/// statistics.
fn stored_elimination(graph: &JoinGraph, parent: usize, child: usize) -> f64 {
    graph
        .edge_between(parent, child)
        .and_then(|e| graph.edge(e).selectivity_from(graph.name(parent)))
        .map_or(0.0, |s| 1.0 - s)
}

pub(crate) fn build_shape(graph: &JoinGraph, set: RelSet, fact: usize) -> SnowflakeShape {
    let n = graph.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut visited = bit(fact);
    let mut order = vec![fact];
    let mut queue = VecDeque::from([fact]);
    loop {
        while let Some(u) = queue.pop_front() {
            for &(v, _) in graph.neighbors(u) {
                if set & bit(v) != 0 && visited & bit(v) == 0 && graph.points_to(u, v) {
                    visited |= bit(v);
                    parent[v] = Some(u);
                    order.push(v);
                    queue.push_back(v);
                }
            }
        }
        if visited == set {
            break;
        }
        let attach = order.iter().find_map(|&u| {
            graph
                .neighbors(u)
                .iter()
                .find(|&&(v, _)| set & bit(v) != 0 && visited & bit(v) == 0)
                .map(|&(v, _)| (u, v))
        });
        let Some((u, v)) = attach else { break };
        visited |= bit(v);
        parent[v] = Some(u);
        order.push(v);
        queue.push_back(v);
    }

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &v in &order[1..] {
        children[parent[v].expect("visited")].push(v);
    }
    for (u, kids) in children.iter_mut().enumerate() {
        if u != fact {
            kids.sort_by(|&a, &b| {
                stored_elimination(graph, u, b)
                    .total_cmp(&stored_elimination(graph, u, a))
                    .then(a.cmp(&b))
            });
        }
    }
    let mut entries = children[fact].clone();
    entries.sort_unstable();

    let mut branches = Vec::new();
    let mut next_in_branch: Vec<Option<usize>> = vec![None; n];
    for &entry in &entries {
        let mut branch = Vec::new();
        let mut stack = vec![entry];
        while let Some(u) = stack.pop() {
            branch.push(u);
            stack.extend(children[u].iter().rev());
        }
        for w in branch.windows(2) {
            next_in_branch[w[0]] = Some(w[1]);
        }
        branches.push(branch);
    }

    let explained = |u: usize, v: usize| {
        parent[v] == Some(u)
            && graph.points_to(u, v)
            && (u == fact || next_in_branch[u] == Some(v))
    };
    let residual_edges = graph
        .edges_within(set)
        .into_iter()
        .filter(|&e| {
            let (l, r) = graph.ends(e);
            !(explained(l, r) || explained(r, l))
        })
        .map(|e| graph.edge(e).clone())
        .collect();

    SnowflakeShape {
        fact: graph.name(fact).to_string(),
        branches: branches
            .iter()
            .map(|b| b.iter().map(|&i| graph.name(i).to_string()).collect())
            .collect(),
        parents: order[1..]
            .iter()
            .map(|&v| {
                (
                    graph.name(v).to_string(),
                    graph.name(parent[v].unwrap()).to_string(),
                )
            })
            .collect(),
        residual_edges,
    }
}

/// Branch-group priority classes used to order branches around a fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Priority {
    /// Entry does not join the fact through the fact's foreign key.
    P0,
    /// Isolated branch whose relations are all smaller than the fact.
    P1,
    /// Branches linked to each other by residual edges.
    P2,
    /// Isolated branch holding a relation at least as large as the fact.
    P3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchGroup {
    /// Indices into the shape's branch list, ascending.
    pub branches: Vec<usize>,
    pub priority: Priority,
    /// Numeric rank: branch count for P2, 0 for P0, 1 for P1 and relation
    /// count + 1 for P3.
    pub rank: usize,
}

/// Groups branches connected by residual edges and assigns priorities.
/// Groups come out ordered by their first branch.
pub fn group_branches(
    shape: &SnowflakeShape,
    graph: &JoinGraph,
) -> Result<Vec<BranchGroup>, GraphError> {
    let m = shape.branches.len();
    let mut root: Vec<usize> = (0..m).collect();
    fn find(root: &mut [usize], mut x: usize) -> usize {
        while root[x] != x {
            root[x] = root[root[x]];
            x = root[x];
        }
        x
    }
    for edge in &shape.residual_edges {
        if let (Some(a), Some(b)) = (shape.branch_of(&edge.left), shape.branch_of(&edge.right)) {
            let (ra, rb) = (find(&mut root, a), find(&mut root, b));
            if ra != rb {
                root[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let fact = graph.require(&shape.fact)?;
    let fact_card = graph.cardinality(fact);
    let mut groups: Vec<BranchGroup> = Vec::new();
    let mut slot: BTreeMap<usize, usize> = BTreeMap::new();
    for b in 0..m {
        let r = find(&mut root, b);
        let g = *slot.entry(r).or_insert_with(|| {
            groups.push(BranchGroup {
                branches: Vec::new(),
                priority: Priority::P1,
                rank: 1,
            });
            groups.len() - 1
        });
        groups[g].branches.push(b);
    }
    for group in &mut groups {
        if group.branches.len() > 1 {
            group.priority = Priority::P2;
            group.rank = group.branches.len();
            continue;
        }
        let branch = &shape.branches[group.branches[0]];
        let entry = graph.require(&branch[0])?;
        let max_card = branch
            .iter()
            .map(|r| graph.require(r).map(|i| graph.cardinality(i)))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        (group.priority, group.rank) = if !graph.points_to(fact, entry) {
            (Priority::P0, 0)
        } else if max_card < fact_card {
            (Priority::P1, 1)
        } else {
            (Priority::P3, shape.relation_count() + 1)
        };
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{PkFk, Relation};

    pub(crate) fn rel(name: &str, card: u64, key: bool, fks: &[&str]) -> Relation {
        let mut cols = Vec::new();
        if key {
            cols.push(format!("{name}_id"));
        }
        cols.extend(fks.iter().map(|t| format!("{name}_{t}")));
        let r = Relation::new(name, card).with_columns(cols);
        if key {
            r.with_key([format!("{name}_id")])
        } else {
            r
        }
    }

    fn fk(from: &str, to: &str, sel: f64) -> JoinEdge {
        JoinEdge::new(from, to, [format!("{from}_{to}")], [format!("{to}_id")])
            .pkfk(PkFk::LeftToRight)
            .selectivities(sel, 1.0)
    }

    fn graph(relations: Vec<Relation>, edges: Vec<JoinEdge>) -> JoinGraph {
        JoinGraph::new(Catalog::new(relations, edges).unwrap()).unwrap()
    }

    fn star() -> JoinGraph {
        graph(
            vec![
                rel("R0", 1000, false, &["R1", "R2", "R3"]),
                rel("R1", 10, true, &[]),
                rel("R2", 20, true, &[]),
                rel("R3", 30, true, &[]),
            ],
            vec![fk("R0", "R1", 0.5), fk("R0", "R2", 0.5), fk("R0", "R3", 0.5)],
        )
    }

    fn three_branches() -> JoinGraph {
        graph(
            vec![
                rel("R0", 1000, false, &["A1", "B1", "C1"]),
                rel("A1", 10, true, &[]),
                rel("B1", 20, true, &["B2"]),
                rel("B2", 5, true, &[]),
                rel("C1", 30, true, &["C2"]),
                rel("C2", 6, true, &[]),
            ],
            vec![
                fk("R0", "A1", 0.5),
                fk("R0", "B1", 0.5),
                fk("B1", "B2", 0.5),
                fk("R0", "C1", 0.5),
                fk("C1", "C2", 0.5),
            ],
        )
    }

    #[test]
    fn classifies_reference_shapes() {
        assert_eq!(classify(&star()).unwrap(), Shape::Star);
        assert_eq!(classify(&three_branches()).unwrap(), Shape::Snowflake);
        let chain = graph(
            vec![
                rel("R0", 100, false, &["R1"]),
                rel("R1", 10, true, &["R2"]),
                rel("R2", 5, true, &[]),
            ],
            vec![fk("R0", "R1", 0.5), fk("R1", "R2", 0.5)],
        );
        assert_eq!(classify(&chain).unwrap(), Shape::Branch);
        let single = graph(vec![rel("R", 3, false, &[])], vec![]);
        assert_eq!(classify(&single).unwrap(), Shape::Star);
        let empty = JoinGraph::new(Catalog::default()).unwrap();
        assert!(matches!(classify(&empty), Err(GraphError::Empty)));
    }

    #[test]
    fn dim_dim_edge_makes_star_general_with_residual() {
        let mut relations = star().catalog().relations.clone();
        relations[1].columns.push("R1_x".into());
        relations[2].columns.push("R2_x".into());
        let mut edges = star().catalog().edges.clone();
        edges.push(JoinEdge::new("R1", "R2", ["R1_x"], ["R2_x"]));
        let g = graph(relations, edges);
        assert_eq!(classify(&g).unwrap(), Shape::General);
        let shape = extract_snowflake(&g).unwrap();
        assert_eq!(shape.fact, "R0");
        assert_eq!(shape.residual_edges.len(), 1);
        assert!(shape.residual_edges[0].connects("R1", "R2"));
        let groups = group_branches(&shape, &g).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].priority, Priority::P2);
        assert_eq!(groups[0].branches, vec![0, 1]);
        assert_eq!(groups[1].priority, Priority::P1);
    }

    #[test]
    fn fact_tables_sorted_by_cardinality() {
        let g = graph(
            vec![
                rel("F2", 500, false, &["D"]),
                rel("D", 10, true, &[]),
                rel("F1", 100, false, &["D"]),
            ],
            vec![fk("F1", "D", 0.5), fk("F2", "D", 0.5)],
        );
        assert_eq!(find_fact_tables(&g), vec!["F1", "F2"]);
        assert_eq!(find_fact_tables(&star()), vec!["R0"]);
    }

    #[test]
    fn two_fact_extraction_excludes_other_facts_dimensions() {
        // F1 -> D <- F2, F2 -> E
        let g = graph(
            vec![
                rel("F1", 100, false, &["D"]),
                rel("D", 10, true, &[]),
                rel("F2", 500, false, &["D", "E"]),
                rel("E", 7, true, &[]),
            ],
            vec![fk("F1", "D", 0.5), fk("F2", "D", 0.5), fk("F2", "E", 0.5)],
        );
        let shape = extract_snowflake(&g).unwrap();
        assert_eq!(shape.fact, "F1");
        assert_eq!(shape.branches, vec![vec!["D".to_string()]]);
        assert!(shape.residual_edges.is_empty());
    }

    #[test]
    fn single_fact_extraction_covers_graph() {
        let shape = extract_snowflake(&three_branches()).unwrap();
        assert_eq!(shape.fact, "R0");
        assert_eq!(
            shape.branches,
            vec![vec!["A1"], vec!["B1", "B2"], vec!["C1", "C2"]]
        );
        assert!(shape.residual_edges.is_empty());
        assert_eq!(shape.parents["B2"], "B1");
    }

    #[test]
    fn p3_for_large_branch() {
        let mut g = three_branches().catalog().clone();
        g.relations[3].cardinality = 5000;
        let g = JoinGraph::new(g).unwrap();
        let shape = extract_snowflake(&g).unwrap();
        let groups = group_branches(&shape, &g).unwrap();
        let ranks: Vec<_> = groups.iter().map(|g| (g.priority, g.rank)).collect();
        assert_eq!(
            ranks,
            vec![(Priority::P1, 1), (Priority::P3, 7), (Priority::P1, 1)]
        );
    }

    #[test]
    fn components_and_subgraph() {
        let g = graph(
            vec![rel("A", 1, false, &[]), rel("B", 1, false, &[])],
            vec![],
        );
        assert_eq!(g.components(), vec![0b01, 0b10]);
        let sub = star().subgraph(0b0011);
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.edges().len(), 1);
    }
}

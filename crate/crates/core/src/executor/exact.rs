use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use super::{execute, Dataset, ExecOptions, RuntimeBitvector};
use crate::cost_model::{external_filters, CardinalityProvider, CostError, FilterSpec};
use crate::join_graph::{bit, members, JoinGraph, RelSet};
use crate::plan::{FilterMode, NodeId, NodeKind, Plan};

/// Row-id tuples of a join, one slot per relation in ascending index order.
struct Tuples {
    mask: RelSet,
    width: usize,
    data: Vec<u32>,
}

impl Tuples {
    fn len(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(0)
    }

    fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.data.chunks(self.width.max(1))
    }
}

fn slot(mask: RelSet, rel: usize) -> usize {
    (mask & (bit(rel) - 1)).count_ones() as usize
}

/// Column pair (probe relation, probe column, build relation, build column).
type Pair = (usize, usize, usize, usize);

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct FilterKey {
    source: usize,
    pairs: Vec<Pair>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct DescKey {
    rels: RelSet,
    filters: Vec<FilterKey>,
}

#[derive(Default)]
struct Engine {
    joins: HashMap<RelSet, Arc<Tuples>>,
    ids: HashMap<DescKey, usize>,
    results: Vec<Arc<Tuples>>,
}

/// True cardinalities over an in-memory dataset, computed independently of
/// the plan executor: every node output is the full join of its relations
/// semi-joined with the filters that reach it from outside its subtree.
pub struct ExactProvider {
    graph: JoinGraph,
    data: Arc<Dataset>,
    engine: Mutex<Engine>,
}

pub fn exact_provider(data: Dataset, graph: &JoinGraph) -> ExactProvider {
    ExactProvider::new(graph, Arc::new(data))
}

impl ExactProvider {
    pub fn new(graph: &JoinGraph, data: Arc<Dataset>) -> Self {
        Self {
            graph: graph.clone(),
            data,
            engine: Mutex::new(Engine::default()),
        }
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn graph(&self) -> &JoinGraph {
        &self.graph
    }

    /// Size of the unfiltered join of `rels`.
    pub fn join_count(&self, rels: RelSet) -> u64 {
        let mut engine = self.engine.lock().expect("engine lock");
        self.join(&mut engine, rels).len() as u64
    }

    fn col(&self, rel: usize, column: &str) -> Result<usize, CostError> {
        self.data
            .table(rel)
            .column_index(column)
            .map_err(|e| CostError::Provider(e.to_string()))
    }

    fn value(&self, t: &[u32], mask: RelSet, rel: usize, col: usize) -> i64 {
        self.data.table(rel).rows[t[slot(mask, rel)] as usize][col]
    }

    fn join(&self, engine: &mut Engine, mask: RelSet) -> Arc<Tuples> {
        if let Some(t) = engine.joins.get(&mask) {
            return t.clone();
        }
        let out = if mask.count_ones() == 1 {
            let rel = mask.trailing_zeros() as usize;
            Tuples {
                mask,
                width: 1,
                data: (0..self.data.table(rel).len() as u32).collect(),
            }
        } else {
            let mut candidates: Vec<usize> = members(mask).collect();
            candidates.reverse();
            let r = candidates
                .iter()
                .copied()
                .find(|&r| self.graph.is_connected(mask & !bit(r)))
                .unwrap_or(candidates[0]);
            let rest = mask & !bit(r);
            let base = self.join(engine, rest);
            self.extend(&base, r)
        };
        let out = Arc::new(out);
        engine.joins.insert(mask, out.clone());
        out
    }

    fn extend(&self, base: &Tuples, r: usize) -> Tuples {
        let g = &self.graph;
        let mut pairs = Vec::new();
        for e in g.edges_between(bit(r), base.mask) {
            let edge = g.edge(e);
            let (l, rr) = g.ends(e);
            let (other, rcols, ocols) = if l == r {
                (rr, &edge.left_cols, &edge.right_cols)
            } else {
                (l, &edge.right_cols, &edge.left_cols)
            };
            for (rc, oc) in rcols.iter().zip(ocols) {
                let ri = self.data.table(r).column_index(rc).expect("validated dataset");
                let oi = self.data.table(other).column_index(oc).expect("validated dataset");
                pairs.push((ri, other, oi));
            }
        }
        let table = self.data.table(r);
        let mut index: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        for (i, row) in table.rows.iter().enumerate() {
            let key: Vec<i64> = pairs.iter().map(|&(ri, _, _)| row[ri]).collect();
            index.entry(key).or_default().push(i as u32);
        }
        let mask = base.mask | bit(r);
        let at = slot(mask, r);
        let width = base.width + 1;
        let mut data = Vec::new();
        let mut key = Vec::with_capacity(pairs.len());
        for t in base.rows() {
            key.clear();
            key.extend(pairs.iter().map(|&(_, o, oi)| self.value(t, base.mask, o, oi)));
            if let Some(rows) = index.get(&key) {
                for &row in rows {
                    data.extend_from_slice(&t[..at]);
                    data.push(row);
                    data.extend_from_slice(&t[at..]);
                }
            }
        }
        Tuples { mask, width, data }
    }

    fn semi_join(&self, target: &Tuples, source: &Tuples, pairs: &[Pair], mode: FilterMode) -> Tuples {
        let keys: HashSet<Vec<i64>> = source
            .rows()
            .take(source.len())
            .map(|t| pairs.iter().map(|&(_, _, b, bc)| self.value(t, source.mask, b, bc)).collect())
            .collect();
        let bv = match mode {
            FilterMode::Lossy(fp) if fp > 0.0 => Some(RuntimeBitvector::build(
                mode,
                keys.iter().map(Vec::as_slice),
                keys.len(),
            )),
            _ => None,
        };
        let mut data = Vec::new();
        let mut key = Vec::with_capacity(pairs.len());
        for t in target.rows().take(target.len()) {
            key.clear();
            key.extend(pairs.iter().map(|&(p, pc, _, _)| self.value(t, target.mask, p, pc)));
            let hit = match &bv {
                Some(bv) => bv.contains(&key),
                None => keys.contains(&key),
            };
            if hit {
                data.extend_from_slice(t);
            }
        }
        Tuples {
            mask: target.mask,
            width: target.width,
            data,
        }
    }

    fn describe(&self, engine: &mut Engine, key: DescKey) -> usize {
        if let Some(&id) = engine.ids.get(&key) {
            return id;
        }
        let mut cur = self.join(engine, key.rels);
        for f in &key.filters {
            let source = engine.results[f.source].clone();
            cur = Arc::new(self.semi_join(&cur, &source, &f.pairs, FilterMode::Perfect));
        }
        let id = engine.results.len();
        engine.results.push(cur);
        engine.ids.insert(key, id);
        id
    }

    fn node_desc(
        &self,
        engine: &mut Engine,
        plan: &Plan,
        external: &[Vec<usize>],
        memo: &mut Vec<Option<usize>>,
        node: NodeId,
    ) -> Result<usize, CostError> {
        if let Some(id) = memo[node] {
            return Ok(id);
        }
        let mut filters = Vec::new();
        for &fid in &external[node] {
            let f = plan.filter(fid).expect("listed filter");
            let NodeKind::HashJoin { build, .. } = plan.node(f.source_join).kind else {
                unreachable!("filters come from joins")
            };
            let source = self.node_desc(engine, plan, external, memo, build)?;
            let pairs = f
                .probe_columns
                .iter()
                .zip(&f.build_columns)
                .map(|(p, b)| Ok((p.rel, self.col(p.rel, &p.column)?, b.rel, self.col(b.rel, &b.column)?)))
                .collect::<Result<Vec<_>, CostError>>()?;
            filters.push(FilterKey { source, pairs });
        }
        filters.sort();
        let id = self.describe(
            engine,
            DescKey {
                rels: plan.node(node).relations,
                filters,
            },
        );
        memo[node] = Some(id);
        Ok(id)
    }
}

impl CardinalityProvider for ExactProvider {
    fn node_cardinalities(&self, plan: &Plan) -> Result<Vec<f64>, CostError> {
        if plan.filters().iter().any(|f| f.mode != FilterMode::Perfect) {
            let run = execute(plan, &self.data, &ExecOptions::default())
                .map_err(|e| CostError::Provider(e.to_string()))?;
            return Ok(run.metrics.output_counts().into_iter().map(|c| c as f64).collect());
        }
        let external = external_filters(plan);
        let mut engine = self.engine.lock().expect("engine lock");
        let mut memo = vec![None; plan.nodes().len()];
        (0..plan.nodes().len())
            .map(|n| {
                let id = self.node_desc(&mut engine, plan, &external, &mut memo, n)?;
                Ok(engine.results[id].len() as f64)
            })
            .collect()
    }

    fn filtered_cardinality(&self, target: RelSet, filters: &[FilterSpec]) -> Result<f64, CostError> {
        let g = &self.graph;
        let mut engine = self.engine.lock().expect("engine lock");
        let mut cur = self.join(&mut engine, target);
        for f in filters {
            let probe_side = target & !f.source;
            if probe_side == 0 {
                continue;
            }
            let edges = g.edges_between(f.source, probe_side);
            if edges.is_empty() {
                return Err(CostError::Unresolvable {
                    source_rels: g.names_of(f.source),
                    target: g.names_of(target),
                });
            }
            let mut pairs = Vec::new();
            for e in edges {
                let edge = g.edge(e);
                let (l, r) = g.ends(e);
                let (b, p, bcols, pcols) = if f.source & bit(l) != 0 && probe_side & bit(r) != 0 {
                    (l, r, &edge.left_cols, &edge.right_cols)
                } else {
                    (r, l, &edge.right_cols, &edge.left_cols)
                };
                for (bc, pc) in bcols.iter().zip(pcols) {
                    pairs.push((p, self.col(p, pc)?, b, self.col(b, bc)?));
                }
            }
            let source = self.join(&mut engine, f.source);
            cur = Arc::new(self.semi_join(&cur, &source, &pairs, f.mode));
        }
        Ok(cur.len() as f64)
    }

    fn relation_cardinality(&self, rel: usize) -> f64 {
        self.data.table(rel).len() as f64
    }

    fn is_exact(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Catalog, JoinEdge, PkFk, Relation};
    use crate::cost_model::cout;
    use crate::executor::generate_data;

    fn star() -> JoinGraph {
        let rels = vec![
            Relation::new("F", 300).with_columns(["a", "b"]),
            Relation::new("A", 20).with_columns(["id"]).with_key(["id"]),
            Relation::new("B", 30).with_columns(["id"]).with_key(["id"]),
        ];
        let edges = vec![
            JoinEdge::new("F", "A", ["a"], ["id"]).pkfk(PkFk::LeftToRight).selectivities(0.5, 1.0),
            JoinEdge::new("F", "B", ["b"], ["id"]).pkfk(PkFk::LeftToRight).selectivities(0.4, 1.0),
        ];
        JoinGraph::new(Catalog::new(rels, edges).unwrap()).unwrap()
    }

    #[test]
    fn matches_executor_on_every_node() {
        let g = star();
        let data = generate_data(&g, 3).unwrap();
        let p = exact_provider(data.clone(), &g);
        for order in [["F", "A", "B"], ["A", "F", "B"], ["B", "F", "A"], ["F", "B", "A"]] {
            let plan = Plan::right_deep(&order, &g).unwrap().push_down_bitvectors();
            let run = execute(&plan, &data, &ExecOptions::default()).unwrap();
            let predicted = p.node_cardinalities(&plan).unwrap();
            let measured: Vec<f64> = run.metrics.output_counts().iter().map(|&c| c as f64).collect();
            assert_eq!(predicted, measured, "{order:?}");
        }
    }

    #[test]
    fn absorption_and_redundancy() {
        let g = star();
        let p = exact_provider(generate_data(&g, 8).unwrap(), &g);
        let semi = p.filtered_cardinality(0b001, &[FilterSpec::perfect(0b010)]).unwrap();
        assert_eq!(semi, p.join_count(0b011) as f64);
        assert_eq!(semi, 150.0);
        let joined = p.filtered_cardinality(0b011, &[]).unwrap();
        assert_eq!(p.filtered_cardinality(0b011, &[FilterSpec::perfect(0b010)]).unwrap(), joined);
        let star_leaf = p
            .filtered_cardinality(0b001, &[FilterSpec::perfect(0b010), FilterSpec::perfect(0b100)])
            .unwrap();
        let plan = Plan::right_deep(&["F", "A", "B"], &g).unwrap().push_down_bitvectors();
        assert_eq!(cout(&plan, &p).unwrap().per_node[4], star_leaf);
    }
}

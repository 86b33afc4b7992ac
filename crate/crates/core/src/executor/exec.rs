use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;

use super::{Dataset, ExecError, RuntimeBitvector};
use crate::cost_model::FilterCostModel;
use crate::join_graph::members;
use crate::plan::{ColumnRef, FilterId, NodeId, NodeKind, Plan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OperatorClass {
    Leaf,
    Join,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorMetrics {
    pub node: NodeId,
    pub class: OperatorClass,
    pub output_rows: u64,
    pub scanned_rows: u64,
    pub build_rows: u64,
    pub probe_rows: u64,
    pub filter_inserts: u64,
    pub filter_checks: u64,
    pub simulated_cost: f64,
    /// Inclusive of children; zero unless timing is enabled.
    pub wall_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecMetrics {
    /// Indexed by node id.
    pub operators: Vec<OperatorMetrics>,
    pub wall_ns: u64,
}

impl ExecMetrics {
    pub fn output_counts(&self) -> Vec<u64> {
        self.operators.iter().map(|o| o.output_rows).collect()
    }

    pub fn total_cost(&self) -> f64 {
        self.operators.iter().map(|o| o.simulated_cost).sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TupleBreakdown {
    pub leaf: u64,
    pub join: u64,
    pub other: u64,
}

impl TupleBreakdown {
    pub fn total(&self) -> u64 {
        self.leaf + self.join + self.other
    }

    /// Each class divided by the baseline's total output.
    pub fn normalized(&self, baseline: &TupleBreakdown) -> [f64; 3] {
        let t = baseline.total();
        if t == 0 {
            return [0.0; 3];
        }
        let t = t as f64;
        [self.leaf as f64 / t, self.join as f64 / t, self.other as f64 / t]
    }
}

/// Output tuples summed per operator class.
pub fn tuple_breakdown(metrics: &ExecMetrics) -> TupleBreakdown {
    metrics.operators.iter().fold(TupleBreakdown::default(), |mut acc, o| {
        match o.class {
            OperatorClass::Leaf => acc.leaf += o.output_rows,
            OperatorClass::Join => acc.join += o.output_rows,
            OperatorClass::Other => acc.other += o.output_rows,
        }
        acc
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExecOptions {
    pub cost: FilterCostModel,
    pub timing: bool,
}

#[derive(Debug, Clone)]
pub struct ExecResult {
    /// Row ids per plan relation in ascending relation order, sorted.
    pub rows: Vec<Vec<u32>>,
    pub metrics: ExecMetrics,
}

#[derive(Clone, Copy)]
struct Col {
    slot: usize,
    rel: usize,
    idx: usize,
}

struct Ctx<'a> {
    plan: &'a Plan,
    data: &'a Dataset,
    slot: Vec<usize>,
    width: usize,
    runtime: HashMap<FilterId, RuntimeBitvector>,
    metrics: Vec<OperatorMetrics>,
    opts: ExecOptions,
}

impl Ctx<'_> {
    fn resolve(&self, c: &ColumnRef) -> Result<Col, ExecError> {
        Ok(Col {
            slot: self.slot[c.rel],
            rel: c.rel,
            idx: self.data.table(c.rel).column_index(&c.column)?,
        })
    }

    fn resolve_all(&self, cols: &[ColumnRef]) -> Result<Vec<Col>, ExecError> {
        cols.iter().map(|c| self.resolve(c)).collect()
    }

    fn key(&self, tuple: &[u32], cols: &[Col], out: &mut Vec<i64>) {
        out.clear();
        out.extend(cols.iter().map(|c| self.data.table(c.rel).rows[tuple[c.slot] as usize][c.idx]));
    }

    /// Applies the node's filters in order; returns survivors and checks.
    fn apply_filters(&self, id: NodeId, tuples: Vec<u32>) -> Result<(Vec<u32>, u64), ExecError> {
        let mut rows = tuples;
        let mut checks = 0;
        let mut key = Vec::new();
        for &fid in &self.plan.node(id).applied_filters {
            let f = self.plan.filter(fid).expect("applied filter exists");
            let cols = self.resolve_all(&f.probe_columns)?;
            let bv = self
                .runtime
                .get(&fid)
                .expect("filters are built before their probe side runs");
            checks += (rows.len() / self.width.max(1)) as u64;
            let mut kept = Vec::with_capacity(rows.len());
            for t in rows.chunks(self.width) {
                self.key(t, &cols, &mut key);
                if bv.contains(&key) {
                    kept.extend_from_slice(t);
                }
            }
            rows = kept;
        }
        Ok((rows, checks))
    }

    fn run(&mut self, id: NodeId) -> Result<Vec<u32>, ExecError> {
        let started = self.opts.timing.then(Instant::now);
        let node = self.plan.node(id);
        let w = self.width;
        let cm = self.opts.cost;
        let mut m = OperatorMetrics {
            node: id,
            class: OperatorClass::Leaf,
            output_rows: 0,
            scanned_rows: 0,
            build_rows: 0,
            probe_rows: 0,
            filter_inserts: 0,
            filter_checks: 0,
            simulated_cost: 0.0,
            wall_ns: 0,
        };
        let out = match &node.kind {
            NodeKind::Leaf { .. } => {
                let rel = node.relations.trailing_zeros() as usize;
                let n = self.data.table(rel).len();
                let mut tuples = vec![u32::MAX; n * w];
                for r in 0..n {
                    tuples[r * w + self.slot[rel]] = r as u32;
                }
                m.scanned_rows = n as u64;
                let (rows, checks) = self.apply_filters(id, tuples)?;
                m.filter_checks = checks;
                rows
            }
            NodeKind::HashJoin { build, probe, keys } => {
                m.class = OperatorClass::Join;
                let (build, probe) = (*build, *probe);
                let bcols: Vec<Col> = keys.iter().map(|k| self.resolve(&k.build)).collect::<Result<_, _>>()?;
                let pcols: Vec<Col> = keys.iter().map(|k| self.resolve(&k.probe)).collect::<Result<_, _>>()?;
                let built = self.run(build)?;
                let mut key = Vec::new();
                let mut table: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
                for (i, t) in built.chunks(w).enumerate() {
                    self.key(t, &bcols, &mut key);
                    table.entry(key.clone()).or_default().push(i);
                }
                m.build_rows = (built.len() / w.max(1)) as u64;
                if let Some(f) = self.plan.filter_created_by(id) {
                    let fcols = self.resolve_all(&f.build_columns)?;
                    let keys: Vec<Vec<i64>> = built
                        .chunks(w)
                        .map(|t| {
                            let mut k = Vec::new();
                            self.key(t, &fcols, &mut k);
                            k
                        })
                        .collect();
                    let bv = RuntimeBitvector::build(f.mode, keys.iter().map(Vec::as_slice), keys.len());
                    m.filter_inserts = keys.len() as u64;
                    self.runtime.insert(f.id, bv);
                }
                let probed = self.run(probe)?;
                m.probe_rows = (probed.len() / w.max(1)) as u64;
                let mut joined = Vec::new();
                for t in probed.chunks(w) {
                    self.key(t, &pcols, &mut key);
                    if let Some(matches) = table.get(&key) {
                        for &b in matches {
                            let bt = &built[b * w..(b + 1) * w];
                            joined.extend(t.iter().zip(bt).map(|(&p, &b)| if p == u32::MAX { b } else { p }));
                        }
                    }
                }
                let (rows, checks) = self.apply_filters(id, joined)?;
                m.filter_checks = checks;
                rows
            }
        };
        m.output_rows = (out.len() / w.max(1)) as u64;
        m.simulated_cost = cm.scan_cost * m.scanned_rows as f64
            + cm.build_cost * m.build_rows as f64
            + cm.insert_cost * m.filter_inserts as f64
            + cm.probe_cost * m.probe_rows as f64
            + cm.check_cost * m.filter_checks as f64
            + if m.class == OperatorClass::Join {
                cm.output_cost * m.output_rows as f64
            } else {
                0.0
            };
        if let Some(t) = started {
            m.wall_ns = t.elapsed().as_nanos() as u64;
        }
        self.metrics[id] = m;
        Ok(out)
    }
}

/// Runs `plan` over `data`, building each filter from its join's build
/// output before the probe side executes.
pub fn execute(plan: &Plan, data: &Dataset, opts: &ExecOptions) -> Result<ExecResult, ExecError> {
    let mask = plan.relations();
    let mut slot = vec![usize::MAX; data.tables().len()];
    for (k, r) in members(mask).enumerate() {
        if r >= data.tables().len() {
            return Err(ExecError::MissingTable(plan.leaf_names().join(",")));
        }
        slot[r] = k;
    }
    let width = mask.count_ones() as usize;
    let empty = OperatorMetrics {
        node: 0,
        class: OperatorClass::Other,
        output_rows: 0,
        scanned_rows: 0,
        build_rows: 0,
        probe_rows: 0,
        filter_inserts: 0,
        filter_checks: 0,
        simulated_cost: 0.0,
        wall_ns: 0,
    };
    let mut ctx = Ctx {
        plan,
        data,
        slot,
        width,
        runtime: HashMap::new(),
        metrics: vec![empty; plan.nodes().len()],
        opts: *opts,
    };
    let started = opts.timing.then(Instant::now);
    let out = ctx.run(0)?;
    let mut rows: Vec<Vec<u32>> = out.chunks(width).map(<[u32]>::to_vec).collect();
    rows.sort_unstable();
    Ok(ExecResult {
        rows,
        metrics: ExecMetrics {
            operators: ctx.metrics,
            wall_ns: started.map_or(0, |t| t.elapsed().as_nanos() as u64),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Catalog, JoinEdge, PkFk, Relation};
    use crate::executor::generate_data;
    use crate::join_graph::JoinGraph;
    use crate::plan::FilterMode;

    fn pair(sel: f64, dim: u64) -> JoinGraph {
        let rels = vec![
            Relation::new("S", 1000).with_columns(["d"]),
            Relation::new("R", dim).with_columns(["id"]).with_key(["id"]),
        ];
        let edges = vec![JoinEdge::new("S", "R", ["d"], ["id"])
            .pkfk(PkFk::LeftToRight)
            .selectivities(sel, 1.0)];
        JoinGraph::new(Catalog::new(rels, edges).unwrap()).unwrap()
    }

    #[test]
    fn filter_is_transparent_and_reduces_probe_leaf() {
        let g = pair(0.3, 50);
        let data = generate_data(&g, 5).unwrap();
        let bare = Plan::right_deep(&["S", "R"], &g).unwrap();
        let filtered = bare.push_down_bitvectors();
        let opts = ExecOptions::default();
        let a = execute(&bare, &data, &opts).unwrap();
        let b = execute(&filtered, &data, &opts).unwrap();
        assert_eq!(a.rows, b.rows);
        let leaf_a = a.metrics.operators[2].output_rows;
        let leaf_b = b.metrics.operators[2].output_rows;
        assert_eq!(leaf_a - leaf_b, 1000 - 300);
        let bd = tuple_breakdown(&a.metrics);
        assert_eq!(bd, TupleBreakdown { leaf: 1050, join: 300, other: 0 });
    }

    #[test]
    fn empty_build_side() {
        let g = pair(0.0, 0);
        let rels = g.catalog().relations.clone();
        let data = Dataset::new(
            &g,
            vec![
                crate::executor::Table::new("S", rels[0].columns.clone(), vec![vec![1], vec![2]]).unwrap(),
                crate::executor::Table::new("R", rels[1].columns.clone(), vec![]).unwrap(),
            ],
        )
        .unwrap();
        let plan = Plan::right_deep(&["S", "R"], &g).unwrap().push_down_bitvectors();
        let r = execute(&plan, &data, &ExecOptions::default()).unwrap();
        assert!(r.rows.is_empty());
        assert_eq!(r.metrics.operators[2].output_rows, 0);
    }

    #[test]
    fn lossy_leaf_count_between_perfect_and_none() {
        let g = pair(0.2, 400);
        let data = generate_data(&g, 9).unwrap();
        let opts = ExecOptions::default();
        let none = execute(&Plan::right_deep(&["S", "R"], &g).unwrap(), &data, &opts).unwrap();
        let perfect = Plan::right_deep(&["S", "R"], &g).unwrap().push_down_bitvectors();
        let lossy = perfect.with_filter_mode(FilterMode::Lossy(0.01));
        let p = execute(&perfect, &data, &opts).unwrap();
        let l = execute(&lossy, &data, &opts).unwrap();
        assert_eq!(p.rows, l.rows);
        assert_eq!(none.rows, l.rows);
        let leaf = |r: &ExecResult| r.metrics.operators[2].output_rows;
        assert!(leaf(&p) <= leaf(&l) && leaf(&l) <= leaf(&none));
    }

    #[test]
    fn empty_metrics_break_down_to_zero() {
        let m = ExecMetrics { operators: vec![], wall_ns: 0 };
        assert_eq!(tuple_breakdown(&m), TupleBreakdown::default());
    }
}

#![allow(dead_code)]

use bvqo_core::executor::Dataset;
use bvqo_core::{Catalog, JoinEdge, JoinGraph, PkFk, Relation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fact `F` with foreign keys into `A` and `B`; sizes up to 200 rows.
pub fn fact_two_dims(seed: u64) -> JoinGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sel = |rng: &mut ChaCha8Rng| rng.gen_range(0..=100) as f64 / 100.0;
    let rels = vec![
        Relation::new("F", rng.gen_range(1..=200)).with_columns(["F_A", "F_B"]),
        Relation::new("A", rng.gen_range(1..=200)).with_columns(["A_id"]).with_key(["A_id"]),
        Relation::new("B", rng.gen_range(1..=200)).with_columns(["B_id"]).with_key(["B_id"]),
    ];
    let edges = vec![
        JoinEdge::new("F", "A", ["F_A"], ["A_id"])
            .pkfk(PkFk::LeftToRight)
            .selectivities(sel(&mut rng), 1.0),
        JoinEdge::new("F", "B", ["F_B"], ["B_id"])
            .pkfk(PkFk::LeftToRight)
            .selectivities(sel(&mut rng), 1.0),
    ];
    JoinGraph::new(Catalog::new(rels, edges).unwrap()).unwrap()
}

/// Connected graph over `n` relations: a random spanning tree plus a few
/// extra edges, each PKFK in a random direction or a plain equi-join.
pub fn random_graph(seed: u64, n: usize) -> JoinGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n).map(|i| format!("R{i}")).collect();
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    for _ in 0..rng.gen_range(0..=n / 2) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && !pairs.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)) {
            pairs.push((a, b));
        }
    }
    let mut cols: Vec<Vec<String>> = names.iter().map(|r| vec![format!("{r}_id")]).collect();
    let mut edges = Vec::new();
    for (a, b) in pairs {
        let (ra, rb) = (&names[a], &names[b]);
        let edge = match rng.gen_range(0..3) {
            0 => {
                cols[a].push(format!("{ra}_{rb}"));
                JoinEdge::new(ra.as_str(), rb.as_str(), [format!("{ra}_{rb}")], [format!("{rb}_id")])
                    .pkfk(PkFk::LeftToRight)
            }
            1 => {
                cols[b].push(format!("{rb}_{ra}"));
                JoinEdge::new(ra.as_str(), rb.as_str(), [format!("{ra}_id")], [format!("{rb}_{ra}")])
                    .pkfk(PkFk::RightToLeft)
            }
            _ => {
                cols[a].push(format!("{ra}_{rb}"));
                cols[b].push(format!("{rb}_{ra}"));
                JoinEdge::new(ra.as_str(), rb.as_str(), [format!("{ra}_{rb}")], [format!("{rb}_{ra}")])
            }
        };
        let s = rng.gen_range(20..=100) as f64 / 100.0;
        edges.push(edge.selectivities(s, s));
    }
    let rels = names
        .iter()
        .zip(cols)
        .map(|(r, c)| {
            Relation::new(r.as_str(), rng.gen_range(5..=80))
                .with_columns(c)
                .with_key([format!("{r}_id")])
        })
        .collect();
    JoinGraph::new(Catalog::new(rels, edges).unwrap()).unwrap()
}

/// Same graph with relations renamed `X{k}` and listed in a shuffled order.
pub fn relabel(graph: &JoinGraph, seed: u64) -> JoinGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..graph.len()).collect();
    perm.shuffle(&mut rng);
    let rename = |name: &str| format!("X{}", perm[graph.index_of(name).unwrap()]);
    let col = |c: &str| format!("c_{c}");
    let mut rels: Vec<Relation> = graph
        .catalog()
        .relations
        .iter()
        .map(|r| {
            Relation::new(rename(&r.name), r.cardinality)
                .with_columns(r.columns.iter().map(|c| col(c)).collect::<Vec<_>>())
                .with_key(r.key_columns.iter().map(|c| col(c)).collect::<Vec<_>>())
        })
        .collect();
    rels.shuffle(&mut rng);
    let mut edges: Vec<JoinEdge> = graph
        .edges()
        .iter()
        .map(|e| {
            let mut out = e.clone();
            out.left = rename(&e.left);
            out.right = rename(&e.right);
            out.left_cols = e.left_cols.iter().map(|c| col(c)).collect();
            out.right_cols = e.right_cols.iter().map(|c| col(c)).collect();
            out
        })
        .collect();
    edges.shuffle(&mut rng);
    JoinGraph::new(Catalog::new(rels, edges).unwrap()).unwrap()
}

/// Values of `column` in the table of `rel`.
pub fn column(data: &Dataset, graph: &JoinGraph, rel: &str, column: &str) -> Vec<i64> {
    let t = data.table(graph.index_of(rel).unwrap());
    let c = t.column_index(column).unwrap();
    t.rows.iter().map(|r| r[c]).collect()
}

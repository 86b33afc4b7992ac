use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, ExecError, Table};
use crate::join_graph::{JoinGraph, SnowflakeShape};

struct Draft {
    columns: Vec<String>,
    cells: Vec<Vec<Option<i64>>>,
}

impl Draft {
    fn col(&self, name: &str) -> usize {
        self.columns.iter().position(|c| c == name).expect("validated column")
    }

    fn assigned(&self, cols: &[usize]) -> bool {
        cols.iter().any(|&c| self.cells.first().is_some_and(|r| r[c].is_some()))
    }
}

/// Generates one table per relation so that, for every edge, the fraction
/// of rows on the foreign-key side (or on both sides for non-key edges)
/// with a join partner equals the stored selectivity up to rounding. Key
/// columns take the row number. Deterministic per seed.
pub fn generate_data(graph: &JoinGraph, seed: u64) -> Result<Dataset, ExecError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fresh: i64 = -1;
    let mut next_fresh = || {
        fresh -= 1;
        fresh + 1
    };
    let mut drafts: Vec<Draft> = graph
        .catalog()
        .relations
        .iter()
        .map(|r| Draft {
            columns: r.columns.clone(),
            cells: vec![vec![None; r.columns.len()]; r.cardinality as usize],
        })
        .collect();

    for (i, rel) in graph.catalog().relations.iter().enumerate() {
        let idx: Vec<usize> = rel.key_columns.iter().map(|c| drafts[i].col(c)).collect();
        for (row, cells) in drafts[i].cells.iter_mut().enumerate() {
            for &c in &idx {
                cells[c] = Some(row as i64);
            }
        }
    }

    for e in 0..graph.edges().len() {
        let edge = graph.edge(e);
        let (l, r) = graph.ends(e);
        let lcols: Vec<usize> = edge.left_cols.iter().map(|c| drafts[l].col(c)).collect();
        let rcols: Vec<usize> = edge.right_cols.iter().map(|c| drafts[r].col(c)).collect();
        let (l_fixed, r_fixed) = (drafts[l].assigned(&lcols), drafts[r].assigned(&rcols));
        let label = edge.to_string();
        match (l_fixed, r_fixed) {
            (true, true) => {}
            (true, false) => {
                let src = tuples(&drafts[l], &lcols);
                let m = matched(edge.selectivity_rl, drafts[r].cells.len());
                fill_from(&mut drafts[r], &rcols, &src, m, &label, &mut rng, &mut next_fresh)?;
            }
            (false, true) => {
                let src = tuples(&drafts[r], &rcols);
                let m = matched(edge.selectivity_lr, drafts[l].cells.len());
                fill_from(&mut drafts[l], &lcols, &src, m, &label, &mut rng, &mut next_fresh)?;
            }
            (false, false) => {
                let ml = matched(edge.selectivity_lr, drafts[l].cells.len());
                let mr = matched(edge.selectivity_rl, drafts[r].cells.len());
                if (ml > 0) != (mr > 0) {
                    return Err(ExecError::Infeasible(format!(
                        "edge {label}: one side must match while the other matches nothing"
                    )));
                }
                let pool = ml.min(mr);
                let values: Vec<Vec<i64>> = (0..pool).map(|v| vec![v as i64; lcols.len()]).collect();
                fill_pool(&mut drafts[l], &lcols, &values, ml, &mut rng, &mut next_fresh);
                fill_pool(&mut drafts[r], &rcols, &values, mr, &mut rng, &mut next_fresh);
            }
        }
    }

    let tables = graph
        .catalog()
        .relations
        .iter()
        .zip(drafts)
        .map(|(rel, d)| {
            let hi = rel.cardinality.max(1) as i64;
            let rows = d
                .cells
                .into_iter()
                .map(|row| row.into_iter().map(|v| v.unwrap_or_else(|| rng.gen_range(0..hi))).collect())
                .collect();
            Table::new(rel.name.clone(), d.columns, rows)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::from_ordered(tables))
}

/// Generates data for the relations of a snowflake shape, which must cover
/// the whole graph.
pub fn generate_snowflake_data(graph: &JoinGraph, shape: &SnowflakeShape, seed: u64) -> Result<Dataset, ExecError> {
    let names = shape.relations();
    if names.len() != graph.len() {
        return Err(ExecError::Infeasible(format!(
            "shape covers {} of {} relations",
            names.len(),
            graph.len()
        )));
    }
    for n in &names {
        if graph.index_of(n).is_none() {
            return Err(ExecError::MissingTable(n.clone()));
        }
    }
    generate_data(graph, seed)
}

fn matched(sel: f64, rows: usize) -> usize {
    ((sel * rows as f64).round() as usize).min(rows)
}

fn tuples(d: &Draft, cols: &[usize]) -> Vec<Vec<i64>> {
    d.cells
        .iter()
        .map(|row| cols.iter().map(|&c| row[c].expect("assigned side")).collect())
        .collect()
}

fn shuffled_rows(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(rng);
    rows
}

/// `m` random rows copy a uniformly chosen source tuple; the rest get
/// values that match nothing.
fn fill_from(
    d: &mut Draft,
    cols: &[usize],
    src: &[Vec<i64>],
    m: usize,
    label: &str,
    rng: &mut ChaCha8Rng,
    fresh: &mut impl FnMut() -> i64,
) -> Result<(), ExecError> {
    if m > 0 && src.is_empty() {
        return Err(ExecError::Infeasible(format!(
            "edge {label}: rows must match an empty relation"
        )));
    }
    let order = shuffled_rows(d.cells.len(), rng);
    for (k, &row) in order.iter().enumerate() {
        let value = if k < m {
            src[rng.gen_range(0..src.len())].clone()
        } else {
            vec![fresh(); cols.len()]
        };
        for (&c, v) in cols.iter().zip(value) {
            d.cells[row][c] = Some(v);
        }
    }
    Ok(())
}

/// `m` random rows draw from `values`, covering each value at least once.
fn fill_pool(
    d: &mut Draft,
    cols: &[usize],
    values: &[Vec<i64>],
    m: usize,
    rng: &mut ChaCha8Rng,
    fresh: &mut impl FnMut() -> i64,
) {
    let order = shuffled_rows(d.cells.len(), rng);
    for (k, &row) in order.iter().enumerate() {
        let value = if k < values.len() {
            values[k].clone()
        } else if k < m {
            values[rng.gen_range(0..values.len())].clone()
        } else {
            vec![fresh(); cols.len()]
        };
        for (&c, v) in cols.iter().zip(value) {
            d.cells[row][c] = Some(v);
        }
    }
}

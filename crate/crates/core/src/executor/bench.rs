use serde::Serialize;

use super::{execute, Dataset, ExecError, ExecOptions, Table};
use crate::catalog::{Catalog, JoinEdge, PkFk, Relation};
use crate::cost_model::FilterCostModel;
use crate::join_graph::JoinGraph;
use crate::plan::{format_card, FilterMode, Plan};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub fact_size: usize,
    pub dim_size: usize,
    /// Eliminated fractions to measure.
    pub grid: Vec<f64>,
    pub model: FilterCostModel,
    pub mode: FilterMode,
    /// Record wall-clock times; off by default so output is reproducible.
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            fact_size: 100_000,
            dim_size: 1_000,
            grid: (0..20).map(|i| i as f64 * 0.05).collect(),
            model: FilterCostModel::default(),
            mode: FilterMode::Perfect,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub e: f64,
    /// Fraction of probe rows the filter actually removed.
    pub measured_elimination: f64,
    pub cost_with: f64,
    pub cost_without: f64,
    pub wall_with_ns: u64,
    pub wall_without_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub fact_size: usize,
    pub dim_size: usize,
    pub rows: Vec<BenchRow>,
    /// Interpolated eliminated fraction where the filtered plan becomes
    /// cheaper; `None` if it never does on the grid.
    pub break_even: Option<f64>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("e,cost_with,cost_without,wall_with_ns,wall_without_ns\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.2},{},{},{},{}\n",
                r.e,
                format_card(r.cost_with),
                format_card(r.cost_without),
                r.wall_with_ns,
                r.wall_without_ns
            ));
        }
        out
    }
}

/// Single hash join of a fact table (probe) with a dimension (build) whose
/// keys are thinned so that about `e` of the fact rows find no partner; run
/// with and without the join's bitvector filter.
pub fn breakeven_benchmark(config: &BenchConfig) -> Result<BenchReport, ExecError> {
    if config.fact_size == 0 || config.dim_size == 0 {
        return Err(ExecError::Infeasible("benchmark sizes must be positive".into()));
    }
    let opts = ExecOptions {
        cost: config.model,
        timing: config.timing,
    };
    let mut rows = Vec::with_capacity(config.grid.len());
    for &e in &config.grid {
        if !(0.0..=1.0).contains(&e) {
            return Err(ExecError::Infeasible(format!("elimination {e} outside [0, 1]")));
        }
        let cut = (e * 20.0).round() as i64;
        let dim_rows: Vec<Vec<i64>> = (0..config.dim_size as i64)
            .filter(|k| k % 20 >= cut)
            .map(|k| vec![k])
            .collect();
        let fact_rows: Vec<Vec<i64>> = (0..config.fact_size as i64)
            .map(|i| vec![i % config.dim_size as i64])
            .collect();
        let catalog = Catalog::new(
            vec![
                Relation::new("fact", config.fact_size as u64).with_columns(["dim_id"]),
                Relation::new("dim", dim_rows.len() as u64)
                    .with_columns(["id"])
                    .with_key(["id"]),
            ],
            vec![JoinEdge::new("fact", "dim", ["dim_id"], ["id"]).pkfk(PkFk::LeftToRight)],
        )
        .expect("fixed benchmark schema");
        let graph = JoinGraph::new(catalog).expect("two relations");
        let data = Dataset::new(
            &graph,
            vec![
                Table::new("fact", vec!["dim_id".into()], fact_rows)?,
                Table::new("dim", vec!["id".into()], dim_rows)?,
            ],
        )?;
        let bare = Plan::right_deep(&["fact", "dim"], &graph).expect("fixed plan");
        let filtered = bare.with_filter_mode(config.mode);
        let without = execute(&bare, &data, &opts)?;
        let with = execute(&filtered, &data, &opts)?;
        let probe_leaf = with.metrics.operators[2].output_rows as f64;
        rows.push(BenchRow {
            e,
            measured_elimination: 1.0 - probe_leaf / config.fact_size as f64,
            cost_with: with.metrics.total_cost(),
            cost_without: without.metrics.total_cost(),
            wall_with_ns: with.metrics.wall_ns,
            wall_without_ns: without.metrics.wall_ns,
        });
    }
    let break_even = interpolate(&rows);
    Ok(BenchReport {
        fact_size: config.fact_size,
        dim_size: config.dim_size,
        rows,
        break_even,
    })
}

fn interpolate(rows: &[BenchRow]) -> Option<f64> {
    let diff = |r: &BenchRow| r.cost_with - r.cost_without;
    let first = rows.first()?;
    if diff(first) <= 0.0 {
        return Some(first.e);
    }
    rows.windows(2).find_map(|w| {
        let (d0, d1) = (diff(&w[0]), diff(&w[1]));
        (d0 > 0.0 && d1 <= 0.0).then(|| w[0].e + (w[1].e - w[0].e) * d0 / (d0 - d1))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep() {
        let config = BenchConfig {
            fact_size: 20_000,
            dim_size: 200,
            ..BenchConfig::default()
        };
        let report = breakeven_benchmark(&config).unwrap();
        assert_eq!(report.rows.len(), 20);
        let first = &report.rows[0];
        assert!(first.cost_with > first.cost_without);
        let last = report.rows.last().unwrap();
        assert!(last.cost_with < last.cost_without);
        let be = report.break_even.unwrap();
        assert!(be > 0.0 && be < 0.3, "{be}");
        for w in report.rows.windows(2) {
            assert!(w[1].cost_with <= w[0].cost_with);
        }
        assert!(report.to_csv().starts_with("e,cost_with,cost_without,wall_with_ns,wall_without_ns\n0.00,"));
    }

    #[test]
    fn single_point_grid() {
        let config = BenchConfig {
            fact_size: 100,
            dim_size: 20,
            grid: vec![0.5],
            ..BenchConfig::default()
        };
        let report = breakeven_benchmark(&config).unwrap();
        assert_eq!(report.to_csv().lines().count(), 2);
        assert!((report.rows[0].measured_elimination - 0.5).abs() < 1e-9);
    }
}

//! Python bindings: load workloads, build and optimize plans, execute them
//! over generated or CSV data and run the verification oracle.

use std::sync::Arc;

use bvqo_core::executor::{
    breakeven_benchmark, exact_provider, execute as run_plan, generate_data, tuple_breakdown,
    BenchConfig, Dataset as CoreDataset, ExecOptions,
};
use bvqo_core::{
    self as core, CardinalityProvider, FilterCostModel, FilterMode, JoinGraph as CoreGraph,
    OptimizerConfig, Plan as CorePlan, StatisticalProvider,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_mode(mode: &str) -> PyResult<FilterMode> {
    mode.parse().map_err(value_err)
}

/// A validated join graph.
#[pyclass(frozen, module = "bvqo")]
struct JoinGraph {
    inner: Arc<CoreGraph>,
}

#[pymethods]
impl JoinGraph {
    /// Parses a workload document.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let catalog = core::load_catalog(text).map_err(value_err)?;
        Self::wrap(catalog)
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let catalog = core::load_catalog_file(path).map_err(value_err)?;
        Self::wrap(catalog)
    }

    fn relations(&self) -> Vec<String> {
        (0..self.inner.len()).map(|i| self.inner.name(i).to_string()).collect()
    }

    fn cardinality(&self, name: &str) -> PyResult<u64> {
        let i = self.inner.require(name).map_err(value_err)?;
        Ok(self.inner.cardinality(i))
    }

    /// `star`, `branch`, `snowflake` or `general`.
    fn shape(&self) -> PyResult<String> {
        Ok(core::classify(&self.inner).map_err(value_err)?.to_string())
    }

    fn fact_tables(&self) -> Vec<String> {
        core::find_fact_tables(&self.inner)
    }

    fn to_json(&self) -> String {
        self.inner.catalog().to_json()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("JoinGraph(relations={:?})", self.relations())
    }
}

impl JoinGraph {
    fn wrap(catalog: core::Catalog) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(CoreGraph::new(catalog).map_err(value_err)?),
        })
    }
}

/// One integer table per relation of a graph.
#[pyclass(frozen, module = "bvqo")]
struct Dataset {
    inner: CoreDataset,
    graph: Arc<CoreGraph>,
}

#[pymethods]
impl Dataset {
    /// Random tables honouring the graph's keys and foreign-key selectivities.
    #[staticmethod]
    fn generate(graph: &JoinGraph, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: generate_data(&graph.inner, seed).map_err(value_err)?,
            graph: graph.inner.clone(),
        })
    }

    /// Reads `<relation>.csv` for every relation from `directory`.
    #[staticmethod]
    fn load(graph: &JoinGraph, directory: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CoreDataset::load_dir(&graph.inner, directory).map_err(value_err)?,
            graph: graph.inner.clone(),
        })
    }

    fn write(&self, directory: &str) -> PyResult<()> {
        self.inner.write_dir(directory).map_err(runtime_err)
    }

    fn row_count(&self, relation: &str) -> PyResult<usize> {
        let i = self.graph.require(relation).map_err(value_err)?;
        Ok(self.inner.table(i).len())
    }
}

/// A hash-join plan with its bitvector filters.
#[pyclass(frozen, module = "bvqo")]
struct Plan {
    inner: CorePlan,
    graph: Arc<CoreGraph>,
}

#[pymethods]
impl Plan {
    /// Right-deep plan; `order[0]` is the deepest probe-side relation.
    #[staticmethod]
    #[pyo3(signature = (graph, order, filter_mode = "perfect"))]
    fn right_deep(graph: &JoinGraph, order: Vec<String>, filter_mode: &str) -> PyResult<Self> {
        let plan = CorePlan::right_deep(&order, &graph.inner).map_err(value_err)?;
        Ok(Self {
            inner: plan.push_down_bitvectors().with_filter_mode(parse_mode(filter_mode)?),
            graph: graph.inner.clone(),
        })
    }

    fn explain(&self) -> String {
        self.inner.explain()
    }

    /// Explain text annotated with per-node cardinalities.
    #[pyo3(signature = (data = None))]
    fn explain_costed(&self, data: Option<&Dataset>) -> PyResult<String> {
        let provider = provider(&self.graph, data);
        let cards = provider.node_cardinalities(&self.inner).map_err(runtime_err)?;
        Ok(self.inner.explain_with_cardinalities(&cards))
    }

    /// Sum of node cardinalities, exact with `data`, estimated otherwise.
    #[pyo3(signature = (data = None))]
    fn cout(&self, data: Option<&Dataset>) -> PyResult<f64> {
        let provider = provider(&self.graph, data);
        Ok(core::cout(&self.inner, provider.as_ref()).map_err(runtime_err)?.total)
    }

    /// Leaf relations in plan order.
    fn leaves(&self) -> Vec<String> {
        self.inner.leaf_names().into_iter().map(String::from).collect()
    }

    fn right_deep_order(&self) -> Option<Vec<String>> {
        self.inner.right_deep_order()
    }

    fn is_right_deep(&self) -> bool {
        self.inner.is_right_deep()
    }

    fn has_cross_product(&self) -> bool {
        self.inner.has_cross_product()
    }

    fn filter_count(&self) -> usize {
        self.inner.filters().len()
    }

    /// Keeps only filters eliminating at least `threshold` of their input.
    #[pyo3(signature = (data = None, threshold = 0.05))]
    fn gated(&self, data: Option<&Dataset>, threshold: f64) -> PyResult<Self> {
        let provider = provider(&self.graph, data);
        let model = FilterCostModel {
            gate_threshold: threshold,
            ..FilterCostModel::default()
        };
        Ok(Self {
            inner: core::gate_bitvectors(&self.inner, &model, provider.as_ref()).map_err(runtime_err)?,
            graph: self.graph.clone(),
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(runtime_err)
    }

    fn __repr__(&self) -> String {
        format!("Plan(leaves={:?}, filters={})", self.leaves(), self.filter_count())
    }
}

fn provider(graph: &Arc<CoreGraph>, data: Option<&Dataset>) -> Box<dyn CardinalityProvider> {
    match data {
        Some(d) => Box::new(exact_provider(d.inner.clone(), graph)),
        None => Box::new(StatisticalProvider::new(graph)),
    }
}

/// Bitvector-aware plan for any join graph.
#[pyfunction]
#[pyo3(signature = (graph, data = None, filter_mode = "perfect"))]
fn optimize(graph: &JoinGraph, data: Option<&Dataset>, filter_mode: &str) -> PyResult<Plan> {
    let config = OptimizerConfig {
        filter_mode: parse_mode(filter_mode)?,
        ..OptimizerConfig::default()
    };
    let provider = provider(&graph.inner, data);
    let plan = core::optimize_join_graph(&graph.inner, provider.as_ref(), &config).map_err(runtime_err)?;
    Ok(Plan {
        inner: plan,
        graph: graph.inner.clone(),
    })
}

/// Right-deep plan in catalog order avoiding cross products, filters pushed down.
#[pyfunction]
#[pyo3(signature = (graph, filter_mode = "perfect"))]
fn baseline(graph: &JoinGraph, filter_mode: &str) -> PyResult<Plan> {
    let plan = core::baseline_plan(&graph.inner, parse_mode(filter_mode)?).map_err(runtime_err)?;
    Ok(Plan {
        inner: plan,
        graph: graph.inner.clone(),
    })
}

/// Candidate plans whose minimum is optimal for star, branch and snowflake graphs.
#[pyfunction]
fn candidates(graph: &JoinGraph) -> PyResult<Vec<Plan>> {
    let set = core::theorem_candidates(&graph.inner).map_err(value_err)?;
    Ok(set
        .plans
        .into_iter()
        .map(|inner| Plan {
            inner,
            graph: graph.inner.clone(),
        })
        .collect())
}

/// Runs a plan and returns per-node output counts, simulated cost and tuple groups.
#[pyfunction]
fn execute<'py>(py: Python<'py>, plan: &Plan, data: &Dataset) -> PyResult<Bound<'py, PyAny>> {
    #[derive(Serialize)]
    struct Run {
        output_counts: Vec<u64>,
        simulated_cost: f64,
        result_rows: usize,
        tuples: bvqo_core::executor::TupleBreakdown,
    }
    let run = run_plan(&plan.inner, &data.inner, &ExecOptions::default()).map_err(runtime_err)?;
    let report = Run {
        output_counts: run.metrics.output_counts(),
        simulated_cost: run.metrics.total_cost(),
        result_rows: run.rows.len(),
        tuples: tuple_breakdown(&run.metrics),
    };
    to_py(py, &report)
}

/// Compares the candidate minimum against every right-deep plan without cross products.
#[pyfunction]
#[pyo3(signature = (graph, data, filter_mode = "perfect", cap = core::DEFAULT_CAP, seed = None))]
fn verify<'py>(
    py: Python<'py>,
    graph: &JoinGraph,
    data: &Dataset,
    filter_mode: &str,
    cap: usize,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let provider = exact_provider(data.inner.clone(), &graph.inner);
    let report = core::verify_theorem(&graph.inner, &provider, parse_mode(filter_mode)?, cap, seed)
        .map_err(value_err)?;
    to_py(py, &report)
}

/// Number of right-deep plans without cross products.
#[pyfunction]
#[pyo3(signature = (graph, cap = core::DEFAULT_CAP))]
fn plan_space_size(graph: &JoinGraph, cap: usize) -> PyResult<usize> {
    Ok(core::right_deep_orders(&graph.inner, cap).map_err(value_err)?.len())
}

/// Retained fraction below which a filter pays off: `1 - check_cost / probe_cost`.
#[pyfunction]
#[pyo3(signature = (check_cost = 1.0, probe_cost = 10.0))]
fn lambda_threshold(check_cost: f64, probe_cost: f64) -> PyResult<f64> {
    let model = FilterCostModel {
        check_cost,
        probe_cost,
        ..FilterCostModel::default()
    };
    core::lambda_threshold(&model).map_err(value_err)
}

/// Sweeps the eliminated fraction of a single join's filter.
#[pyfunction]
#[pyo3(signature = (fact_size = 100_000, dim_size = 1_000, grid = None))]
fn breakeven<'py>(
    py: Python<'py>,
    fact_size: usize,
    dim_size: usize,
    grid: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut config = BenchConfig {
        fact_size,
        dim_size,
        ..BenchConfig::default()
    };
    if let Some(grid) = grid {
        config.grid = grid;
    }
    let report = breakeven_benchmark(&config).map_err(value_err)?;
    to_py(py, &report)
}

#[pymodule]
pub fn bvqo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<JoinGraph>()?;
    m.add_class::<Dataset>()?;
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(baseline, m)?)?;
    m.add_function(wrap_pyfunction!(candidates, m)?)?;
    m.add_function(wrap_pyfunction!(execute, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(plan_space_size, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(breakeven, m)?)?;
    Ok(())
}

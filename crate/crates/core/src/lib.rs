//! Bitvector-aware join ordering for decision-support queries.
//!
//! Plans are right-deep hash-join trees whose joins each create a bitvector
//! filter from their build side and push it down the probe side. Plans are
//! costed with C_out, the sum of filtered intermediate result sizes.

pub mod catalog;
pub mod cost_model;
pub mod executor;
pub mod join_graph;
pub mod optimizer;
pub mod oracle;
pub mod plan;

pub use catalog::{load_catalog, load_catalog_file, Catalog, CatalogError, JoinEdge, PkFk, Relation};
pub use cost_model::{
    cout, filter_benefit, filtered_cardinality, lambda_threshold, CardinalityProvider, CostError,
    CostReport, FilterCostModel, FilterSpec, StatisticalProvider,
};
pub use join_graph::{
    classify, extract_snowflake, find_fact_tables, group_branches, BranchGroup, GraphError,
    JoinGraph, Priority, RelSet, Shape, SnowflakeShape,
};
pub use plan::{
    is_partially_ordered, BitvectorFilter, FilterId, FilterMode, JoinTree, NodeId, NodeKind, Plan,
    PlanError, PlanNode,
};
pub use optimizer::{
    baseline_plan, branch_candidates, filter_eliminations, gate_bitvectors, heuristic_candidates,
    join_branches, optimize_join_graph, optimize_snowflake, snowflake_candidates, sort_branches,
    star_candidates, theorem_candidates, CandidateSet, OptimizerConfig, OptimizerError, Provenance,
};
pub use oracle::{
    enumerate_right_deep_no_cp, naive_plan_count, run_theorem_suite, suite_graph, theorem_suite_shapes, SuiteRun, SuiteShape, partially_ordered_plans, right_deep_orders,
    verify_equal_cost_class, verify_theorem, GraphSummary, OracleError, VerificationReport, Verdict,
    DEFAULT_CAP,
};

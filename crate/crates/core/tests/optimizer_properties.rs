mod common;

use bvqo_core::executor::{exact_provider, generate_data};
use bvqo_core::*;
use proptest::prelude::*;

#[test]
fn candidate_sets_have_one_plan_per_relation() {
    for shape in theorem_suite_shapes(2, 8) {
        let g = suite_graph(&shape, 3);
        let set = theorem_candidates(&g).unwrap();
        assert_eq!(set.len(), shape.relation_count(), "{}", shape.label());
        for plan in &set.plans {
            assert!(plan.is_right_deep() && !plan.has_cross_product(), "{}", shape.label());
            assert_eq!(plan.leaf_names().len(), shape.relation_count());
        }
    }
}

/// Swapping the last chain relation one step towards the rightmost leaf,
/// when it does not already sit right above its neighbour, never raises
/// the cost.
#[test]
fn pushing_down_the_chain_end_never_costs_more() {
    for dims in 2..=5 {
        let shape = SuiteShape {
            kind: Shape::Branch,
            branch_lengths: vec![dims],
        };
        for seed in 0..4 {
            let g = suite_graph(&shape, seed);
            let provider = exact_provider(generate_data(&g, seed).unwrap(), &g);
            let last = g.index_of(&format!("D1_{dims}")).unwrap();
            let before = if dims == 1 { 0 } else { g.index_of(&format!("D1_{}", dims - 1)).unwrap() };
            for order in right_deep_orders(&g, DEFAULT_CAP).unwrap() {
                let k = order.iter().position(|&r| r == last).unwrap();
                if k == 0 || order[k - 1] == before {
                    continue;
                }
                let mut swapped = order.clone();
                swapped.swap(k - 1, k);
                let names = |o: &[usize]| o.iter().map(|&i| g.name(i).to_string()).collect::<Vec<_>>();
                let t = Plan::right_deep(&names(&order), &g).unwrap().push_down_bitvectors();
                let t2 = Plan::right_deep(&names(&swapped), &g).unwrap().push_down_bitvectors();
                assert!(!t2.has_cross_product());
                assert!(cout(&t2, &provider).unwrap().total <= cout(&t, &provider).unwrap().total);
            }
        }
    }
}

#[test]
fn equal_cost_classes_on_small_shapes() {
    for shape in theorem_suite_shapes(3, 6) {
        if shape.kind == Shape::Branch {
            continue;
        }
        for seed in 0..3 {
            let g = suite_graph(&shape, seed);
            let provider = exact_provider(generate_data(&g, seed).unwrap(), &g);
            assert!(verify_equal_cost_class(&g, &provider, DEFAULT_CAP).unwrap(), "{}", shape.label());
        }
    }
}

#[test]
fn snowflake_heuristic_is_no_worse_than_its_baseline() {
    for shape in theorem_suite_shapes(3, 7) {
        let g = suite_graph(&shape, 11);
        let provider = exact_provider(generate_data(&g, 11).unwrap(), &g);
        let snowflake = extract_snowflake(&g).unwrap();
        let config = OptimizerConfig::default();
        let set = heuristic_candidates(&snowflake, &g, &provider, &config).unwrap();
        let costs = set.costs(&provider).unwrap();
        let plan = optimize_snowflake(&snowflake, &g, &provider, &config).unwrap();
        let chosen = cout(&plan, &provider).unwrap().total;
        assert!(chosen <= costs[0]);
        assert_eq!(chosen, costs.iter().cloned().fold(f64::INFINITY, f64::min));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn general_optimizer_covers_every_relation(seed in any::<u64>(), n in 1usize..10) {
        let g = common::random_graph(seed, n);
        let provider = StatisticalProvider::new(&g);
        let plan = optimize_join_graph(&g, &provider, &OptimizerConfig::default()).unwrap();
        let mut leaves: Vec<&str> = plan.leaf_names();
        leaves.sort_unstable();
        let mut names: Vec<&str> = (0..n).map(|i| g.name(i)).collect();
        names.sort_unstable();
        prop_assert_eq!(leaves, names);
        prop_assert!(!plan.has_cross_product());
        prop_assert_eq!(plan.push_down_bitvectors(), plan.clone());
    }

    #[test]
    fn disconnected_graphs_still_cover_everything(seed in any::<u64>(), n in 2usize..6, m in 1usize..5) {
        let a = common::random_graph(seed, n);
        let b = common::relabel(&common::random_graph(seed ^ 1, m), seed);
        let mut rels = a.catalog().relations.clone();
        rels.extend(b.catalog().relations.iter().cloned());
        let mut edges = a.edges().to_vec();
        edges.extend(b.edges().iter().cloned());
        let g = JoinGraph::new(Catalog::new(rels, edges).unwrap()).unwrap();
        let plan = optimize_join_graph(&g, &StatisticalProvider::new(&g), &OptimizerConfig::default()).unwrap();
        prop_assert_eq!(plan.leaf_names().len(), n + m);
        prop_assert!(plan.has_cross_product());
    }

    #[test]
    fn gating_keeps_exactly_the_filters_above_threshold(seed in any::<u64>(), threshold in 0.0f64..1.0) {
        let g = common::fact_two_dims(seed);
        let provider = exact_provider(generate_data(&g, seed).unwrap(), &g);
        let plan = Plan::right_deep(&["F", "A", "B"], &g).unwrap().push_down_bitvectors();
        let model = FilterCostModel { gate_threshold: threshold, ..FilterCostModel::default() };
        let gated = gate_bitvectors(&plan, &model, &provider).unwrap();
        for (id, e) in filter_eliminations(&plan, &provider).unwrap() {
            prop_assert_eq!(gated.filter(id).is_some(), e >= threshold);
        }
    }
}

mod common;

use std::collections::HashSet;

use bvqo_core::executor::{exact_provider, generate_data};
use bvqo_core::*;
use proptest::prelude::*;

fn spec(graph: &JoinGraph, names: &[&str], mode: FilterMode) -> FilterSpec {
    FilterSpec {
        source: graph.set_of(names).unwrap(),
        mode,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn perfect_filter_algebra(seed in any::<u64>()) {
        let g = common::fact_two_dims(seed);
        let data = generate_data(&g, seed).unwrap();
        let fact = g.set_of(&["F"]).unwrap();
        let fa = g.set_of(&["F", "A"]).unwrap();

        let a_keys: HashSet<i64> = common::column(&data, &g, "A", "A_id").into_iter().collect();
        let b_keys: HashSet<i64> = common::column(&data, &g, "B", "B_id").into_iter().collect();
        let fk_a = common::column(&data, &g, "F", "F_A");
        let fk_b = common::column(&data, &g, "F", "F_B");
        let both = fk_a.iter().zip(&fk_b).filter(|(a, b)| a_keys.contains(a) && b_keys.contains(b)).count();
        let only_a = fk_a.iter().filter(|a| a_keys.contains(a)).count();

        let p = exact_provider(data, &g);
        let fa_spec = spec(&g, &["A"], FilterMode::Perfect);
        let fb_spec = spec(&g, &["B"], FilterMode::Perfect);
        let ab = p.filtered_cardinality(fact, &[fa_spec, fb_spec]).unwrap();
        let ba = p.filtered_cardinality(fact, &[fb_spec, fa_spec]).unwrap();
        let a = p.filtered_cardinality(fact, &[fa_spec]).unwrap();
        let full = p.filtered_cardinality(fact, &[]).unwrap();

        // Commutativity and reduction.
        prop_assert_eq!(ab, ba);
        prop_assert!(a <= full);
        prop_assert!(ab <= a);
        // Associativity against a direct count over the tables.
        prop_assert_eq!(ab, both as f64);
        prop_assert_eq!(a, only_a as f64);
        // Redundancy: a filter from a relation already joined is a no-op.
        let joined = p.filtered_cardinality(fa, &[]).unwrap();
        prop_assert_eq!(p.filtered_cardinality(fa, &[fa_spec]).unwrap(), joined);
        // Absorption: with a key on the build side the semi-join equals the join.
        prop_assert_eq!(a, joined);
        prop_assert_eq!(p.join_count(fa) as f64, joined);
    }

    #[test]
    fn lossy_filters_only_over_retain(seed in any::<u64>(), fp in 0.05f64..0.6) {
        let g = common::fact_two_dims(seed);
        let p = exact_provider(generate_data(&g, seed).unwrap(), &g);
        let fact = g.set_of(&["F"]).unwrap();
        let fa = g.set_of(&["F", "A"]).unwrap();
        let lossy = spec(&g, &["A"], FilterMode::Lossy(fp));
        let kept = p.filtered_cardinality(fact, &[lossy]).unwrap();
        prop_assert!(kept >= p.join_count(fa) as f64);
        prop_assert!(kept <= p.filtered_cardinality(fact, &[]).unwrap());
    }

    #[test]
    fn statistical_estimates_respect_reduction(seed in any::<u64>(), fp in 0.0f64..0.9) {
        let g = common::fact_two_dims(seed);
        let s = StatisticalProvider::new(&g);
        let fact = g.set_of(&["F"]).unwrap();
        let full = s.filtered_cardinality(fact, &[]).unwrap();
        for mode in [FilterMode::Perfect, FilterMode::Lossy(fp)] {
            let a = spec(&g, &["A"], mode);
            let b = spec(&g, &["B"], mode);
            let ab = s.filtered_cardinality(fact, &[a, b]).unwrap();
            prop_assert!(ab <= full + 1e-9);
            prop_assert!((ab - s.filtered_cardinality(fact, &[b, a]).unwrap()).abs() < 1e-9);
        }
        let perfect = s.filtered_cardinality(fact, &[spec(&g, &["A"], FilterMode::Perfect)]).unwrap();
        let lossy = s.filtered_cardinality(fact, &[spec(&g, &["A"], FilterMode::Lossy(fp))]).unwrap();
        prop_assert!(lossy + 1e-9 >= perfect);
    }
}

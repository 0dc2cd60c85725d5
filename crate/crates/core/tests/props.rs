//! Randomized properties: ontology subtyping is a partial order, solution
//! documents round-trip, and canonical renaming is idempotent.

mod common;

use proptest::prelude::*;

use common::gen_small_problem;
use flowcompose::io::{emit_solution, parse_instance};
use flowcompose::ontology::predefined_ontology;
use flowcompose::search::{canonical_key, enumerate};

fn predefined_type(ix: usize) -> String {
    let ont = predefined_ontology();
    let ids: Vec<_> = ont.type_ids().cloned().collect();
    ids[ix % ids.len()].clone()
}

proptest! {
    #[test]
    fn subtyping_is_reflexive(ix in 0usize..64) {
        let ont = predefined_ontology();
        let t = predefined_type(ix);
        prop_assert!(ont.is_subtype(&t, &t).unwrap());
    }

    #[test]
    fn subtyping_is_transitive(a in 0usize..64, b in 0usize..64, c in 0usize..64) {
        let ont = predefined_ontology();
        let (a, b, c) = (predefined_type(a), predefined_type(b), predefined_type(c));
        if ont.is_subtype(&a, &b).unwrap() && ont.is_subtype(&b, &c).unwrap() {
            prop_assert!(ont.is_subtype(&a, &c).unwrap());
        }
    }

    #[test]
    fn every_type_is_below_the_root(ix in 0usize..64) {
        let ont = predefined_ontology();
        prop_assert!(ont.is_subtype(&predefined_type(ix), "DataType").unwrap());
    }

    #[test]
    fn subtyping_is_antisymmetric(a in 0usize..64, b in 0usize..64) {
        let ont = predefined_ontology();
        let (a, b) = (predefined_type(a), predefined_type(b));
        if a != b {
            prop_assert!(
                !(ont.is_subtype(&a, &b).unwrap() && ont.is_subtype(&b, &a).unwrap())
            );
        }
    }

    #[test]
    fn solutions_round_trip_through_the_document_format(seed in 0u64..500) {
        let problem = gen_small_problem(seed);
        for solution in enumerate(&problem).unwrap().into_iter().take(3) {
            let text = emit_solution(&problem, &solution);
            let parsed = parse_instance(&text).unwrap();
            prop_assert_eq!(&parsed.graph, &solution.graph);
        }
    }

    #[test]
    fn canonical_keys_are_stable_across_re_emission(seed in 0u64..500) {
        let problem = gen_small_problem(seed);
        for solution in enumerate(&problem).unwrap().into_iter().take(3) {
            let text = emit_solution(&problem, &solution);
            let parsed = parse_instance(&text).unwrap();
            prop_assert_eq!(canonical_key(&parsed.graph), canonical_key(&solution.graph));
        }
    }
}

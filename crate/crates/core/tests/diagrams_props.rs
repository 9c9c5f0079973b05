use std::collections::BTreeMap;

use polylab::diagrams::{eval_diagram, DiagramSpec, Factor, Reduction};
use polylab::fields::LatticeField;
use polylab::greens::{green_field, Walk};
use polylab::StepKernel;
use proptest::prelude::*;

fn walk_fields(z: f64) -> BTreeMap<String, LatticeField> {
    let k = StepKernel::new(2, 1).unwrap();
    let s = green_field(&Walk::SpreadOut(k.clone()), z, 32).unwrap().to_box(8).unwrap();
    let s2 = green_field(&Walk::SpreadOut(StepKernel::new(2, 2).unwrap()), z * 0.9, 32).unwrap().to_box(8).unwrap();
    BTreeMap::from([("S".to_string(), s), ("T".to_string(), s2)])
}

fn factor_strategy() -> impl Strategy<Value = Factor> {
    prop_oneof![Just(Factor::field("S")), Just(Factor::field("T")), Just(Factor::kernel(1)), Just(Factor::kernel(2))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reversal_invariance(factors in prop::collection::vec(factor_strategy(), 2..5), z in 0.2f64..0.8) {
        prop_assume!(factors.iter().any(|f| matches!(f.source, polylab::diagrams::Source::Field { .. })));
        let fields = walk_fields(z);
        let forward = eval_diagram(&DiagramSpec::new(factors.clone()), &fields, 0.7).unwrap();
        let reversed: Vec<Factor> = factors.into_iter().rev().collect();
        let backward = eval_diagram(&DiagramSpec::new(reversed), &fields, 0.7).unwrap();
        prop_assert!((forward.value - backward.value).abs() <= 1e-10 * forward.value.abs().max(1.0));
    }

    #[test]
    fn symmetrized_tilt_never_decreases(m in 0.0f64..0.8, which in 0usize..3, z in 0.2f64..0.8) {
        let fields = walk_fields(z);
        let base = vec![Factor::kernel(1), Factor::field("S"), Factor::field("S")];
        let mut tilted = base.clone();
        tilted[which] = tilted[which].clone().tilted(m);
        let v0 = eval_diagram(&DiagramSpec::new(base), &fields, 0.5).unwrap().value;
        let vm = eval_diagram(&DiagramSpec::new(tilted), &fields, 0.5).unwrap().value;
        prop_assert!(vm >= v0 * (1.0 - 1e-12));
    }

    #[test]
    fn sup_dominates_origin(factors in prop::collection::vec(factor_strategy(), 1..4), a in 0.0f64..3.0) {
        prop_assume!(factors.iter().any(|f| matches!(f.source, polylab::diagrams::Source::Field { .. })));
        let fields = walk_fields(0.6);
        let mut factors = factors;
        factors[0] = factors[0].clone().weighted(a);
        let spec = DiagramSpec::new(factors);
        let sup = eval_diagram(&spec, &fields, 0.5).unwrap().value;
        let at0 = eval_diagram(&spec.with_reduction(Reduction::AtOrigin), &fields, 0.5).unwrap().value;
        prop_assert!(sup >= at0.abs());
    }
}

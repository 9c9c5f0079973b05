use num_bigint::BigInt;
use num_rational::BigRational;
use polylab::enumerate::Model;
use polylab::torus::{lift_audit, sandwich_all, wrap_identity_check};
use polylab::StepKernel;
use proptest::prelude::*;

fn kernel(d: usize, l: u32) -> StepKernel {
    StepKernel::new(d, l).unwrap()
}

#[test]
fn lift_audits_pass() {
    for (d, l, r, n) in [(1, 1, 4, 5), (1, 2, 5, 4), (2, 1, 4, 3)] {
        for model in [Model::Tree, Model::Animal] {
            let audit = lift_audit(&kernel(d, l), r, n, model).unwrap();
            assert!(audit.passed(), "d={d} L={l} r={r} {model}: {:?}", audit.failures);
            assert!(audit.lemma_pool > 0);
        }
    }
}

#[test]
fn sandwich_holds_on_larger_periods() {
    let p = BigRational::new(BigInt::from(1), BigInt::from(10));
    for (d, l, r, n) in [(1, 1, 4, 6), (1, 2, 5, 4), (2, 1, 4, 4)] {
        for model in [Model::Tree, Model::Animal] {
            for rep in sandwich_all(&kernel(d, l), r, n, model, &p).unwrap() {
                assert!(rep.holds, "d={d} L={l} r={r} {model} x={:?}", rep.x);
                assert!(rep.upper_coefficientwise);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn wrap_identity_agrees(d in 1usize..=2, l in 1u32..=2, z in 0.2f64..0.8, r in 5usize..9, k in 1usize..=3) {
        let rep = wrap_identity_check(&kernel(d, l), z, r, k).unwrap();
        prop_assert!(rep.discrepancy <= 1e-8, "{:?}", rep);
    }

    #[test]
    fn sandwich_holds_at_random_activities(num in 1i64..8, den in 8i64..40) {
        let p = BigRational::new(BigInt::from(num), BigInt::from(den));
        for rep in sandwich_all(&kernel(1, 1), 3, 5, Model::Tree, &p).unwrap() {
            prop_assert!(rep.lower_at_p && rep.upper_at_p);
        }
    }
}

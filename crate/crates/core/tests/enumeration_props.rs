use num_bigint::BigInt;
use polylab::enumerate::{Enumerator, Model, TwoPointTable};
use polylab::StepKernel;
use proptest::prelude::*;

fn table(d: usize, l: u32, model: Model, n_max: usize) -> TwoPointTable {
    Enumerator::new(&StepKernel::new(d, l).unwrap(), model, n_max).two_point_table().unwrap()
}

fn model_strategy() -> impl Strategy<Value = Model> {
    prop_oneof![Just(Model::Tree), Just(Model::Animal)]
}

#[test]
fn counts_do_not_depend_on_threads_or_shards() {
    let k = StepKernel::new(2, 1).unwrap();
    for model in [Model::Tree, Model::Animal] {
        let reference = Enumerator::new(&k, model, 5).split_depth(0).two_point_table().unwrap();
        for threads in [1, 2, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            for split in [1, 2, 3] {
                let t = pool.install(|| Enumerator::new(&k, model, 5).split_depth(split).two_point_table().unwrap());
                assert_eq!(t.t_n, reference.t_n);
                assert_eq!(t.rooted_n, reference.rooted_n);
                assert_eq!(t.support(), reference.support());
            }
        }
    }
}

#[test]
fn trees_rooted_counts_and_double_counting() {
    for (d, l, n) in [(1, 2, 6), (2, 1, 5), (3, 1, 4)] {
        let t = table(d, l, Model::Tree, n);
        let chi = t.susceptibility();
        for k in 0..=n {
            assert_eq!(t.rooted_n[k], (k as u64 + 1) * t.t_n[k]);
            let total: u64 = t.support().iter().map(|(_, c)| c[k]).sum();
            assert_eq!(chi.coeff(k), &BigInt::from(total));
            assert_eq!(total, (k as u64 + 1).pow(2) * t.t_n[k]);
        }
    }
}

#[test]
fn two_point_decays_no_faster_than_tilted_susceptibility_allows() {
    for model in [Model::Tree, Model::Animal] {
        let t = table(2, 1, model, 5);
        for m in [0.0, 0.3, 1.0] {
            let chi_m = t.tilted(m);
            for p in [0.05, 0.1] {
                let bound = chi_m.eval_f64(p);
                for (x, _) in t.support() {
                    let norm = x.iter().map(|c| c.abs()).max().unwrap() as f64;
                    let g = t.series(&x).eval_f64(p);
                    assert!(g <= bound * (-m * norm).exp() * (1.0 + 1e-12), "{model} x={x:?} m={m} p={p}");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coefficients_have_lattice_symmetry(model in model_strategy(), l in 1u32..=2, n in 2usize..=4) {
        let t = table(2, l, model, n);
        for (x, c) in t.support() {
            prop_assert_eq!(&t.coeffs(&[-x[0], -x[1]]), &c);
            prop_assert_eq!(&t.coeffs(&[x[1], x[0]]), &c);
            prop_assert_eq!(&t.coeffs(&[-x[0], x[1]]), &c);
        }
        prop_assert!(t.susceptibility().is_nonnegative());
    }

    #[test]
    fn animals_dominate_trees(d in 1usize..=2, l in 1u32..=2, n in 1usize..=4) {
        let trees = table(d, l, Model::Tree, n);
        let animals = table(d, l, Model::Animal, n);
        for k in 0..=n {
            prop_assert!(animals.t_n[k] >= trees.t_n[k]);
            prop_assert!(animals.rooted_n[k] <= (k as u64 + 1) * animals.t_n[k]);
        }
    }
}

use polylab::greens::{decomposition_params, green_field, nn_mass, so_mass, Walk};
use polylab::StepKernel;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn green_sum_is_inverse_gap(d in 1usize..=3, l in 1u32..=3, z in 0.05f64..0.95) {
        let k = StepKernel::new(d, l).unwrap();
        let n = if d == 3 { 16 } else { 32 };
        let s = green_field(&Walk::SpreadOut(k), z, n).unwrap();
        prop_assert!((s.sum() - 1.0 / (1.0 - z)).abs() <= 1e-10 / (1.0 - z));
    }

    #[test]
    fn green_field_symmetries(l in 1u32..=2, z in 0.1f64..0.9) {
        let k = StepKernel::new(2, l).unwrap();
        let s = green_field(&Walk::SpreadOut(k), z, 16).unwrap();
        prop_assert!(s.symmetry_defect() <= 1e-14);
        for (x, v) in s.iter() {
            prop_assert!((s.get(&[x[1], x[0]]) - v).abs() <= 1e-14);
        }
    }

    #[test]
    fn masses_decrease(d in 1usize..=3, l in 1u32..=3, a in 0.05f64..0.95, b in 0.05f64..0.95) {
        prop_assume!((a - b).abs() > 1e-3);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let k = StepKernel::new(d, l).unwrap();
        prop_assert!(so_mass(&k, lo).unwrap().m > so_mass(&k, hi).unwrap().m);
        prop_assert!(nn_mass(lo, d).unwrap().m > nn_mass(hi, d).unwrap().m);
    }

    #[test]
    fn decomposition_moments_vanish(d in 1usize..=4, l in 1u32..=5, z in 0.01f64..0.99) {
        let p = decomposition_params(&StepKernel::new(d, l).unwrap(), z).unwrap();
        prop_assert!(p.moment0.abs() <= 1e-12);
        prop_assert!(p.moment2.abs() <= 1e-10);
    }

    #[test]
    fn one_dimensional_nearest_range_mass(z in 0.01f64..0.999) {
        let m = so_mass(&StepKernel::new(1, 1).unwrap(), z).unwrap().m;
        prop_assert!((m - (1.0 / z).acosh()).abs() <= 1e-12);
    }
}

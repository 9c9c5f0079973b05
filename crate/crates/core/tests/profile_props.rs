use polylab::profile::{asymptotic_ratio, faxen_general, faxen_i0};
use proptest::prelude::*;

#[test]
fn log_convex_on_a_grid() {
    let h = 0.25;
    let logs: Vec<f64> = (-120..=120).map(|i| faxen_i0(i as f64 * h).unwrap().ln_i0).collect();
    for w in logs.windows(3) {
        assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-8);
    }
}

#[test]
fn asymptotic_ratios_approach_one() {
    for side in [-1.0, 1.0] {
        let devs: Vec<f64> = (4..=40).map(|s| (asymptotic_ratio(side * s as f64).unwrap() - 1.0).abs()).collect();
        for w in devs.windows(2) {
            assert!(w[1] <= w[0], "{side}: {devs:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn general_form_matches(s in -30.0f64..30.0) {
        let i0 = faxen_i0(s).unwrap().i0;
        let fi = faxen_general(0.5, 0.25, s).unwrap();
        prop_assert!((fi / (2f64.powf(1.5) * i0) - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn positive_and_increasing(s in -45.0f64..45.0, ds in 0.01f64..2.0) {
        let a = faxen_i0(s).unwrap();
        let b = faxen_i0(s + ds).unwrap();
        prop_assert!(a.i0 > 0.0 && b.ln_i0 > a.ln_i0);
    }
}

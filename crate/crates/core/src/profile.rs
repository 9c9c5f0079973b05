//! The branched-polymer window profile `I0(s) = int_0^inf e^{-t^4/4 + s t^2/2} dt`,
//! the Faxén integral `Fi(alpha, beta; y)`, and finite-size scaling exponents.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate;
use crate::rational::as_string;

/// Beyond this `|s|` the asymptotic series replaces quadrature.
pub const ASYMPTOTIC_SWITCH: f64 = 50.0;
/// Half-width of the band around the switch where both values are reported.
pub const SWITCH_BAND: f64 = 10.0;
/// Above this `s` the integrand is rescaled around its peak at `t = sqrt(s)`.
const SADDLE_FROM: f64 = 6.0;
/// Integrands are cut where they drop below `e^{-TAIL}` of their peak.
const TAIL: f64 = 40.0;
const MAX_TERMS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMethod {
    /// Gauss–Kronrod on `[0, T*]`.
    Quadrature,
    /// Gauss–Kronrod after `t = sqrt(s) u`, with `e^{s^2/4}` factored out.
    SaddleQuadrature,
    /// Optimally truncated asymptotic series.
    Asymptotic,
}

/// Both evaluations near the quadrature/asymptotic switch, as natural logs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchBand {
    pub ln_quadrature: f64,
    pub ln_asymptotic: f64,
    pub relative_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileValue {
    pub s: f64,
    /// `I0(s)`; infinite once `e^{s^2/4}` overflows, see `ln_i0`.
    pub i0: f64,
    pub ln_i0: f64,
    pub method: ProfileMethod,
    /// Absolute error estimate on `i0`.
    pub est_error: f64,
    /// `est_error / i0`, finite even when `i0` overflows.
    pub rel_error: f64,
    pub band: Option<SwitchBand>,
}

/// `(ln value, relative error)` by quadrature.
fn i0_quadrature(s: f64) -> Result<(f64, f64, ProfileMethod)> {
    if s <= SADDLE_FROM {
        // Exponent t^4/4 - s t^2/2 reaches TAIL at t^2 = s + sqrt(s^2 + 8 TAIL).
        let upper = (s + (s * s + 8.0 * TAIL).sqrt()).sqrt();
        let breaks = if s > 0.0 { vec![s.sqrt()] } else { vec![] };
        let f = |t: f64| (-0.25 * t.powi(4) + 0.5 * s * t * t).exp();
        let q = integrate(f, 0.0, upper, &breaks, 1e-14)?;
        Ok((q.value.ln(), q.error / q.value, ProfileMethod::Quadrature))
    } else {
        // I0 = sqrt(s) e^{s^2/4} int_0^inf e^{-s^2 (u^2 - 1)^2 / 4} du.
        let reach = (4.0 * TAIL).sqrt() / s;
        let upper = (1.0 + reach).sqrt();
        let lower = (1.0 - reach).max(0.0).sqrt();
        let f = |u: f64| {
            let v = u * u - 1.0;
            (-0.25 * s * s * v * v).exp()
        };
        let q = integrate(f, 0.0, upper, &[lower, 1.0], 1e-15)?;
        let ln = 0.5 * s.ln() + 0.25 * s * s + q.value.ln();
        Ok((ln, q.error / q.value, ProfileMethod::SaddleQuadrature))
    }
}

/// `Gamma(n + 1/2)`.
fn gamma_half(n: usize) -> f64 {
    (0..n).fold(std::f64::consts::PI.sqrt(), |acc, k| acc * (k as f64 + 0.5))
}

/// Sums terms until they stop decreasing; returns `(sum, last included |term|)`.
fn optimally_truncated(term: impl Fn(usize) -> f64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for k in 0..MAX_TERMS {
        let t = term(k);
        if t.abs() >= last {
            break;
        }
        sum += t;
        last = t.abs();
    }
    (sum, last)
}

/// `(ln value, relative error)` from the large-`|s|` expansions.
fn i0_asymptotic(s: f64) -> Result<(f64, f64)> {
    if s == 0.0 {
        return invalid("asymptotic expansion needs s != 0");
    }
    if s < 0.0 {
        // Expand e^{-t^4/4} under the Gaussian e^{-|s| t^2 / 2}.
        let sigma = -s;
        let (sum, last) = optimally_truncated(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let fact: f64 = (1..=k).map(|j| j as f64).product();
            sign / (4f64.powi(k as i32) * fact) * 0.5 * gamma_half(2 * k) * (2.0 / sigma).powf(2.0 * k as f64 + 0.5)
        });
        Ok((sum.ln(), last / sum))
    } else {
        // With v = u^2 - 1 the saddle integral becomes
        // 1/2 int e^{-s^2 v^2/4} (1+v)^{-1/2} dv; expand (1+v)^{-1/2}.
        let (sum, last) = optimally_truncated(|j| {
            let n = 2 * j;
            let binom = (0..n).fold(1.0, |acc, i| acc * (-0.5 - i as f64) / (i as f64 + 1.0));
            0.5 * binom * gamma_half(j) * (2.0 / s).powi(n as i32 + 1)
        });
        Ok((0.5 * s.ln() + 0.25 * s * s + sum.ln(), last / sum))
    }
}

/// `I0(s)` by quadrature for `|s| <= 50` and by the asymptotic series beyond.
pub fn faxen_i0(s: f64) -> Result<ProfileValue> {
    if !s.is_finite() {
        return invalid(format!("s must be finite, got {s}"));
    }
    let use_asymptotic = s.abs() > ASYMPTOTIC_SWITCH;
    let in_band = (s.abs() - ASYMPTOTIC_SWITCH).abs() <= SWITCH_BAND;
    let quad = if !use_asymptotic || in_band { Some(i0_quadrature(s)?) } else { None };
    let asym = if use_asymptotic || in_band { Some(i0_asymptotic(s)?) } else { None };
    let (ln_i0, rel_error, method) = match (use_asymptotic, quad, asym) {
        (false, Some(q), _) => q,
        (true, _, Some((ln, rel))) => (ln, rel, ProfileMethod::Asymptotic),
        _ => unreachable!("selected method is always evaluated"),
    };
    let band = match (quad, asym) {
        (Some((lq, _, _)), Some((la, _))) if in_band => Some(SwitchBand {
            ln_quadrature: lq,
            ln_asymptotic: la,
            relative_gap: (lq - la).exp_m1().abs(),
        }),
        _ => None,
    };
    let i0 = ln_i0.exp();
    Ok(ProfileValue { s, i0, ln_i0, method, est_error: rel_error * i0, rel_error, band })
}

/// `I0(s)` divided by its leading large-`|s|` behaviour:
/// `sqrt(pi/2) |s|^{-1/2}` for `s < 0` and `sqrt(pi) s^{-1/2} e^{s^2/4}` for `s > 0`.
pub fn asymptotic_ratio(s: f64) -> Result<f64> {
    let value = faxen_i0(s)?;
    let pi = std::f64::consts::PI;
    let ln_leading = if s < 0.0 {
        0.5 * (0.5 * pi).ln() - 0.5 * (-s).ln()
    } else if s > 0.0 {
        0.5 * pi.ln() - 0.5 * s.ln() + 0.25 * s * s
    } else {
        return invalid("leading behaviour is defined only for s != 0");
    };
    Ok((value.ln_i0 - ln_leading).exp())
}

/// `Fi(alpha, beta; y) = int_0^inf e^{-t + y t^alpha} t^{beta - 1} dt`.
///
/// Evaluated after `t = u^{1/beta}`, which removes the endpoint power:
/// `Fi = (1/beta) int_0^inf e^{-u^{1/beta} + y u^{alpha/beta}} du`.
pub fn faxen_general(alpha: f64, beta: f64, y: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) || !(beta > 0.0) || !y.is_finite() {
        return invalid(format!("need 0 <= alpha < 1, beta > 0, finite y; got ({alpha}, {beta}, {y})"));
    }
    let h = |t: f64| -t + y * t.powf(alpha);
    let peak = if y > 0.0 && alpha > 0.0 { (alpha * y).powf(1.0 / (1.0 - alpha)) } else { 0.0 };
    let h_ref = h(peak);
    let mut upper = (2.0 * peak).max(1.0);
    while h(upper) > h_ref - TAIL - 10.0 {
        upper *= 2.0;
        if !upper.is_finite() {
            return Err(Error::Overflow("Faxén integrand does not decay".into()));
        }
    }
    let g = |u: f64| (-u.powf(1.0 / beta) + y * u.powf(alpha / beta) - h_ref).exp();
    let u_max = upper.powf(beta);
    let breaks = if peak > 0.0 { vec![peak.powf(beta)] } else { vec![] };
    let coarse = integrate(g, 0.0, u_max, &breaks, 1e-8)?;
    let fine = integrate(g, 0.0, u_max, &breaks, 1e-14 * coarse.value.abs().max(1e-300))?;
    let value = fine.value / beta * h_ref.exp();
    if !value.is_finite() {
        return Err(Error::Overflow(format!("Fi({alpha}, {beta}; {y}) overflows")));
    }
    Ok(value)
}

/// Finite-size scaling predictions on a torus of volume `V = r^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowPrediction {
    pub d: u32,
    pub r: u64,
    pub volume: u128,
    #[serde(with = "as_string")]
    pub gamma: Rational64,
    pub dc: i64,
    /// `-2 / (gamma d_c)`.
    #[serde(with = "as_string")]
    pub window_exponent: Rational64,
    /// `2 / d_c`.
    #[serde(with = "as_string")]
    pub chi_exponent: Rational64,
    /// `2 / d_c - 1`.
    #[serde(with = "as_string")]
    pub plateau_exponent: Rational64,
    pub window: f64,
    pub chi_scale: f64,
    pub plateau_scale: f64,
    /// For `(gamma, d_c) = (1/2, 8)`, whether the exponents equal `(-1/2, 1/4, -3/4)`.
    pub specialised_match: Option<bool>,
}

pub fn window_prediction(d: u32, r: u64, gamma: Rational64, dc: i64) -> Result<WindowPrediction> {
    if gamma <= Rational64::from_integer(0) || dc <= 0 {
        return invalid("gamma and d_c must be positive");
    }
    if (d as i64) <= dc {
        return invalid(format!("window scaling needs d > d_c, got d = {d}, d_c = {dc}"));
    }
    if r < 2 {
        return invalid("torus period must be at least 2");
    }
    let volume = (r as u128)
        .checked_pow(d)
        .ok_or_else(|| Error::Overflow(format!("V = {r}^{d} does not fit in 128 bits")))?;
    let two = Rational64::from_integer(2);
    let dc_r = Rational64::from_integer(dc);
    let window_exponent = -two / (gamma * dc_r);
    let chi_exponent = two / dc_r;
    let plateau_exponent = chi_exponent - 1;
    let scale = |e: Rational64| (volume as f64).powf(*e.numer() as f64 / *e.denom() as f64);
    let specialised_match = (gamma == Rational64::new(1, 2) && dc == 8).then(|| {
        window_exponent == Rational64::new(-1, 2)
            && chi_exponent == Rational64::new(1, 4)
            && plateau_exponent == Rational64::new(-3, 4)
    });
    Ok(WindowPrediction {
        d,
        r,
        volume,
        gamma,
        dc,
        window_exponent,
        chi_exponent,
        plateau_exponent,
        window: scale(window_exponent),
        chi_scale: scale(chi_exponent),
        plateau_scale: scale(plateau_exponent),
        specialised_match,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAMMA_QUARTER: f64 = 3.625_609_908_221_908_3;

    #[test]
    fn value_at_zero_is_gamma_form() {
        let v = faxen_i0(0.0).unwrap();
        assert!((v.i0 - GAMMA_QUARTER / 4f64.powf(0.75)).abs() < 1e-12);
        assert!(v.est_error <= 1e-10);
        assert_eq!(v.method, ProfileMethod::Quadrature);
    }

    #[test]
    fn saddle_form_matches_direct_quadrature() {
        for s in [6.5, 7.5, 9.0] {
            let upper = (s + (s * s + 320.0f64).sqrt()).sqrt();
            let f = |t: f64| (-0.25 * t.powi(4) + 0.5 * s * t * t).exp();
            let direct = integrate(f, 0.0, upper, &[s.sqrt()], 1e-12).unwrap().value;
            let v = faxen_i0(s).unwrap();
            assert_eq!(v.method, ProfileMethod::SaddleQuadrature);
            assert!((v.i0 / direct - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn asymptotics_at_the_switch() {
        let v = faxen_i0(50.0).unwrap();
        let band = v.band.unwrap();
        assert!(band.relative_gap < 1e-10);
        let far = faxen_i0(70.0).unwrap();
        assert_eq!(far.method, ProfileMethod::Asymptotic);
        assert!(far.i0.is_infinite() && far.ln_i0.is_finite());
        let neg = faxen_i0(-55.0).unwrap();
        assert!(neg.band.unwrap().relative_gap < 1e-10);
        assert!(faxen_i0(-100.0).unwrap().band.is_none());
        assert!(faxen_i0(f64::NAN).is_err());
    }

    #[test]
    fn asymptotic_ratios() {
        assert!((asymptotic_ratio(-8.0).unwrap() - 1.0).abs() < 0.02);
        assert!((asymptotic_ratio(8.0).unwrap() - 1.0).abs() < 0.02);
        assert!((asymptotic_ratio(-20.0).unwrap() - 1.0).abs() < 0.003);
        assert!((asymptotic_ratio(20.0).unwrap() - 1.0).abs() < 0.003);
        assert!(asymptotic_ratio(0.0).is_err());
    }

    #[test]
    fn faxen_general_special_values() {
        assert!((faxen_general(0.3, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((faxen_general(0.5, 2.0, 0.0).unwrap() - 1.0).abs() < 1e-10);
        assert!((faxen_general(0.5, 0.5, 0.0).unwrap() - std::f64::consts::PI.sqrt()).abs() < 1e-10);
        assert!((faxen_general(0.5, 0.25, 0.0).unwrap() - GAMMA_QUARTER).abs() < 1e-10);
        assert!((faxen_general(0.0, 3.0, 1.5).unwrap() - 2.0 * 1.5f64.exp()).abs() < 1e-9);
        assert!(faxen_general(1.0, 1.0, 0.0).is_err());
        assert!(faxen_general(0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn faxen_identity_with_profile() {
        for s in [-10.0, -2.0, 0.0, 1.0, 5.0, 9.0] {
            let fi = faxen_general(0.5, 0.25, s).unwrap();
            let i0 = faxen_i0(s).unwrap().i0;
            assert!((fi / (2f64.powf(1.5) * i0) - 1.0).abs() < 1e-8, "s = {s}");
        }
    }

    #[test]
    fn window_exponents() {
        let w = window_prediction(9, 3, Rational64::new(1, 2), 8).unwrap();
        assert_eq!(w.volume, 19683);
        assert_eq!(
            (w.window_exponent, w.chi_exponent, w.plateau_exponent),
            (Rational64::new(-1, 2), Rational64::new(1, 4), Rational64::new(-3, 4))
        );
        assert_eq!(w.specialised_match, Some(true));
        assert!((w.window - 19683f64.powf(-0.5)).abs() < 1e-15);
        let perc = window_prediction(7, 3, Rational64::from_integer(1), 6).unwrap();
        assert_eq!(
            (perc.window_exponent, perc.chi_exponent, perc.plateau_exponent),
            (Rational64::new(-1, 3), Rational64::new(1, 3), Rational64::new(-2, 3))
        );
        assert_eq!(perc.specialised_match, None);
        assert!(window_prediction(8, 3, Rational64::new(1, 2), 8).is_err());
        assert!(matches!(window_prediction(100, 1 << 40, Rational64::new(1, 2), 8), Err(Error::Overflow(_))));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn log_convex_and_increasing(s in -30.0f64..30.0, h in 0.05f64..1.0) {
                let a = faxen_i0(s - h).unwrap().ln_i0;
                let b = faxen_i0(s).unwrap().ln_i0;
                let c = faxen_i0(s + h).unwrap().ln_i0;
                prop_assert!(a < b && b < c);
                prop_assert!(a + c - 2.0 * b >= -1e-8);
            }
        }

        #[test]
        fn ratios_approach_one_monotonically() {
            let grid: Vec<f64> = (4..=40).map(|k| k as f64).collect();
            for sign in [-1.0, 1.0] {
                let gaps: Vec<f64> = grid.iter().map(|&s| (asymptotic_ratio(sign * s).unwrap() - 1.0).abs()).collect();
                assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{sign}: {gaps:?}");
            }
        }
    }
}

use flatwave::profile::{CustomProfile, Profile};
use proptest::prelude::*;

fn builtin(kind: u8, param: f64) -> Profile {
    if kind == 0 {
        Profile::power(param)
    } else {
        Profile::expflat(param)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_rescaling_is_identity(m in 2.0f64..10.0, j in 0u32..40, s in 0.01f64..2.0) {
        let p = Profile::power(m);
        let pj = p.rescaled_profile(j);
        let (a, b) = (p.gamma_unchecked(s), pj.gamma_unchecked(s));
        prop_assert!((a - b).abs() <= 1e-14 * a.abs());
    }

    #[test]
    fn rescaled_profiles_are_normalized_and_monotone(kind in 0u8..2, param in 0.5f64..6.0, j in 0u32..8) {
        let param = if kind == 0 { param + 1.5 } else { param };
        let pj = builtin(kind, param).rescaled_profile(j);
        prop_assert!((pj.gamma_unchecked(1.0) - 1.0).abs() < 1e-14);
        let mut last = 0.0;
        for k in 0..=200 {
            let v = pj.gamma_unchecked(2.0 * k as f64 / 200.0);
            prop_assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn central_differences_match_closed_forms(kind in 0u8..2, param in 0.5f64..4.0, s in 0.1f64..2.0) {
        let param = if kind == 0 { param + 1.5 } else { param };
        let p = builtin(kind, param);
        // the same function, seen only through point evaluations
        let (q, ql) = (p.clone(), p.clone());
        let opaque = Profile::custom(
            CustomProfile::new("opaque", move |x| q.gamma_unchecked(x)).with_log(move |x| ql.log_gamma(x)),
        );
        for order in [1u8, 2] {
            let exact = p.gamma_deriv(s, order).unwrap();
            let fd = opaque.gamma_deriv(s, order).unwrap();
            // γ'' = γ(ℓ'' + ℓ'²) cancels near inflection points, so measure it
            // against the size of the cancelling terms.
            let scale = if order == 1 {
                exact.abs()
            } else {
                let d1 = p.gamma_deriv(s, 1).unwrap();
                exact.abs() + d1 * d1 / p.gamma_unchecked(s)
            };
            prop_assert!((fd - exact).abs() <= 1e-6 * scale.max(1e-300), "order {}: {} vs {}", order, fd, exact);
        }
    }

    #[test]
    fn log_and_linear_evaluations_agree(kind in 0u8..2, param in 0.5f64..6.0, s in 0.05f64..2.0) {
        let param = if kind == 0 { param + 1.5 } else { param };
        let p = builtin(kind, param);
        let lin = p.gamma_unchecked(s);
        prop_assume!(lin > 1e-300 && lin.is_finite());
        prop_assert!((p.log_gamma(s).exp() - lin).abs() <= 1e-12 * lin);
    }
}

#[test]
fn closed_form_derivatives_against_hand_oracles() {
    let s: f64 = 0.7;
    let p = Profile::power(4.0);
    assert!((p.gamma_deriv(s, 1).unwrap() - 4.0 * s.powi(3)).abs() < 1e-14);
    assert!((p.gamma_deriv(s, 2).unwrap() - 12.0 * s * s).abs() < 1e-14);
    // γ = e^{-1/s}: γ' = γ/s², γ'' = γ(1/s⁴ - 2/s³)
    let e = Profile::expflat(1.0);
    let g = (-1.0 / s).exp();
    assert!((e.gamma_deriv(s, 1).unwrap() - g / (s * s)).abs() < 1e-14);
    assert!((e.gamma_deriv(s, 2).unwrap() - g * (1.0 / s.powi(4) - 2.0 / s.powi(3))).abs() < 1e-13);
}

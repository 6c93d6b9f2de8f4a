use flatwave::boundedness::{
    classify_series, family_hint, sharpness_scan, tangent_distance_condition, theorem4_terms, SeriesClass,
    SharpnessFamily,
};
use flatwave::profile::Profile;
use flatwave::young::YoungFunction;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_verdict_matches_critical_exponent(m in prop::sample::select(vec![4.0, 6.0, 8.0]), n in 3usize..6, off in 0.01f64..0.5, above in any::<bool>()) {
        let pc = m / (n - 1) as f64;
        let p_exp = if above { pc * (1.0 + off) } else { pc * (1.0 - off) };
        prop_assume!(p_exp >= 1.0);
        let (p, y) = (Profile::power(m), YoungFunction::truncated_power(p_exp).unwrap());
        let v = classify_series(&theorem4_terms(&p, &y, n, 64).unwrap(), family_hint(&p, &y, n)).unwrap();
        let want = if above { SeriesClass::Converges } else { SeriesClass::Diverges };
        prop_assert_eq!(v.class, want);
    }

    #[test]
    fn flat_verdict_matches_critical_exponent(beta in 0.5f64..2.0, n in 3usize..5, ratio in prop::sample::select(vec![0.5, 1.0, 1.5, 2.5])) {
        let alpha = ratio * beta;
        let (p, y) = (Profile::expflat(alpha), YoungFunction::exp_type(beta).unwrap());
        let v = classify_series(&theorem4_terms(&p, &y, n, 64).unwrap(), family_hint(&p, &y, n)).unwrap();
        let want = if alpha < beta * (n - 1) as f64 { SeriesClass::Converges } else { SeriesClass::Diverges };
        prop_assert_eq!(v.class, want);
    }

    #[test]
    fn tangent_condition_matches_threshold(m in 4.0f64..8.0, n in 3usize..5, off in 0.02f64..0.5, above in any::<bool>()) {
        let pc = m / (n - 1) as f64;
        let pexp = if above { pc * (1.0 + off) } else { pc * (1.0 - off) };
        let v = tangent_distance_condition(&Profile::power(m), n, pexp, 64).unwrap();
        let want = if above { SeriesClass::Converges } else { SeriesClass::Diverges };
        prop_assert_eq!(v.class, want);
    }
}

#[test]
fn tangent_condition_and_sharpness_agree() {
    for (m, n) in [(4.0, 3usize), (6.0, 3), (6.0, 4)] {
        let fam = SharpnessFamily::PowerExponent { m, n };
        let r = sharpness_scan(&fam, fam.default_range(), 1e-4).unwrap();
        let pc = m / (n - 1) as f64;
        let below = tangent_distance_condition(&Profile::power(m), n, r.estimate * 0.995, 64).unwrap();
        let above = tangent_distance_condition(&Profile::power(m), n, r.estimate * 1.005, 64).unwrap();
        assert_eq!(below.class, SeriesClass::Diverges);
        assert_eq!(above.class, SeriesClass::Converges);
        assert!((r.estimate - pc).abs() < 1e-3);
    }
}

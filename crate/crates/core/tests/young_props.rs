use flatwave::grid::{GridFunction, GridSpec};
use flatwave::young::{bak_interpolation_bound, orlicz_norm, YoungFunction};
use proptest::prelude::*;

fn family(kind: u8, a: f64) -> YoungFunction {
    match kind {
        0 => YoungFunction::pure_power(1.0 + a).unwrap(),
        1 => YoungFunction::truncated_power(1.0 + a).unwrap(),
        2 => YoungFunction::power_log(1.0 + a, 0.5 * a).unwrap(),
        _ => YoungFunction::exp_type(0.5 + 0.5 * a).unwrap(),
    }
}

fn grid(values: Vec<f64>) -> GridFunction {
    let spec = GridSpec::cube(2, 1.0, 0.5).unwrap();
    GridFunction::from_samples(spec, values).unwrap()
}

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 25)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn homogeneity(kind in 0u8..4, a in 0.1f64..3.0, v in samples(), c in -20.0f64..20.0) {
        let y = family(kind, a);
        prop_assume!(c.abs() > 1e-3 && v.iter().any(|x| x.abs() > 1e-6));
        let n1 = orlicz_norm(&y, &grid(v.clone())).unwrap();
        let n2 = orlicz_norm(&y, &grid(v.iter().map(|x| c * x).collect())).unwrap();
        prop_assert!((n2 - c.abs() * n1).abs() <= 1e-9 * c.abs() * n1);
    }

    #[test]
    fn triangle_and_monotonicity(kind in 0u8..4, a in 0.1f64..3.0, v in samples(), w in samples()) {
        let y = family(kind, a);
        let nf = orlicz_norm(&y, &grid(v.clone())).unwrap();
        let ng = orlicz_norm(&y, &grid(w.clone())).unwrap();
        let sum: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
        prop_assert!(orlicz_norm(&y, &grid(sum)).unwrap() <= (nf + ng) * (1.0 + 1e-9));
        let big: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a.abs().max(b.abs())).collect();
        let nbig = orlicz_norm(&y, &grid(big)).unwrap();
        prop_assert!(nf <= nbig * (1.0 + 1e-9) && ng <= nbig * (1.0 + 1e-9));
    }

    #[test]
    fn generalized_inverse_contract(kind in 0u8..4, a in 0.1f64..3.0, ly in -20.0f64..20.0) {
        let y = family(kind, a);
        let target = ly.exp();
        let t = y.phi_inverse(target).unwrap();
        prop_assert!(y.big_phi(t) >= target);
        let below = t * (1.0 - 1e-9) - 1e-12;
        prop_assert!(y.big_phi(below) < target);
    }

    #[test]
    fn pure_power_norm_is_lp(p in 1.0f64..6.0, v in samples()) {
        let y = YoungFunction::pure_power(p).unwrap();
        let g = grid(v);
        let want = g.lp_norm(p);
        prop_assume!(want > 0.0);
        prop_assert!((orlicz_norm(&y, &g).unwrap() / want - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn bak_bound_for_pure_powers(p in 1.0f64..6.0, r in 1.0f64..4.0, la in -5.0f64..5.0, lb in -5.0f64..5.0) {
        let y = YoungFunction::pure_power(p).unwrap();
        let (a, b) = (la.exp(), lb.exp());
        let want = b * (a / b).powf(r / p);
        prop_assert!((bak_interpolation_bound(a, b, r, &y).unwrap() / want - 1.0).abs() <= 1e-12);
    }
}

use flatwave::oscillatory::{f_j, f_j_bruteforce, Amplitude, Frequency};
use flatwave::profile::Profile;
use proptest::prelude::*;

fn profile(kind: u8) -> Profile {
    match kind {
        0 => Profile::power(2.0),
        1 => Profile::power(4.0),
        _ => Profile::expflat(1.0),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn modulus_bounded_by_zero_frequency(kind in 0u8..3, j in 0u32..5, n in 3usize..5, a in 0.0f64..200.0, lam in -200.0f64..200.0) {
        let p = profile(kind);
        let amp = Amplitude::SharpAnnulus;
        let zero = f_j(&p, j, &Frequency::new(n, 0.0, 0.0).unwrap(), &amp).unwrap();
        let v = f_j(&p, j, &Frequency::new(n, a, lam).unwrap(), &amp).unwrap();
        prop_assert!(v.modulus() <= zero.modulus() + v.abs_error + zero.abs_error);
    }

    #[test]
    fn conjugate_symmetry(kind in 0u8..3, j in 0u32..4, a in 0.0f64..100.0, lam in 0.1f64..300.0) {
        let p = profile(kind);
        let amp = Amplitude::SmoothCutoff;
        let plus = f_j(&p, j, &Frequency::new(3, a, lam).unwrap(), &amp).unwrap();
        let minus = f_j(&p, j, &Frequency::new(3, a, -lam).unwrap(), &amp).unwrap();
        prop_assert!((plus.value.conj() - minus.value).norm() <= 1e-9 * plus.modulus().max(1e-3));
    }

    #[test]
    fn power_modulus_is_j_invariant(m in 2.0f64..8.0, a in 0.0f64..100.0, lam in -100.0f64..100.0) {
        let p = Profile::power(m);
        let amp = Amplitude::SharpAnnulus;
        let freq = Frequency::new(3, a, lam).unwrap();
        let base = f_j(&p, 0, &freq, &amp).unwrap().modulus();
        for j in 1..=8 {
            let v = f_j(&p, j, &freq, &amp).unwrap().modulus();
            prop_assert!((v - base).abs() <= 1e-9 * base.max(1e-300));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn agrees_with_brute_force(kind in 0u8..3, j in prop::sample::select(vec![0u32, 3]), n in 3usize..5, a in 0.0f64..20.0, lam in -20.0f64..20.0) {
        let p = profile(kind);
        let freq = Frequency::new(n, a, lam).unwrap();
        let fast = f_j(&p, j, &freq, &Amplitude::SharpAnnulus).unwrap();
        let slow = f_j_bruteforce(&p, j, &freq).unwrap();
        prop_assert!((fast.value - slow.value).norm() <= 1e-6 * slow.modulus().max(1e-12));
    }
}

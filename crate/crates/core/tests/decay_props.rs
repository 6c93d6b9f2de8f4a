use flatwave::decay::{f_j_modulus, ray_scan, uniform_constant_scan, Direction, XiGrid};
use flatwave::oscillatory::Amplitude;
use flatwave::profile::Profile;

#[test]
fn higher_dimensions_decay_at_least_like_one_over_xi() {
    let amp = Amplitude::SharpAnnulus;
    let p = Profile::power(4.0);
    let eval = f_j_modulus(&p, 0, 4, &amp);
    for dir in [Direction::XiN, Direction::XiPrime, Direction::Ratio { a: 1.0, lam: 10.0 }] {
        let fit = ray_scan(&eval, dir, 100.0, 3000.0, 12).unwrap();
        assert!(fit.exponent <= -0.9, "{}: {}", dir.tag(), fit.exponent);
    }
}

#[test]
fn three_dimensional_xi_prime_axis_upper_bound() {
    let amp = Amplitude::SharpAnnulus;
    for m in [2.0, 4.0] {
        let p = Profile::power(m);
        let eval = f_j_modulus(&p, 0, 3, &amp);
        let fit = ray_scan(&eval, Direction::XiPrime, 100.0, 3000.0, 12).unwrap();
        assert!(fit.exponent <= -0.9, "m={m}: {}", fit.exponent);
    }
}

#[test]
fn envelope_fit_is_robust_to_sample_density() {
    let amp = Amplitude::SharpAnnulus;
    let p = Profile::power(4.0);
    let eval = f_j_modulus(&p, 0, 3, &amp);
    let a = ray_scan(&eval, Direction::XiN, 100.0, 3000.0, 12).unwrap();
    let b = ray_scan(&eval, Direction::XiN, 100.0, 3000.0, 24).unwrap();
    assert!((a.exponent - b.exponent).abs() <= 0.02, "{} vs {}", a.exponent, b.exponent);
}

#[test]
fn power_constants_are_exactly_j_invariant() {
    let grid = XiGrid::three_regime(&[1.0, 30.0, 300.0]);
    let rep = uniform_constant_scan(&Profile::power(4.0), 3, &[0, 2, 5, 8], &grid, &Amplitude::SharpAnnulus).unwrap();
    assert!(rep.spread <= 1e-9, "{rep:?}");
}

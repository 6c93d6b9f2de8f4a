//! Bessel functions `J_ν` of integer and half-integer order on `[0, ∞)`.
//!
//! Orders are passed doubled (`nu2 = 2ν`) so that half-integers stay exact.
//! Small arguments use the power series. Half-integer orders beyond that use
//! the terminating spherical-Bessel form. Integer orders use Miller's backward
//! recurrence at moderate arguments and the Hankel expansion for large ones.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 4.0;
const HALF_INT_CLOSED_LIMIT: f64 = 1.0;
const HANKEL_LIMIT: f64 = 25.0;

fn gamma_half_int(nu2: u32) -> f64 {
    // Γ(ν + 1) for ν = nu2 / 2
    if nu2 % 2 == 0 {
        (1..=nu2 / 2).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt() * 0.5; // Γ(3/2)
        let mut x = 1.5;
        while x < nu2 as f64 / 2.0 + 1.0 - 1e-9 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// `x^{-ν} J_ν(x)` by the power series; finite at `x = 0`.
fn scaled_series(nu2: u32, x: f64) -> f64 {
    let nu = nu2 as f64 / 2.0;
    let q = 0.25 * x * x;
    let mut term = 0.5f64.powf(nu) / gamma_half_int(nu2);
    let mut sum = term;
    for k in 0..200 {
        let kf = k as f64;
        term *= -q / ((kf + 1.0) * (kf + nu + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn spherical_j(l: u32, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    if l == 0 {
        return j0;
    }
    let mut jm = j0;
    let mut jc = s / (x * x) - c / x;
    for k in 1..l {
        let jn = (2 * k + 1) as f64 / x * jc - jm;
        jm = jc;
        jc = jn;
    }
    jc
}

fn hankel(nu2: u32, x: f64) -> f64 {
    let nu = nu2 as f64 / 2.0;
    let mu = 4.0 * nu * nu;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        if term.abs() > prev && k > 2 {
            break;
        }
        prev = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let phase = nu * FRAC_PI_2 + FRAC_PI_4;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let cos_w = cx * cp + sx * sp;
    let sin_w = sx * cp - cx * sp;
    (2.0 / (PI * x)).sqrt() * (p * cos_w - q * sin_w)
}

/// `J_0 .. J_{max_order}` by Miller's backward recurrence.
fn miller(max_order: usize, x: f64) -> Vec<f64> {
    let start = (x + 30.0 + (50.0 * x).sqrt()) as usize + max_order;
    let start = start + start % 2;
    let mut out = vec![0.0; max_order + 1];
    let mut jp = 0.0;
    let mut jc = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let jm = 2.0 * k as f64 / x * jc - jp;
        jp = jc;
        jc = jm;
        if jc.abs() > 1e250 {
            jc *= 1e-250;
            jp *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
        let order = k - 1;
        if order <= max_order {
            out[order] = jc;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * jc;
        }
    }
    norm += jc;
    out.iter().map(|v| v / norm).collect()
}

/// `J_ν(x)` for `ν = nu2 / 2`, `x ≥ 0`.
pub fn bessel_j(nu2: u32, x: f64) -> f64 {
    let nu = nu2 as f64 / 2.0;
    if x == 0.0 {
        return if nu2 == 0 { 1.0 } else { 0.0 };
    }
    if nu2 % 2 == 1 && x >= HALF_INT_CLOSED_LIMIT {
        return (2.0 * x / PI).sqrt() * spherical_j(nu2 / 2, x);
    }
    if x < SERIES_LIMIT {
        return x.powf(nu) * scaled_series(nu2, x);
    }
    if x >= HANKEL_LIMIT.max(nu * nu) {
        return hankel(nu2, x);
    }
    miller(nu2 as usize / 2, x)[nu2 as usize / 2]
}

/// `x^{-ν} J_ν(x)`, smooth through `x = 0`.
pub fn bessel_j_scaled(nu2: u32, x: f64) -> f64 {
    let small = if nu2 % 2 == 1 { HALF_INT_CLOSED_LIMIT } else { SERIES_LIMIT };
    if x < small {
        scaled_series(nu2, x)
    } else {
        bessel_j(nu2, x) / x.powf(nu2 as f64 / 2.0)
    }
}

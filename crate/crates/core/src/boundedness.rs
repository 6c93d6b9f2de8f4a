//! Dyadic series deciding boundedness of the maximal operator on `L^Φ`,
//! the matching necessary integral, and threshold scans over one-parameter
//! families of (profile, Young function) pairs.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{geometric_grid, linear_fit, log_sum_exp, GaussLegendre};
use crate::profile::Profile;
use crate::young::{YoungFamily, YoungFunction};

pub const DEFAULT_TERMS: u32 = 64;
const TAIL_WINDOW: usize = 32;
const RATIO_CONVERGE: f64 = 0.98;
const RATIO_DIVERGE: f64 = 1.02;
const FLAT_TAIL: f64 = 0.99;
const HINT_SLOPE_TOL: f64 = 0.05;
const CRITICAL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesClass {
    Converges,
    Diverges,
    Inconclusive,
}

/// Asymptotic shape `term_j ≈ 2^{j·log2_rate} j^{poly_power}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailForm {
    pub log2_rate: f64,
    pub poly_power: f64,
}

impl TailForm {
    pub fn class(&self) -> SeriesClass {
        if self.log2_rate < -CRITICAL_EPS {
            SeriesClass::Converges
        } else if self.log2_rate > CRITICAL_EPS {
            SeriesClass::Diverges
        } else if self.poly_power < -1.0 {
            SeriesClass::Converges
        } else {
            SeriesClass::Diverges
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    /// `closed_form` or `tail_ratio`.
    pub method: String,
    pub hint: Option<TailForm>,
    /// Whether the computed terms follow the hinted shape.
    pub hint_consistent: Option<bool>,
    /// Least-squares slope of `log₂ term_j` over the tail window.
    pub fitted_log2_rate: f64,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub last_over_first: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesVerdict {
    pub class: SeriesClass,
    /// `(j, ln term_j)`.
    pub terms: Vec<(u32, f64)>,
    pub evidence: Evidence,
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Argument(format!("dimension must be >= 2, got {n}")));
    }
    Ok(())
}

/// `ln(2^{-j(n-1)} Φ^{-1}(1/γ(2^{-j})))` for `j = 0..=J`.
pub fn theorem4_terms(p: &Profile, y: &YoungFunction, n: usize, big_j: u32) -> Result<Vec<(u32, f64)>> {
    check_n(n)?;
    (0..=big_j)
        .map(|j| {
            let log_y = -p.log_gamma_dyadic(j);
            let inv = y.log_phi_inverse(log_y)?;
            Ok((j, -(j as f64) * (n - 1) as f64 * LN_2 + inv))
        })
        .collect()
}

/// `ln(2^{-j(n-1)} ∫₁² Φ^{-1}(1/γ(2^{-j}r)) r^{n-2} dr)` by 32-point
/// Gauss-Legendre in the log domain.
pub fn necessary_integral(p: &Profile, y: &YoungFunction, n: usize, big_j: u32) -> Result<Vec<(u32, f64)>> {
    check_n(n)?;
    let gl = GaussLegendre::get(32);
    let nodes: Vec<(f64, f64)> = gl.mapped(1.0, 2.0).collect();
    (0..=big_j)
        .map(|j| {
            let scale = 0.5f64.powi(j as i32);
            let logs = nodes
                .iter()
                .map(|&(r, w)| {
                    let log_y = -p.log_gamma(scale * r);
                    Ok(w.ln() + y.log_phi_inverse(log_y)? + (n as f64 - 2.0) * r.ln())
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((j, -(j as f64) * (n - 1) as f64 * LN_2 + log_sum_exp(&logs)))
        })
        .collect()
}

/// Closed-form tail shape of the series for built-in family pairs.
pub fn family_hint(p: &Profile, y: &YoungFunction, n: usize) -> Option<TailForm> {
    let dim = (n - 1) as f64;
    if let Some(m) = p.is_power() {
        return match y.family {
            YoungFamily::PurePower { p: q } | YoungFamily::TruncatedPower { p: q } => Some(TailForm {
                log2_rate: m / q - dim,
                poly_power: 0.0,
            }),
            YoungFamily::PowerLog { p: q, alpha } => Some(TailForm {
                log2_rate: m / q - dim,
                poly_power: -alpha / q,
            }),
            YoungFamily::ExpType { beta } => Some(TailForm {
                log2_rate: -dim,
                poly_power: 1.0 / beta,
            }),
            _ => None,
        };
    }
    if let Some(alpha) = p.is_expflat() {
        return match y.family {
            YoungFamily::ExpType { beta } => Some(TailForm {
                log2_rate: alpha / beta - dim,
                poly_power: 0.0,
            }),
            YoungFamily::PurePower { .. } | YoungFamily::TruncatedPower { .. } | YoungFamily::PowerLog { .. } => {
                Some(TailForm {
                    log2_rate: f64::INFINITY,
                    poly_power: 0.0,
                })
            }
            _ => None,
        };
    }
    None
}

fn window_slope(js: &[f64], vals: &[f64]) -> f64 {
    linear_fit(js, vals).0
}

fn hint_consistent(hint: &TailForm, js: &[f64], log2_terms: &[f64]) -> bool {
    if log2_terms.iter().any(|v| *v == f64::INFINITY) {
        return hint.log2_rate == f64::INFINITY;
    }
    let fitted = window_slope(js, log2_terms);
    if hint.log2_rate == f64::INFINITY {
        return fitted > 1.0;
    }
    let expected: Vec<f64> = js
        .iter()
        .map(|&j| hint.log2_rate * j + hint.poly_power * j.max(1.0).log2())
        .collect();
    (fitted - window_slope(js, &expected)).abs() <= HINT_SLOPE_TOL
}

/// Classifies `Σ term_j` from log-domain terms. A consistent closed-form hint
/// decides; otherwise the consecutive ratios over the last 32 terms do.
pub fn classify_series(terms: &[(u32, f64)], hint: Option<TailForm>) -> Result<SeriesVerdict> {
    if terms.len() < 8 {
        return Err(Error::Argument(format!("need at least 8 terms, got {}", terms.len())));
    }
    let w = TAIL_WINDOW.min(terms.len());
    let tail = &terms[terms.len() - w..];
    let js: Vec<f64> = tail.iter().map(|t| t.0 as f64).collect();
    let log2: Vec<f64> = tail.iter().map(|t| t.1 / LN_2).collect();
    let finite = log2.iter().all(|v| v.is_finite());
    let fitted = if finite { window_slope(&js, &log2) } else { f64::NAN };

    let ratios: Vec<f64> = tail.windows(2).map(|p| (p[1].1 - p[0].1).exp()).collect();
    let max_ratio = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let last_over_first = (tail[tail.len() - 1].1 - tail[0].1).exp();

    let consistent = hint.map(|h| hint_consistent(&h, &js, &log2));
    let (class, method) = match (hint, consistent) {
        (Some(h), Some(true)) => (h.class(), "closed_form"),
        _ => {
            let class = if tail.iter().any(|t| t.1 == f64::INFINITY) {
                SeriesClass::Diverges
            } else if tail.iter().all(|t| t.1 == f64::NEG_INFINITY) {
                SeriesClass::Converges
            } else if max_ratio < RATIO_CONVERGE {
                SeriesClass::Converges
            } else if min_ratio > RATIO_DIVERGE || last_over_first >= FLAT_TAIL {
                SeriesClass::Diverges
            } else {
                SeriesClass::Inconclusive
            };
            (class, "tail_ratio")
        }
    };
    Ok(SeriesVerdict {
        class,
        terms: terms.to_vec(),
        evidence: Evidence {
            method: method.into(),
            hint,
            hint_consistent: consistent,
            fitted_log2_rate: fitted,
            max_ratio,
            min_ratio,
            last_over_first,
        },
    })
}

/// Condition `γ(|x'|)^{-1} ∈ L^{1/pexp}` near the flat pole: classifies
/// `∫₀¹ γ(r)^{-1/pexp} r^{n-2} dr` through its dyadic pieces.
pub fn tangent_distance_condition(p: &Profile, n: usize, pexp: f64, big_j: u32) -> Result<SeriesVerdict> {
    check_n(n)?;
    if !(pexp > 0.0) {
        return Err(Error::Argument(format!("pexp must be positive, got {pexp}")));
    }
    let gl = GaussLegendre::get(16);
    let terms: Vec<(u32, f64)> = (0..=big_j)
        .map(|j| {
            let (a, b) = (0.5f64.powi(j as i32 + 1), 0.5f64.powi(j as i32));
            let logs: Vec<f64> = gl
                .mapped(a, b)
                .map(|(r, w)| w.ln() - p.log_gamma(r) / pexp + (n as f64 - 2.0) * r.ln())
                .collect();
            (j, log_sum_exp(&logs))
        })
        .collect();
    let dim = (n - 1) as f64;
    let hint = if let Some(m) = p.is_power() {
        Some(TailForm {
            log2_rate: m / pexp - dim,
            poly_power: 0.0,
        })
    } else if p.is_expflat().is_some() {
        Some(TailForm {
            log2_rate: f64::INFINITY,
            poly_power: 0.0,
        })
    } else {
        None
    };
    classify_series(&terms, hint)
}

/// One-parameter families from the worked examples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "example", rename_all = "snake_case")]
pub enum SharpnessFamily {
    /// `γ = s^m`, `Φ = truncated_power(p)`, scanning `p`.
    PowerExponent { m: f64, n: usize },
    /// `γ = s^m`, `Φ = power_log(p, α)`, scanning `α`.
    PowerLogExponent { m: f64, n: usize, p: f64 },
    /// `γ = e^{-1/s^α}`, `Φ = exp_type(β)`, scanning `α`.
    FlatExponent { beta: f64, n: usize },
}

impl SharpnessFamily {
    pub fn param_name(&self) -> &'static str {
        match self {
            SharpnessFamily::PowerExponent { .. } => "p",
            _ => "alpha",
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            SharpnessFamily::PowerExponent { n, .. }
            | SharpnessFamily::PowerLogExponent { n, .. }
            | SharpnessFamily::FlatExponent { n, .. } => n,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SharpnessFamily::PowerExponent { m, n } => format!("power(m={m}) / truncated_power(p), n={n}"),
            SharpnessFamily::PowerLogExponent { m, n, p } => {
                format!("power(m={m}) / power_log(p={p}, alpha), n={n}")
            }
            SharpnessFamily::FlatExponent { beta, n } => format!("expflat(alpha) / exp_type(beta={beta}), n={n}"),
        }
    }

    pub fn build(&self, param: f64) -> Result<(Profile, YoungFunction)> {
        match *self {
            SharpnessFamily::PowerExponent { m, .. } => Ok((Profile::power(m), YoungFunction::truncated_power(param)?)),
            SharpnessFamily::PowerLogExponent { m, p, .. } => {
                Ok((Profile::power(m), YoungFunction::power_log(p, param)?))
            }
            SharpnessFamily::FlatExponent { beta, .. } => {
                if !(param > 0.0) {
                    return Err(Error::Argument(format!("alpha must be positive, got {param}")));
                }
                Ok((Profile::expflat(param), YoungFunction::exp_type(beta)?))
            }
        }
    }

    /// The critical parameter predicted by the examples.
    pub fn closed_form(&self) -> Option<f64> {
        let d = (self.n() - 1) as f64;
        match *self {
            SharpnessFamily::PowerExponent { m, .. } => Some(m / d),
            SharpnessFamily::PowerLogExponent { m, p, .. } => {
                // only on the critical line p = m/(n-1) is the threshold in α
                if (p - m / d).abs() < 1e-12 {
                    Some(m / d)
                } else {
                    None
                }
            }
            SharpnessFamily::FlatExponent { beta, .. } => Some(beta * d),
        }
    }

    pub fn default_range(&self) -> (f64, f64) {
        let d = (self.n() - 1) as f64;
        match *self {
            SharpnessFamily::PowerExponent { m, .. } => (1.0, 4.0 * m / d),
            SharpnessFamily::PowerLogExponent { m, .. } => (0.0, 4.0 * m / d),
            SharpnessFamily::FlatExponent { beta, .. } => (0.1 * beta * d, 2.0 * beta * d),
        }
    }

    pub fn verdict(&self, param: f64, big_j: u32) -> Result<SeriesVerdict> {
        let (p, y) = self.build(param)?;
        let n = self.n();
        let terms = theorem4_terms(&p, &y, n, big_j)?;
        classify_series(&terms, family_hint(&p, &y, n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub family: String,
    pub param: String,
    pub estimate: f64,
    pub bracket: (f64, f64),
    pub closed_form: Option<f64>,
    /// Verdicts at the lower and upper bracket ends.
    pub lower_class: SeriesClass,
    pub upper_class: SeriesClass,
    pub probes: usize,
}

/// Bisection on the family parameter until the bracket is narrower than `tol`.
pub fn sharpness_scan(family: &SharpnessFamily, range: (f64, f64), tol: f64) -> Result<ThresholdResult> {
    let (mut lo, mut hi) = range;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::Argument(format!("invalid range [{lo}, {hi}] or tolerance {tol}")));
    }
    let lo_class = family.verdict(lo, DEFAULT_TERMS)?.class;
    let hi_class = family.verdict(hi, DEFAULT_TERMS)?.class;
    if lo_class == hi_class || lo_class == SeriesClass::Inconclusive || hi_class == SeriesClass::Inconclusive {
        return Err(Error::Bracket(format!("{lo} -> {lo_class:?}, {hi} -> {hi_class:?}")));
    }
    let mut probes = 2;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let c = family.verdict(mid, DEFAULT_TERMS)?.class;
        probes += 1;
        match c {
            SeriesClass::Inconclusive => {
                return Err(Error::Bracket(format!("inconclusive probe at {mid}")));
            }
            c if c == lo_class => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(ThresholdResult {
        family: family.describe(),
        param: family.param_name().into(),
        estimate: 0.5 * (lo + hi),
        bracket: (lo, hi),
        closed_form: family.closed_form(),
        lower_class: lo_class,
        upper_class: hi_class,
        probes,
    })
}

/// Ratio `term31_j / term11_j` per `j`.
pub fn condition_ratios(p: &Profile, y: &YoungFunction, n: usize, big_j: u32) -> Result<Vec<(u32, f64)>> {
    let t11 = theorem4_terms(p, y, n, big_j)?;
    let t31 = necessary_integral(p, y, n, big_j)?;
    Ok(t11.iter().zip(&t31).map(|(a, b)| (a.0, (b.1 - a.1).exp())).collect())
}

/// CSV `j, log2_term11, log2_term31`.
pub fn terms_csv(t11: &[(u32, f64)], t31: &[(u32, f64)]) -> String {
    let mut s = String::from("j,log2_term11,log2_term31\n");
    for (a, b) in t11.iter().zip(t31) {
        s.push_str(&format!("{},{},{}\n", a.0, a.1 / LN_2, b.1 / LN_2));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub profile: String,
    pub young: String,
    pub n: usize,
    pub sufficient: SeriesVerdict,
    pub necessary: SeriesVerdict,
    /// Range of `term31_j / term11_j` over `j`.
    pub ratio_range: (f64, f64),
    /// Worst `log Φ(a) + log Φ(b) − log Φ(ab)` on a grid in `[2, 1e3]`.
    pub supermultiplicativity_defect: f64,
}

pub fn boundedness_report(p: &Profile, y: &YoungFunction, n: usize, big_j: u32) -> Result<BoundednessReport> {
    let hint = family_hint(p, y, n);
    let t11 = theorem4_terms(p, y, n, big_j)?;
    let t31 = necessary_integral(p, y, n, big_j)?;
    let ratios: Vec<f64> = t11.iter().zip(&t31).map(|(a, b)| (b.1 - a.1).exp()).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(BoundednessReport {
        profile: p.describe(),
        young: y.describe(),
        n,
        sufficient: classify_series(&t11, hint)?,
        necessary: classify_series(&t31, hint)?,
        ratio_range: (lo, hi),
        supermultiplicativity_defect: y.supermultiplicativity_defect(&geometric_grid(2.0, 1e3, 16)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log2_terms(t: &[(u32, f64)]) -> Vec<f64> {
        t.iter().map(|x| x.1 / LN_2).collect()
    }

    #[test]
    fn theorem4_terms_examples() {
        let y = YoungFunction::truncated_power(2.0).unwrap();
        let t = log2_terms(&theorem4_terms(&Profile::power(4.0), &y, 3, 20).unwrap());
        // 2^{-2j} (1 + 2^{4j})^{1/2} → 1
        assert!(t[20].abs() < 1e-9);
        let y = YoungFunction::truncated_power(2.5).unwrap();
        let t = log2_terms(&theorem4_terms(&Profile::power(4.0), &y, 3, 20).unwrap());
        assert!((t[20] - t[19] + 0.4).abs() < 1e-9);
        let y = YoungFunction::exp_type(1.0).unwrap();
        let t = log2_terms(&theorem4_terms(&Profile::expflat(1.0), &y, 3, 40).unwrap());
        // ln(e^{2^j} + e) = 2^j up to e^{1-2^j}; then -2j + j
        assert!((t[40] + 40.0).abs() < 1e-9);
    }

    #[test]
    fn classify_examples() {
        let geo: Vec<(u32, f64)> = (0..64).map(|j| (j, -0.4 * j as f64 * LN_2)).collect();
        assert_eq!(classify_series(&geo, None).unwrap().class, SeriesClass::Converges);
        let flat: Vec<(u32, f64)> = (0..64).map(|j| (j, 0.3)).collect();
        assert_eq!(classify_series(&flat, None).unwrap().class, SeriesClass::Diverges);
        let harmonic: Vec<(u32, f64)> = (1..=64).map(|j| (j, -(j as f64).ln())).collect();
        assert_eq!(classify_series(&harmonic, None).unwrap().class, SeriesClass::Inconclusive);
        let hint = TailForm {
            log2_rate: 0.0,
            poly_power: -1.0,
        };
        let v = classify_series(&harmonic, Some(hint)).unwrap();
        assert_eq!(v.class, SeriesClass::Diverges);
        assert_eq!(v.evidence.method, "closed_form");
        assert!(classify_series(&geo[..5], None).is_err());
    }

    #[test]
    fn inconsistent_hint_is_ignored() {
        let geo: Vec<(u32, f64)> = (0..64).map(|j| (j, -0.4 * j as f64 * LN_2)).collect();
        let wrong = TailForm {
            log2_rate: 0.5,
            poly_power: 0.0,
        };
        let v = classify_series(&geo, Some(wrong)).unwrap();
        assert_eq!(v.evidence.hint_consistent, Some(false));
        assert_eq!(v.class, SeriesClass::Converges);
    }

    #[test]
    fn verdict_matches_critical_exponent_off_the_line() {
        for m in [4.0, 6.0, 8.0] {
            for n in [3usize, 4, 5] {
                let pc = m / (n - 1) as f64;
                for (p, expect) in [(pc * 1.01, SeriesClass::Converges), (pc * 0.99, SeriesClass::Diverges)] {
                    let y = YoungFunction::truncated_power(p.max(1.0)).unwrap();
                    let t = theorem4_terms(&Profile::power(m), &y, n, 64).unwrap();
                    let v = classify_series(&t, family_hint(&Profile::power(m), &y, n)).unwrap();
                    assert_eq!(v.class, expect, "m={m} n={n} p={p}");
                    assert_eq!(v.evidence.hint_consistent, Some(true));
                }
            }
        }
    }

    #[test]
    fn flat_verdicts_off_the_line() {
        for n in [3usize, 4] {
            for ratio in [0.5, 1.0, 1.5, 2.5] {
                let beta = 1.0;
                let alpha = ratio * beta;
                let expect = if alpha < beta * (n - 1) as f64 {
                    SeriesClass::Converges
                } else {
                    SeriesClass::Diverges
                };
                let p = Profile::expflat(alpha);
                let y = YoungFunction::exp_type(beta).unwrap();
                let t = theorem4_terms(&p, &y, n, 64).unwrap();
                let v = classify_series(&t, family_hint(&p, &y, n)).unwrap();
                assert_eq!(v.class, expect, "n={n} alpha={alpha}");
                assert_eq!(v.evidence.hint_consistent, Some(true));
            }
        }
    }

    #[test]
    fn necessary_integral_single_term() {
        let t = necessary_integral(&Profile::power(4.0), &YoungFunction::truncated_power(3.0).unwrap(), 3, 0).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t[0].1.is_finite());
    }

    #[test]
    fn tangent_distance_examples() {
        let p = Profile::power(4.0);
        assert_eq!(tangent_distance_condition(&p, 3, 2.5, 64).unwrap().class, SeriesClass::Converges);
        assert_eq!(tangent_distance_condition(&p, 3, 1.5, 64).unwrap().class, SeriesClass::Diverges);
        for pexp in [1.0, 10.0, 100.0] {
            let v = tangent_distance_condition(&Profile::expflat(1.0), 3, pexp, 64).unwrap();
            assert_eq!(v.class, SeriesClass::Diverges);
        }
    }

    #[test]
    fn flat_profile_against_power_log_diverges() {
        let p = Profile::expflat(1.0);
        let y = YoungFunction::power_log(2.0, 1.0).unwrap();
        let t = theorem4_terms(&p, &y, 3, 64).unwrap();
        let v = classify_series(&t, family_hint(&p, &y, 3)).unwrap();
        assert_eq!(v.class, SeriesClass::Diverges);
        assert_eq!(v.evidence.hint_consistent, Some(true));
    }

    #[test]
    fn sharpness_examples() {
        let f = SharpnessFamily::PowerExponent { m: 4.0, n: 3 };
        let r = sharpness_scan(&f, f.default_range(), 1e-4).unwrap();
        assert!((r.estimate - 2.0).abs() < 0.02, "{r:?}");
        let f = SharpnessFamily::FlatExponent { beta: 1.0, n: 3 };
        let r = sharpness_scan(&f, f.default_range(), 1e-4).unwrap();
        assert!((r.estimate - 2.0).abs() < 0.04, "{r:?}");
        let f = SharpnessFamily::PowerLogExponent { m: 4.0, n: 3, p: 2.0 };
        let r = sharpness_scan(&f, f.default_range(), 1e-4).unwrap();
        assert!((r.estimate - 2.0).abs() < 0.1, "{r:?}");
        assert!(matches!(sharpness_scan(&f, (3.0, 4.0), 1e-3), Err(Error::Bracket(_))));
    }

    #[test]
    fn csv_layout() {
        let csv = terms_csv(&[(0, 0.0), (1, -LN_2)], &[(0, LN_2), (1, 0.0)]);
        assert_eq!(csv, "j,log2_term11,log2_term31\n0,0,1\n1,-1,0\n");
    }
}

//! Decay exponents of `|F_j|` along rays and constants that should not
//! depend on the dyadic scale `j`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{geometric_grid, linear_fit, GaussLegendre};
use crate::oscillatory::{f_j, grad_f_j, Amplitude, Frequency};
use crate::profile::Profile;

/// `|F(A, λ)|` for a fixed experiment.
pub type ModulusFn<'a> = dyn Fn(f64, f64) -> Result<f64> + Sync + 'a;

const ENVELOPE_HALF_WIDTH: f64 = 0.25; // decades on each side
const DENSE_FACTOR: usize = 8;
const MIN_SAMPLES: usize = 12;
const T_AVERAGE_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum Direction {
    /// `ξ' = 0`.
    XiN,
    /// `ξ_n = 0`.
    XiPrime,
    /// `(A, λ)` proportional to `(a, lam)`.
    Ratio { a: f64, lam: f64 },
}

impl Direction {
    pub fn unit(&self) -> (f64, f64) {
        match *self {
            Direction::XiN => (0.0, 1.0),
            Direction::XiPrime => (1.0, 0.0),
            Direction::Ratio { a, lam } => {
                let r = a.hypot(lam);
                (a / r, lam / r)
            }
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Direction::XiN => "xi_n".into(),
            Direction::XiPrime => "xi_prime".into(),
            Direction::Ratio { a, lam } => format!("{a}:{lam}"),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Direction::Ratio { a, lam } = self {
            if !(*a >= 0.0) || !lam.is_finite() || a.hypot(*lam) == 0.0 {
                return Err(Error::Argument(format!("invalid ray direction {a}:{lam}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub constant: f64,
    /// R² of the log-log fit.
    pub fit_quality: f64,
    pub rho_range: (f64, f64),
    pub direction: String,
    /// `(ρ, envelope)` pairs used in the fit.
    pub points: Vec<(f64, f64)>,
}

/// Envelope fit of `|F|` along a ray. The envelope at `ρ` is the maximum
/// over a dense geometric sample of the window `ρ·10^{±1/4}`.
pub fn ray_scan(eval: &ModulusFn<'_>, direction: Direction, rho_min: f64, rho_max: f64, samples: usize) -> Result<DecayFit> {
    direction.validate()?;
    if !(rho_min >= 1.0) || !(rho_max > rho_min) || !rho_max.is_finite() {
        return Err(Error::Argument(format!("need 1 <= rho_min < rho_max, got [{rho_min}, {rho_max}]")));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::Argument(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let (ua, ul) = direction.unit();
    let w = 10f64.powf(ENVELOPE_HALF_WIDTH);
    let dense = geometric_grid(rho_min / w, rho_max * w, DENSE_FACTOR * samples);
    let values: Vec<f64> = dense
        .par_iter()
        .map(|&r| eval(r * ua, r * ul))
        .collect::<Result<Vec<_>>>()?;
    let centers = geometric_grid(rho_min, rho_max, samples);
    let mut points = Vec::with_capacity(samples);
    for &c in &centers {
        let (lo, hi) = (c / w * (1.0 - 1e-12), c * w * (1.0 + 1e-12));
        let env = dense
            .iter()
            .zip(&values)
            .filter(|(r, _)| **r >= lo && **r <= hi)
            .fold(0.0f64, |m, (_, v)| m.max(*v));
        points.push((c, env));
    }
    fit_points(points, direction.tag())
}

fn fit_points(points: Vec<(f64, f64)>, direction: String) -> Result<DecayFit> {
    if points.iter().any(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Refused("envelope vanished or is not finite; cannot fit a power law".into()));
    }
    let xs: Vec<f64> = points.iter().map(|(r, _)| r.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(DecayFit {
        exponent: slope,
        constant: intercept.exp(),
        fit_quality: r2,
        rho_range: (points[0].0, points[points.len() - 1].0),
        direction,
        points,
    })
}

/// `|F_j(ρu)|` as an evaluator.
pub fn f_j_modulus<'a>(p: &'a Profile, j: u32, n: usize, amp: &'a Amplitude) -> impl Fn(f64, f64) -> Result<f64> + Sync + 'a {
    move |a, lam| Ok(f_j(p, j, &Frequency::new(n, a, lam)?, amp)?.modulus())
}

/// `|∫_{S^{n-2}} e^{iA⟨e₁,ω⟩} dω|`, ignoring `λ`.
pub fn sphere_modulus(n: usize) -> impl Fn(f64, f64) -> Result<f64> + Sync {
    move |a, _| Ok(crate::oscillatory::sphere_fourier(n, a).abs())
}

/// `(∫₁² |F(tξ)|² dt)^{1/2}` by 64-point Gauss-Legendre in `t`.
pub fn t_averaged(eval: &ModulusFn<'_>, a: f64, lam: f64) -> Result<f64> {
    let gl = GaussLegendre::get(T_AVERAGE_NODES);
    let mut acc = Vec::with_capacity(T_AVERAGE_NODES);
    for (t, w) in gl.mapped(1.0, 2.0) {
        let v = eval(t * a, t * lam)?;
        acc.push(w * v * v);
    }
    Ok(crate::numeric::pairwise_sum(&acc).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TAveragedFit {
    pub fit: DecayFit,
    /// `-exponent - 1/2`.
    pub epsilon: f64,
    pub certifies: bool,
}

const EPSILON_CERTIFY: f64 = 0.05;

/// Power-law fit of the `t`-averaged modulus along a ray; certifies decay
/// faster than `|ξ|^{-1/2}` when `ε > 0.05`.
pub fn t_averaged_decay(
    eval: &ModulusFn<'_>,
    direction: Direction,
    rho_min: f64,
    rho_max: f64,
    samples: usize,
) -> Result<TAveragedFit> {
    let avg = |a: f64, lam: f64| t_averaged(eval, a, lam);
    let fit = ray_scan(&avg, direction, rho_min, rho_max, samples)?;
    let epsilon = -fit.exponent - 0.5;
    Ok(TAveragedFit {
        certifies: epsilon > EPSILON_CERTIFY,
        epsilon,
        fit,
    })
}

/// Frequencies `(A, λ)` used for constant scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    pub points: Vec<(f64, f64)>,
}

impl XiGrid {
    /// `ξ = 0` plus, at each radius, directions with `A:λ` in
    /// {100:1, 10:1, 1:1, 1:10, 1:100}, covering `|ξ'| ≫ |ξ_n|`,
    /// `|ξ'| ≈ |ξ_n|` and `|ξ_n| ≫ |ξ'|`.
    pub fn three_regime(radii: &[f64]) -> Self {
        let ratios = [(100.0, 1.0), (10.0, 1.0), (1.0, 1.0), (1.0, 10.0), (1.0, 100.0)];
        let mut points = vec![(0.0, 0.0)];
        for &r in radii {
            for (a, l) in ratios {
                let s = r / f64::hypot(a, l);
                points.push((a * s, l * s));
            }
        }
        XiGrid { points }
    }

    pub fn default_three_regime() -> Self {
        XiGrid::three_regime(&geometric_grid(1.0, 1000.0, 7))
    }

    pub fn describe(&self) -> String {
        let rmax = self.points.iter().map(|(a, l)| a.hypot(*l)).fold(0.0, f64::max);
        format!("{} frequencies, |xi| <= {rmax}", self.points.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub j: u32,
    pub a: f64,
    pub lam: f64,
    pub abs_f: f64,
    /// `|∇F_j|·γ(2^{-j})`, when computed.
    pub abs_grad_scaled: Option<f64>,
}

impl ScanRow {
    pub fn weight(&self) -> f64 {
        1.0 + self.a.hypot(self.lam)
    }
}

/// `|F_j|` (and optionally the scaled gradient) over `j_set × grid`.
pub fn scan_rows(
    p: &Profile,
    n: usize,
    j_set: &[u32],
    grid: &XiGrid,
    amp: &Amplitude,
    with_gradient: bool,
) -> Result<Vec<ScanRow>> {
    let tasks: Vec<(u32, f64, f64)> = j_set
        .iter()
        .flat_map(|&j| grid.points.iter().map(move |&(a, l)| (j, a, l)))
        .collect();
    tasks
        .par_iter()
        .map(|&(j, a, lam)| {
            let freq = Frequency::new(n, a, lam)?;
            let abs_grad_scaled = if with_gradient {
                Some(grad_f_j(p, j, &freq, amp)?.scaled_norm())
            } else {
                None
            };
            Ok(ScanRow {
                j,
                a,
                lam,
                abs_f: f_j(p, j, &freq, amp)?.modulus(),
                abs_grad_scaled,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    /// `(j, C_j)`.
    pub per_j: Vec<(u32, f64)>,
    pub max: f64,
    pub min: f64,
    /// `(max - min) / max`.
    pub spread: f64,
    pub grid: String,
}

impl UniformityReport {
    pub fn from_rows(rows: &[ScanRow], j_set: &[u32], grid: &XiGrid, value: impl Fn(&ScanRow) -> f64) -> Self {
        let per_j: Vec<(u32, f64)> = j_set
            .iter()
            .map(|&j| {
                let c = rows
                    .iter()
                    .filter(|r| r.j == j)
                    .map(|r| value(r) * r.weight())
                    .fold(0.0, f64::max);
                (j, c)
            })
            .collect();
        let max = per_j.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        let min = per_j.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        let spread = if per_j.is_empty() {
            0.0
        } else if max > 0.0 {
            (max - min) / max
        } else {
            0.0
        };
        UniformityReport {
            per_j,
            max: if max.is_finite() { max } else { 0.0 },
            min: if min.is_finite() { min } else { 0.0 },
            spread,
            grid: grid.describe(),
        }
    }

    /// Constant at the given `j`, if scanned.
    pub fn constant(&self, j: u32) -> Option<f64> {
        self.per_j.iter().find(|x| x.0 == j).map(|x| x.1)
    }
}

/// `C_j = sup_ξ |F_j(ξ)|(1 + |ξ|)` per `j`.
pub fn uniform_constant_scan(p: &Profile, n: usize, j_set: &[u32], grid: &XiGrid, amp: &Amplitude) -> Result<UniformityReport> {
    let rows = scan_rows(p, n, j_set, grid, amp, false)?;
    Ok(UniformityReport::from_rows(&rows, j_set, grid, |r| r.abs_f))
}

/// `C_j = sup_ξ |∇F_j(ξ)|(1 + |ξ|)γ(2^{-j})` per `j`.
pub fn gradient_constant_scan(p: &Profile, n: usize, j_set: &[u32], grid: &XiGrid, amp: &Amplitude) -> Result<UniformityReport> {
    let rows = scan_rows(p, n, j_set, grid, amp, true)?;
    Ok(UniformityReport::from_rows(&rows, j_set, grid, |r| {
        r.abs_grad_scaled.unwrap_or(f64::NAN)
    }))
}

/// Both reports from one pass over the grid, plus the raw rows.
pub fn full_scan(
    p: &Profile,
    n: usize,
    j_set: &[u32],
    grid: &XiGrid,
    amp: &Amplitude,
) -> Result<(UniformityReport, UniformityReport, Vec<ScanRow>)> {
    let rows = scan_rows(p, n, j_set, grid, amp, true)?;
    let f = UniformityReport::from_rows(&rows, j_set, grid, |r| r.abs_f);
    let g = UniformityReport::from_rows(&rows, j_set, grid, |r| r.abs_grad_scaled.unwrap_or(f64::NAN));
    Ok((f, g, rows))
}

/// CSV with columns `j, A, lam, absF, absGradF_scaled, (1+|xi|)*absF`.
pub fn rows_to_csv(rows: &[ScanRow]) -> String {
    let mut s = String::from("j,A,lam,absF,absGradF_scaled,(1+|xi|)*absF\n");
    for r in rows {
        let g = r.abs_grad_scaled.map(|g| format!("{g:e}")).unwrap_or_default();
        s.push_str(&format!(
            "{},{:e},{:e},{:e},{},{:e}\n",
            r.j,
            r.a,
            r.lam,
            r.abs_f,
            g,
            r.abs_f * r.weight()
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_evaluator_has_zero_exponent() {
        let c = |_: f64, _: f64| Ok(3.5);
        let fit = ray_scan(&c, Direction::XiN, 1.0, 1e3, 16).unwrap();
        assert!(fit.exponent.abs() < 1e-12);
        assert!((fit.constant - 3.5).abs() < 1e-9);
        assert!((t_averaged(&c, 2.0, 3.0).unwrap() - 3.5).abs() < 1e-13);
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let f = |a: f64, l: f64| Ok(2.0 * a.hypot(l).powf(-0.75));
        let fit = ray_scan(&f, Direction::Ratio { a: 1.0, lam: 2.0 }, 10.0, 1e4, 20).unwrap();
        // the envelope of a decreasing function is its value at the first
        // dense sample inside each window
        assert!((fit.exponent + 0.75).abs() < 1e-2);
        assert!(fit.fit_quality > 0.999);
    }

    #[test]
    fn sphere_kernel_decay() {
        for (n, expect) in [(3, -0.5), (4, -1.0)] {
            let f = sphere_modulus(n);
            let fit = ray_scan(&f, Direction::XiPrime, 1e2, 1e4, 24).unwrap();
            assert!((fit.exponent - expect).abs() < 0.05, "n={n}: {}", fit.exponent);
        }
    }

    #[test]
    fn argument_validation() {
        let c = |_: f64, _: f64| Ok(1.0);
        assert!(ray_scan(&c, Direction::XiN, 0.5, 10.0, 16).is_err());
        assert!(ray_scan(&c, Direction::XiN, 1.0, 10.0, 8).is_err());
        assert!(ray_scan(&c, Direction::Ratio { a: 0.0, lam: 0.0 }, 1.0, 10.0, 16).is_err());
    }

    #[test]
    fn empty_j_set_gives_empty_report() {
        let r = uniform_constant_scan(&Profile::power(4.0), 3, &[], &XiGrid::three_regime(&[1.0]), &Amplitude::SharpAnnulus)
            .unwrap();
        assert!(r.per_j.is_empty());
    }

    #[test]
    fn zero_grid_gradient_constant_is_volume_for_large_j() {
        let grid = XiGrid { points: vec![(0.0, 0.0)] };
        let r = gradient_constant_scan(&Profile::power(4.0), 3, &[30], &grid, &Amplitude::SharpAnnulus).unwrap();
        assert!((r.max - 3.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn power_profile_constants_are_j_invariant() {
        let grid = XiGrid::three_regime(&[1.0, 10.0, 100.0]);
        let r = uniform_constant_scan(&Profile::power(4.0), 3, &[0, 3, 8], &grid, &Amplitude::SharpAnnulus).unwrap();
        assert!(r.spread <= 1e-9, "{r:?}");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rows = vec![ScanRow {
            j: 1,
            a: 2.0,
            lam: 0.0,
            abs_f: 0.5,
            abs_grad_scaled: None,
        }];
        let csv = rows_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "j,A,lam,absF,absGradF_scaled,(1+|xi|)*absF");
        assert_eq!(lines[1], "1,2e0,0e0,5e-1,,1.5e0");
    }
}

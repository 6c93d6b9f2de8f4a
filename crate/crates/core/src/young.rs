//! Young functions `Φ(u) = ∫₀ᵘ φ`, Luxemburg norms, the growth conditions
//! on `φ` used by the interpolation lemma, and the interpolation bound.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::numeric::{adaptive_gk, geometric_grid, linear_fit, log_add_exp, log_integrate, log_sub_exp, log_sum_exp};
use crate::profile::{Profile, ProfileSpec};

const BAK_T0_CAP: f64 = 1e3;
const BAK_T0_GRID: usize = 512;
const GROWTH_SLOPE: f64 = 0.05;
const LINEAR_LOG_LIMIT: f64 = 700.0;

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum YoungFamily {
    /// `Φ(u) = u^p`.
    PurePower { p: f64 },
    /// `Φ(u) = u^p - 1` for `u > 1`.
    TruncatedPower { p: f64 },
    /// `Φ(u) = u^p ln^α(e - 1 + u) - 1` for `u > 1`.
    PowerLog { p: f64, alpha: f64 },
    /// `Φ(u) = e^{u^β} - e` for `u > 1`.
    ExpType { beta: f64 },
    /// `φ(t) = t^{-1} G(t^{-d})^{-β}` with `G(u) = u²γ'(u)` for `t ≥ t₀`,
    /// linear on `(1, t₀)`.
    Bak {
        profile: Profile,
        d: f64,
        beta: f64,
        t0: f64,
        log_phi_t0: f64,
    },
    /// User density, optionally with its logarithm.
    Custom {
        name: String,
        phi: Density,
        log_phi: Option<Density>,
    },
}

impl fmt::Debug for YoungFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YoungFamily::PurePower { p } => write!(f, "pure_power(p={p})"),
            YoungFamily::TruncatedPower { p } => write!(f, "truncated_power(p={p})"),
            YoungFamily::PowerLog { p, alpha } => write!(f, "power_log(p={p}, alpha={alpha})"),
            YoungFamily::ExpType { beta } => write!(f, "exp_type(beta={beta})"),
            YoungFamily::Bak { profile, d, beta, t0, .. } => {
                write!(f, "bak({}, d={d}, beta={beta}, t0={t0})", profile.describe())
            }
            YoungFamily::Custom { name, .. } => write!(f, "custom({name})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct YoungFunction {
    pub family: YoungFamily,
    /// `φ = 0` on `[0, 1]`.
    pub vanishing_on_unit_interval: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    /// Smallest constant that works on the grid; infinite when the ratio grows.
    pub constant_estimate: f64,
    pub pass: bool,
    /// Log-log slope of the worst ratio over the upper half of the grid.
    pub growth_slope: f64,
    pub grid: String,
    pub skipped: usize,
}

impl ConditionReport {
    fn from_ratios(xs: &[f64], log_ratios: &[f64], grid: String, skipped: usize) -> Self {
        if log_ratios.is_empty() {
            return ConditionReport {
                constant_estimate: f64::INFINITY,
                pass: false,
                growth_slope: f64::NAN,
                grid,
                skipped,
            };
        }
        let half = xs.len() / 2;
        let lx: Vec<f64> = xs[half..].iter().map(|x| x.ln()).collect();
        let slope = if lx.len() >= 2 {
            linear_fit(&lx, &log_ratios[half..]).0
        } else {
            0.0
        };
        let max = log_ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let constant = if slope > GROWTH_SLOPE || !max.is_finite() {
            f64::INFINITY
        } else {
            max.exp()
        };
        ConditionReport {
            constant_estimate: constant,
            pass: constant.is_finite(),
            growth_slope: slope,
            grid,
            skipped,
        }
    }
}

fn check_exponent(name: &str, v: f64, min: f64) -> Result<()> {
    if !(v >= min) || !v.is_finite() {
        return Err(Error::Argument(format!("{name} must be finite and >= {min}, got {v}")));
    }
    Ok(())
}

impl YoungFunction {
    pub fn pure_power(p: f64) -> Result<Self> {
        check_exponent("p", p, 1.0)?;
        Ok(YoungFunction {
            family: YoungFamily::PurePower { p },
            vanishing_on_unit_interval: false,
        })
    }

    pub fn truncated_power(p: f64) -> Result<Self> {
        check_exponent("p", p, 1.0)?;
        Ok(YoungFunction {
            family: YoungFamily::TruncatedPower { p },
            vanishing_on_unit_interval: true,
        })
    }

    pub fn power_log(p: f64, alpha: f64) -> Result<Self> {
        check_exponent("p", p, 1.0)?;
        if !alpha.is_finite() || alpha <= -p {
            return Err(Error::Argument(format!("alpha must be finite and > -p, got {alpha}")));
        }
        Ok(YoungFunction {
            family: YoungFamily::PowerLog { p, alpha },
            vanishing_on_unit_interval: true,
        })
    }

    pub fn exp_type(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Argument(format!("beta must be positive, got {beta}")));
        }
        Ok(YoungFunction {
            family: YoungFamily::ExpType { beta },
            vanishing_on_unit_interval: true,
        })
    }

    /// Young function with a user-supplied density.
    pub fn custom(
        name: impl Into<String>,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        vanishing_on_unit_interval: bool,
    ) -> Self {
        YoungFunction {
            family: YoungFamily::Custom {
                name: name.into(),
                phi: Arc::new(phi),
                log_phi: None,
            },
            vanishing_on_unit_interval,
        }
    }

    /// Attaches `log φ` to a custom density so that huge arguments stay finite.
    pub fn with_log_density(mut self, log_phi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        if let YoungFamily::Custom { log_phi: slot, .. } = &mut self.family {
            *slot = Some(Arc::new(log_phi));
        }
        self
    }

    pub fn describe(&self) -> String {
        format!("{:?}", self.family)
    }

    /// `log φ(t)`.
    pub fn log_phi(&self, t: f64) -> f64 {
        if t <= 0.0 || (self.vanishing_on_unit_interval && t <= 1.0) {
            return f64::NEG_INFINITY;
        }
        match &self.family {
            YoungFamily::PurePower { p } | YoungFamily::TruncatedPower { p } => p.ln() + (p - 1.0) * t.ln(),
            YoungFamily::PowerLog { p, alpha } => {
                let e1 = std::f64::consts::E - 1.0;
                let l = (e1 + t).ln();
                // g'(t) = t^{p-1} L^{α-1} (p L + α t / (e - 1 + t))
                let inner = p * l + alpha * t / (e1 + t);
                if inner <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                (p - 1.0) * t.ln() + (alpha - 1.0) * l.ln() + inner.ln()
            }
            YoungFamily::ExpType { beta } => beta.ln() + (beta - 1.0) * t.ln() + t.powf(*beta),
            YoungFamily::Bak {
                profile,
                d,
                beta,
                t0,
                log_phi_t0,
            } => {
                if t < *t0 {
                    log_phi_t0 + (t / t0).ln()
                } else {
                    bak_log_density(profile, *d, *beta, t)
                }
            }
            YoungFamily::Custom { phi, log_phi, .. } => match log_phi {
                Some(l) => l(t),
                None => {
                    let v = phi(t);
                    if v > 0.0 {
                        v.ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                }
            },
        }
    }

    /// Density `φ(t)`.
    pub fn phi(&self, t: f64) -> f64 {
        match &self.family {
            YoungFamily::Custom { phi, .. } => {
                if t < 0.0 || (self.vanishing_on_unit_interval && t <= 1.0) {
                    0.0
                } else {
                    phi(t)
                }
            }
            _ => self.log_phi(t).exp(),
        }
    }

    /// `log Φ(u)`, `-∞` where `Φ(u) = 0`.
    pub fn log_big_phi(&self, u: f64) -> f64 {
        if u <= 0.0 || (self.vanishing_on_unit_interval && u <= 1.0) {
            return f64::NEG_INFINITY;
        }
        let lu = u.ln();
        match &self.family {
            YoungFamily::PurePower { p } => p * lu,
            YoungFamily::TruncatedPower { p } => {
                let x = p * lu;
                if x < 1.0 {
                    x.exp_m1().ln()
                } else {
                    x + (-(-x).exp()).ln_1p()
                }
            }
            YoungFamily::PowerLog { p, alpha } => {
                let l = (std::f64::consts::E - 1.0 + u).ln();
                let log_g = p * lu + alpha * l.ln();
                if log_g < 1.0 {
                    log_g.exp_m1().ln()
                } else {
                    log_sub_exp(log_g, 0.0)
                }
            }
            YoungFamily::ExpType { beta } => {
                let x = u.powf(*beta);
                if x < 2.0 {
                    // e^x - e = e (e^{x-1} - 1)
                    1.0 + (x - 1.0).exp_m1().ln()
                } else {
                    log_sub_exp(x, 1.0)
                }
            }
            YoungFamily::Bak { t0, log_phi_t0, .. } => {
                // ∫₁^{min(u,t₀)} φ(t₀) t / t₀ dt + ∫_{t₀}^u φ
                let top = u.min(*t0);
                let lin = log_phi_t0 - t0.ln() + ((top * top - 1.0) / 2.0).ln();
                if u <= *t0 {
                    lin
                } else {
                    let rest = log_integrate(&|t| self.log_phi(t), *t0, u, 1e-13);
                    log_add_exp(lin, rest)
                }
            }
            YoungFamily::Custom { log_phi, .. } => {
                let a = if self.vanishing_on_unit_interval { 1.0 } else { 0.0 };
                if log_phi.is_some() {
                    log_integrate(&|t| self.log_phi(t), a, u, 1e-13)
                } else {
                    self.big_phi(u).ln()
                }
            }
        }
    }

    /// `Φ(u)`; closed forms for the built-in families.
    pub fn big_phi(&self, u: f64) -> f64 {
        if u <= 0.0 || (self.vanishing_on_unit_interval && u <= 1.0) {
            return 0.0;
        }
        match &self.family {
            YoungFamily::PurePower { p } => u.powf(*p),
            YoungFamily::TruncatedPower { p } => (p * u.ln()).exp_m1(),
            YoungFamily::ExpType { beta } => {
                let x = u.powf(*beta);
                std::f64::consts::E * (x - 1.0).exp_m1()
            }
            YoungFamily::Custom { phi, log_phi: None, .. } => {
                let a = if self.vanishing_on_unit_interval { 1.0 } else { 0.0 };
                let f = |t: f64| phi(t);
                let (v, _) = adaptive_gk(&f, a, u, 1e-13, 1e-13, 40);
                v
            }
            _ => self.log_big_phi(u).exp(),
        }
    }

    /// `log Φ^{-1}(y)` from `log y`, where `Φ^{-1}(y) = inf{t ≥ 0 : Φ(t) ≥ y}`.
    pub fn log_phi_inverse(&self, log_y: f64) -> Result<f64> {
        if log_y.is_nan() || log_y == f64::INFINITY {
            return Err(Error::Argument(format!("log y must be finite, got {log_y}")));
        }
        if log_y == f64::NEG_INFINITY {
            return Err(Error::Argument("phi_inverse needs y > 0".into()));
        }
        match &self.family {
            YoungFamily::PurePower { p } => Ok(log_y / p),
            YoungFamily::TruncatedPower { p } => Ok(log_add_exp(log_y, 0.0) / p),
            YoungFamily::ExpType { beta } => Ok(log_add_exp(log_y, 1.0).ln() / beta),
            YoungFamily::Custom { log_phi: None, name, .. } if log_y > LINEAR_LOG_LIMIT => Err(Error::Overflow {
                family: format!("custom({name})"),
                detail: format!("log y = {log_y} exceeds the linear range and no log density is available"),
            }),
            _ => self.log_inverse_bisection(log_y),
        }
    }

    /// `log Φ(e^{lt})`, valid past `lt = 700` for the power-log family.
    fn log_big_phi_of_log(&self, lt: f64) -> f64 {
        match &self.family {
            YoungFamily::PowerLog { p, alpha } if lt > LINEAR_LOG_LIMIT => {
                // ln(e - 1 + u) = lt to double precision here
                p * lt + alpha * lt.ln()
            }
            _ => self.log_big_phi(lt.exp()),
        }
    }

    fn log_inverse_bisection(&self, log_y: f64) -> Result<f64> {
        let f = |lt: f64| self.log_big_phi_of_log(lt);
        let hi_cap = match self.family {
            YoungFamily::PowerLog { .. } => 1e300,
            _ => LINEAR_LOG_LIMIT,
        };
        let mut lo = if self.vanishing_on_unit_interval { 0.0 } else { -1.0 };
        while f(lo) >= log_y {
            lo -= 1.0 + lo.abs();
            if lo < -745.0 {
                return Err(Error::Bracket(format!("no lower bracket for log y = {log_y}")));
            }
        }
        let mut hi = lo.max(0.0) + 1.0;
        while !(f(hi) >= log_y) {
            hi += 1.0 + hi.abs();
            if hi > hi_cap {
                return Err(Error::Overflow {
                    family: self.describe(),
                    detail: format!("inverse of log y = {log_y} beyond e^{hi_cap}"),
                });
            }
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) >= log_y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `Φ^{-1}(y)` for `y > 0`, satisfying `Φ(Φ^{-1}(y)) ≥ y`.
    pub fn phi_inverse(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Argument(format!("phi_inverse needs finite y > 0, got {y}")));
        }
        let mut t = self.log_phi_inverse(y.ln())?.exp();
        for _ in 0..64 {
            if self.big_phi(t) >= y {
                break;
            }
            t = t.next_up();
        }
        for _ in 0..64 {
            let down = t.next_down();
            if down > 0.0 && self.big_phi(down) >= y {
                t = down;
            } else {
                break;
            }
        }
        Ok(t)
    }

    /// `Φ^{-1}(y)` from `log y`; errors if the result is not representable.
    pub fn phi_inverse_from_log(&self, log_y: f64) -> Result<f64> {
        let lt = self.log_phi_inverse(log_y)?;
        let t = lt.exp();
        if !t.is_finite() {
            return Err(Error::Overflow {
                family: self.describe(),
                detail: format!("Φ^{{-1}} = e^{lt} is not representable"),
            });
        }
        Ok(t)
    }

    /// Direct bisection on `Φ` in the linear domain.
    pub fn phi_inverse_bisection(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Argument(format!("phi_inverse needs finite y > 0, got {y}")));
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.big_phi(hi) < y {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Overflow {
                    family: self.describe(),
                    detail: "bisection bracket overflowed".into(),
                });
            }
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.big_phi(mid) >= y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `φ` nondecreasing and zero on `[0, 1]` when flagged, on a sampled grid.
    pub fn check_density(&self, grid: &[f64]) -> bool {
        let mut prev = f64::NEG_INFINITY;
        for &t in grid {
            let v = self.log_phi(t);
            if v.is_nan() || v < prev - 1e-12 * prev.abs().max(1.0) {
                return false;
            }
            if self.vanishing_on_unit_interval && t <= 1.0 && v != f64::NEG_INFINITY {
                return false;
            }
            prev = v;
        }
        true
    }

    /// Worst value of `log Φ(a) + log Φ(b) − log Φ(ab)` over `a, b ∈ grid`
    /// (nonpositive when `Φ(ab) ≥ Φ(a)Φ(b)` holds on the grid).
    pub fn supermultiplicativity_defect(&self, grid: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for &a in grid {
            for &b in grid {
                let la = self.log_big_phi(a);
                let lb = self.log_big_phi(b);
                if la == f64::NEG_INFINITY || lb == f64::NEG_INFINITY {
                    continue;
                }
                worst = worst.max(la + lb - self.log_big_phi(a * b));
            }
        }
        worst
    }
}

fn bak_log_density(profile: &Profile, d: f64, beta: f64, t: f64) -> f64 {
    let u = t.powf(-d);
    // log G(u) = 2 log u + log γ'(u)
    let log_g = 2.0 * u.ln() + profile.log_deriv1(u);
    -t.ln() - beta * log_g
}

/// Young function built from a profile: `φ(t) = t^{-1}[G(t^{-d})]^{-β}` with
/// `G(u) = u²γ'(u)`, for `t ≥ t₀`.
pub fn bak_young_function(p: &Profile, d: f64, beta: f64) -> Result<YoungFunction> {
    if !(d > 0.5) || !d.is_finite() {
        return Err(Error::Argument(format!("d must exceed 1/2, got {d}")));
    }
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(Error::Argument(format!("beta must exceed 1, got {beta}")));
    }
    let grid = geometric_grid(1.0, BAK_T0_CAP, BAK_T0_GRID);
    let logs: Vec<f64> = grid.iter().map(|&t| bak_log_density(p, d, beta, t)).collect();
    if let Some(k) = logs.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::Infinite(format!(
            "γ' vanishes numerically at u = {:e}",
            grid[k].powf(-d)
        )));
    }
    // smallest grid index beyond which the sampled density is nondecreasing
    let mut start = logs.len() - 1;
    while start > 1 && logs[start - 1] <= logs[start] {
        start -= 1;
    }
    let t0 = grid[start];
    let log_phi_t0 = logs[start];
    Ok(YoungFunction {
        family: YoungFamily::Bak {
            profile: p.clone(),
            d,
            beta,
            t0,
            log_phi_t0,
        },
        vanishing_on_unit_interval: true,
    })
}

/// Default sampling for the condition checks.
pub fn default_u_grid() -> Vec<f64> {
    geometric_grid(1.01, 1e6, 128)
}

pub fn default_lambda_grid() -> Vec<f64> {
    geometric_grid(1.1, 1e3, 24)
}

pub fn default_t_grid(c: f64) -> Vec<f64> {
    geometric_grid(c, c * 1e4, 48)
}

/// Smallest `C₀` with `∫₁ᵘ φ(t)/t^r dt ≤ C₀ φ(u)/u^{r-1}` on the grid.
pub fn check_condition6(y: &YoungFunction, r: f64, u_grid: &[f64]) -> Result<ConditionReport> {
    if !(r >= 1.0) {
        return Err(Error::Argument(format!("r must be >= 1, got {r}")));
    }
    if u_grid.iter().any(|&u| !(u > 1.0)) {
        return Err(Error::Argument("u_grid must lie in (1, ∞)".into()));
    }
    let mut xs = Vec::new();
    let mut ratios = Vec::new();
    let mut skipped = 0;
    for &u in u_grid {
        let lphi = y.log_phi(u);
        if lphi == f64::NEG_INFINITY {
            skipped += 1;
            continue;
        }
        let lhs = log_integrate(&|t| y.log_phi(t) - r * t.ln(), 1.0, u, 1e-12);
        xs.push(u);
        ratios.push(lhs - (lphi - (r - 1.0) * u.ln()));
    }
    let grid = format!("u in [{}, {}], {} points, r = {r}", u_grid[0], u_grid[u_grid.len() - 1], u_grid.len());
    Ok(ConditionReport::from_ratios(&xs, &ratios, grid, skipped))
}

/// Smallest `C₁` with `C₁ φ(λt)/φ(t) ≥ φ(λ)` on `lambda_grid × t_grid`.
pub fn check_condition7(y: &YoungFunction, lambda_grid: &[f64], t_grid: &[f64], c: f64) -> Result<ConditionReport> {
    if !(c > 1.0) {
        return Err(Error::Argument(format!("c must exceed 1, got {c}")));
    }
    if t_grid.iter().any(|&t| t < c) || lambda_grid.iter().any(|&l| !(l > 1.0)) {
        return Err(Error::Argument("grids must satisfy t >= c and lambda > 1".into()));
    }
    let mut skipped = 0;
    // worst ratio per t, taken over all λ
    let mut xs = Vec::new();
    let mut worst = Vec::new();
    for &t in t_grid {
        let lt = y.log_phi(t);
        if lt == f64::NEG_INFINITY {
            skipped += lambda_grid.len();
            continue;
        }
        let mut w = f64::NEG_INFINITY;
        for &l in lambda_grid {
            let ll = y.log_phi(l);
            let llt = y.log_phi(l * t);
            if ll == f64::NEG_INFINITY || llt == f64::NEG_INFINITY {
                skipped += 1;
                continue;
            }
            w = w.max(ll + lt - llt);
        }
        if w > f64::NEG_INFINITY {
            xs.push(t);
            worst.push(w);
        }
    }
    let mut report = ConditionReport::from_ratios(
        &xs,
        &worst,
        format!(
            "lambda in [{}, {}] x t in [{}, {}], c = {c}",
            lambda_grid[0],
            lambda_grid[lambda_grid.len() - 1],
            t_grid[0],
            t_grid[t_grid.len() - 1]
        ),
        skipped,
    );
    // growth in λ at fixed t counts too
    if report.pass && lambda_grid.len() >= 4 {
        let t = xs.last().copied().unwrap_or(c);
        let lt = y.log_phi(t);
        let per_l: Vec<(f64, f64)> = lambda_grid
            .iter()
            .map(|&l| (l.ln(), y.log_phi(l) + lt - y.log_phi(l * t)))
            .filter(|(_, v)| v.is_finite())
            .collect();
        let half = per_l.len() / 2;
        if per_l.len() - half >= 2 {
            let (a, b): (Vec<f64>, Vec<f64>) = per_l[half..].iter().cloned().unzip();
            let slope = linear_fit(&a, &b).0;
            if slope > GROWTH_SLOPE {
                report.growth_slope = report.growth_slope.max(slope);
                report.constant_estimate = f64::INFINITY;
                report.pass = false;
            }
        }
    }
    Ok(report)
}

/// True iff `Φ(t)/t² → 0` along `t = 2^{-k}`, `k = 1..40`: the second half
/// of the sequence is nonincreasing and ends below `1e-8`.
pub fn check_quadratic_vanishing(y: &YoungFunction) -> bool {
    let ratios: Vec<f64> = (1..=40)
        .map(|k| {
            let t = 0.5f64.powi(k);
            (y.log_big_phi(t) + 2.0 * k as f64 * std::f64::consts::LN_2).exp()
        })
        .collect();
    let tail = &ratios[20..];
    tail.windows(2).all(|w| w[1] <= w[0]) && *tail.last().unwrap() < 1e-8
}

const PARALLEL_THRESHOLD: usize = 1 << 16;
const SUM_CHUNK: usize = 1 << 14;

/// `log Σ Φ(|v|/s)` over the samples, chunked for reproducibility.
fn log_modular(y: &YoungFunction, values: &[f64], log_s: f64) -> f64 {
    let chunk_sum = |c: &[f64]| {
        let logs: Vec<f64> = c
            .iter()
            .filter(|v| **v != 0.0)
            .map(|v| y.log_big_phi((v.abs().ln() - log_s).exp()))
            .collect();
        log_sum_exp(&logs)
    };
    let parts: Vec<f64> = if values.len() > PARALLEL_THRESHOLD {
        values.par_chunks(SUM_CHUNK).map(chunk_sum).collect()
    } else {
        values.chunks(SUM_CHUNK).map(chunk_sum).collect()
    };
    log_sum_exp(&parts)
}

/// Luxemburg norm of samples with the given cell volume.
pub fn orlicz_norm_samples(y: &YoungFunction, values: &[f64], cell_volume: f64) -> Result<f64> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite sample".into()));
    }
    if !(cell_volume > 0.0) {
        return Err(Error::Argument(format!("cell volume must be positive, got {cell_volume}")));
    }
    let m = values.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    if m == 0.0 {
        return Ok(0.0);
    }
    let log_cell = cell_volume.ln();
    let g = |ls: f64| log_cell + log_modular(y, values, ls);
    let total = values.len() as f64 * cell_volume;
    let mut lo = (1e-12 * m).ln();
    let mut hi = (m * (1.0 + total)).ln();
    let mut guard = 0;
    while g(lo) <= 0.0 {
        lo -= 10.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::Bracket("modular stays below 1 at tiny scales".into()));
        }
    }
    guard = 0;
    while g(hi) > 0.0 {
        hi += 2.0;
        guard += 1;
        if guard > 400 {
            return Err(Error::Bracket("modular stays above 1 at large scales".into()));
        }
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.exp())
}

/// `inf{s > 0 : h^n Σ Φ(|fᵢ|/s) ≤ 1}`.
pub fn orlicz_norm(y: &YoungFunction, f: &GridFunction) -> Result<f64> {
    orlicz_norm_samples(y, &f.samples, f.cell_volume())
}

/// `log(B Φ^{-1}((A/B)^r))` from `log A`, `log B`.
pub fn bak_interpolation_bound_log(log_a: f64, log_b: f64, r: f64, y: &YoungFunction) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::Argument(format!("r must be >= 1, got {r}")));
    }
    Ok(log_b + y.log_phi_inverse(r * (log_a - log_b))?)
}

/// `B Φ^{-1}((A/B)^r)`, the interpolated operator bound with unit constant.
pub fn bak_interpolation_bound(a: f64, b: f64, r: f64, y: &YoungFunction) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::Argument("A and B must be positive".into()));
    }
    let v = bak_interpolation_bound_log(a.ln(), b.ln(), r, y)?.exp();
    if !v.is_finite() {
        return Err(Error::Overflow {
            family: y.describe(),
            detail: "bound exceeds f64 range; use the log form".into(),
        });
    }
    Ok(v)
}

/// Config-file form of a Young function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum YoungSpec {
    PurePower { p: f64 },
    TruncatedPower { p: f64 },
    PowerLog { p: f64, alpha: f64 },
    ExpType { beta: f64 },
    Bak { profile: ProfileSpec, d: f64, beta: f64 },
}

impl YoungSpec {
    pub fn build(&self) -> Result<YoungFunction> {
        match self {
            YoungSpec::PurePower { p } => YoungFunction::pure_power(*p),
            YoungSpec::TruncatedPower { p } => YoungFunction::truncated_power(*p),
            YoungSpec::PowerLog { p, alpha } => YoungFunction::power_log(*p, *alpha),
            YoungSpec::ExpType { beta } => YoungFunction::exp_type(*beta),
            YoungSpec::Bak { profile, d, beta } => bak_young_function(&profile.build()?, *d, *beta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn big_phi_examples() {
        assert!(close(YoungFunction::truncated_power(3.0).unwrap().big_phi(2.0), 7.0, 1e-15));
        assert_eq!(YoungFunction::pure_power(2.0).unwrap().big_phi(3.0), 9.0);
        for y in [
            YoungFunction::truncated_power(3.0).unwrap(),
            YoungFunction::exp_type(1.0).unwrap(),
            YoungFunction::power_log(2.0, 1.0).unwrap(),
        ] {
            assert_eq!(y.big_phi(1.0), 0.0);
            assert_eq!(y.big_phi(0.5), 0.0);
        }
    }

    #[test]
    fn big_phi_matches_integral_of_density() {
        let fams = [
            YoungFunction::truncated_power(2.5).unwrap(),
            YoungFunction::exp_type(1.5).unwrap(),
            YoungFunction::power_log(2.0, 1.0).unwrap(),
            YoungFunction::power_log(3.0, -1.0).unwrap(),
            bak_young_function(&Profile::expflat(1.0), 1.0, 2.0).unwrap(),
        ];
        for y in &fams {
            for u in [1.2, 2.0, 3.7] {
                let f = |t: f64| y.phi(t);
                let (q, _) = adaptive_gk(&f, 1.0, u, 1e-14, 1e-14, 40);
                assert!(close(y.big_phi(u), q, 1e-10), "{y:?} u={u}: {} vs {q}", y.big_phi(u));
            }
        }
    }

    #[test]
    fn log_and_linear_forms_agree() {
        let fams = [
            YoungFunction::pure_power(1.5).unwrap(),
            YoungFunction::truncated_power(3.0).unwrap(),
            YoungFunction::exp_type(2.0).unwrap(),
            YoungFunction::power_log(2.0, 0.5).unwrap(),
        ];
        for y in &fams {
            for u in [1.0001, 1.3, 2.0, 5.0, 17.0] {
                let lin = y.big_phi(u);
                assert!(close(y.log_big_phi(u).exp(), lin, 1e-12), "{y:?} u={u}");
            }
        }
    }

    #[test]
    fn phi_inverse_examples() {
        let t = YoungFunction::truncated_power(3.0).unwrap();
        assert!(close(t.phi_inverse(7.0).unwrap(), 2.0, 1e-12));
        let e = YoungFunction::exp_type(1.0).unwrap();
        assert!(close(e.phi_inverse(E * E - E).unwrap(), 2.0, 1e-12));
        let e2 = YoungFunction::exp_type(2.0).unwrap();
        let lt = e2.log_phi_inverse(2f64.powi(40)).unwrap();
        assert!(close(lt.exp(), 2f64.powi(20), 1e-12));
    }

    #[test]
    fn phi_inverse_matches_bisection_oracle() {
        let fams = [
            YoungFunction::pure_power(2.0).unwrap(),
            YoungFunction::truncated_power(1.5).unwrap(),
            YoungFunction::exp_type(1.0).unwrap(),
            YoungFunction::power_log(2.0, 1.0).unwrap(),
            bak_young_function(&Profile::power(2.0), 1.0, 2.0).unwrap(),
        ];
        for y in &fams {
            for v in [1e-6, 0.3, 1.0, 7.5, 1e4] {
                let a = y.phi_inverse(v).unwrap();
                let b = y.phi_inverse_bisection(v).unwrap();
                assert!(close(a, b, 1e-12), "{y:?} y={v}: {a} vs {b}");
                assert!(y.big_phi(a) >= v);
                assert!(y.big_phi(a * (1.0 - 1e-12)) < v);
            }
        }
    }

    #[test]
    fn custom_without_log_overflows() {
        let c = YoungFunction::custom("square", |t| 2.0 * t, false);
        assert!(close(c.big_phi(3.0), 9.0, 1e-12));
        assert!(close(c.phi_inverse(16.0).unwrap(), 4.0, 1e-12));
        assert!(matches!(c.log_phi_inverse(800.0), Err(Error::Overflow { .. })));
        let c = c.with_log_density(|t| (2.0 * t).ln());
        assert!(close(c.log_phi_inverse(800.0).unwrap(), 400.0, 1e-9));
    }

    #[test]
    fn condition6_examples() {
        let g = default_u_grid();
        let r = check_condition6(&YoungFunction::truncated_power(3.0).unwrap(), 2.0, &g).unwrap();
        assert!(r.pass && r.constant_estimate <= 1.0, "{r:?}");
        let r = check_condition6(&YoungFunction::exp_type(1.0).unwrap(), 2.0, &g).unwrap();
        assert!(r.pass && r.constant_estimate.is_finite(), "{r:?}");
        let r = check_condition6(&YoungFunction::truncated_power(1.5).unwrap(), 2.0, &g).unwrap();
        assert!(!r.pass && r.constant_estimate.is_infinite(), "{r:?}");
    }

    #[test]
    fn condition7_examples() {
        let (l, t) = (default_lambda_grid(), default_t_grid(2.0));
        let r = check_condition7(&YoungFunction::truncated_power(3.0).unwrap(), &l, &t, 2.0).unwrap();
        assert!(r.pass && close(r.constant_estimate, 3.0, 1e-9), "{r:?}");
        let r = check_condition7(&YoungFunction::pure_power(2.0).unwrap(), &l, &t, 2.0).unwrap();
        assert!(r.pass && close(r.constant_estimate, 2.0, 1e-9), "{r:?}");
        let c = YoungFunction::custom("exp-square", |t| (t * t).exp(), true).with_log_density(|t| t * t);
        let r = check_condition7(&c, &l, &t, 2.0).unwrap();
        assert!(r.pass, "{r:?}");
        // φ = ln t: the ratio ln λ ln t / ln λt is unbounded along λ = t.
        let bad = YoungFunction::custom("log", |t| t.ln(), true);
        let r = check_condition7(&bad, &l, &t, 2.0).unwrap();
        assert!(!r.pass, "{r:?}");
    }

    #[test]
    fn quadratic_vanishing_examples() {
        assert!(check_quadratic_vanishing(&YoungFunction::truncated_power(3.0).unwrap()));
        assert!(!check_quadratic_vanishing(&YoungFunction::pure_power(2.0).unwrap()));
        assert!(check_quadratic_vanishing(&YoungFunction::pure_power(3.0).unwrap()));
        assert!(!check_quadratic_vanishing(&YoungFunction::pure_power(1.5).unwrap()));
    }

    #[test]
    fn bak_density_closed_form_chain() {
        let y = bak_young_function(&Profile::expflat(1.0), 1.0, 2.0).unwrap();
        // G(u) = u² · u^{-2} e^{-1/u} = e^{-1/u}; at u = 1/e, G = e^{-e}
        let expected = -1.0 + 2.0 * E;
        assert!(close(y.log_phi(E), expected, 1e-12));
        assert_eq!(y.big_phi(1.0), 0.0);
        let grid = geometric_grid(match &y.family {
            YoungFamily::Bak { t0, .. } => *t0,
            _ => unreachable!(),
        }, 1e6, 200);
        assert!(y.check_density(&grid));
    }

    #[test]
    fn orlicz_norm_of_indicator() {
        let vol = 0.37;
        let vals = vec![2.5; 37];
        let cell = vol / 37.0;
        for y in [
            YoungFunction::pure_power(2.0).unwrap(),
            YoungFunction::truncated_power(3.0).unwrap(),
            YoungFunction::exp_type(1.0).unwrap(),
        ] {
            let n = orlicz_norm_samples(&y, &vals, cell).unwrap();
            let expect = 2.5 / y.phi_inverse_bisection(1.0 / vol).unwrap();
            assert!(close(n, expect, 1e-10), "{y:?}: {n} vs {expect}");
        }
        assert_eq!(orlicz_norm_samples(&YoungFunction::exp_type(1.0).unwrap(), &[0.0; 4], 1.0).unwrap(), 0.0);
        assert!(orlicz_norm_samples(&YoungFunction::exp_type(1.0).unwrap(), &[f64::NAN], 1.0).is_err());
    }

    #[test]
    fn bak_bound_examples() {
        let y = YoungFunction::pure_power(2.0).unwrap();
        assert!(close(bak_interpolation_bound(4.0, 1.0, 2.0, &y).unwrap(), 4.0, 1e-14));
        let e = YoungFunction::exp_type(1.0).unwrap();
        let lb = bak_interpolation_bound_log(1024.0, 0.0, 2.0, &e).unwrap();
        assert!(close(lb.exp(), 2048.0, 1e-12));
        let t = YoungFunction::truncated_power(3.0).unwrap();
        assert!(close(bak_interpolation_bound(3.0, 3.0, 2.0, &t).unwrap(), 3.0 * t.phi_inverse(1.0).unwrap(), 1e-14));
    }

    #[test]
    fn spec_round_trip() {
        let s: YoungSpec = serde_json::from_str(r#"{ "family": "truncated_power", "p": 3.0 }"#).unwrap();
        assert_eq!(s, YoungSpec::TruncatedPower { p: 3.0 });
        let s: YoungSpec =
            serde_json::from_str(r#"{ "family": "bak", "profile": {"kind": "expflat", "alpha": 1.0}, "d": 1.0, "beta": 2.0 }"#)
                .unwrap();
        assert!(s.build().is_ok());
        assert!(YoungSpec::ExpType { beta: -1.0 }.build().is_err());
    }

    #[test]
    fn power_log_inverse_far_range() {
        let y = YoungFunction::power_log(2.0, 3.0).unwrap();
        let log_y = 2f64.powi(64);
        let lt = y.log_phi_inverse(log_y).unwrap();
        // 2 lt + 3 ln lt = log y
        assert!(((2.0 * lt + 3.0 * lt.ln()) / log_y - 1.0).abs() < 1e-12);
        let lt = y.log_phi_inverse(500.0).unwrap();
        assert!((y.log_big_phi(lt.exp()) - 500.0).abs() < 1e-9);
    }
}

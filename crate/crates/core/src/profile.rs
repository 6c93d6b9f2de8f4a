//! Radial profiles `γ` of flat convex hypersurfaces `x_n = γ(|x'|) + 1` and
//! their dyadic rescalings `γ_j(s) = γ(2^{-j} s) / γ(2^{-j})`.
//!
//! Every profile carries a log-domain evaluator. Infinitely flat profiles
//! such as `exp(-1/s^α)` underflow long before the dyadic scales of interest
//! stop mattering, so all ratios are formed from logarithms.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::geometric_grid;

/// Smallest linear value that is materialised from the log domain.
pub const LINEAR_FLOOR: f64 = 1e-300;

pub const DEFAULT_DOMAIN_RADIUS: f64 = 2.0;

const CENTRAL_DIFF_STEP: f64 = 1e-5;
const CENTRAL_DIFF_STEP2: f64 = 1e-4;

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum ProfileKind {
    /// `γ(s) = s^m`.
    Power { m: f64 },
    /// `γ(s) = exp(shift - scale · s^{-α})`. The base family has
    /// `shift = 0, scale = 1`; rescaling keeps the family closed.
    ExpFlat { alpha: f64, shift: f64, scale: f64 },
    /// Monotone cubic interpolation of tabulated values.
    Table(Arc<TableProfile>),
    /// User supplied evaluator(s).
    Custom(Arc<CustomProfile>),
    /// Generic dyadic rescaling of a table or custom profile.
    Rescaled { base: Arc<Profile>, j: u32 },
}

pub struct CustomProfile {
    pub name: String,
    pub gamma: Box<ScalarFn>,
    pub log_gamma: Option<Box<ScalarFn>>,
}

impl CustomProfile {
    pub fn new(name: impl Into<String>, gamma: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomProfile {
            name: name.into(),
            gamma: Box::new(gamma),
            log_gamma: None,
        }
    }

    pub fn with_log(mut self, log_gamma: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.log_gamma = Some(Box::new(log_gamma));
        self
    }
}

/// Fritsch-Carlson monotone cubic Hermite interpolant.
#[derive(Debug, Clone)]
pub struct TableProfile {
    s: Vec<f64>,
    gamma: Vec<f64>,
    slopes: Vec<f64>,
}

impl TableProfile {
    pub fn new(s: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if s.len() != gamma.len() || s.len() < 2 {
            return Err(Error::Input(
                "table profile needs matching s/gamma arrays with at least 2 points".into(),
            ));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("table abscissae must be strictly increasing".into()));
        }
        if s.iter().chain(&gamma).any(|v| !v.is_finite()) || gamma.iter().any(|&g| g < 0.0) {
            return Err(Error::Input("table values must be finite and non-negative".into()));
        }
        let n = s.len();
        let delta: Vec<f64> = (0..n - 1)
            .map(|i| (gamma[i + 1] - gamma[i]) / (s[i + 1] - s[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = delta[0];
        slopes[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            slopes[i] = if delta[i - 1] * delta[i] <= 0.0 {
                0.0
            } else {
                0.5 * (delta[i - 1] + delta[i])
            };
        }
        for i in 0..n - 1 {
            if delta[i] == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / delta[i];
            let b = slopes[i + 1] / delta[i];
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                slopes[i] = t * a * delta[i];
                slopes[i + 1] = t * b * delta[i];
            }
        }
        Ok(TableProfile { s, gamma, slopes })
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.s.len();
        if x <= self.s[0] {
            return self.gamma[0] + self.slopes[0] * (x - self.s[0]);
        }
        if x >= self.s[n - 1] {
            return self.gamma[n - 1] + self.slopes[n - 1] * (x - self.s[n - 1]);
        }
        let i = match self.s.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.gamma[i],
            Err(i) => i - 1,
        };
        let h = self.s[i + 1] - self.s[i];
        let t = (x - self.s[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.gamma[i] + h10 * h * self.slopes[i] + h01 * self.gamma[i + 1] + h11 * h * self.slopes[i + 1]
    }

    pub fn last_abscissa(&self) -> f64 {
        *self.s.last().unwrap()
    }
}

#[derive(Clone)]
pub struct Profile {
    pub kind: ProfileKind,
    pub domain_radius: f64,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Profile({}, R={})", self.describe(), self.domain_radius)
    }
}

/// A profile value together with its logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaValue {
    pub value: f64,
    pub log: f64,
}

impl GammaValue {
    fn from_log(log: f64) -> Self {
        let value = if log >= LINEAR_FLOOR.ln() { log.exp() } else { 0.0 };
        GammaValue { value, log }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub convexity_pass: bool,
    pub monotone_pass: bool,
    pub bak_condition5_pass: bool,
    /// Sampled `γ'' ≥ γ'`, used by the three-dimensional decay argument.
    /// Reported only; not part of the pass flags above.
    pub second_dominates_first: bool,
    pub grid: Vec<f64>,
    pub worst_violation: f64,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.convexity_pass && self.monotone_pass && self.bak_condition5_pass
    }
}

impl Profile {
    pub fn power(m: f64) -> Self {
        Profile {
            kind: ProfileKind::Power { m },
            domain_radius: DEFAULT_DOMAIN_RADIUS,
        }
    }

    pub fn expflat(alpha: f64) -> Self {
        Profile {
            kind: ProfileKind::ExpFlat {
                alpha,
                shift: 0.0,
                scale: 1.0,
            },
            domain_radius: DEFAULT_DOMAIN_RADIUS,
        }
    }

    pub fn table(s: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        let t = TableProfile::new(s, gamma)?;
        let r = t.last_abscissa();
        Ok(Profile {
            kind: ProfileKind::Table(Arc::new(t)),
            domain_radius: r,
        })
    }

    pub fn custom(c: CustomProfile) -> Self {
        Profile {
            kind: ProfileKind::Custom(Arc::new(c)),
            domain_radius: DEFAULT_DOMAIN_RADIUS,
        }
    }

    pub fn with_domain_radius(mut self, r: f64) -> Self {
        self.domain_radius = r;
        self
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ProfileKind::Power { m } => format!("power(m={m})"),
            ProfileKind::ExpFlat { alpha, shift, scale } => {
                if *shift == 0.0 && *scale == 1.0 {
                    format!("expflat(alpha={alpha})")
                } else {
                    format!("expflat(alpha={alpha}, shift={shift}, scale={scale})")
                }
            }
            ProfileKind::Table(_) => "table".to_string(),
            ProfileKind::Custom(c) => format!("custom({})", c.name),
            ProfileKind::Rescaled { base, j } => format!("{}_j{}", base.describe(), j),
        }
    }

    pub fn is_power(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::Power { m } => Some(m),
            _ => None,
        }
    }

    pub fn is_expflat(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::ExpFlat { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    fn check_domain(&self, s: f64, allow_zero: bool) -> Result<()> {
        let tol = 1e-12 * self.domain_radius;
        if !s.is_finite() || s < 0.0 || s > self.domain_radius + tol || (!allow_zero && s == 0.0) {
            return Err(Error::domain(
                "profile",
                s,
                format!("expected {}s <= {}", if allow_zero { "0 <= " } else { "0 < " }, self.domain_radius),
            ));
        }
        Ok(())
    }

    /// `log γ(s)` without domain checks; `-inf` at `s = 0`.
    pub fn log_gamma(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            ProfileKind::Power { m } => m * s.ln(),
            ProfileKind::ExpFlat { alpha, shift, scale } => shift - scale * s.powf(-alpha),
            ProfileKind::Table(t) => t.eval(s).ln(),
            ProfileKind::Custom(c) => match &c.log_gamma {
                Some(lg) => lg(s),
                None => (c.gamma)(s).ln(),
            },
            ProfileKind::Rescaled { base, j } => {
                let k = 0.5f64.powi(*j as i32);
                base.log_gamma(k * s) - base.log_gamma(k)
            }
        }
    }

    /// `γ(s)` without domain checks, in the linear domain.
    pub fn gamma_unchecked(&self, s: f64) -> f64 {
        match &self.kind {
            ProfileKind::Power { m } => {
                if s <= 0.0 {
                    0.0
                } else {
                    s.powf(*m)
                }
            }
            ProfileKind::Table(t) => t.eval(s.max(0.0)),
            ProfileKind::Custom(c) if c.log_gamma.is_none() => (c.gamma)(s),
            _ => {
                let l = self.log_gamma(s);
                if l >= LINEAR_FLOOR.ln() {
                    l.exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn gamma_eval(&self, s: f64) -> Result<GammaValue> {
        self.check_domain(s, true)?;
        if s == 0.0 {
            return Ok(GammaValue {
                value: 0.0,
                log: f64::NEG_INFINITY,
            });
        }
        match &self.kind {
            ProfileKind::Power { .. } | ProfileKind::Table(_) => {
                let v = self.gamma_unchecked(s);
                Ok(GammaValue { value: v, log: v.ln() })
            }
            ProfileKind::Custom(c) if c.log_gamma.is_none() => {
                let v = (c.gamma)(s);
                Ok(GammaValue { value: v, log: v.ln() })
            }
            _ => Ok(GammaValue::from_log(self.log_gamma(s))),
        }
    }

    /// `log γ(2^{-j})`.
    pub fn log_gamma_dyadic(&self, j: u32) -> f64 {
        match &self.kind {
            ProfileKind::Power { m } => -m * j as f64 * std::f64::consts::LN_2,
            ProfileKind::ExpFlat { alpha, shift, scale } => shift - scale * (alpha * j as f64 * std::f64::consts::LN_2).exp(),
            _ => self.log_gamma(0.5f64.powi(j as i32)),
        }
    }

    /// First or second derivative; closed forms for built-ins, central
    /// differences otherwise.
    pub fn gamma_deriv(&self, s: f64, order: u8) -> Result<f64> {
        if order != 1 && order != 2 {
            return Err(Error::Argument(format!("derivative order must be 1 or 2, got {order}")));
        }
        self.check_domain(s, false)?;
        Ok(self.deriv_unchecked(s, order))
    }

    pub(crate) fn deriv_unchecked(&self, s: f64, order: u8) -> f64 {
        match &self.kind {
            ProfileKind::Power { m } => {
                if order == 1 {
                    m * s.powf(m - 1.0)
                } else {
                    m * (m - 1.0) * s.powf(m - 2.0)
                }
            }
            ProfileKind::ExpFlat { alpha, scale, .. } => {
                let g = self.gamma_unchecked(s);
                let q = scale * alpha * s.powf(-alpha - 1.0);
                if order == 1 {
                    q * g
                } else {
                    g * (q * q - scale * alpha * (alpha + 1.0) * s.powf(-alpha - 2.0))
                }
            }
            _ => self.central_difference(s, order),
        }
    }

    /// Differences `log γ` when it is finite at the three points (steep
    /// profiles are far smoother in the log), `γ` itself otherwise.
    fn central_difference(&self, s: f64, order: u8) -> f64 {
        let h = if order == 1 { s * CENTRAL_DIFF_STEP } else { s * CENTRAL_DIFF_STEP2 };
        let (lp, l0, lm) = (self.log_gamma(s + h), self.log_gamma(s), self.log_gamma(s - h));
        if lp.is_finite() && l0.is_finite() && lm.is_finite() {
            let d1 = (lp - lm) / (2.0 * h);
            let g = l0.exp();
            return if order == 1 {
                g * d1
            } else {
                g * ((lp - 2.0 * l0 + lm) / (h * h) + d1 * d1)
            };
        }
        let fp = self.gamma_unchecked(s + h);
        let fm = self.gamma_unchecked(s - h);
        if order == 1 {
            (fp - fm) / (2.0 * h)
        } else {
            let f0 = self.gamma_unchecked(s);
            (fp - 2.0 * f0 + fm) / (h * h)
        }
    }

    /// `log γ'(s)`, finite even where `γ'` underflows for built-ins.
    pub fn log_deriv1(&self, s: f64) -> f64 {
        match &self.kind {
            ProfileKind::Power { m } => m.ln() + (m - 1.0) * s.ln(),
            ProfileKind::ExpFlat { alpha, scale, .. } => {
                (scale * alpha).ln() - (alpha + 1.0) * s.ln() + self.log_gamma(s)
            }
            _ => self.central_difference(s, 1).ln(),
        }
    }

    /// `γ''(s) / γ'(s)`, finite where both derivatives over- or underflow.
    pub fn curvature_ratio(&self, s: f64) -> f64 {
        match &self.kind {
            ProfileKind::Power { m } => (m - 1.0) / s,
            ProfileKind::ExpFlat { alpha, scale, .. } => {
                scale * alpha * s.powf(-alpha - 1.0) - (alpha + 1.0) / s
            }
            _ => self.central_difference(s, 2) / self.central_difference(s, 1),
        }
    }

    /// The dyadic rescaling `γ_j`. `γ_j(1) = 1` exactly.
    pub fn rescaled_profile(&self, j: u32) -> Profile {
        let kind = match &self.kind {
            ProfileKind::Power { m } => ProfileKind::Power { m: *m },
            ProfileKind::ExpFlat { alpha, scale, .. } => {
                let c = scale * (alpha * j as f64 * std::f64::consts::LN_2).exp();
                ProfileKind::ExpFlat {
                    alpha: *alpha,
                    shift: c,
                    scale: c,
                }
            }
            ProfileKind::Rescaled { base, j: j0 } => ProfileKind::Rescaled {
                base: base.clone(),
                j: j0 + j,
            },
            _ => ProfileKind::Rescaled {
                base: Arc::new(self.clone()),
                j,
            },
        };
        Profile {
            kind,
            domain_radius: self.domain_radius,
        }
    }

    /// Sampled checks of convexity, monotonicity and the ratio condition on
    /// a geometric grid in `(0, domain_radius]`.
    pub fn check_assumptions(&self, grid_size: usize) -> Result<AssumptionReport> {
        if grid_size < 16 {
            return Err(Error::Argument(format!("grid_size must be >= 16, got {grid_size}")));
        }
        let r = self.domain_radius;
        let grid = geometric_grid(r * 1e-3, r, grid_size);
        let mut worst: f64 = 0.0;

        let d1: Vec<Option<f64>> = grid.iter().map(|&s| finite(self.deriv_unchecked(s, 1))).collect();
        let d2: Vec<Option<f64>> = grid.iter().map(|&s| finite(self.deriv_unchecked(s, 2))).collect();
        let lg: Vec<Option<f64>> = grid
            .iter()
            .map(|&s| {
                let l = self.log_gamma(s);
                if l.is_nan() || l == f64::INFINITY {
                    None
                } else {
                    Some(l)
                }
            })
            .collect();

        let mut convex = true;
        for (a, b) in d1.iter().zip(&d2) {
            match (a, b) {
                (Some(a), Some(b)) => {
                    let v = sign_violation(*a).max(sign_violation(*b));
                    worst = worst.max(v);
                    convex &= v <= 1e-9;
                }
                _ => {
                    convex = false;
                    worst = worst.max(1.0);
                }
            }
        }

        let mut monotone = true;
        for w in lg.windows(2) {
            match (w[0], w[1]) {
                (Some(a), Some(b)) => {
                    if b < a && !(a == f64::NEG_INFINITY) {
                        let v = (1.0 - (b - a).exp()).min(1.0);
                        worst = worst.max(v);
                        monotone &= v <= 1e-9;
                    }
                }
                _ => {
                    monotone = false;
                    worst = worst.max(1.0);
                }
            }
        }
        for w in d2.windows(2) {
            match (w[0], w[1]) {
                (Some(a), Some(b)) => {
                    let v = monotone_violation(a, b);
                    worst = worst.max(v);
                    monotone &= v <= 1e-9;
                }
                _ => {
                    monotone = false;
                    worst = worst.max(1.0);
                }
            }
        }

        // γ'(λt)/γ'(t) must not increase in t, checked in the log domain.
        let mut bak = true;
        for lambda in [2.0, 4.0, 8.0] {
            let ts: Vec<f64> = grid.iter().copied().filter(|&t| lambda * t <= r).collect();
            let ratios: Vec<f64> = ts
                .iter()
                .map(|&t| self.log_deriv1(lambda * t) - self.log_deriv1(t))
                .collect();
            for w in ratios.windows(2) {
                if !w[0].is_finite() || !w[1].is_finite() {
                    if w[0].is_nan() || w[1].is_nan() {
                        bak = false;
                        worst = worst.max(1.0);
                    }
                    continue;
                }
                if w[1] > w[0] {
                    let v = (1.0 - (w[0] - w[1]).exp()).min(1.0);
                    if v > 1e-9 {
                        bak = false;
                    }
                    worst = worst.max(v);
                }
            }
        }

        let mut second_dominates = true;
        for (a, b) in d1.iter().zip(&d2) {
            if let (Some(a), Some(b)) = (a, b) {
                if *b < *a * (1.0 - 1e-9) {
                    second_dominates = false;
                }
            }
        }

        Ok(AssumptionReport {
            convexity_pass: convex,
            monotone_pass: monotone,
            bak_condition5_pass: bak,
            second_dominates_first: second_dominates,
            grid,
            worst_violation: worst,
        })
    }

    /// `a / sqrt(γ'(a) γ'(a/2))`, formed in the log domain.
    pub fn lemma6_constant(&self, a: f64) -> Result<f64> {
        if !(a > 0.0 && a <= 0.5 * self.domain_radius * (1.0 + 1e-12)) {
            return Err(Error::domain("lemma6_constant", a, format!("expected 0 < a <= {}", 0.5 * self.domain_radius)));
        }
        let l1 = self.log_deriv1(a);
        let l2 = self.log_deriv1(0.5 * a);
        if !l2.is_finite() || !l1.is_finite() {
            return Err(Error::Infinite(format!("γ'(a/2) vanishes numerically at a = {a}")));
        }
        let v = (a.ln() - 0.5 * (l1 + l2)).exp();
        if v.is_infinite() {
            return Err(Error::Infinite(format!("constant overflows at a = {a}")));
        }
        Ok(v)
    }
}

fn finite(x: f64) -> Option<f64> {
    if x.is_finite() {
        Some(x)
    } else {
        None
    }
}

fn sign_violation(x: f64) -> f64 {
    if x < 0.0 {
        1.0
    } else {
        0.0
    }
}

fn monotone_violation(a: f64, b: f64) -> f64 {
    if b >= a {
        return 0.0;
    }
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        ((a - b) / scale).min(1.0)
    }
}

/// Config-file description of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Power {
        m: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain_radius: Option<f64>,
    },
    Expflat {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain_radius: Option<f64>,
    },
    Table { s: Vec<f64>, gamma: Vec<f64> },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<Profile> {
        match self {
            ProfileSpec::Power { m, domain_radius } => {
                if !(*m >= 2.0) {
                    return Err(Error::Input(format!("power profile needs m >= 2, got {m}")));
                }
                Ok(Profile::power(*m).with_domain_radius(domain_radius.unwrap_or(DEFAULT_DOMAIN_RADIUS)))
            }
            ProfileSpec::Expflat { alpha, domain_radius } => {
                if !(*alpha > 0.0) {
                    return Err(Error::Input(format!("expflat profile needs alpha > 0, got {alpha}")));
                }
                Ok(Profile::expflat(*alpha).with_domain_radius(domain_radius.unwrap_or(DEFAULT_DOMAIN_RADIUS)))
            }
            ProfileSpec::Table { s, gamma } => Profile::table(s.clone(), gamma.clone()),
        }
    }
}

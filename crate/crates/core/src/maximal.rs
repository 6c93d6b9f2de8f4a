//! Discrete averages over dilates of the hypersurface `x_n = γ(|x'|) + 1`,
//! their maximal function, and desk-scale norm experiments.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridFunction, GridSpec};
use crate::numeric::{geometric_grid, pairwise_sum, GaussLegendre};
use crate::oscillatory::{sphere_area, Amplitude};
use crate::profile::Profile;
use crate::young::{orlicz_norm, YoungFunction};

/// Largest lattice (in points) the ratio experiments will allocate.
pub const MAX_GRID_POINTS: usize = 128 * 128 * 128;

/// Output nodes along the longest axis per input node per axis; the output
/// box is much wider than the input ball.
pub const OUTPUT_REFINEMENT: usize = 2;

/// Node counts for the surface integral in polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Gauss-Legendre nodes per smooth piece of the amplitude.
    pub radial: usize,
    /// Nodes on `S^{n-2}`: equally spaced on the circle; azimuth count for `n = 4`.
    pub angular: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { radial: 32, angular: 64 }
    }
}

/// Default dilation set: 32 values geometric in `[1/4, 4]`.
pub fn default_t_set() -> Vec<f64> {
    geometric_grid(0.25, 4.0, 32)
}

/// Quadrature nodes `(ω, weight)` on `S^{n-2}`, weights summing to its area.
pub fn sphere_nodes(n: usize, angular: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let tau = std::f64::consts::TAU;
    match n {
        2 => Ok(vec![(vec![-1.0], 1.0), (vec![1.0], 1.0)]),
        3 => Ok((0..angular)
            .map(|k| {
                let th = tau * k as f64 / angular as f64;
                (vec![th.cos(), th.sin()], tau / angular as f64)
            })
            .collect()),
        4 => {
            let gl = GaussLegendre::get(16);
            let mut out = Vec::with_capacity(angular * 16);
            for (c, w) in gl.mapped(-1.0, 1.0) {
                let s = (1.0 - c * c).sqrt();
                for k in 0..angular {
                    let ph = tau * k as f64 / angular as f64;
                    out.push((vec![s * ph.cos(), s * ph.sin(), c], w * tau / angular as f64));
                }
            }
            Ok(out)
        }
        _ => Err(Error::Argument(format!("surface quadrature supports n in 2..=4, got {n}"))),
    }
}

/// Radial node on the surface: `r`, `γ(r)`, and weight including `amp(r) r^{n-2}`.
#[derive(Debug, Clone, Copy)]
struct RadialNode {
    r: f64,
    height: f64,
    w: f64,
}

fn radial_nodes(p: &Profile, amp: &Amplitude, n: usize, order: usize) -> Vec<RadialNode> {
    let gl = GaussLegendre::get(order);
    let b = amp.breakpoints();
    let mut out = Vec::new();
    for piece in b.windows(2) {
        for (r, w) in gl.mapped(piece[0], piece[1]) {
            let a = amp.value(r);
            if a != 0.0 {
                out.push(RadialNode {
                    r,
                    height: p.gamma_unchecked(r),
                    w: w * a * r.powi(n as i32 - 2),
                });
            }
        }
    }
    out
}

/// Axis-aligned box outside which a field vanishes.
#[derive(Debug, Clone)]
struct Support {
    center: Vec<f64>,
    /// Half-diagonal of the box in the first `n-1` coordinates.
    radius: f64,
    lo_n: f64,
    hi_n: f64,
}

impl Support {
    fn of(spec: &GridSpec) -> Support {
        let n = spec.n();
        let radius = spec.extent[..n - 1].iter().map(|e| e * e).sum::<f64>().sqrt();
        Support {
            center: spec.center.clone(),
            radius,
            lo_n: spec.center[n - 1] - spec.extent[n - 1],
            hi_n: spec.center[n - 1] + spec.extent[n - 1],
        }
    }
}

struct SurfaceRule {
    n: usize,
    radial: Vec<RadialNode>,
    sphere: Vec<(Vec<f64>, f64)>,
}

impl SurfaceRule {
    fn new(p: &Profile, amp: &Amplitude, n: usize, q: Quadrature) -> Result<SurfaceRule> {
        if q.radial == 0 || q.angular == 0 {
            return Err(Error::Argument("quadrature node counts must be positive".into()));
        }
        Ok(SurfaceRule {
            n,
            radial: radial_nodes(p, amp, n, q.radial),
            sphere: sphere_nodes(n, q.angular)?,
        })
    }

    /// `∫ f(x' - t y, x_n - t(γ(|y|) + 1)) amp(|y|) dy`.
    fn average(&self, f: &dyn Field, support: Option<&Support>, x: &[f64], t: f64, z: &mut [f64]) -> f64 {
        let n = self.n;
        let dist = support.map(|s| {
            x[..n - 1]
                .iter()
                .zip(&s.center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        });
        let mut acc = 0.0;
        for node in &self.radial {
            let zn = x[n - 1] - t * (node.height + 1.0);
            if let (Some(s), Some(d)) = (support, dist) {
                if zn < s.lo_n || zn > s.hi_n || (d - t * node.r).abs() > s.radius {
                    continue;
                }
            }
            z[n - 1] = zn;
            let mut inner = 0.0;
            for (om, wa) in &self.sphere {
                for k in 0..n - 1 {
                    z[k] = x[k] - t * node.r * om[k];
                }
                inner += wa * f.eval(z);
            }
            acc += node.w * inner;
        }
        acc
    }
}

/// `A_t f` sampled on `out`.
pub fn average_op_on(
    p: &Profile,
    f: &GridFunction,
    t: f64,
    amp: &Amplitude,
    q: Quadrature,
    out: &GridSpec,
) -> Result<GridFunction> {
    maximal_op_on(p, f, &[t], amp, q, out, false)
}

/// `A_t f` on the lattice of `f`.
pub fn average_op(p: &Profile, f: &GridFunction, t: f64, amp: &Amplitude) -> Result<GridFunction> {
    average_op_on(p, f, t, amp, Quadrature::default(), &f.spec)
}

fn maximal_op_on(
    p: &Profile,
    f: &GridFunction,
    t_set: &[f64],
    amp: &Amplitude,
    q: Quadrature,
    out: &GridSpec,
    take_abs: bool,
) -> Result<GridFunction> {
    let n = f.n();
    if out.n() != n {
        return Err(Error::Argument(format!("output grid has dimension {}, input {n}", out.n())));
    }
    if t_set.is_empty() || t_set.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::Argument("dilations must be positive and finite".into()));
    }
    let rule = SurfaceRule::new(p, amp, n, q)?;
    let support = Support::of(&f.spec);
    let len = out.len();
    let samples: Vec<f64> = (0..len)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n]),
            |(x, z), i| {
                out.node(i, x);
                if take_abs {
                    t_set
                        .iter()
                        .map(|&t| rule.average(f, Some(&support), x, t, z).abs())
                        .fold(0.0, f64::max)
                } else {
                    rule.average(f, Some(&support), x, t_set[0], z)
                }
            },
        )
        .collect();
    GridFunction::from_samples(out.clone(), samples)
}

/// `sup_{t ∈ t_set} |A_t f|` sampled on `out`.
pub fn maximal_op_grid(
    p: &Profile,
    f: &GridFunction,
    t_set: &[f64],
    amp: &Amplitude,
    q: Quadrature,
    out: &GridSpec,
) -> Result<GridFunction> {
    maximal_op_on(p, f, t_set, amp, q, out, true)
}

/// `sup_{t ∈ t_set} |A_t f|` on the lattice of `f`.
pub fn maximal_op(p: &Profile, f: &GridFunction, t_set: &[f64], amp: &Amplitude) -> Result<GridFunction> {
    maximal_op_grid(p, f, t_set, amp, Quadrature::default(), &f.spec)
}

/// Lattice covering every point where `sup_t |A_t f|` can be nonzero for `f`
/// supported in `input`, with `points` nodes along the longest axis.
pub fn output_spec(p: &Profile, amp: &Amplitude, input: &GridSpec, t_set: &[f64], points: usize) -> Result<GridSpec> {
    let n = input.n();
    let t_max = t_set.iter().cloned().fold(0.0, f64::max);
    let t_min = t_set.iter().cloned().fold(f64::INFINITY, f64::min);
    let (a, b) = amp.support();
    let g_lo = p.gamma_unchecked(a);
    let g_hi = p.gamma_unchecked(b);
    let mut center = input.center.clone();
    let mut extent = input.extent.clone();
    for e in extent.iter_mut().take(n - 1) {
        *e += t_max * b;
    }
    let lo = input.center[n - 1] - input.extent[n - 1] + t_min * (g_lo + 1.0);
    let hi = input.center[n - 1] + input.extent[n - 1] + t_max * (g_hi + 1.0);
    center[n - 1] = 0.5 * (lo + hi);
    extent[n - 1] = 0.5 * (hi - lo);
    let longest = extent.iter().cloned().fold(0.0, f64::max);
    let h = 2.0 * longest / (points.max(2) - 1) as f64;
    GridSpec::new(center, extent, h)
}

/// `h_p(x) = Φ^{-1}(1/|x_n|) / ln(1/|x_n|)` on the ball of radius 1/2, with
/// `|x_n|` clamped below at `h/2`.
pub fn example3_testfn(y: &YoungFunction, spec: &GridSpec) -> Result<GridFunction> {
    let n = spec.n();
    let floor = 0.5 * spec.h;
    let mut g = GridFunction::zeros(spec.clone());
    let mut x = vec![0.0; n];
    for i in 0..g.samples.len() {
        spec.node(i, &mut x);
        if x.iter().map(|v| v * v).sum::<f64>() > 0.25 {
            continue;
        }
        let u = x[n - 1].abs().max(floor);
        let lu = -u.ln();
        g.samples[i] = y.phi_inverse_from_log(lu)? / lu;
    }
    Ok(g)
}

/// Test data for the ratio experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// The singular function `h_p` on the ball of radius 1/2.
    #[default]
    Example3,
    /// Indicator of the centered ball.
    BallIndicator { radius: f64 },
}

impl TestFunction {
    fn radius(&self) -> f64 {
        match self {
            TestFunction::Example3 => 0.5,
            TestFunction::BallIndicator { radius } => *radius,
        }
    }

    /// Samples on the cube `[-R, R]^n` with `points` nodes per axis.
    pub fn sample(&self, y: &YoungFunction, n: usize, points: usize) -> Result<GridFunction> {
        let r = self.radius();
        if !(r > 0.0) {
            return Err(Error::Argument(format!("ball radius must be positive, got {r}")));
        }
        let spec = GridSpec::cube(n, r, 2.0 * r / (points.max(2) - 1) as f64)?;
        match self {
            TestFunction::Example3 => example3_testfn(y, &spec),
            TestFunction::BallIndicator { radius } => Ok(GridFunction::from_fn(spec, |x| {
                if x.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            })),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendClass {
    Growing,
    Stable,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioPoint {
    pub resolution: usize,
    pub norm_f: f64,
    pub norm_af: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioTrend {
    pub points: Vec<RatioPoint>,
    pub class: TrendClass,
    /// The supremum runs over this finite set instead of all `t > 0`.
    pub t_set: Vec<f64>,
}

impl RatioTrend {
    pub fn classify(points: &[RatioPoint]) -> TrendClass {
        let growth = points.last().unwrap().ratio / points[0].ratio;
        if growth >= 2.0 {
            TrendClass::Growing
        } else if (1.0 / 1.2..=1.2).contains(&growth) {
            TrendClass::Stable
        } else {
            TrendClass::Indeterminate
        }
    }

    /// CSV `resolution, norm_f, norm_Af, ratio`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("resolution,norm_f,norm_Af,ratio\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{},{}\n", p.resolution, p.norm_f, p.norm_af, p.ratio));
        }
        s
    }
}

/// `‖sup_t A_t f‖_Φ / ‖f‖_Φ` at each resolution (nodes per axis).
#[allow(clippy::too_many_arguments)]
pub fn empirical_norm_ratio(
    p: &Profile,
    y: &YoungFunction,
    n: usize,
    resolutions: &[usize],
    t_set: &[f64],
    test: TestFunction,
    amp: &Amplitude,
    q: Quadrature,
) -> Result<RatioTrend> {
    if resolutions.len() < 3 {
        return Err(Error::Argument("need at least 3 resolutions".into()));
    }
    if resolutions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("resolutions must be strictly increasing".into()));
    }
    for &r in resolutions {
        let pts = (r as f64).powi(n as i32);
        if pts > MAX_GRID_POINTS as f64 {
            return Err(Error::Refused(format!(
                "{r}^{n} grid points exceed the limit of {MAX_GRID_POINTS}"
            )));
        }
    }
    let mut points = Vec::with_capacity(resolutions.len());
    for &res in resolutions {
        let f = test.sample(y, n, res)?;
        let out = output_spec(p, amp, &f.spec, t_set, OUTPUT_REFINEMENT * res)?;
        if out.len() > MAX_GRID_POINTS {
            return Err(Error::Refused(format!(
                "output lattice of {} points exceeds the limit of {MAX_GRID_POINTS}",
                out.len()
            )));
        }
        let mf = maximal_op_grid(p, &f, t_set, amp, q, &out)?;
        let norm_f = orlicz_norm(y, &f)?;
        let norm_af = orlicz_norm(y, &mf)?;
        points.push(RatioPoint {
            resolution: res,
            norm_f,
            norm_af,
            ratio: norm_af / norm_f,
        });
    }
    Ok(RatioTrend {
        class: RatioTrend::classify(&points),
        points,
        t_set: t_set.to_vec(),
    })
}

/// Composite rule for the rescaling identity: `panels` Gauss-Legendre panels
/// of the given order on each smooth piece of the amplitude at scale 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescalingQuadrature {
    pub panels: usize,
    pub order: usize,
    pub angular: usize,
}

impl Default for RescalingQuadrature {
    fn default() -> Self {
        RescalingQuadrature {
            panels: 16,
            order: 8,
            angular: 64,
        }
    }
}

impl RescalingQuadrature {
    pub fn refined(&self) -> Self {
        RescalingQuadrature {
            panels: 2 * self.panels,
            order: self.order,
            angular: 2 * self.angular,
        }
    }
}

/// `(r, weight)` on the pieces of `breakpoints · scale`, `panels` per piece.
fn composite_nodes(breakpoints: &[f64], scale: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::get(order);
    let mut out = Vec::new();
    for piece in breakpoints.windows(2) {
        let (a, b) = (piece[0] * scale, piece[1] * scale);
        let w = (b - a) / panels as f64;
        for k in 0..panels {
            out.extend(gl.mapped(a + k as f64 * w, a + (k + 1) as f64 * w));
        }
    }
    out
}

/// Largest `|A^j_t f(x) − 2^{-j(n-1)} τ_j^{-1} B^j_t τ_j f(x)|` over `x_samples`.
///
/// The left side integrates over `|y| ∈ 2^{-j}·supp(amp)` with panels of fixed
/// absolute width, so it gets `panels >> j` panels per piece; the right side
/// integrates over the unit-scale support with `panels` per piece. At `j = 0`
/// the two rules coincide; for `j > 0` the residual is pure quadrature error.
#[allow(clippy::too_many_arguments)]
pub fn dyadic_rescaling_check(
    p: &Profile,
    j: u32,
    f: &dyn Field,
    t: f64,
    x_samples: &[Vec<f64>],
    amp: &Amplitude,
    q: RescalingQuadrature,
) -> Result<f64> {
    let n = f.dim();
    if !(t > 0.0) {
        return Err(Error::Argument(format!("t must be positive, got {t}")));
    }
    if q.panels == 0 || q.order == 0 || q.angular == 0 {
        return Err(Error::Argument("quadrature node counts must be positive".into()));
    }
    let log_g0 = p.log_gamma_dyadic(j);
    if log_g0 < -700.0 {
        return Err(Error::domain("dyadic scale j", j as f64, format!("log γ(2^-j) = {log_g0} is not representable")));
    }
    let g0 = log_g0.exp();
    let pj = p.rescaled_profile(j);
    let sphere = sphere_nodes(n, q.angular)?;
    let bp = amp.breakpoints();
    let scale = 0.5f64.powi(j as i32);
    let pow = n as i32 - 2;

    let lhs_nodes: Vec<(f64, f64, f64)> = composite_nodes(&bp, scale, (q.panels >> j).max(1), q.order)
        .into_iter()
        .map(|(r, w)| (r, p.gamma_unchecked(r), w * amp.value(r / scale) * r.powi(pow)))
        .collect();
    let rhs_nodes: Vec<(f64, f64, f64)> = composite_nodes(&bp, 1.0, q.panels, q.order)
        .into_iter()
        .map(|(u, w)| (u, pj.gamma_unchecked(u), w * amp.value(u) * u.powi(pow)))
        .collect();
    let jacobian = scale.powi(n as i32 - 1);

    let mut z = vec![0.0; n];
    let mut worst: f64 = 0.0;
    for x in x_samples {
        if x.len() != n {
            return Err(Error::Argument(format!("sample point has dimension {}, expected {n}", x.len())));
        }
        let mut lhs = 0.0;
        for &(r, g, w) in &lhs_nodes {
            z[n - 1] = x[n - 1] - t * (g + 1.0);
            let mut inner = 0.0;
            for (om, wa) in &sphere {
                for k in 0..n - 1 {
                    z[k] = x[k] - t * r * om[k];
                }
                inner += wa * f.eval(&z);
            }
            lhs += w * inner;
        }
        // B^j_t τ_j f at (2^j x', x_n / γ(2^{-j})), then τ_j back to x-space
        let zn_scaled = x[n - 1] / g0;
        let mut rhs = 0.0;
        for &(u, g, w) in &rhs_nodes {
            z[n - 1] = g0 * (zn_scaled - t * (g + 1.0 / g0));
            let mut inner = 0.0;
            for (om, wa) in &sphere {
                for k in 0..n - 1 {
                    z[k] = scale * (x[k] / scale - t * u * om[k]);
                }
                inner += wa * f.eval(&z);
            }
            rhs += w * inner;
        }
        worst = worst.max((lhs - jacobian * rhs).abs());
    }
    Ok(worst)
}

/// Points `c + t(y, γ(|y|) + 1)` with `|y|` at the middle of the rescaled
/// amplitude support, so that `A^j_t` of a bump at `c` is not negligible.
pub fn rescaling_points(p: &Profile, j: u32, amp: &Amplitude, center: &[f64], t: f64, count: usize) -> Vec<Vec<f64>> {
    let n = center.len();
    let (a, b) = amp.support();
    let r = 0.5 * (a + b) * 0.5f64.powi(j as i32);
    let g = p.gamma_unchecked(r);
    (0..count)
        .map(|k| {
            let th = std::f64::consts::TAU * (k as f64 + 0.25) / count as f64;
            let mut x = center.to_vec();
            if n >= 3 {
                x[0] += t * r * th.cos();
                x[1] += t * r * th.sin();
            } else {
                x[0] += t * r * if k % 2 == 0 { 1.0 } else { -1.0 };
            }
            x[n - 1] += t * (g + 1.0);
            x
        })
        .collect()
}

/// Bump in the meridian half-plane `(|x'|, x_n)`, radial in `x'`, cut off at
/// five widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeridianBump {
    pub rho0: f64,
    pub width: f64,
}

impl MeridianBump {
    const CUTOFF: f64 = 5.0;

    fn reach(&self) -> f64 {
        Self::CUTOFF * self.width
    }

    fn eval(&self, rho: f64, z: f64) -> f64 {
        let d2 = (rho - self.rho0).powi(2) + z * z;
        if d2 > self.reach().powi(2) {
            0.0
        } else {
            (-0.5 * d2 / (self.width * self.width)).exp()
        }
    }
}

/// Eight bumps: widths 1/16 to 1/2, centered on the axis or on the unit ring.
pub fn l2_battery() -> Vec<MeridianBump> {
    let mut out = Vec::with_capacity(8);
    for rho0 in [0.0, 1.0] {
        for width in [0.0625, 0.125, 0.25, 0.5] {
            out.push(MeridianBump { rho0, width });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L2GrowthPoint {
    pub j: u32,
    /// Lower bound for the `L²` operator norm of `sup_t B^j_t`.
    pub estimate_at_least: f64,
    /// `γ(2^{-j})^{-1/2}`.
    pub reference: f64,
    /// Index into the battery of the maximizing bump.
    pub best: usize,
}

/// Largest admissible vertical offset `1/γ(2^{-j})`.
pub const MAX_OFFSET: f64 = 1e6;

struct Meridian {
    n: usize,
    h: f64,
    area: f64,
}

impl Meridian {
    fn rho(&self, i: i64) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    fn weight(&self, i: i64) -> f64 {
        self.area * self.rho(i).powi(self.n as i32 - 2) * self.h * self.h
    }

    fn norm_sq(&self, b: &MeridianBump) -> f64 {
        let imax = ((b.rho0 + b.reach()) / self.h).ceil() as i64;
        let kmax = (b.reach() / self.h).ceil() as i64;
        let mut terms = Vec::new();
        for i in 0..=imax {
            for k in -kmax..=kmax {
                let v = b.eval(self.rho(i), k as f64 * self.h);
                if v != 0.0 {
                    terms.push(v * v * self.weight(i));
                }
            }
        }
        pairwise_sum(&terms)
    }
}

/// For each `j`, the best ratio `‖sup_t |B^j_t f|‖₂ / ‖f‖₂` over
/// [`l2_battery`], computed on the meridian lattice with spacing
/// `1/resolution` (functions radial in `x'` stay radial under `B^j_t`).
#[allow(clippy::too_many_arguments)]
pub fn empirical_l2_growth(
    p: &Profile,
    n: usize,
    j_set: &[u32],
    resolution: usize,
    t_set: &[f64],
    amp: &Amplitude,
    q: Quadrature,
) -> Result<Vec<L2GrowthPoint>> {
    if n < 3 {
        return Err(Error::Argument(format!("meridian reduction needs n >= 3, got {n}")));
    }
    if resolution == 0 || t_set.is_empty() || t_set.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Argument("resolution and dilations must be positive".into()));
    }
    let battery = l2_battery();
    let mer = Meridian {
        n,
        h: 1.0 / resolution as f64,
        area: sphere_area(n - 2),
    };
    let gl_theta = GaussLegendre::get(q.angular.max(2));
    let theta: Vec<(f64, f64)> = gl_theta
        .mapped(0.0, std::f64::consts::PI)
        .map(|(th, w)| (th.cos(), w * sphere_area(n - 3) * th.sin().powi(n as i32 - 3)))
        .collect();

    let mut out = Vec::with_capacity(j_set.len());
    for &j in j_set {
        let log_g0 = p.log_gamma_dyadic(j);
        if -log_g0 > MAX_OFFSET.ln() {
            return Err(Error::Refused(format!(
                "vertical offset 1/γ(2^-{j}) = e^{} exceeds {MAX_OFFSET}",
                -log_g0
            )));
        }
        let offset = (-log_g0).exp();
        let pj = p.rescaled_profile(j);
        let radial = radial_nodes(&pj, amp, n, q.radial);
        let (g_lo, g_hi) = radial
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.height), b.max(r.height)));
        let (r_lo, r_hi) = amp.support();

        let ratios: Vec<f64> = battery
            .par_iter()
            .map(|b| {
                let reach = b.reach();
                let outer = b.rho0 + reach;
                let mut sup: BTreeMap<(i64, i64), f64> = BTreeMap::new();
                for &t in t_set {
                    let i_lo = (((t * r_lo - outer) / mer.h - 0.5).floor() as i64).max(0);
                    let i_hi = ((t * r_hi + outer) / mer.h).ceil() as i64;
                    let k_lo = ((t * (g_lo + offset) - reach) / mer.h).floor() as i64;
                    let k_hi = ((t * (g_hi + offset) + reach) / mer.h).ceil() as i64;
                    for i in i_lo..=i_hi {
                        let rho = mer.rho(i);
                        for k in k_lo..=k_hi {
                            let xn = k as f64 * mer.h;
                            let mut acc = 0.0;
                            for node in &radial {
                                let zn = xn - t * (node.height + offset);
                                if zn.abs() > reach || (rho - t * node.r).abs() > outer {
                                    continue;
                                }
                                let tr = t * node.r;
                                let mut inner = 0.0;
                                for &(c, w) in &theta {
                                    let d2 = (rho * rho + tr * tr - 2.0 * rho * tr * c).max(0.0);
                                    inner += w * b.eval(d2.sqrt(), zn);
                                }
                                acc += node.w * inner;
                            }
                            if acc != 0.0 {
                                let e = sup.entry((i, k)).or_insert(0.0);
                                *e = e.max(acc.abs());
                            }
                        }
                    }
                }
                let terms: Vec<f64> = sup.iter().map(|(&(i, _), v)| v * v * mer.weight(i)).collect();
                (pairwise_sum(&terms) / mer.norm_sq(b)).sqrt()
            })
            .collect();
        let (best, est) = ratios
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, &r)| if r > acc.1 { (i, r) } else { acc });
        out.push(L2GrowthPoint {
            j,
            estimate_at_least: est,
            reference: (-0.5 * log_g0).exp(),
            best,
        });
    }
    Ok(out)
}

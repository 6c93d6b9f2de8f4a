//! Rescaled Fourier transforms `F_j(ξ)` of the annulus pieces of a flat
//! radial hypersurface, their gradients, and a direct tensor-grid oracle.
//!
//! The production path reduces `F_j` to the one-dimensional integral
//! `∫ e^{iλγ_j(r)} K_n(rA) amp(r) r^{n-2} dr` where `K_n` is the Fourier
//! transform of the measure on `S^{n-2}`. The integral is split into panels
//! on which the total phase advances by at most π/2; each panel is integrated
//! with Gauss-Legendre of orders 16 and 32, the difference serving as the
//! error estimate. Where `λγ_j'` becomes astronomically large (flat profiles
//! at fine dyadic scales) the remaining tail is replaced by a two-term
//! integration-by-parts expansion.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_j_scaled;
use crate::error::{Error, Result};
use crate::numeric::{pairwise_sum_complex, GaussLegendre};
use crate::panel_budget;
use crate::profile::Profile;

/// A frequency `ξ = (ξ', ξ_n)` reduced by radial symmetry to `A = |ξ'|` and `λ = ξ_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub n: usize,
    pub a: f64,
    pub lam: f64,
}

impl Frequency {
    pub fn new(n: usize, a: f64, lam: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Argument(format!("dimension must be >= 3, got {n}")));
        }
        if !(a >= 0.0) || !a.is_finite() || !lam.is_finite() {
            return Err(Error::Argument(format!("invalid frequency (A={a}, lam={lam})")));
        }
        Ok(Frequency { n, a, lam })
    }

    pub fn norm(&self) -> f64 {
        self.a.hypot(self.lam)
    }

    pub fn scaled(&self, t: f64) -> Frequency {
        Frequency {
            n: self.n,
            a: self.a * t,
            lam: self.lam * t,
        }
    }
}

/// Radial amplitude multiplying the surface measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Amplitude {
    /// Indicator of `1 ≤ |y| ≤ 2`.
    #[default]
    SharpAnnulus,
    /// `ψ₀(s) = η(s) - η(2s)` with a C¹ cubic step `η`.
    SmoothCutoff,
    /// Indicator of `|y| ≤ radius`: the whole surface including the flat point.
    Disk { radius: f64 },
}

fn smoothstep(u: f64) -> f64 {
    u * u * (3.0 - 2.0 * u)
}

/// `η(s) = 1` for `s ≤ 1`, `0` for `s ≥ 2`, `ρ(2 - s)` in between.
pub fn eta(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        smoothstep(2.0 - s)
    }
}

fn eta_deriv(s: f64) -> f64 {
    if s <= 1.0 || s >= 2.0 {
        0.0
    } else {
        let u = 2.0 - s;
        -6.0 * u * (1.0 - u)
    }
}

pub fn psi0(s: f64) -> f64 {
    eta(s) - eta(2.0 * s)
}

pub fn psi0_deriv(s: f64) -> f64 {
    eta_deriv(s) - 2.0 * eta_deriv(2.0 * s)
}

impl Amplitude {
    pub fn value(&self, r: f64) -> f64 {
        match self {
            Amplitude::SharpAnnulus => {
                if (1.0..=2.0).contains(&r) {
                    1.0
                } else {
                    0.0
                }
            }
            Amplitude::SmoothCutoff => psi0(r),
            Amplitude::Disk { radius } => {
                if (0.0..=*radius).contains(&r) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative inside the support (one-sided at the edges).
    pub fn deriv(&self, r: f64) -> f64 {
        match self {
            Amplitude::SmoothCutoff => psi0_deriv(r),
            _ => 0.0,
        }
    }

    /// Support endpoints and interior points where the amplitude is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Amplitude::SharpAnnulus => vec![1.0, 2.0],
            Amplitude::SmoothCutoff => vec![0.5, 1.0, 2.0],
            Amplitude::Disk { radius } => vec![0.0, *radius],
        }
    }

    pub fn support(&self) -> (f64, f64) {
        let b = self.breakpoints();
        (b[0], *b.last().unwrap())
    }

    /// `∫_{R^{n-1}} amp(|y|) dy`.
    pub fn total_mass(&self, n: usize) -> f64 {
        let k = (n - 2) as i32;
        let area = sphere_area(n - 2);
        match self {
            Amplitude::SharpAnnulus => area * (2f64.powi(k + 1) - 1.0) / (k + 1) as f64,
            Amplitude::Disk { radius } => area * radius.powi(k + 1) / (k + 1) as f64,
            Amplitude::SmoothCutoff => {
                let gl = GaussLegendre::get(32);
                let b = self.breakpoints();
                let mut s = 0.0;
                for w in b.windows(2) {
                    s += gl.integrate(w[0], w[1], |r| psi0(r) * r.powi(k));
                }
                area * s
            }
        }
    }
}

fn gamma_fn(x: f64) -> f64 {
    // Γ at positive half-integers.
    let mut g = if (x - x.round()).abs() < 1e-12 { 1.0 } else { PI.sqrt() };
    let mut y = if (x - x.round()).abs() < 1e-12 { 1.0 } else { 0.5 };
    while y < x - 1e-12 {
        g *= y;
        y += 1.0;
    }
    g
}

/// Surface area of the unit sphere `S^k ⊂ R^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / gamma_fn(h)
}

fn kernel_const(n: usize) -> f64 {
    TAU.powf((n as f64 - 1.0) / 2.0)
}

/// `∫_{S^{n-2}} e^{iρ⟨e₁, ω⟩} dω = (2π)^{(n-1)/2} ρ^{-(n-3)/2} J_{(n-3)/2}(ρ)`.
pub fn sphere_fourier(n: usize, rho: f64) -> f64 {
    assert!(n >= 3, "sphere_fourier needs n >= 3");
    kernel_const(n) * bessel_j_scaled((n - 3) as u32, rho.abs())
}

/// `d/dρ` of [`sphere_fourier`].
pub fn sphere_fourier_deriv(n: usize, rho: f64) -> f64 {
    -kernel_const(n) * rho * bessel_j_scaled((n - 1) as u32, rho.abs())
}

fn sphere_fourier_deriv2(n: usize, rho: f64) -> f64 {
    let c = kernel_const(n);
    c * (rho * rho * bessel_j_scaled((n + 1) as u32, rho.abs()) - bessel_j_scaled((n - 1) as u32, rho.abs()))
}

/// The unimodular prefactor `e^{iξ_n/γ(2^{-j})}`, kept apart from the integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrefactorPhase {
    /// `log(|ξ_n| / γ(2^{-j}))`.
    pub log_arg: f64,
    pub sign: f64,
    /// The angle modulo 2π when it can be resolved to 1e-6.
    pub resolved: Option<f64>,
}

const MAX_RESOLVABLE_ARG: f64 = 4.0e9;

impl PrefactorPhase {
    fn new(lam: f64, log_gamma_scale: f64) -> Self {
        if lam == 0.0 {
            return PrefactorPhase {
                log_arg: f64::NEG_INFINITY,
                sign: 1.0,
                resolved: Some(0.0),
            };
        }
        let log_arg = lam.abs().ln() - log_gamma_scale;
        let resolved = if log_arg <= MAX_RESOLVABLE_ARG.ln() {
            Some((lam.signum() * log_arg.exp()).rem_euclid(TAU))
        } else {
            None
        };
        PrefactorPhase {
            log_arg,
            sign: lam.signum(),
            resolved,
        }
    }

    pub fn unit(&self) -> Option<Complex64> {
        self.resolved.map(|a| Complex64::from_polar(1.0, a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscValue {
    /// The integral without the global prefactor.
    pub value: Complex64,
    pub abs_error: f64,
    pub prefactor: PrefactorPhase,
}

impl OscValue {
    pub fn modulus(&self) -> f64 {
        self.value.norm()
    }

    /// Value including the prefactor, when its phase is resolved.
    pub fn full_value(&self) -> Option<Complex64> {
        self.prefactor.unit().map(|u| u * self.value)
    }
}

/// Gradient of `F_j` split so that no factor `1/γ(2^{-j})` is ever formed.
///
/// `∂_λ F̃ = (lam_scaled_part + lam_per_unit) / γ(2^{-j})` where `F̃` is the
/// integral without prefactor and the prefactor's own derivative is included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradValue {
    pub d_a: OscValue,
    /// `i F̃`: the coefficient of `1/γ(2^{-j})`.
    pub lam_per_unit: OscValue,
    /// `i ∫ γ(2^{-j} r) (...)`, i.e. `γ(2^{-j})` times the `γ_j` part.
    pub lam_scaled_part: OscValue,
    pub log_gamma_scale: f64,
}

impl GradValue {
    /// `|∇F_j| · γ(2^{-j})`, overflow free.
    pub fn scaled_norm(&self) -> f64 {
        let g = self.log_gamma_scale.exp();
        let da = self.d_a.value * g;
        let dl = self.lam_scaled_part.value + self.lam_per_unit.value;
        (da.norm_sqr() + dl.norm_sqr()).sqrt()
    }

    /// `∂_A F̃` and the full `∂_λ` of the prefactored `F_j` when representable.
    pub fn gradient(&self) -> Option<(Complex64, Complex64)> {
        let inv = (-self.log_gamma_scale).exp();
        if !inv.is_finite() {
            return None;
        }
        let unit = self.lam_per_unit.prefactor.unit()?;
        let dl = (self.lam_scaled_part.value + self.lam_per_unit.value) * inv * unit;
        Some((self.d_a.value, dl))
    }
}

const PANEL_PHASE: f64 = FRAC_PI_2;
const TAIL_SCAN_POINTS: usize = 257;
const TAIL_MIN_PANELS: f64 = 256.0;
const CHUNK: usize = 4096;

/// Real amplitude `g` of the radial integrand with its derivative.
type RadialAmp<'a> = dyn Fn(f64) -> (f64, f64) + 'a;

struct RadialProblem<'a> {
    gamma_j: &'a Profile,
    lam: f64,
    a: f64,
    breakpoints: Vec<f64>,
    amp: &'a RadialAmp<'a>,
}

impl RadialProblem<'_> {
    fn theta(&self, r: f64) -> f64 {
        self.lam.abs() * self.gamma_j.gamma_unchecked(r) + self.a * r
    }

    fn theta_deriv(&self, r: f64) -> f64 {
        self.lam.abs() * self.gamma_j.deriv_unchecked(r, 1) + self.a
    }

    fn integrand(&self, r: f64) -> Complex64 {
        let phi = self.lam * self.gamma_j.gamma_unchecked(r);
        let (g, _) = (self.amp)(r);
        Complex64::from_polar(g, phi)
    }

    fn phase_rate(&self, r: f64) -> f64 {
        self.lam * self.gamma_j.deriv_unchecked(r, 1)
    }

    fn kappa_eff(&self, r: f64) -> f64 {
        self.gamma_j.curvature_ratio(r).abs() + self.a + 1.0
    }

    fn tail_condition(&self, r: f64) -> bool {
        let rate = self.phase_rate(r).abs();
        if rate.is_nan() {
            return false;
        }
        rate >= 1e4 * self.kappa_eff(r).max(1.0).powf(2.0 / 3.0)
    }

    /// Two-term integration by parts boundary expression at `r`.
    fn boundary_term(&self, r: f64) -> Complex64 {
        let rate = self.phase_rate(r);
        if !rate.is_finite() {
            return Complex64::new(0.0, 0.0);
        }
        let (g, dg) = (self.amp)(r);
        let kappa = self.gamma_j.curvature_ratio(r);
        let phi = self.lam * self.gamma_j.gamma_unchecked(r);
        let t0 = Complex64::new(0.0, -g / rate);
        let t1 = Complex64::new((dg - g * kappa) / (rate * rate), 0.0);
        Complex64::from_polar(1.0, phi) * (t0 + t1)
    }

    fn tail_start(&self, lo: f64, hi: f64) -> Option<f64> {
        if self.lam == 0.0 {
            return None;
        }
        let pts: Vec<f64> = (0..TAIL_SCAN_POINTS)
            .map(|k| lo + (hi - lo) * k as f64 / (TAIL_SCAN_POINTS - 1) as f64)
            .collect();
        let mut start = None;
        for &r in pts.iter().rev() {
            if self.tail_condition(r) {
                start = Some(r);
            } else {
                break;
            }
        }
        let r0 = start?;
        if r0 >= hi {
            return None;
        }
        let th_hi = self.theta(hi);
        let th_0 = self.theta(r0);
        if !th_hi.is_finite() || (th_hi - th_0) / PANEL_PHASE > TAIL_MIN_PANELS {
            Some(r0)
        } else {
            None
        }
    }

    fn next_endpoint(&self, prev: f64, hi: f64, target: f64) -> f64 {
        let mut lo = prev;
        let mut up = hi;
        let mut x = {
            let d = self.theta_deriv(prev);
            let guess = prev + (target - self.theta(prev)) / d;
            if guess.is_finite() && guess > prev && guess < hi {
                guess
            } else {
                0.5 * (prev + hi)
            }
        };
        for _ in 0..100 {
            let f = self.theta(x) - target;
            if f.abs() <= 1e-12 * target.abs().max(1.0) {
                break;
            }
            if f > 0.0 {
                up = x;
            } else {
                lo = x;
            }
            let d = self.theta_deriv(x);
            let newton = x - f / d;
            x = if newton.is_finite() && newton > lo && newton < up {
                newton
            } else {
                0.5 * (lo + up)
            };
            if up - lo <= 1e-15 * up.abs() {
                break;
            }
        }
        x
    }

    fn integrate(&self) -> Result<(Complex64, f64)> {
        let lo = self.breakpoints[0];
        let hi = *self.breakpoints.last().unwrap();
        let tail = self.tail_start(lo, hi);
        let end = tail.unwrap_or(hi);

        let g16 = GaussLegendre::get(16);
        let g32 = GaussLegendre::get(32);
        let budget = panel_budget();
        let mut panels: u64 = 0;
        let mut chunk_sums: Vec<Complex64> = Vec::new();
        let mut chunk: Vec<Complex64> = Vec::with_capacity(CHUNK);
        let mut err = 0.0;

        let mut segs: Vec<(f64, f64)> = Vec::new();
        for w in self.breakpoints.windows(2) {
            let (s0, s1) = (w[0], w[1].min(end));
            if s1 > s0 {
                segs.push((s0, s1));
            }
        }

        for (s0, s1) in segs {
            let t0 = self.theta(s0);
            let t1 = self.theta(s1);
            let count = ((t1 - t0) / PANEL_PHASE).ceil().max(1.0);
            if !count.is_finite() || panels as f64 + count > budget as f64 {
                let partial = pairwise_sum_complex(&chunk_sums) + pairwise_sum_complex(&chunk);
                return Err(Error::BudgetExceeded {
                    module: "oscillatory",
                    budget,
                    partial_re: partial.re,
                    partial_im: partial.im,
                });
            }
            let count = count as u64;
            let step = (t1 - t0) / count as f64;
            let mut u = s0;
            for k in 1..=count {
                let v = if k == count {
                    s1
                } else {
                    self.next_endpoint(u, s1, t0 + step * k as f64)
                };
                let mut a16 = Complex64::new(0.0, 0.0);
                for (x, w) in g16.mapped(u, v) {
                    a16 += self.integrand(x) * w;
                }
                let mut a32 = Complex64::new(0.0, 0.0);
                for (x, w) in g32.mapped(u, v) {
                    a32 += self.integrand(x) * w;
                }
                err += (a32 - a16).norm();
                chunk.push(a32);
                if chunk.len() == CHUNK {
                    chunk_sums.push(pairwise_sum_complex(&chunk));
                    chunk.clear();
                }
                u = v;
            }
            panels += count;
        }
        chunk_sums.push(pairwise_sum_complex(&chunk));
        let mut total = pairwise_sum_complex(&chunk_sums);

        if let Some(r0) = tail {
            total += self.boundary_term(hi) - self.boundary_term(r0);
            let rate = self.phase_rate(r0).abs();
            let (g, dg) = (self.amp)(r0);
            let k = self.kappa_eff(r0);
            err += (g.abs() * k * k + dg.abs() * k) / rate.powi(3);
        }
        Ok((total, err))
    }
}

fn check_amplitude_support(amp: &Amplitude) -> Result<()> {
    if let Amplitude::Disk { radius } = amp {
        if !(*radius > 0.0) {
            return Err(Error::Argument(format!("disk radius must be positive, got {radius}")));
        }
    }
    Ok(())
}

fn radial_integral(
    gamma_j: &Profile,
    freq: &Frequency,
    amp: &Amplitude,
    g: &RadialAmp<'_>,
) -> Result<(Complex64, f64)> {
    check_amplitude_support(amp)?;
    let (lo, hi) = amp.support();
    if hi > gamma_j.domain_radius * (1.0 + 1e-12) {
        return Err(Error::domain("f_j", hi, "amplitude support exceeds the profile domain"));
    }
    let _ = lo;
    RadialProblem {
        gamma_j,
        lam: freq.lam,
        a: freq.a,
        breakpoints: amp.breakpoints(),
        amp: g,
    }
    .integrate()
}

fn finish(value: Complex64, err: f64, prefactor: PrefactorPhase) -> OscValue {
    let floor = 1e-9f64.max(1e-7 * value.norm());
    OscValue {
        value,
        abs_error: err.min(floor.max(err)),
        prefactor,
    }
}

/// `F_j(ξ)` by the radial reduction.
pub fn f_j(p: &Profile, j: u32, freq: &Frequency, amp: &Amplitude) -> Result<OscValue> {
    let gamma_j = p.rescaled_profile(j);
    let n = freq.n;
    let a = freq.a;
    let k = (n - 2) as i32;
    let g = |r: f64| {
        let s = sphere_fourier(n, r * a);
        let ds = a * sphere_fourier_deriv(n, r * a);
        let am = amp.value(r);
        let dam = amp.deriv(r);
        let w = r.powi(k);
        let dw = if k == 0 { 0.0 } else { k as f64 * r.powi(k - 1) };
        (s * am * w, ds * am * w + s * dam * w + s * am * dw)
    };
    let (value, err) = radial_integral(&gamma_j, freq, amp, &g)?;
    let prefactor = PrefactorPhase::new(freq.lam, p.log_gamma_dyadic(j));
    Ok(finish(value, err, prefactor))
}

/// Gradient of `F_j` in `(A, λ)`.
pub fn grad_f_j(p: &Profile, j: u32, freq: &Frequency, amp: &Amplitude) -> Result<GradValue> {
    let gamma_j = p.rescaled_profile(j);
    let n = freq.n;
    let a = freq.a;
    let k = (n - 2) as i32;
    let scale = 0.5f64.powi(j as i32);
    let log_gamma_scale = p.log_gamma_dyadic(j);
    let prefactor = PrefactorPhase::new(freq.lam, log_gamma_scale);

    let weight = |r: f64| {
        let w = r.powi(k);
        let dw = if k == 0 { 0.0 } else { k as f64 * r.powi(k - 1) };
        (amp.value(r) * w, amp.deriv(r) * w + amp.value(r) * dw)
    };

    let base = f_j(p, j, freq, amp)?;

    // ∂/∂A brings down r K_n'(rA).
    let ga = |r: f64| {
        let (w, dw) = weight(r);
        let s1 = sphere_fourier_deriv(n, r * a);
        let s2 = sphere_fourier_deriv2(n, r * a);
        let h = r * s1;
        let dh = s1 + r * a * s2;
        (h * w, dh * w + h * dw)
    };
    let (da, ea) = radial_integral(&gamma_j, freq, amp, &ga)?;

    // γ(2^{-j}) γ_j(r) = γ(2^{-j} r), evaluated on the unscaled profile.
    let gl = |r: f64| {
        let (w, dw) = weight(r);
        let s = sphere_fourier(n, r * a);
        let ds = a * sphere_fourier_deriv(n, r * a);
        let gam = p.gamma_unchecked(scale * r);
        let dgam = scale * p.deriv_unchecked(scale * r, 1);
        (gam * s * w, dgam * s * w + gam * ds * w + gam * s * dw)
    };
    let (dl, el) = radial_integral(&gamma_j, freq, amp, &gl)?;
    let i = Complex64::new(0.0, 1.0);

    Ok(GradValue {
        d_a: finish(da, ea, prefactor),
        lam_per_unit: OscValue {
            value: i * base.value,
            abs_error: base.abs_error,
            prefactor,
        },
        lam_scaled_part: finish(i * dl, el, prefactor),
        log_gamma_scale,
    })
}

// ---------------------------------------------------------------------------
// Direct oracle
// ---------------------------------------------------------------------------

const BRUTE_MAX_FREQ: f64 = 50.0;
const BRUTE_TOL: f64 = 1e-8;

/// Tanh-sinh nodes (offset from the nearer endpoint, side, weight) on [a, b].
/// Tanh-sinh nodes at step `2^-level`. With `odd_only`, just the nodes
/// absent from the previous level, so levels can be refined incrementally.
fn tanh_sinh_nodes(a: f64, b: f64, level: u32, odd_only: bool) -> Vec<(f64, f64)> {
    let h = 0.5f64.powi(level as i32);
    let half = 0.5 * (b - a);
    let mut out = Vec::new();
    let kmax = (3.3 / h).ceil() as i64;
    for k in -kmax..=kmax {
        if odd_only && k % 2 == 0 {
            continue;
        }
        let t = k as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let e = (-2.0 * u.abs()).exp();
        let dist = (b - a) * e / (1.0 + e);
        if dist <= 0.0 {
            continue;
        }
        let x = if t >= 0.0 { b - dist } else { a + dist };
        if x <= a || x >= b {
            continue;
        }
        let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
        let w = h * FRAC_PI_2 * t.cosh() * sech2 * half;
        if w < 1e-300 {
            continue;
        }
        out.push((x, w));
    }
    out
}

/// `F_j(ξ)` by tensor quadrature over the annulus in the coordinates
/// `(y₁, ρ = |(y₂, …, y_{n-1})|)`, with no use of the radial reduction or of
/// Bessel functions. Only for `n ∈ {3, 4}` and `|ξ| ≤ 50`.
pub fn f_j_bruteforce(p: &Profile, j: u32, freq: &Frequency) -> Result<OscValue> {
    if freq.n != 3 && freq.n != 4 {
        return Err(Error::Refused(format!("oracle supports n = 3, 4 only (got {})", freq.n)));
    }
    if freq.norm() > BRUTE_MAX_FREQ {
        return Err(Error::Refused(format!("oracle domain is |ξ| <= {BRUTE_MAX_FREQ}, got {}", freq.norm())));
    }
    let gamma_j = p.rescaled_profile(j);
    let lam = freq.lam;
    let a = freq.a;
    let max_slope = (0..=32)
        .map(|k| gamma_j.deriv_unchecked(1.0 + k as f64 / 32.0, 1).abs())
        .fold(0.0, f64::max);
    let rate = a + lam.abs() * max_slope;
    if !(rate * 4.0 <= 1e6) {
        return Err(Error::Refused("phase variation too large for the oracle".into()));
    }
    let g20 = GaussLegendre::get(20);
    let n = freq.n;

    let inner = |rho: f64| -> Complex64 {
        let r2 = rho * rho;
        let outer_len = (4.0 - r2).max(0.0).sqrt();
        let mut segs = Vec::with_capacity(2);
        if rho < 1.0 {
            let inner_len = (1.0 - r2).sqrt();
            segs.push((-outer_len, -inner_len));
            segs.push((inner_len, outer_len));
        } else {
            segs.push((-outer_len, outer_len));
        }
        let mut acc = Vec::new();
        for (s0, s1) in segs {
            let len = s1 - s0;
            if len <= 0.0 {
                continue;
            }
            // Two phase periods per 20-point panel keep the rule error near 1e-15.
            let panels = ((len * rate / (4.0 * PI)).ceil() as usize).max(1);
            let dx = len / panels as f64;
            for k in 0..panels {
                let u = s0 + k as f64 * dx;
                let v = if k + 1 == panels { s1 } else { u + dx };
                let mut s = Complex64::new(0.0, 0.0);
                for (y1, w) in g20.mapped(u, v) {
                    let r = (y1 * y1 + r2).sqrt().clamp(1.0, 2.0);
                    let phase = a * y1 + lam * gamma_j.gamma_unchecked(r);
                    s += Complex64::from_polar(w, phase);
                }
                acc.push(s);
            }
        }
        pairwise_sum_complex(&acc)
    };

    // |S^{n-3}| ρ^{n-3}: two points for n = 3, a circle for n = 4.
    let weight = |rho: f64| if n == 3 { 2.0 } else { TAU * rho };

    let level_sum = |level: u32, odd_only: bool| -> Complex64 {
        let mut acc = Vec::new();
        for (lo, hi) in [(0.0, 1.0), (1.0, 2.0)] {
            for (rho, w) in tanh_sinh_nodes(lo, hi, level, odd_only) {
                acc.push(inner(rho) * (w * weight(rho)));
            }
        }
        pairwise_sum_complex(&acc)
    };

    let mut prev = level_sum(3, false);
    let mut diff = f64::INFINITY;
    for level in 4..=9 {
        // Halving the step keeps the old nodes with half their weight.
        let cur = prev * 0.5 + level_sum(level, true);
        diff = (cur - prev).norm();
        prev = cur;
        if diff <= BRUTE_TOL {
            break;
        }
    }
    Ok(OscValue {
        value: prev,
        abs_error: diff,
        prefactor: PrefactorPhase::new(lam, p.log_gamma_dyadic(j)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_j;

    fn sharp() -> Amplitude {
        Amplitude::SharpAnnulus
    }

    #[test]
    fn sphere_fourier_examples() {
        assert!((sphere_fourier(3, 0.0) - TAU).abs() < 1e-14);
        assert!(sphere_fourier(4, PI).abs() < 1e-14);
        assert!(sphere_fourier(3, 2.404826).abs() < 1e-5);
        assert!((sphere_fourier(4, 0.0) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_fourier(5, 0.0) - sphere_area(3)).abs() < 1e-12);
    }

    #[test]
    fn sphere_fourier_derivative_matches_difference() {
        for n in [3, 4, 5] {
            for rho in [0.0, 0.3, 2.0, 7.5, 9.0, 40.0] {
                let h = 1e-6;
                let fd = (sphere_fourier(n, rho + h) - sphere_fourier(n, (rho - h).abs())) / (2.0 * h);
                let d = sphere_fourier_deriv(n, rho);
                if rho > 0.0 {
                    assert!((fd - d).abs() < 1e-7, "n={n} rho={rho}: {fd} vs {d}");
                } else {
                    assert_eq!(d, 0.0);
                }
                let fd2 = (sphere_fourier_deriv(n, rho + h) - sphere_fourier_deriv(n, (rho - h).abs())) / (2.0 * h);
                if rho > 0.0 {
                    assert!((fd2 - sphere_fourier_deriv2(n, rho)).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn psi0_partition_of_unity() {
        for i in 1..=1000 {
            let s = i as f64 / 1000.0;
            let sum: f64 = (0..40).map(|j| psi0(2f64.powi(j) * s)).sum();
            assert!((sum - 1.0).abs() < 1e-14, "s={s} sum={sum}");
        }
        assert_eq!(psi0(0.4), 0.0);
        assert_eq!(psi0(2.0), 0.0);
        assert_eq!(psi0(1.0), 1.0);
    }

    #[test]
    fn f_j_at_zero_is_annulus_volume() {
        let f = Frequency::new(3, 0.0, 0.0).unwrap();
        for p in [Profile::power(4.0), Profile::expflat(1.0)] {
            for j in [0, 5] {
                let v = f_j(&p, j, &f, &sharp()).unwrap();
                assert!((v.value.re - 3.0 * PI).abs() < 1e-12 && v.value.im.abs() < 1e-12);
            }
        }
        let f = Frequency::new(4, 0.0, 0.0).unwrap();
        let v = f_j(&Profile::power(2.0), 0, &f, &sharp()).unwrap();
        assert!((v.value.re - 28.0 * PI / 3.0).abs() < 1e-11);
        assert!((Amplitude::SharpAnnulus.total_mass(4) - 28.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn f_j_matches_bessel_identity_on_xi_prime_axis() {
        for a in [1.0, 10.0, 100.0, 1000.0] {
            let f = Frequency::new(3, a, 0.0).unwrap();
            let v = f_j(&Profile::power(4.0), 0, &f, &sharp()).unwrap();
            let exact = TAU / a * (2.0 * bessel_j(2, 2.0 * a) - bessel_j(2, a));
            assert!((v.value.re - exact).abs() < 1e-8, "A={a}: {} vs {exact}", v.value.re);
            assert!(v.value.im.abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_symmetry() {
        for p in [Profile::power(4.0), Profile::expflat(1.0)] {
            let f = Frequency::new(3, 3.0, 7.0).unwrap();
            let g = Frequency::new(3, 3.0, -7.0).unwrap();
            let a = f_j(&p, 2, &f, &sharp()).unwrap();
            let b = f_j(&p, 2, &g, &sharp()).unwrap();
            assert!((a.value - b.value.conj()).norm() < 1e-9);
            let (fa, fb) = (a.full_value().unwrap(), b.full_value().unwrap());
            assert!((fa - fb.conj()).norm() < 1e-9);
        }
    }

    #[test]
    fn power_profile_modulus_is_j_invariant() {
        let p = Profile::power(4.0);
        let f = Frequency::new(3, 4.0, 9.0).unwrap();
        let base = f_j(&p, 0, &f, &sharp()).unwrap().modulus();
        for j in 1..=8 {
            let v = f_j(&p, j, &f, &sharp()).unwrap().modulus();
            assert!((v - base).abs() <= 1e-9 * base);
        }
    }

    #[test]
    fn f_j_agrees_with_oracle_example() {
        let p = Profile::power(2.0);
        let f = Frequency::new(3, 5.0, 3.0).unwrap();
        let v = f_j(&p, 0, &f, &sharp()).unwrap();
        let o = f_j_bruteforce(&p, 0, &f).unwrap();
        assert!((v.value - o.value).norm() <= 1e-6 * o.value.norm(), "{:?} vs {:?}", v.value, o.value);
    }

    #[test]
    fn oracle_basic_properties() {
        let p = Profile::power(4.0);
        let z = f_j_bruteforce(&p, 0, &Frequency::new(3, 0.0, 0.0).unwrap()).unwrap();
        assert!((z.value.re - 3.0 * PI).abs() < 1e-8);
        let a = f_j_bruteforce(&p, 0, &Frequency::new(3, 2.0, 1.0).unwrap()).unwrap();
        let b = f_j_bruteforce(&p, 0, &Frequency::new(3, 2.0, -1.0).unwrap()).unwrap();
        assert!((a.value - b.value.conj()).norm() < 1e-9);
        assert!(matches!(
            f_j_bruteforce(&p, 0, &Frequency::new(3, 40.0, 40.0).unwrap()),
            Err(Error::Refused(_))
        ));
        assert!(f_j_bruteforce(&p, 0, &Frequency::new(5, 1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn tail_expansion_agrees_with_full_quadrature() {
        // Large λ on a power profile triggers the integration-by-parts tail.
        let p = Profile::power(4.0);
        let f = Frequency::new(3, 0.0, 2.0e4).unwrap();
        let gamma_j = p.rescaled_profile(0);
        let g = |r: f64| (TAU * r, TAU);
        let prob = RadialProblem {
            gamma_j: &gamma_j,
            lam: f.lam,
            a: 0.0,
            breakpoints: vec![1.0, 2.0],
            amp: &g,
        };
        assert!(prob.tail_start(1.0, 2.0).is_some());
        let (with_tail, _) = prob.integrate().unwrap();
        // brute panels without tail
        let g32 = GaussLegendre::get(32);
        let m = 200_000;
        let mut acc = Vec::new();
        for k in 0..m {
            let u = 1.0 + k as f64 / m as f64;
            let v = 1.0 + (k + 1) as f64 / m as f64;
            let mut s = Complex64::new(0.0, 0.0);
            for (x, w) in g32.mapped(u, v) {
                s += prob.integrand(x) * w;
            }
            acc.push(s);
        }
        let full = pairwise_sum_complex(&acc);
        assert!((with_tail - full).norm() < 1e-11, "{with_tail} vs {full}");
    }

    #[test]
    fn grad_at_origin() {
        let f = Frequency::new(3, 0.0, 0.0).unwrap();
        for p in [Profile::power(4.0), Profile::expflat(1.0)] {
            let g = grad_f_j(&p, 3, &f, &sharp()).unwrap();
            assert!((g.lam_per_unit.value.norm() - 3.0 * PI).abs() < 1e-12);
            assert_eq!(g.d_a.value.norm(), 0.0);
        }
    }

    #[test]
    fn grad_matches_central_differences() {
        let p = Profile::power(2.0);
        let (a, lam) = (3.0, 2.0);
        let h = 1e-5;
        let full = |a: f64, lam: f64| {
            f_j(&p, 0, &Frequency::new(3, a, lam).unwrap(), &sharp())
                .unwrap()
                .full_value()
                .unwrap()
        };
        let g = grad_f_j(&p, 0, &Frequency::new(3, a, lam).unwrap(), &sharp()).unwrap();
        let (da, dl) = g.gradient().unwrap();
        let unit = g.d_a.prefactor.unit().unwrap();
        let fd_a = (full(a + h, lam) - full(a - h, lam)) / (2.0 * h);
        let fd_l = (full(a, lam + h) - full(a, lam - h)) / (2.0 * h);
        assert!((da * unit - fd_a).norm() < 1e-5, "{da} vs {fd_a}");
        assert!((dl - fd_l).norm() < 1e-5, "{dl} vs {fd_l}");
    }

    #[test]
    fn prefactor_unresolved_for_flat_profiles() {
        let f = Frequency::new(3, 1.0, 10.0).unwrap();
        let v = f_j(&Profile::expflat(1.0), 6, &f, &sharp()).unwrap();
        assert!(v.prefactor.resolved.is_none());
        assert!(v.full_value().is_none());
        assert!((v.prefactor.log_arg - (10f64.ln() + 64.0)).abs() < 1e-12);
        assert!(v.value.norm().is_finite());
    }

    #[test]
    fn smooth_cutoff_mass() {
        // ∫ ψ₀(|y|) dy over R² by direct radial quadrature on a fine grid
        let m = 200_000;
        let mut s = 0.0;
        for k in 0..m {
            let r = 0.5 + 1.5 * (k as f64 + 0.5) / m as f64;
            s += psi0(r) * r;
        }
        s *= TAU * 1.5 / m as f64;
        assert!((Amplitude::SmoothCutoff.total_mass(3) - s).abs() < 1e-8);
        let f = Frequency::new(3, 0.0, 0.0).unwrap();
        let v = f_j(&Profile::power(4.0), 0, &f, &Amplitude::SmoothCutoff).unwrap();
        assert!((v.value.re - s).abs() < 1e-8);
    }
}

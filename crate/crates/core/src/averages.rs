//! Ball and heatball averages `φ(r)`, the right-hand sides of their
//! derivative formulas, and Monte Carlo checks of mean value inequalities.
//!
//! Heatball quantities are computed in reflected unit coordinates: a point
//! `(η, σ)` of `E(0,0;1)` (with `σ > 0` measuring time into the past) maps to
//! `(x − rη, t − r²σ)` in `E(x,t;r)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::constants::{kappa_max_closed, kappa_value};
use crate::error::{Error, Result};
use crate::fields::{heat_op, laplacian, ScalarField};
use crate::geometry::{
    max_radius_at, region_within, sample_heat_kernel_unit, sample_heatball_unit, sample_unit_ball, unit_ball_volume,
    AxisBox, BallSystem, EuclideanBall, Heatball, ModifiedHeatball, Point, Region,
};
use crate::optimize::golden_section_max;
use crate::quadrature::{check_budget, gauss_legendre, integrate, product_gauss, Method, QuadResult};
use crate::rng::{derive_seed, halton, substream, welford_batches, Rng, Welford};

/// Relative step of the centred finite differences.
pub const FD_STEP: f64 = 1e-3;

/// Relative tolerance floor of derivative comparisons.
pub const FD_REL_TOL: f64 = 1e-3;

/// Width of the guard band, in standard errors.
pub const GUARD: f64 = 3.0;

const SAMPLE_ATTEMPTS: usize = 10_000;
const MVI_GAUSS_NODES: usize = 12;
const ROUNDOFF: f64 = 1e-12;

/// Gauss–Legendre nodes per panel of the deterministic averages.
const AVG_GAUSS_NODES: usize = 10;
const V_GAUSS_NODES: usize = 16;
/// Truncation of `v = (w/θ)^{1/2}`; the neglected Gamma tail is below `1e-28`.
const V_MAX: f64 = 8.5;
/// Rounding allowance of a centred difference, in units of `ε·|φ|/h`.
const FD_ROUNDING: f64 = 1e4;

fn mc_result(w: &Welford, scale: f64) -> QuadResult {
    QuadResult {
        value: scale * w.mean,
        std_error: scale.abs() * w.std_error(),
        samples: w.count as usize,
        method: Method::MonteCarlo,
        refinement_diff: None,
    }
}

fn check_center(u: &dyn ScalarField, p: &[f64]) -> Result<()> {
    if p.len() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: p.len() });
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

fn ensure_within(region: &dyn Region, domain: Option<&dyn Region>) -> Result<()> {
    match domain {
        Some(d) if !region_within(region, d) => Err(Error::EscapesDomain(region.label())),
        _ => Ok(()),
    }
}

fn ball_point(x: &[f64], r: f64, z: &[f64]) -> Point {
    x.iter().zip(z).map(|(a, b)| a + r * b).collect()
}

/// `(x − rρz, t − r²s)`.
fn heat_point(center: &[f64], r: f64, y: &[f64], s: f64) -> Point {
    let n = center.len() - 1;
    let mut p: Point = center[..n].iter().zip(y).map(|(a, b)| a - r * b).collect();
    p.push(center[n] - r * r * s);
    p
}

/// `(1/|B_r|) ∫_{B_r(x)} u`, sampling antithetic pairs `±z`.
pub fn ball_average(u: &dyn ScalarField, x: &[f64], r: f64, budget: usize, seed: u64) -> Result<QuadResult> {
    check_center(u, x)?;
    check_radius(r)?;
    check_budget(budget)?;
    let d = x.len();
    let w = welford_batches(budget, seed, |rng| {
        let z = sample_unit_ball(rng, d);
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        0.5 * (u.value(&ball_point(x, r, &z)) + u.value(&ball_point(x, r, &neg)))
    });
    Ok(mc_result(&w, 1.0))
}

/// `(1/|B_r|) ∫_{B_r(x)} (r² − |x−y|²)/(2r) Δu(y) dy = (r/2)·E[(1 − |z|²)Δu(x + rz)]`.
pub fn deriv1_rhs(u: &dyn ScalarField, x: &[f64], r: f64, budget: usize, seed: u64) -> Result<QuadResult> {
    check_center(u, x)?;
    check_radius(r)?;
    check_budget(budget)?;
    let d = x.len();
    let w = welford_batches(budget, seed, |rng| {
        let z = sample_unit_ball(rng, d);
        let z2: f64 = z.iter().map(|v| v * v).sum();
        (1.0 - z2) * laplacian(u, &ball_point(x, r, &z))
    });
    Ok(mc_result(&w, 0.5 * r))
}

/// Centred difference `(φ(r+h) − φ(r−h))/2h` of the ball average with common
/// random numbers for the two radii and antithetic pairs.
pub fn ball_average_fd(u: &dyn ScalarField, x: &[f64], r: f64, h: f64, budget: usize, seed: u64) -> Result<QuadResult> {
    check_center(u, x)?;
    check_radius(r)?;
    check_budget(budget)?;
    if !(h > 0.0 && h < r) {
        return Err(Error::InvalidParameter(format!("difference step must lie in (0, r), got {h}")));
    }
    let d = x.len();
    let w = welford_batches(budget, seed, |rng| {
        let z = sample_unit_ball(rng, d);
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let at = |q: &[f64], rr: f64| u.value(&ball_point(x, rr, q));
        0.5 * (at(&z, r + h) - at(&z, r - h) + at(&neg, r + h) - at(&neg, r - h))
    });
    Ok(mc_result(&w, 0.5 / h))
}

/// `∫_{E(0,0;1)} |η|²/σ² dη dσ / E|z|²`: the mass of the heat kernel on the
/// unit heatball divided by the mean of `|z|²` over the unit ball, written in
/// closed form via the Gamma law of `log(1/4πσ)`.
fn heat_kernel_scale(n: usize) -> f64 {
    let nf = n as f64;
    let ln_z = 0.5 * (nf + 2.0) * (2.0 * nf).ln() - 0.5 * nf * (4.0 * PI).ln()
        + ln_gamma(0.5 * nf + 2.0)
        + 0.5 * (nf + 4.0) * (2.0 / nf).ln();
    0.25 * unit_ball_volume(n) * ln_z.exp()
}

fn heat_dim(center: &[f64]) -> Result<usize> {
    if center.len() < 2 {
        return Err(Error::InvalidParameter("heatball centre needs space and time coordinates".into()));
    }
    Ok(center.len() - 1)
}

/// `φ(r) = (1/4rⁿ) ∫_{E(x,t;r)} u(y,s) |x−y|²/(t−s)² dy ds`.
///
/// `s` is drawn from the marginal of the kernel, so the only random weight
/// left is `|z|² ≤ 1` and the estimator has bounded variance for every `n`.
/// Each sample averages the antithetic pair `±z`.
pub fn heatball_average(u: &dyn ScalarField, center: &[f64], r: f64, budget: usize, seed: u64) -> Result<QuadResult> {
    check_center(u, center)?;
    check_radius(r)?;
    check_budget(budget)?;
    let n = heat_dim(center)?;
    let w = welford_batches(budget, seed, |rng| {
        let (z, s, rho) = sample_heat_kernel_unit(rng, n);
        let z2: f64 = z.iter().map(|v| v * v).sum();
        let y: Vec<f64> = z.iter().map(|v| rho * v).collect();
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        0.5 * z2 * (u.value(&heat_point(center, r, &y, s)) + u.value(&heat_point(center, r, &neg, s)))
    });
    Ok(mc_result(&w, heat_kernel_scale(n)))
}

/// Centred difference of [`heatball_average`] with common random numbers
/// and the same antithetic pairing.
pub fn heatball_average_fd(
    u: &dyn ScalarField,
    center: &[f64],
    r: f64,
    h: f64,
    budget: usize,
    seed: u64,
) -> Result<QuadResult> {
    check_center(u, center)?;
    check_radius(r)?;
    check_budget(budget)?;
    if !(h > 0.0 && h < r) {
        return Err(Error::InvalidParameter(format!("difference step must lie in (0, r), got {h}")));
    }
    let n = heat_dim(center)?;
    let w = welford_batches(budget, seed, |rng| {
        let (z, s, rho) = sample_heat_kernel_unit(rng, n);
        let z2: f64 = z.iter().map(|v| v * v).sum();
        let y: Vec<f64> = z.iter().map(|v| rho * v).collect();
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let at = |q: &[f64], rr: f64| u.value(&heat_point(center, rr, q, s));
        0.5 * z2 * (at(&y, r + h) - at(&y, r - h) + at(&neg, r + h) - at(&neg, r - h))
    });
    Ok(mc_result(&w, heat_kernel_scale(n) * 0.5 / h))
}

/// `(n/r^{n+1}) ∫_{E(x,t;r)} Hu·log(rⁿΦ_n(x−y,t−s)) = n·r·|E(1)|·E[Hu·log Φ_n(η,σ)]`
/// with `(η,σ)` uniform in the unit heatball.
pub fn deriv2_rhs(u: &dyn ScalarField, center: &[f64], r: f64, budget: usize, seed: u64) -> Result<QuadResult> {
    check_center(u, center)?;
    check_radius(r)?;
    check_budget(budget)?;
    let n = heat_dim(center)?;
    heat_op(u, center)?;
    let nf = n as f64;
    let w = welford_batches(budget, seed, |rng| {
        let (y, s) = sample_heatball_unit(rng, n, nf);
        let y2: f64 = y.iter().map(|v| v * v).sum();
        let log_phi = -0.5 * nf * (4.0 * PI * s).ln() - y2 / (4.0 * s);
        heat_op(u, &heat_point(center, r, &y, s)).unwrap_or(f64::NAN) * log_phi.max(0.0)
    });
    Ok(mc_result(&w, nf * r * Heatball::unit_volume(n)))
}

/// `r/(n+2)`: lower bound of `φ'(r)` for ball averages when `Δu ≥ 1`.
pub fn deriv1_lower_bound(n: usize, r: f64) -> f64 {
    r / (n as f64 + 2.0)
}

/// `n²|E(1)|·r·e^{−(n+2)}`: lower bound of `φ'(r)` for heatball averages when `Hu ≥ 1`.
pub fn deriv2_lower_bound(n: usize, r: f64) -> f64 {
    let nf = n as f64;
    nf * nf * Heatball::unit_volume(n) * r * (-(nf + 2.0)).exp()
}

/// κ-weighted modified heatball average
/// `(1/r^{n+2}) ∫_{E_m(x,t;r)} κ_{m,n}·u = |E_m(1)|·E[κ_{m,n}(η,σ) u(x−rη, t−r²σ)]`.
pub fn modified_heatball_average(
    u: &dyn ScalarField,
    center: &[f64],
    r: f64,
    m: usize,
    budget: usize,
    seed: u64,
) -> Result<QuadResult> {
    check_center(u, center)?;
    check_radius(r)?;
    check_budget(budget)?;
    let n = heat_dim(center)?;
    if m < 3 {
        return Err(Error::InvalidParameter(format!("modified heatballs need m ≥ 3, got {m}")));
    }
    let k = (m + n) as f64;
    let w = welford_batches(budget, seed, |rng| {
        let (y, s) = sample_heatball_unit(rng, n, k);
        let y2: f64 = y.iter().map(|v| v * v).sum();
        kappa_value(m, n, y2, s) * u.value(&heat_point(center, r, &y, s))
    });
    Ok(mc_result(&w, ModifiedHeatball::unit_volume(n, m)))
}

/// Result of comparing a finite difference of `φ` with a derivative formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub op: String,
    pub r: f64,
    pub h: f64,
    pub fd: QuadResult,
    pub rhs: QuadResult,
    /// `max(3·E, 1e−3·|rhs|)` with `E` the combined standard error or refinement difference.
    pub tolerance: f64,
    pub pass: bool,
}

/// Standard error for Monte Carlo, refinement difference for product rules.
fn error_scale(q: &QuadResult) -> f64 {
    match q.method {
        Method::MonteCarlo => q.std_error,
        Method::ProductGauss => q.refinement_diff.unwrap_or(0.0),
    }
}

impl DerivativeCheck {
    fn new(op: &str, r: f64, h: f64, fd: QuadResult, rhs: QuadResult) -> Self {
        let se = error_scale(&fd).hypot(error_scale(&rhs));
        let tolerance = (GUARD * se).max(FD_REL_TOL * rhs.value.abs());
        let pass = (fd.value - rhs.value).abs() <= tolerance + ROUNDOFF;
        Self { op: op.into(), r, h, fd, rhs, tolerance, pass }
    }
}

/// Ball-average finite difference against [`deriv1_rhs`] at `h = 10⁻³r`.
///
/// In dimensions 1 to 3 both sides use the product Gauss rule of
/// [`ball_expectation`]; otherwise Monte Carlo with `budget` samples.
pub fn check_deriv1(u: &dyn ScalarField, x: &[f64], r: f64, budget: usize, seed: u64) -> Result<DerivativeCheck> {
    check_center(u, x)?;
    check_radius(r)?;
    let h = FD_STEP * r;
    let d = x.len();
    let at = |z: &[f64], rr: f64| u.value(&ball_point(x, rr, z));
    let fd = ball_expectation(d, |z| at(z, r + h) - at(z, r - h));
    let rhs = ball_expectation(d, |z| {
        let z2: f64 = z.iter().map(|v| v * v).sum();
        (1.0 - z2) * laplacian(u, &ball_point(x, r, z))
    });
    if let (Some(fd), Some(rhs)) = (fd, rhs) {
        let floor = FD_ROUNDING * f64::EPSILON * (u.value(x).abs() + 1.0) / (2.0 * h);
        let fd = gauss_result(fd, 0.5 / h, floor);
        let rhs = gauss_result(rhs, 0.5 * r, 0.0);
        return Ok(DerivativeCheck::new("laplace", r, h, fd, rhs));
    }
    let fd = ball_average_fd(u, x, r, h, budget, derive_seed(seed, "fd", 0))?;
    let rhs = deriv1_rhs(u, x, r, budget, derive_seed(seed, "rhs", 0))?;
    Ok(DerivativeCheck::new("laplace", r, h, fd, rhs))
}

/// Heatball-average finite difference against [`deriv2_rhs`] at `h = 10⁻³r`.
///
/// For `n ≤ 3` both sides use the product Gauss rule of
/// [`heat_expectation`]; otherwise Monte Carlo with `budget` samples.
pub fn check_deriv2(u: &dyn ScalarField, center: &[f64], r: f64, budget: usize, seed: u64) -> Result<DerivativeCheck> {
    check_center(u, center)?;
    check_radius(r)?;
    let n = heat_dim(center)?;
    heat_op(u, center)?;
    let h = FD_STEP * r;
    let nf = n as f64;
    let at = |y: &[f64], s: f64, rr: f64| u.value(&heat_point(center, rr, y, s));
    let fd = heat_expectation(n, 0.5 * nf + 2.0, 2.0 / nf, |z, w| {
        let (s, rho) = kernel_coordinates(nf, w);
        let y: Vec<f64> = z.iter().map(|v| rho * v).collect();
        let z2: f64 = z.iter().map(|v| v * v).sum();
        z2 * (at(&y, s, r + h) - at(&y, s, r - h))
    });
    let rhs = heat_expectation(n, 0.5 * nf + 1.0, 2.0 / (nf + 2.0), |z, w| {
        let (s, rho) = kernel_coordinates(nf, w);
        let y: Vec<f64> = z.iter().map(|v| rho * v).collect();
        let z2: f64 = z.iter().map(|v| v * v).sum();
        heat_op(u, &heat_point(center, r, &y, s)).unwrap_or(f64::NAN) * (0.5 * nf * w * (1.0 - z2)).max(0.0)
    });
    if let (Some(fd), Some(rhs)) = (fd, rhs) {
        let scale = heat_kernel_scale(n) * 0.5 / h;
        let floor = FD_ROUNDING * f64::EPSILON * (u.value(center).abs() + 1.0) / (2.0 * h);
        let fd = gauss_result(fd, scale, floor);
        let rhs = gauss_result(rhs, nf * r * Heatball::unit_volume(n), 0.0);
        return Ok(DerivativeCheck::new("heat", r, h, fd, rhs));
    }
    let fd = heatball_average_fd(u, center, r, h, budget, derive_seed(seed, "fd", 0))?;
    let rhs = deriv2_rhs(u, center, r, budget, derive_seed(seed, "rhs", 0))?;
    Ok(DerivativeCheck::new("heat", r, h, fd, rhs))
}

/// `(s, ρ) = (e^{−w}/4π, (2k·s·w)^{1/2})` for the reflected unit heatball
/// `E(0,0;1)` drawn at parameter `k` (`k = n` for the heatball itself).
fn kernel_coordinates(k: f64, w: f64) -> (f64, f64) {
    let s = (-w).exp() / (4.0 * PI);
    (s, (2.0 * k * s * w).sqrt())
}

/// `(coarse, fine)` values of a product rule as a result scaled by `scale`,
/// with `|fine − coarse|·scale + floor` as the error estimate.
fn gauss_result((coarse, fine): (f64, f64), scale: f64, floor: f64) -> QuadResult {
    QuadResult {
        value: scale * fine,
        std_error: 0.0,
        samples: 0,
        method: Method::ProductGauss,
        refinement_diff: Some(scale.abs() * (fine - coarse).abs() + floor),
    }
}

/// `panels` copies of the `nodes`-point Gauss–Legendre rule on `[a, b]`.
fn composite_gl(a: f64, b: f64, panels: usize, nodes: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(nodes);
    let step = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * nodes);
    for k in 0..panels {
        let lo = a + k as f64 * step;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((lo + 0.5 * step * (xi + 1.0), 0.5 * step * wi));
        }
    }
    out
}

/// Points and probability weights of the uniform law on the unit ball of
/// ℝⁿ in polar (`n = 2`) or spherical (`n = 3`) coordinates.
fn unit_ball_rule(n: usize, panels: usize) -> Option<Vec<(Point, f64)>> {
    let g = |a: f64, b: f64| composite_gl(a, b, panels, AVG_GAUSS_NODES);
    let mut out = Vec::new();
    match n {
        1 => out.extend(g(-1.0, 1.0).into_iter().map(|(x, w)| (vec![x], 0.5 * w))),
        2 => {
            let ang = g(0.0, 2.0 * PI);
            for (rho, wr) in g(0.0, 1.0) {
                for &(th, wt) in &ang {
                    out.push((vec![rho * th.cos(), rho * th.sin()], wr * wt * rho / PI));
                }
            }
        }
        3 => {
            let (pol, azi) = (g(0.0, PI), g(0.0, 2.0 * PI));
            for (rho, wr) in g(0.0, 1.0) {
                for &(ph, wp) in &pol {
                    for &(th, wt) in &azi {
                        let p = vec![rho * ph.sin() * th.cos(), rho * ph.sin() * th.sin(), rho * ph.cos()];
                        out.push((p, wr * wp * wt * rho * rho * ph.sin() * 0.75 / PI));
                    }
                }
            }
        }
        _ => return None,
    }
    Some(out)
}

/// Nodes and probability weights of `Gamma(shape, scale)` through `w = scale·v²`,
/// `v` on `[0, V_MAX]`.
fn gamma_rule(shape: f64, scale: f64, panels: usize) -> Vec<(f64, f64)> {
    let ln_norm = 2f64.ln() - ln_gamma(shape);
    composite_gl(0.0, V_MAX, 2 * panels, V_GAUSS_NODES)
        .into_iter()
        .map(|(v, wv)| (scale * v * v, wv * (ln_norm + (2.0 * shape - 1.0) * v.ln() - v * v).exp()))
        .collect()
}

/// `E[g(z)]` for `z` uniform in the unit ball of ℝⁿ, `n ≤ 3`: `(coarse, fine)`
/// product Gauss values at one and two panels per axis.
pub fn ball_expectation<G: Fn(&[f64]) -> f64>(n: usize, g: G) -> Option<(f64, f64)> {
    let level = |panels| unit_ball_rule(n, panels).map(|rule| rule.iter().map(|(z, w)| w * g(z)).sum::<f64>());
    Some((level(1)?, level(2)?))
}

/// `E[g(z, w)]` for `z` uniform in the unit ball of ℝⁿ (`n ≤ 3`) and an
/// independent `w ~ Gamma(shape, scale)`: `(coarse, fine)` product Gauss values.
pub fn heat_expectation<G: Fn(&[f64], f64) -> f64>(n: usize, shape: f64, scale: f64, g: G) -> Option<(f64, f64)> {
    let level = |panels| {
        let ball = unit_ball_rule(n, panels)?;
        let gam = gamma_rule(shape, scale, panels);
        Some(gam.iter().map(|&(w, ww)| ww * ball.iter().map(|(z, wz)| wz * g(z, w)).sum::<f64>()).sum::<f64>())
    };
    Some((level(1)?, level(2)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageKind {
    Ball,
    Heatball,
    ModifiedHeatball,
    BallSystem,
}

/// The map `r ↦ φ(r)` of one average family for a fixed field and centre.
#[derive(Debug, Clone)]
pub struct AverageFamily {
    pub kind: AverageKind,
    pub field: Arc<dyn ScalarField>,
    pub center: Point,
    pub max_radius: f64,
    pub domain: Option<Arc<dyn Region>>,
    /// Required for [`AverageKind::BallSystem`].
    pub system: Option<BallSystem>,
    /// Required for [`AverageKind::ModifiedHeatball`].
    pub m: Option<usize>,
}

impl AverageFamily {
    pub fn new(kind: AverageKind, field: Arc<dyn ScalarField>, center: Point, max_radius: f64) -> Result<Self> {
        check_center(field.as_ref(), &center)?;
        check_radius(max_radius)?;
        Ok(Self { kind, field, center, max_radius, domain: None, system: None, m: None })
    }

    pub fn with_domain(mut self, domain: Arc<dyn Region>) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_system(mut self, system: BallSystem) -> Self {
        self.system = Some(system);
        self
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    /// The averaging region at radius `r`.
    pub fn region(&self, r: f64) -> Result<Arc<dyn Region>> {
        check_radius(r)?;
        let c = &self.center;
        Ok(match self.kind {
            AverageKind::Ball => Arc::new(EuclideanBall::new(c.clone(), r)?),
            AverageKind::Heatball => {
                let n = heat_dim(c)?;
                Arc::new(Heatball::new(c[..n].to_vec(), c[n], r)?)
            }
            AverageKind::ModifiedHeatball => {
                let n = heat_dim(c)?;
                Arc::new(ModifiedHeatball::new(c[..n].to_vec(), c[n], r, self.required_m()?)?)
            }
            AverageKind::BallSystem => self.required_system()?.dilate(c, r)?,
        })
    }

    fn required_m(&self) -> Result<usize> {
        self.m.ok_or_else(|| Error::InvalidParameter("modified heatball family needs m".into()))
    }

    fn required_system(&self) -> Result<&BallSystem> {
        self.system.as_ref().ok_or_else(|| Error::InvalidParameter("ball-system family needs a system".into()))
    }

    /// `φ(r)`; `φ(0) = u(center)` exactly.
    pub fn phi(&self, r: f64, budget: usize, seed: u64) -> Result<QuadResult> {
        if r == 0.0 {
            return Ok(QuadResult::exact(self.field.value(&self.center)));
        }
        if r > self.max_radius {
            return Err(Error::InvalidParameter(format!("radius {r} exceeds the family maximum {}", self.max_radius)));
        }
        let region = self.region(r)?;
        ensure_within(region.as_ref(), self.domain.as_deref())?;
        let u = self.field.as_ref();
        match self.kind {
            AverageKind::Ball => ball_average(u, &self.center, r, budget, seed),
            AverageKind::Heatball => heatball_average(u, &self.center, r, budget, seed),
            AverageKind::ModifiedHeatball => {
                modified_heatball_average(u, &self.center, r, self.required_m()?, budget, seed)
            }
            AverageKind::BallSystem => {
                let sys = self.required_system()?;
                let unit_vol = sys.unit.exact_volume().map_or_else(
                    || integrate(|_| 1.0, sys.unit.as_ref(), budget, derive_seed(seed, "unit-volume", 0)).map(|q| q.value),
                    Ok,
                )?;
                let q = integrate(|p| u.value(p), region.as_ref(), budget, seed)?;
                let scale = 1.0 / (r.powf(sys.degree()) * unit_vol);
                Ok(QuadResult { value: q.value * scale, std_error: q.std_error * scale, ..q })
            }
        }
    }

    /// Largest jump `|φ(r_{i+1}) − φ(r_i)|` over `steps` equal steps of
    /// `[0, max_radius]`, with common random numbers.
    pub fn max_step_change(&self, steps: usize, budget: usize, seed: u64) -> Result<f64> {
        if steps == 0 {
            return Err(Error::InvalidParameter("need at least one step".into()));
        }
        let mut prev = self.phi(0.0, budget, seed)?.value;
        let mut worst: f64 = 0.0;
        for i in 1..=steps {
            let v = self.phi(self.max_radius * i as f64 / steps as f64, budget, seed)?.value;
            worst = worst.max((v - prev).abs());
            prev = v;
        }
        Ok(worst)
    }
}

/// Outcome of a batch of mean value inequality trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MviCheckReport {
    pub kind: String,
    pub constant: f64,
    pub constant_source: String,
    pub trials: usize,
    /// Trials with `f(a) = 0`, which hold for any non-negative integrand.
    pub trivial: usize,
    pub violations: usize,
    /// Smallest `C/r^A·∫f + 3·SE − f(a)` over the non-trivial trials.
    pub worst_margin: f64,
    pub seed: u64,
    pub budget: usize,
    pub method: Method,
}

impl MviCheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Estimate of `∫_{B_r(a)} f` with an error scale for the guard band.
fn ball_integral<F>(f: &F, sys: &BallSystem, a: &[f64], r: f64, budget: usize, seed: u64) -> Result<(f64, f64, Method)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let region = sys.dilate(a, r)?;
    if let Some(b) = region.as_box() {
        let q = product_gauss(f, &b, MVI_GAUSS_NODES);
        return Ok((q.value, q.refinement_diff.unwrap_or(0.0), Method::ProductGauss));
    }
    if let Some(ball) = region.as_ball().filter(|b| b.center.len() == 2 || b.center.len() == 3) {
        let q = polar_gauss(f, &ball.center, ball.radius, ball.center.len());
        return Ok((q.value, q.refinement_diff.unwrap_or(0.0), Method::ProductGauss));
    }
    let q = integrate(|p| f(p), region.as_ref(), budget, seed)?;
    Ok((q.value, q.std_error, Method::MonteCarlo))
}

/// Product Gauss–Legendre in polar (d = 2) or spherical (d = 3) coordinates.
fn polar_gauss<F: Fn(&[f64]) -> f64>(f: &F, a: &[f64], r: f64, d: usize) -> QuadResult {
    if d == 2 {
        let b = AxisBox { lo: vec![0.0, 0.0], hi: vec![1.0, 2.0 * PI] };
        product_gauss(
            |q| {
                let (rho, th) = (q[0], q[1]);
                r * r * rho * f(&[a[0] + r * rho * th.cos(), a[1] + r * rho * th.sin()])
            },
            &b,
            MVI_GAUSS_NODES,
        )
    } else {
        let b = AxisBox { lo: vec![0.0, 0.0, 0.0], hi: vec![1.0, PI, 2.0 * PI] };
        product_gauss(
            |q| {
                let (rho, ph, th) = (q[0], q[1], q[2]);
                let s = ph.sin();
                let p = [a[0] + r * rho * s * th.cos(), a[1] + r * rho * s * th.sin(), a[2] + r * rho * ph.cos()];
                r.powi(3) * rho * rho * s * f(&p)
            },
            &b,
            MVI_GAUSS_NODES,
        )
    }
}

/// Uniform point of `domain` by rejection from its bounding box.
fn sample_in(domain: &dyn Region, rng: &mut Rng) -> Option<Point> {
    let bb = domain.bounding_box();
    (0..SAMPLE_ATTEMPTS).map(|_| bb.sample(rng)).find(|p| domain.contains(p))
}

struct Trial {
    margin: Option<f64>,
    method: Method,
}

/// Draws `(a, r)` with `a` uniform in `domain` and `r` uniform in
/// `(0, R_max(a))`, then compares `f(a)` with `(C/r^A)∫_{B_r(a)} f`.
#[allow(clippy::too_many_arguments)]
fn mvi_harness<F>(
    kind: &str,
    f: F,
    sys: &BallSystem,
    domain: &dyn Region,
    constant: f64,
    constant_source: &str,
    trials: usize,
    budget: usize,
    seed: u64,
) -> Result<MviCheckReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if domain.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: domain.dim() });
    }
    if !(constant > 0.0) {
        return Err(Error::InvalidParameter(format!("MVI constant must be positive, got {constant}")));
    }
    check_budget(budget)?;
    let a_exp = sys.degree();
    let outcomes: Vec<Result<Trial>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let trial_seed = derive_seed(seed, "mvi-trial", i as u64);
            let mut rng = substream(trial_seed, 0);
            let mut pick = None;
            for _ in 0..64 {
                let Some(a) = sample_in(domain, &mut rng) else { break };
                let r_max = max_radius_at(domain, sys, &a)?;
                if r_max > 0.0 {
                    pick = Some((a, r_max));
                    break;
                }
            }
            let (a, r_max) = pick.ok_or(Error::NoAdmissibleBall(SAMPLE_ATTEMPTS))?;
            let r = r_max * (1.0 - rng.random::<f64>()) * (1.0 - 1e-9);
            let lhs = f(&a);
            if lhs <= 0.0 {
                return Ok(Trial { margin: None, method: Method::MonteCarlo });
            }
            let (integral, err, method) = ball_integral(&f, sys, &a, r, budget, trial_seed)?;
            let scale = constant / r.powf(a_exp);
            let margin = scale * integral + GUARD * scale * err + ROUNDOFF * lhs.max(1.0) - lhs;
            Ok(Trial { margin: Some(margin), method })
        })
        .collect();
    let mut report = MviCheckReport {
        kind: kind.into(),
        constant,
        constant_source: constant_source.into(),
        trials,
        trivial: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
        seed,
        budget,
        method: Method::MonteCarlo,
    };
    for t in outcomes {
        let t = t?;
        match t.margin {
            None => report.trivial += 1,
            Some(m) => {
                report.method = t.method;
                report.worst_margin = report.worst_margin.min(m);
                if m < 0.0 {
                    report.violations += 1;
                }
            }
        }
    }
    Ok(report)
}

fn check_nonnegative_constant(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("constant must be positive and finite, got {c}")));
    }
    Ok(())
}

/// Tests `f(a) ≤ (C/r^A)∫_{B_r(a)} f` over random admissible `(a, r)`.
#[allow(clippy::too_many_arguments)]
pub fn check_mvi<F>(
    u_plus: F,
    sys: &BallSystem,
    domain: &dyn Region,
    c: f64,
    trials: usize,
    budget: usize,
    seed: u64,
) -> Result<MviCheckReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_nonnegative_constant(c)?;
    mvi_harness("mvi", |p| u_plus(p).max(0.0), sys, domain, c, "given", trials, budget, seed)
}

/// `C̃_p = 2R(0)^{−A}(2K^A)^{(1−p)/p}C`.
pub fn pmvi_constant(c: f64, sys: &BallSystem, r0: f64, k: f64, p: f64) -> Result<f64> {
    check_nonnegative_constant(c)?;
    if !(r0 > 0.0 && r0 <= 1.0) {
        return Err(Error::InvalidParameter(format!("R(0) must lie in (0, 1], got {r0}")));
    }
    if !(k >= 1.0) {
        return Err(Error::InvalidParameter(format!("K must be at least 1, got {k}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
    }
    let a = sys.degree();
    Ok(2.0 * r0.powf(-a) * (2.0 * k.powf(a)).powf((1.0 - p) / p) * c)
}

/// Tests the mean value inequality for `u₊^p` with constant [`pmvi_constant`].
#[allow(clippy::too_many_arguments)]
pub fn check_pmvi<F>(
    u_plus: F,
    sys: &BallSystem,
    domain: &dyn Region,
    c: f64,
    p: f64,
    r0: f64,
    k: f64,
    trials: usize,
    budget: usize,
    seed: u64,
) -> Result<MviCheckReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let cp = pmvi_constant(c, sys, r0, k, p)?;
    mvi_harness("pmvi", |x| u_plus(x).max(0.0).powf(p), sys, domain, cp, "2R(0)^-A (2K^A)^((1-p)/p) C", trials, budget, seed)
}

/// Concave increasing surjection `φ: [0,∞) → [0,∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConcaveMap {
    /// `t^q`, `0 < q ≤ 1`.
    Power { exponent: f64 },
    /// `log(1 + t)`; its inverse is not Δ₂.
    Log1p,
}

impl ConcaveMap {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            ConcaveMap::Power { exponent } => t.powf(exponent),
            ConcaveMap::Log1p => t.ln_1p(),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match *self {
            ConcaveMap::Power { exponent } => y.powf(1.0 / exponent),
            ConcaveMap::Log1p => y.exp_m1(),
        }
    }

    /// Checks concavity parameters and `φ⁻¹(2t) ≤ c_φ·φ⁻¹(t)` on a log grid.
    pub fn validate(&self, c_phi: f64) -> Result<()> {
        if let ConcaveMap::Power { exponent } = *self {
            if !(exponent > 0.0 && exponent <= 1.0) {
                return Err(Error::InvalidParameter(format!("power map needs 0 < q ≤ 1, got {exponent}")));
            }
        }
        if !(c_phi >= 1.0) {
            return Err(Error::InvalidParameter(format!("c_phi must be at least 1, got {c_phi}")));
        }
        for i in -60..=60 {
            let t = 10f64.powf(i as f64 / 10.0);
            let (lhs, rhs) = (self.inverse(2.0 * t), c_phi * self.inverse(t));
            if lhs > rhs * (1.0 + ROUNDOFF) {
                return Err(Error::InvalidParameter(format!("Δ₂ condition fails at t = {t:e} with c_phi = {c_phi}")));
            }
        }
        Ok(())
    }
}

/// `C_φ = 2R(0)^{−A}·c_φ^m·C` with `m = ⌈log₂(2K^A)⌉` (implementation-chosen).
pub fn concave_constant(c: f64, sys: &BallSystem, r0: f64, k: f64, c_phi: f64) -> Result<f64> {
    check_nonnegative_constant(c)?;
    if !(r0 > 0.0 && r0 <= 1.0) || !(k >= 1.0) || !(c_phi >= 1.0) {
        return Err(Error::InvalidParameter(format!("need R(0) ∈ (0,1], K ≥ 1, c_phi ≥ 1; got {r0}, {k}, {c_phi}")));
    }
    let a = sys.degree();
    let m = (2.0 * k.powf(a)).log2().ceil();
    Ok(2.0 * r0.powf(-a) * c_phi.powf(m) * c)
}

/// Tests the mean value inequality for `φ∘u₊` with constant [`concave_constant`].
#[allow(clippy::too_many_arguments)]
pub fn check_concave_mvi<F>(
    u_plus: F,
    sys: &BallSystem,
    domain: &dyn Region,
    c: f64,
    phi: ConcaveMap,
    c_phi: f64,
    r0: f64,
    k: f64,
    trials: usize,
    budget: usize,
    seed: u64,
) -> Result<MviCheckReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    phi.validate(c_phi)?;
    let cphi = concave_constant(c, sys, r0, k, c_phi)?;
    mvi_harness(
        "concave-mvi",
        |x| phi.eval(u_plus(x).max(0.0)),
        sys,
        domain,
        cphi,
        "implementation-chosen: 2R(0)^-A c_phi^m C, m = ceil(log2(2K^A))",
        trials,
        budget,
        seed,
    )
}

/// Tests `u₊(x,t) ≤ (M/r^{n+2}) ∫_{E_m(x,t;r)} u₊` at `trials` radii
/// `r_i = R·i/trials`. `constant` defaults to `M_{m,n}`.
#[allow(clippy::too_many_arguments)]
pub fn check_modified_heatball_mvi<F>(
    u_plus: F,
    m: usize,
    center: &[f64],
    r_max: f64,
    constant: Option<f64>,
    domain: Option<&dyn Region>,
    trials: usize,
    budget: usize,
    seed: u64,
) -> Result<MviCheckReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = heat_dim(center)?;
    check_radius(r_max)?;
    check_budget(budget)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let outer = ModifiedHeatball::new(center[..n].to_vec(), center[n], r_max, m)?;
    ensure_within(&outer, domain)?;
    let (constant, source) = match constant {
        Some(c) => (c, "given"),
        None => (kappa_max_closed(m, n)?, "M_{m,n}"),
    };
    check_nonnegative_constant(constant)?;
    let k = (m + n) as f64;
    let unit_vol = ModifiedHeatball::unit_volume(n, m);
    let lhs = u_plus(center).max(0.0);
    let mut report = MviCheckReport {
        kind: "modified-heatball-mvi".into(),
        constant,
        constant_source: source.into(),
        trials,
        trivial: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
        seed,
        budget,
        method: Method::MonteCarlo,
    };
    for i in 1..=trials {
        let r = r_max * i as f64 / trials as f64;
        if lhs <= 0.0 {
            report.trivial += 1;
            continue;
        }
        let w = welford_batches(budget, derive_seed(seed, "mhb-radius", i as u64), |rng| {
            let (y, s) = sample_heatball_unit(rng, n, k);
            u_plus(&heat_point(center, r, &y, s)).max(0.0)
        });
        // (M/r^{n+2})·r^{n+2}|E_m(1)|·mean
        let rhs = constant * unit_vol * w.mean;
        let se = constant * unit_vol * w.std_error();
        let margin = rhs + GUARD * se + ROUNDOFF * lhs.max(1.0) - lhs;
        report.worst_margin = report.worst_margin.min(margin);
        if margin < 0.0 {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Outcome of a sublevel drop check `u ≤ c − K·R²` on a shrunken domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropReport {
    /// Estimated `sup_Ω u`.
    pub sup_estimate: f64,
    pub k: f64,
    pub r: f64,
    pub points: usize,
    pub violations: usize,
    /// Smallest `c − K R² − u(x)`.
    pub worst_margin: f64,
}

/// `sup_Ω u` over a box: Halton cloud, boundary grid, then coordinate-wise
/// golden-section refinement from the best point.
pub fn box_supremum(u: &dyn ScalarField, domain: &AxisBox) -> f64 {
    let d = domain.lo.len();
    let mut best_p = domain.center();
    let mut best = u.value(&best_p);
    let mut consider = |p: Point| {
        let v = u.value(&p);
        if v > best {
            best = v;
            best_p = p;
        }
    };
    for i in 0..1 << 14 {
        consider(domain.map_unit(&halton(i, d)));
    }
    for p in domain.boundary_points(1 << 12) {
        consider(p);
    }
    let mut p = best_p;
    let mut v = best;
    for _ in 0..8 {
        for axis in 0..d {
            let g = golden_section_max(
                |x| {
                    let mut q = p.clone();
                    q[axis] = x;
                    u.value(&q)
                },
                domain.lo[axis],
                domain.hi[axis],
                1e-12,
                200,
            );
            if g.max > v {
                v = g.max;
                p[axis] = g.argmax;
            }
        }
    }
    v
}

fn drop_check(u: &dyn ScalarField, domain: &AxisBox, shrunk: &AxisBox, k: f64, r: f64, points: usize, seed: u64) -> DropReport {
    let c = box_supremum(u, domain);
    let bound = c - k * r * r;
    let mut rng = substream(seed, 0);
    let mut report = DropReport { sup_estimate: c, k, r, points, violations: 0, worst_margin: f64::INFINITY };
    for _ in 0..points {
        let x = shrunk.sample(&mut rng);
        let margin = bound - u.value(&x) + ROUNDOFF * c.abs().max(1.0);
        report.worst_margin = report.worst_margin.min(margin);
        if margin < 0.0 {
            report.violations += 1;
        }
    }
    report
}

/// `u(x) ≤ sup_Ω u − R²/(2n+4)` at `points` uniform points of `Ω_R`.
pub fn check_laplace_drop(u: &dyn ScalarField, domain: &AxisBox, r: f64, points: usize, seed: u64) -> Result<DropReport> {
    let n = domain.lo.len();
    check_radius(r)?;
    let shrunk = AxisBox::new(domain.lo.iter().map(|v| v + r).collect(), domain.hi.iter().map(|v| v - r).collect())
        .map_err(|_| Error::EmptyRegion(0))?;
    Ok(drop_check(u, domain, &shrunk, crate::constants::k_laplace(n)?, r, points, seed))
}

/// `u ≤ sup_Ω u − K_n R²` (with `K_n = (n²/2)|E(1)|e^{−(n+2)}`) at `points`
/// uniform points of the heatball-shrunken box `Ω_R`.
pub fn check_heat_drop(u: &dyn ScalarField, domain: &AxisBox, r: f64, k: f64, points: usize, seed: u64) -> Result<DropReport> {
    let d = domain.lo.len();
    check_radius(r)?;
    let n = d - 1;
    let half = r * (n as f64 / (2.0 * PI * std::f64::consts::E)).sqrt();
    let mut lo: Vec<f64> = domain.lo.iter().map(|v| v + half).collect();
    let mut hi: Vec<f64> = domain.hi.iter().map(|v| v - half).collect();
    lo[n] = domain.lo[n] + r * r / (4.0 * PI);
    hi[n] = domain.hi[n];
    let shrunk = AxisBox::new(lo, hi).map_err(|_| Error::EmptyRegion(0))?;
    Ok(drop_check(u, domain, &shrunk, k, r, points, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{family, random_harmonic_poly, random_heat_field, random_laplace_field, random_temperature, Combination, FamilyParams, Term};
    use crate::geometry::EuclideanBall;
    use crate::quadrature::gauss_legendre;
    use nalgebra::DMatrix;

    fn params(kv: &[(&str, f64)]) -> FamilyParams {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn norm_sq(d: usize) -> Combination {
        Combination::new(d, vec![Term::Quadratic(DMatrix::identity(d, d) * 2.0)], "|x|²")
    }

    #[test]
    fn heat_kernel_scale_normalises_constants() {
        for n in 1..=4 {
            let nf = n as f64;
            assert!((heat_kernel_scale(n) * nf / (nf + 2.0) - 1.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn ball_average_examples() {
        let five = family("constant", &params(&[("c", 5.0), ("d", 2.0)])).unwrap();
        let q = ball_average(&five, &[0.3, 0.1], 0.5, 4000, 1).unwrap();
        assert!((q.value - 5.0).abs() < 1e-12);

        let h = family("harmonic", &params(&[("k", 2.0)])).unwrap();
        let q = ball_average(&h, &[0.4, -0.2], 0.7, 100_000, 2).unwrap();
        assert!(q.agrees_with(h.value(&[0.4, -0.2]), 3.0), "{q:?}");

        for n in [2, 3] {
            let u = Combination::new(n, vec![Term::Quadratic(DMatrix::identity(n, n) * 2.0)], "|y|²");
            let r = 0.8;
            let q = ball_average(&u, &vec![0.0; n], r, 100_000, 3).unwrap();
            assert!(q.agrees_with(n as f64 * r * r / (n as f64 + 2.0), 3.0), "n={n}: {q:?}");
        }
    }

    #[test]
    fn deriv1_examples() {
        for n in [2, 3] {
            let nf = n as f64;
            let r = 0.6;
            let q = deriv1_rhs(&norm_sq(n), &vec![0.0; n], r, 100_000, 4).unwrap();
            assert!(q.agrees_with(2.0 * nf * r / (nf + 2.0), 3.0), "{q:?}");
            let quad = family("quadratic", &params(&[("n", nf)])).unwrap();
            let q = deriv1_rhs(&quad, &vec![0.0; n], r, 100_000, 5).unwrap();
            assert!(q.agrees_with(deriv1_lower_bound(n, r), 3.0), "{q:?}");
        }
        let h = family("harmonic", &params(&[("k", 3.0)])).unwrap();
        assert_eq!(deriv1_rhs(&h, &[0.1, 0.2], 0.5, 2000, 6).unwrap().value, 0.0);
    }

    #[test]
    fn heatball_average_of_constant_and_temperature() {
        for n in 1..=3 {
            let one = family("constant", &params(&[("c", 1.0), ("d", n as f64 + 1.0)])).unwrap();
            let mut c = vec![0.0; n + 1];
            c[n] = 0.5;
            let q = heatball_average(&one, &c, 0.5, 100_000, 7).unwrap();
            assert!(q.agrees_with(1.0, 3.0), "n={n}: {q:?}");
            assert!(q.std_error > 0.0);
        }
        let u = family("heat_kernel", &params(&[("n", 1.0), ("t0", -1.0)])).unwrap();
        let center = [0.2, 0.3];
        let q = heatball_average(&u, &center, 1.0, 200_000, 8).unwrap();
        assert!(q.agrees_with(u.value(&center), 3.0), "{q:?} vs {}", u.value(&center));
    }

    /// `φ(1)` for `u = −t` at the origin, n = 1: `(1/4)∫ |η|²/σ dη dσ`
    /// = `(1/4)∫_0^{1/4π} (2/3)ρ(σ)³/σ dσ`, by Gauss–Legendre in `v`, `σ = e^{−v²}/4π`.
    fn neg_time_phi_oracle() -> f64 {
        let (x, w) = gauss_legendre(64);
        let vmax = 12.0;
        let panels = 64;
        let mut total = 0.0;
        for k in 0..panels {
            let a = vmax * k as f64 / panels as f64;
            let h = vmax / panels as f64;
            for (xi, wi) in x.iter().zip(&w) {
                let v = a + 0.5 * h * (xi + 1.0);
                let s = (-v * v).exp() / (4.0 * PI);
                let rho = (2.0 * s * v * v).sqrt();
                // dσ = 2vσ dv
                total += 0.5 * h * wi * (2.0 / 3.0) * rho.powi(3) / s * 2.0 * v * s;
            }
        }
        0.25 * total
    }

    #[test]
    fn heatball_average_of_negative_time_matches_slice_oracle() {
        let u = family("neg_time", &params(&[("n", 1.0)])).unwrap();
        let q = heatball_average(&u, &[0.0, 0.0], 1.0, 200_000, 9).unwrap();
        let oracle = neg_time_phi_oracle();
        assert!(q.agrees_with(oracle, 3.0), "{q:?} vs {oracle}");
    }

    #[test]
    fn deriv2_examples() {
        let mut rng = substream(10, 0);
        for n in 1..=3 {
            let temp = random_temperature(&mut rng, n, -2.0);
            let mut c = vec![0.1; n + 1];
            c[n] = 0.0;
            let q = deriv2_rhs(&temp, &c, 0.7, 20_000, 11).unwrap();
            assert!(q.value.abs() <= 3.0 * q.std_error + 1e-9, "n={n}: {q:?}");
        }
        for n in 1..=3 {
            let u = family("neg_time", &params(&[("n", n as f64)])).unwrap();
            let c = vec![0.0; n + 1];
            let chk = check_deriv2(&u, &c, 0.8, 100_000, 12).unwrap();
            assert!(chk.pass, "{chk:?}");
            assert!(chk.rhs.value >= deriv2_lower_bound(n, 0.8), "{chk:?}");
        }
    }

    #[test]
    fn derivative_consistency_on_random_fields() {
        let mut rng = substream(13, 0);
        for n in [2, 3] {
            let c = vec![0.0; n];
            let u = random_laplace_field(&mut rng, n, &c);
            for r in [0.2, 0.5] {
                let chk = check_deriv1(&u, &c, r, 50_000, 14).unwrap();
                assert!(chk.pass, "{chk:?}");
                assert!(chk.rhs.value >= deriv1_lower_bound(n, r) - 3.0 * chk.rhs.std_error);
            }
        }
        let u = random_heat_field(&mut rng, 2, -3.0);
        let chk = check_deriv2(&u, &[0.0, 0.0, 0.0], 0.6, 50_000, 15).unwrap();
        assert!(chk.pass, "{chk:?}");
    }

    #[test]
    fn modified_heatball_average_is_normalised_and_reproduces_temperatures() {
        let (n, m) = (1, 3);
        let one = family("constant", &params(&[("c", 1.0), ("d", 2.0)])).unwrap();
        let q = modified_heatball_average(&one, &[0.0, 0.0], 1.0, m, 100_000, 16).unwrap();
        assert!(q.agrees_with(1.0, 3.0), "{q:?}");
        let u = family("heat_kernel", &params(&[("n", n as f64), ("t0", -1.0)])).unwrap();
        let q = modified_heatball_average(&u, &[0.1, 0.0], 0.8, m, 100_000, 17).unwrap();
        assert!(q.agrees_with(u.value(&[0.1, 0.0]), 3.0), "{q:?}");
    }

    #[test]
    fn family_phi_starts_at_centre_and_respects_domain() {
        let u: Arc<dyn ScalarField> = Arc::new(family("harmonic", &params(&[("k", 2.0)])).unwrap());
        let fam = AverageFamily::new(AverageKind::Ball, u.clone(), vec![0.2, 0.1], 0.5).unwrap();
        assert_eq!(fam.phi(0.0, 2000, 1).unwrap().value, u.value(&[0.2, 0.1]));
        assert!(fam.max_step_change(10, 20_000, 2).unwrap() < 0.05);
        let boxed = fam.clone().with_domain(Arc::new(AxisBox::unit(2)));
        assert!(matches!(boxed.phi(0.4, 2000, 3), Err(Error::EscapesDomain(_))));
        let sys = fam.clone().with_system(BallSystem::euclidean(2));
        let sys = AverageFamily { kind: AverageKind::BallSystem, ..sys };
        let q = sys.phi(0.3, 100_000, 4).unwrap();
        assert!(q.agrees_with(u.value(&[0.2, 0.1]), 3.0), "{q:?}");
    }

    #[test]
    fn mvi_checker_examples() {
        let sys = BallSystem::euclidean(2);
        let disk = EuclideanBall::unit(2);
        let c = 1.0 / PI;
        let h = family("harmonic", &params(&[("k", 2.0)])).unwrap();
        let rep = check_mvi(|p| h.value(p), &sys, &disk, c, 200, 4096, 1).unwrap();
        assert_eq!(rep.violations, 0, "{rep:?}");
        let mut rng = substream(2, 0);
        let u = random_laplace_field(&mut rng, 2, &[0.0, 0.0]);
        let rep = check_mvi(|p| u.value(p), &sys, &disk, c, 200, 4096, 3).unwrap();
        assert_eq!(rep.violations, 0, "{rep:?}");
        let rep = check_mvi(|_| 1.0, &sys, &disk, 0.5 * c, 50, 4096, 4).unwrap();
        assert_eq!(rep.violations, 50);
        assert!(rep.worst_margin < -0.4);
    }

    #[test]
    fn pmvi_constant_formula() {
        let sys = BallSystem::euclidean(2);
        let c = 1.0 / PI;
        let cp = pmvi_constant(c, &sys, 0.5, 2.0, 0.5).unwrap();
        assert!((cp - 64.0 / PI).abs() < 1e-12);
        let near_one = pmvi_constant(c, &sys, 0.5, 2.0, 1.0 - 1e-9).unwrap();
        assert!((near_one - 2.0 * 4.0 * c).abs() < 1e-6);
        assert!((pmvi_constant(c / 2.0, &sys, 0.5, 2.0, 0.3).unwrap() * 2.0 - pmvi_constant(c, &sys, 0.5, 2.0, 0.3).unwrap()).abs() < 1e-9);
        assert!(pmvi_constant(c, &sys, 1.5, 2.0, 0.5).is_err());
        assert!(pmvi_constant(c, &sys, 0.5, 0.5, 0.5).is_err());
        assert!(pmvi_constant(c, &sys, 0.5, 2.0, 1.0).is_err());
    }

    #[test]
    fn pmvi_and_concave_checks() {
        let sys = BallSystem::euclidean(2);
        let disk = EuclideanBall::unit(2);
        let c = 1.0 / PI;
        let mut rng = substream(5, 0);
        let u = random_harmonic_poly(&mut rng, 4, [0.0, 0.0], 1.0);
        for p in [0.25, 0.5, 0.75] {
            let rep = check_pmvi(|x| u.value(x), &sys, &disk, c, p, 0.5, 2.0, 100, 4096, 6).unwrap();
            assert_eq!(rep.violations, 0, "p={p}: {rep:?}");
        }
        let rep = check_pmvi(|_| 1.0, &sys, &disk, c, 0.5, 0.5, 2.0, 20, 4096, 7).unwrap();
        assert_eq!(rep.violations, 0);
        let tiny = pmvi_constant(1e-3, &sys, 1.0, 1.0, 0.999).unwrap();
        assert!(tiny * PI < 1.0);
        let rep = check_pmvi(|_| 1.0, &sys, &disk, 1e-3, 0.999, 1.0, 1.0, 20, 4096, 8).unwrap();
        assert_eq!(rep.violations, 20);

        let rep = check_concave_mvi(|x| u.value(x), &sys, &disk, c, ConcaveMap::Power { exponent: 0.75 }, 2f64.powf(4.0 / 3.0), 0.5, 2.0, 100, 4096, 9).unwrap();
        assert_eq!(rep.violations, 0, "{rep:?}");
        assert!(rep.constant_source.starts_with("implementation-chosen"));
        let sqrt = concave_constant(c, &sys, 0.5, 2.0, 4.0).unwrap();
        assert!((sqrt - 2.0 * 4.0 * 64.0 * c).abs() < 1e-9);
        assert!(ConcaveMap::Power { exponent: 0.5 }.validate(3.9).is_err());
        assert!(ConcaveMap::Log1p.validate(100.0).is_err());
        assert!(ConcaveMap::Power { exponent: 1.0 }.validate(2.0).is_ok());
    }

    #[test]
    fn modified_heatball_mvi_examples() {
        let mut rng = substream(20, 0);
        let temp = random_temperature(&mut rng, 1, -2.0);
        let rep = check_modified_heatball_mvi(|p| temp.value(p), 3, &[0.0, 0.0], 1.0, None, None, 5, 20_000, 21).unwrap();
        assert_eq!(rep.violations, 0, "{rep:?}");
        let quad = family("heat_quadratic", &params(&[("n", 1.0)])).unwrap();
        let rep = check_modified_heatball_mvi(|p| quad.value(p), 3, &[0.5, 0.0], 1.0, None, None, 5, 20_000, 22).unwrap();
        assert_eq!(rep.violations, 0, "{rep:?}");
        let m_const = kappa_max_closed(3, 1).unwrap();
        let vol = ModifiedHeatball::unit_volume(1, 3);
        assert!(m_const / 10.0 * vol < 1.0);
        let rep = check_modified_heatball_mvi(|_| 1.0, 3, &[0.0, 0.0], 1.0, Some(m_const / 10.0), None, 3, 4096, 23).unwrap();
        assert_eq!(rep.violations, 3);
        let dom = AxisBox::unit(2);
        assert!(matches!(
            check_modified_heatball_mvi(|_| 1.0, 3, &[0.5, 0.01], 1.0, None, Some(&dom), 1, 4096, 0),
            Err(Error::EscapesDomain(_))
        ));
    }

    #[test]
    fn laplace_drop_on_random_fields() {
        let mut rng = substream(30, 0);
        for i in 0..3 {
            let u = random_laplace_field(&mut rng, 2, &[0.5, 0.5]);
            let rep = check_laplace_drop(&u, &AxisBox::unit(2), 0.2, 500, i).unwrap();
            assert_eq!(rep.violations, 0, "{rep:?}");
            assert_eq!(rep.k, 0.125);
        }
    }

    #[test]
    fn product_rules_reproduce_moments() {
        for n in 1..=3 {
            let nf = n as f64;
            let (_, m2) = ball_expectation(n, |z| z.iter().map(|v| v * v).sum()).unwrap();
            assert!((m2 - nf / (nf + 2.0)).abs() < 1e-12, "n={n} {m2}");
            let (_, mean) = heat_expectation(n, 0.5 * nf + 2.0, 2.0 / nf, |_, w| w).unwrap();
            assert!((mean - (0.5 * nf + 2.0) * 2.0 / nf).abs() < 1e-12, "n={n} {mean}");
        }
        assert!(ball_expectation(4, |_| 1.0).is_none());
    }
}

//! Heatballs `E(x,t;r)` and the (n,m)-modified heatballs `E_m(x,t;r)`.
//!
//! Both are described through their time slices: with `τ = t − s`,
//! a point `(y,s)` is a member iff `0 < τ ≤ r²/4π` and
//! `|x−y|² ≤ 2·k·τ·log(r²/(4πτ))`, where `k = n` for the heatball and
//! `k = m + n` for the modified heatball. The centre itself is a member.

use std::f64::consts::{E, PI};

use rand::Rng as _;
use rand_distr::Gamma;

use super::{sample_unit_ball, sphere_points, unit_ball_volume, AxisBox, Point, Region};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::rng::{halton, Rng};

/// Squared slice radius `2kτ·log(r²/(4πτ))` (negative outside the time range).
pub(crate) fn slice_radius_sq(k: f64, r: f64, tau: f64) -> f64 {
    2.0 * k * tau * (r * r / (4.0 * PI * tau)).ln()
}

fn slice_member(x: &[f64], t: f64, r: f64, k: f64, p: &[f64], strict: bool) -> bool {
    let n = x.len();
    if p.len() != n + 1 {
        return false;
    }
    let (y, s) = (&p[..n], p[n]);
    if s == t && y == x {
        return !strict;
    }
    let tau = t - s;
    let depth = r * r / (4.0 * PI);
    if !(tau > 0.0) || tau > depth || (strict && tau >= depth) {
        return false;
    }
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let rho2 = slice_radius_sq(k, r, tau);
    if strict {
        d2 < rho2
    } else {
        d2 <= rho2
    }
}

fn slice_bounding_box(x: &[f64], t: f64, r: f64, k: f64) -> AxisBox {
    // max_τ 2kτ·log(r²/4πτ) is attained at τ = r²/(4πe)
    let hw = r * (k / (2.0 * PI * E)).sqrt();
    let mut lo: Vec<f64> = x.iter().map(|c| c - hw).collect();
    let mut hi: Vec<f64> = x.iter().map(|c| c + hw).collect();
    lo.push(t - r * r / (4.0 * PI));
    hi.push(t);
    AxisBox { lo, hi }
}

fn slice_boundary_points(x: &[f64], t: f64, r: f64, k: f64, count: usize) -> Vec<Point> {
    let n = x.len();
    let depth = r * r / (4.0 * PI);
    let dirs = sphere_points(n, 16);
    let mut taus: Vec<f64> = (0..count / dirs.len().max(1) + 1).map(|i| depth * halton(i, 1)[0]).collect();
    taus.push(r * r / (4.0 * PI * E));
    taus.push(depth);
    let mut pts = vec![{
        let mut c = x.to_vec();
        c.push(t);
        c
    }];
    for tau in taus {
        let rho = slice_radius_sq(k, r, tau).max(0.0).sqrt();
        for d in &dirs {
            let mut p: Point = x.iter().zip(d).map(|(c, u)| c + rho * u).collect();
            p.push(t - tau);
            pts.push(p);
        }
    }
    pts
}

fn validate(x: &[f64], t: f64, r: f64) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidParameter("heatball needs spatial dimension n ≥ 1".into()));
    }
    if !(r > 0.0) || !r.is_finite() || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("heatball radius must be positive, got {r}")));
    }
    Ok(())
}

/// Heatball `E(x,t;r) = {(x,t)} ∪ {(y,s): s ≤ t, Φ_n(x−y,t−s) ≥ r^{-n}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatball {
    pub x: Point,
    pub t: f64,
    pub r: f64,
}

impl Heatball {
    pub fn new(x: Point, t: f64, r: f64) -> Result<Self> {
        validate(&x, t, r)?;
        Ok(Self { x, t, r })
    }

    /// `E(0,0;1)` in `n` spatial dimensions.
    pub fn unit(n: usize) -> Self {
        Self { x: vec![0.0; n], t: 0.0, r: 1.0 }
    }

    pub fn spatial_dim(&self) -> usize {
        self.x.len()
    }

    /// Membership in the open interior (boundary and centre excluded).
    pub fn contains_strict(&self, p: &[f64]) -> bool {
        slice_member(&self.x, self.t, self.r, self.x.len() as f64, p, true)
    }

    /// `|E(0,0;1)|` from the one-dimensional slice integral.
    pub fn unit_volume(n: usize) -> f64 {
        slice_volume(n, n as f64)
    }
}

impl Region for Heatball {
    fn dim(&self) -> usize {
        self.x.len() + 1
    }

    fn contains(&self, p: &[f64]) -> bool {
        heatball_contains(self, p)
    }

    fn bounding_box(&self) -> AxisBox {
        heatball_bounding_box(self)
    }

    fn boundary_points(&self, count: usize) -> Vec<Point> {
        slice_boundary_points(&self.x, self.t, self.r, self.x.len() as f64, count)
    }

    fn label(&self) -> String {
        format!("heatball(x={:?}, t={}, r={})", self.x, self.t, self.r)
    }
}

/// Closed-set membership test for a heatball (the centre is a member).
pub fn heatball_contains(hb: &Heatball, p: &[f64]) -> bool {
    slice_member(&hb.x, hb.t, hb.r, hb.x.len() as f64, p, false)
}

/// Tight box around a heatball: spatial half-width `r·(n/(2πe))^{1/2}`,
/// time range `[t − r²/4π, t]`.
pub fn heatball_bounding_box(hb: &Heatball) -> AxisBox {
    slice_bounding_box(&hb.x, hb.t, hb.r, hb.x.len() as f64)
}

/// Modified heatball `E_m(x,t;r) = {(y,s): Φ_{m+n}(0,x−y,t−s) ≥ r^{-(m+n)}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedHeatball {
    pub x: Point,
    pub t: f64,
    pub r: f64,
    pub m: usize,
}

impl ModifiedHeatball {
    pub fn new(x: Point, t: f64, r: f64, m: usize) -> Result<Self> {
        validate(&x, t, r)?;
        if m < 3 {
            return Err(Error::InvalidParameter(format!("modified heatball needs m ≥ 3, got {m}")));
        }
        Ok(Self { x, t, r, m })
    }

    fn k(&self) -> f64 {
        (self.m + self.x.len()) as f64
    }

    /// `log Φ_{m+n}(0, ξ, τ)`; evaluated in log form so small τ cannot overflow.
    pub fn log_kernel(&self, xi_sq: f64, tau: f64) -> f64 {
        -0.5 * self.k() * (4.0 * PI * tau).ln() - xi_sq / (4.0 * tau)
    }

    /// `|E_m(0,0;1)|` from the slice integral.
    pub fn unit_volume(n: usize, m: usize) -> f64 {
        slice_volume(n, (m + n) as f64)
    }
}

impl Region for ModifiedHeatball {
    fn dim(&self) -> usize {
        self.x.len() + 1
    }

    fn contains(&self, p: &[f64]) -> bool {
        let n = self.x.len();
        if p.len() != n + 1 {
            return false;
        }
        if p[n] == self.t && p[..n] == self.x[..] {
            return true;
        }
        let tau = self.t - p[n];
        if !(tau > 0.0) {
            return false;
        }
        let xi_sq: f64 = self.x.iter().zip(&p[..n]).map(|(a, b)| (a - b) * (a - b)).sum();
        self.log_kernel(xi_sq, tau) >= -self.k() * self.r.ln()
    }

    fn bounding_box(&self) -> AxisBox {
        slice_bounding_box(&self.x, self.t, self.r, self.k())
    }

    fn boundary_points(&self, count: usize) -> Vec<Point> {
        slice_boundary_points(&self.x, self.t, self.r, self.k(), count)
    }

    fn label(&self) -> String {
        format!("modified_heatball(x={:?}, t={}, r={}, m={})", self.x, self.t, self.r, self.m)
    }
}

/// `ω_n ∫_0^{1/4π} (2k·s·log(1/(4πs)))^{n/2} ds`, the volume of the unit
/// (modified) heatball with slice coefficient `k`.
///
/// Evaluated by composite Gauss–Legendre after `s = e^{-v²}/(4π)`, which
/// turns the integrand into the smooth `v^{n+1} e^{-(n+2)v²/2}` profile.
pub fn slice_volume(n: usize, k: f64) -> f64 {
    let nf = n as f64;
    let a = 0.5 * (nf + 2.0);
    let pref = (2.0 * k).powf(0.5 * nf) * (4.0 * PI).powf(-(0.5 * nf + 1.0)) * 2.0;
    let upper = (90.0 / a).sqrt();
    let panels = 128;
    let (nodes, weights) = gauss_legendre(16);
    let h = upper / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a0 = p as f64 * h;
        for (x, w) in nodes.iter().zip(&weights) {
            let v = a0 + 0.5 * h * (x + 1.0);
            total += 0.5 * h * w * v.powf(nf + 1.0) * (-a * v * v).exp();
        }
    }
    unit_ball_volume(n) * pref * total
}

/// Uniform draw from the reflected unit (modified) heatball
/// `{(y,s): 0 < s ≤ 1/4π, |y|² ≤ 2ks·log(1/4πs)}`.
///
/// With `w = log(1/(4πs))` the slice volume makes `w ~ Gamma(n/2+1, 2/(n+2))`
/// and `y` uniform in the slice ball.
pub fn sample_heatball_unit(rng: &mut Rng, n: usize, k: f64) -> (Point, f64) {
    let nf = n as f64;
    let gamma = Gamma::new(0.5 * nf + 1.0, 2.0 / (nf + 2.0)).expect("valid gamma parameters");
    let w: f64 = rng.sample(gamma);
    let s = (-w).exp() / (4.0 * PI);
    let rho = (2.0 * k * s * w).sqrt();
    let z = sample_unit_ball(rng, n);
    (z.into_iter().map(|v| rho * v).collect(), s)
}

/// A draw `(z, s, ρ)` for the heat-kernel average on `E(0,0;1)`: `s` follows
/// the marginal of the kernel `|y|²/s²` (`w ~ Gamma((n+4)/2, 2/n)`), `z` is
/// uniform in the unit ball and the spatial point is `ρ(s)·z`.
pub fn sample_heat_kernel_unit(rng: &mut Rng, n: usize) -> (Point, f64, f64) {
    let nf = n as f64;
    let gamma = Gamma::new(0.5 * nf + 2.0, 2.0 / nf).expect("valid gamma parameters");
    let w: f64 = rng.sample(gamma);
    let s = (-w).exp() / (4.0 * PI);
    let rho = (2.0 * nf * s * w).sqrt();
    (sample_unit_ball(rng, n), s, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use statrs::function::gamma::gamma;

    fn closed_form_volume(n: usize, k: f64) -> f64 {
        // ω_n (2k)^{n/2} (4π)^{-(n/2+1)} Γ(n/2+1) (2/(n+2))^{n/2+1}
        let h = n as f64 / 2.0;
        unit_ball_volume(n) * (2.0 * k).powf(h) * (4.0 * PI).powf(-(h + 1.0)) * gamma(h + 1.0)
            * (2.0 / (n as f64 + 2.0)).powf(h + 1.0)
    }

    #[test]
    fn center_axis_and_depth() {
        let hb = Heatball::unit(1);
        assert!(hb.contains(&[0.0, -1.0 / (8.0 * PI)]));
        assert!(!hb.contains(&[0.0, -1.0 / (2.0 * PI)]));
        assert!(hb.contains(&[0.0, 0.0]));
        assert!(!hb.contains_strict(&[0.0, 0.0]));
        assert!(!hb.contains(&[0.0, 0.01]));
    }

    #[test]
    fn boundary_point_is_not_interior() {
        let hb = Heatball::unit(2);
        let s0 = 1.0 / (8.0 * PI);
        let rho2 = 2.0 * 2.0 * s0 * (1.0 / (4.0 * PI * s0)).ln();
        let p = [rho2.sqrt(), 0.0, -s0];
        assert!(!hb.contains_strict(&p));
        let inside = [0.999 * rho2.sqrt(), 0.0, -s0];
        assert!(hb.contains_strict(&inside));
        let outside = [1.001 * rho2.sqrt(), 0.0, -s0];
        assert!(!hb.contains(&outside));
    }

    #[test]
    fn bounding_box_values() {
        let b = heatball_bounding_box(&Heatball::unit(1));
        assert!((b.hi[0] - (1.0 / (2.0 * PI * E)).sqrt()).abs() < 1e-15);
        assert!((b.hi[0] - 0.2420).abs() < 1e-4);
        assert!((b.lo[1] + 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(b.hi[1], 0.0);

        let b2 = heatball_bounding_box(&Heatball::new(vec![0.0], 0.0, 2.0).unwrap());
        assert!((b2.hi[0] - 2.0 * b.hi[0]).abs() < 1e-15);
        assert!((b2.lo[1] - 4.0 * b.lo[1]).abs() < 1e-15);

        let b3 = heatball_bounding_box(&Heatball::new(vec![1.0], 5.0, 1.0).unwrap());
        assert!((b3.lo[0] - (b.lo[0] + 1.0)).abs() < 1e-15);
        assert!((b3.hi[1] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn samples_lie_in_heatball_and_box() {
        let mut rng = substream(11, 0);
        for n in 1..=3 {
            let hb = Heatball::unit(n);
            let bb = hb.bounding_box();
            for _ in 0..2000 {
                let (y, s) = sample_heatball_unit(&mut rng, n, n as f64);
                let mut p: Point = y.iter().map(|v| -v).collect();
                p.push(-s);
                assert!(hb.contains(&p));
                assert!(bb.contains_closed(&p));
            }
        }
    }

    #[test]
    fn slice_volume_matches_gamma_closed_form() {
        for n in 1..=4 {
            for k in [n as f64, n as f64 + 3.0] {
                let q = slice_volume(n, k);
                let c = closed_form_volume(n, k);
                assert!((q - c).abs() < 1e-12 * c, "n={n} k={k}: {q} vs {c}");
            }
        }
    }

    #[test]
    fn modified_heatball_contains_heatball_points() {
        let e = Heatball::unit(1);
        let em = ModifiedHeatball::new(vec![0.0], 0.0, 1.0, 3).unwrap();
        let mut rng = substream(5, 1);
        for _ in 0..1000 {
            let (y, s) = sample_heatball_unit(&mut rng, 1, 1.0);
            let p = [-y[0], -s];
            assert!(e.contains(&p));
            assert!(em.contains(&p));
        }
        assert!(ModifiedHeatball::new(vec![0.0], 0.0, 1.0, 2).is_err());
        assert!(ModifiedHeatball::unit_volume(1, 3) > Heatball::unit_volume(1));
    }
}

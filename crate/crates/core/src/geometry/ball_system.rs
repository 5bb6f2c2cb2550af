//! Systems of balls `B_r(a) = a + δ_r(B)`, shrunken domains and radius functions.

use std::sync::Arc;

use super::{region_within, AxisBox, EuclideanBall, Heatball, Point, Region};
use crate::error::{Error, Result};
use crate::optimize::bisect_last_true;

const BISECTION_STEPS: usize = 60;

/// A unit ball `B` together with the dilation exponents `λ`.
#[derive(Debug, Clone)]
pub struct BallSystem {
    pub unit: Arc<dyn Region>,
    pub exponents: Vec<f64>,
    /// Set when `0` lies on the boundary of `B` (heatballs).
    pub center_on_boundary: bool,
}

impl BallSystem {
    pub fn new(unit: Arc<dyn Region>, exponents: Vec<f64>, center_on_boundary: bool) -> Result<Self> {
        if exponents.len() != unit.dim() {
            return Err(Error::DimensionMismatch { expected: unit.dim(), got: exponents.len() });
        }
        if exponents.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::InvalidParameter(format!("dilation exponents must be positive: {exponents:?}")));
        }
        Ok(Self { unit, exponents, center_on_boundary })
    }

    /// Euclidean unit ball with isotropic scaling.
    pub fn euclidean(d: usize) -> Self {
        Self { unit: Arc::new(EuclideanBall::unit(d)), exponents: vec![1.0; d], center_on_boundary: false }
    }

    /// `exponents` are `(1,…,1,2)`: parabolic scaling `(x,t) ↦ (rx, r²t)`.
    pub fn parabolic(unit: Arc<dyn Region>) -> Result<Self> {
        let d = unit.dim();
        if d < 2 {
            return Err(Error::InvalidParameter("parabolic system needs space and time".into()));
        }
        let mut exponents = vec![1.0; d];
        exponents[d - 1] = 2.0;
        let center_on_boundary = !unit.contains(&vec![0.0; d]);
        Self::new(unit, exponents, center_on_boundary)
    }

    /// Heatballs `E(x,t;r)` as a parabolic system.
    pub fn heatballs(n: usize) -> Self {
        let mut exponents = vec![1.0; n + 1];
        exponents[n] = 2.0;
        Self { unit: Arc::new(Heatball::unit(n)), exponents, center_on_boundary: true }
    }

    /// Parabolic system on the symmetric box `B̃` enclosing `E_m(0,0;1)`:
    /// spatial half-width `max((m+n)/(πe), ((m+n)/(2πe))^{1/2})`, time `(−1/2π, 1/2π)`.
    pub fn modified_heat_box(n: usize, m: usize) -> Self {
        let k = (m + n) as f64;
        let pe = std::f64::consts::PI * std::f64::consts::E;
        let hw = (k / pe).max((k / (2.0 * pe)).sqrt());
        let mut half = vec![hw; n];
        half.push(1.0 / (2.0 * std::f64::consts::PI));
        let mut exponents = vec![1.0; n + 1];
        exponents[n] = 2.0;
        let unit = AxisBox::symmetric(&half).expect("positive half-widths");
        Self { unit: Arc::new(unit), exponents, center_on_boundary: false }
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    /// Homogeneity degree `A = Σλᵢ`.
    pub fn degree(&self) -> f64 {
        self.exponents.iter().sum()
    }

    /// `δ_r(p)`.
    pub fn scale_point(&self, p: &[f64], r: f64) -> Point {
        p.iter().zip(&self.exponents).map(|(x, l)| x * r.powf(*l)).collect()
    }

    /// `B_r(a) = a + δ_r(B)`.
    pub fn dilate(&self, a: &[f64], r: f64) -> Result<Arc<dyn Region>> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("dilation radius must be positive, got {r}")));
        }
        if a.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: a.len() });
        }
        if let Some(b) = self.unit.as_box() {
            return Ok(Arc::new(self.dilate_box(&b, a, r)));
        }
        Ok(Arc::new(Dilated {
            unit: Arc::clone(&self.unit),
            center: a.to_vec(),
            scales: self.exponents.iter().map(|l| r.powf(*l)).collect(),
            volume_factor: r.powf(self.degree()),
        }))
    }

    fn dilate_box(&self, b: &AxisBox, a: &[f64], r: f64) -> AxisBox {
        AxisBox { lo: self.scale_point(&b.lo, r), hi: self.scale_point(&b.hi, r) }.translate(a)
    }

    /// The symmetric box `B̃ = ∏(−yᵢ, yᵢ)` enclosing the unit ball.
    pub fn enclosing_box(&self) -> AxisBox {
        let bb = self.unit.bounding_box();
        let half: Vec<f64> = bb.lo.iter().zip(&bb.hi).map(|(a, b)| a.abs().max(b.abs())).collect();
        AxisBox { lo: half.iter().map(|h| -h).collect(), hi: half }
    }

    /// The system generated by [`Self::enclosing_box`].
    pub fn boxed(&self) -> BallSystem {
        BallSystem { unit: Arc::new(self.enclosing_box()), exponents: self.exponents.clone(), center_on_boundary: false }
    }
}

/// `a + δ_r(B)` for a general unit region.
#[derive(Debug, Clone)]
pub struct Dilated {
    unit: Arc<dyn Region>,
    center: Point,
    scales: Vec<f64>,
    volume_factor: f64,
}

impl Dilated {
    fn to_unit(&self, p: &[f64]) -> Point {
        p.iter().zip(&self.center).zip(&self.scales).map(|((x, c), s)| (x - c) / s).collect()
    }

    fn from_unit(&self, q: &[f64]) -> Point {
        q.iter().zip(&self.center).zip(&self.scales).map(|((x, c), s)| c + x * s).collect()
    }
}

impl Region for Dilated {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && self.unit.contains(&self.to_unit(p))
    }

    fn bounding_box(&self) -> AxisBox {
        let bb = self.unit.bounding_box();
        AxisBox { lo: self.from_unit(&bb.lo), hi: self.from_unit(&bb.hi) }
    }

    fn exact_volume(&self) -> Option<f64> {
        self.unit.exact_volume().map(|v| v * self.volume_factor)
    }

    fn as_ball(&self) -> Option<EuclideanBall> {
        let s = self.scales[0];
        if self.scales.iter().any(|x| *x != s) {
            return None;
        }
        let b = self.unit.as_ball()?;
        Some(EuclideanBall { center: self.from_unit(&b.center), radius: s * b.radius })
    }

    fn boundary_points(&self, count: usize) -> Vec<Point> {
        self.unit.boundary_points(count).iter().map(|q| self.from_unit(q)).collect()
    }

    fn label(&self) -> String {
        format!("dilate[{}](a={:?}, scales={:?})", self.unit.label(), self.center, self.scales)
    }
}

/// `Ω_R = {a ∈ Ω : closure of B_R(a) ⊆ Ω}` for a general domain.
#[derive(Debug, Clone)]
pub struct ShrunkenDomain {
    pub domain: Arc<dyn Region>,
    pub system: BallSystem,
    pub r: f64,
}

impl Region for ShrunkenDomain {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn contains(&self, p: &[f64]) -> bool {
        if !self.domain.contains(p) {
            return false;
        }
        match self.system.dilate(p, self.r) {
            Ok(ball) => region_within(ball.as_ref(), self.domain.as_ref()),
            Err(_) => false,
        }
    }

    fn bounding_box(&self) -> AxisBox {
        self.domain.bounding_box()
    }

    fn label(&self) -> String {
        format!("shrink[{}](R={})", self.domain.label(), self.r)
    }
}

/// `Ω_R` for the system `sys`; exact (a box) when `Ω` is a box. Returns
/// `None` when a box domain shrinks to the empty set.
pub fn shrink(domain: Arc<dyn Region>, sys: &BallSystem, r: f64) -> Result<Option<Arc<dyn Region>>> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("shrink radius must be positive, got {r}")));
    }
    if domain.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: domain.dim() });
    }
    if let Some(b) = domain.as_box() {
        let ub = sys.unit.bounding_box();
        let lo_off = sys.scale_point(&ub.lo, r);
        let hi_off = sys.scale_point(&ub.hi, r);
        let lo: Vec<f64> = b.lo.iter().zip(&lo_off).map(|(a, o)| a - o).collect();
        let hi: Vec<f64> = b.hi.iter().zip(&hi_off).map(|(a, o)| a - o).collect();
        return Ok(AxisBox::new(lo, hi).ok().map(|b| Arc::new(b) as Arc<dyn Region>));
    }
    Ok(Some(Arc::new(ShrunkenDomain { domain, system: sys.clone(), r })))
}

/// Largest `r` with `B_r(a) ⊆ Ω` for some `a`: exact for box domains (optimal
/// `a`), otherwise measured at the centre of `Ω`'s bounding box.
pub fn inradius(domain: &dyn Region, sys: &BallSystem) -> Result<f64> {
    if domain.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: domain.dim() });
    }
    let ub = sys.unit.bounding_box();
    if let Some(b) = domain.as_box() {
        let r = b
            .widths()
            .iter()
            .zip(ub.widths())
            .zip(&sys.exponents)
            .map(|((w, u), l)| (w / u).powf(1.0 / l))
            .fold(f64::INFINITY, f64::min);
        return Ok(r);
    }
    let a = domain.bounding_box().center();
    max_radius_at(domain, sys, &a)
}

/// `dist(a, ∂Ω)/ρ` for isotropic systems on a centred ball of radius `ρ`
/// inside a ball or box domain.
fn euclidean_distance_radius(domain: &dyn Region, sys: &BallSystem, a: &[f64]) -> Option<f64> {
    if sys.exponents.iter().any(|l| *l != 1.0) {
        return None;
    }
    let unit = sys.unit.as_ball().filter(|b| b.center.iter().all(|c| *c == 0.0))?;
    let dist = if let Some(b) = domain.as_ball() {
        b.radius - a.iter().zip(&b.center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>().sqrt()
    } else {
        let b = domain.as_box()?;
        a.iter().zip(b.lo.iter().zip(&b.hi)).map(|(x, (lo, hi))| (x - lo).min(hi - x)).fold(f64::INFINITY, f64::min)
    };
    Some(dist.max(0.0) / unit.radius)
}

pub fn max_radius_at(domain: &dyn Region, sys: &BallSystem, a: &[f64]) -> Result<f64> {
    if !domain.contains(a) {
        return Err(Error::OutsideRegion(format!("{a:?} not in {}", domain.label())));
    }
    if let Some(r) = euclidean_distance_radius(domain, sys, a) {
        return Ok(r);
    }
    let fits = |r: f64| r > 0.0 && sys.dilate(a, r).is_ok_and(|b| region_within(b.as_ref(), domain));
    let mut hi = domain.bounding_box().widths().iter().fold(1.0_f64, |m, w| m.max(*w));
    while fits(hi) {
        hi *= 2.0;
    }
    Ok(bisect_last_true(fits, 0.0, hi, BISECTION_STEPS))
}

/// `R(a) = sup{r : B̃_r(a) ⊆ Ω}/divisor`, the radius function of a ball system
/// built from its enclosing box `B̃`.
#[derive(Debug, Clone)]
pub struct RadiusFunction {
    pub system: BallSystem,
    pub boxed: BallSystem,
    pub domain: Arc<dyn Region>,
    pub divisor: f64,
}

impl RadiusFunction {
    /// Ratio bound `K` with `R(a)/R(x) ≤ K` on `B_{R(a)}(a)`.
    pub fn k(&self) -> f64 {
        self.divisor
    }

    pub fn bounding_box(&self) -> AxisBox {
        self.boxed.enclosing_box()
    }

    /// Replaces the divisor; 4 is valid for every system, 2 needs all `λᵢ ≥ 1`.
    pub fn with_divisor(mut self, divisor: f64) -> Result<Self> {
        let all_ge_one = self.system.exponents.iter().all(|l| *l >= 1.0);
        if !(divisor == 4.0 || divisor == 2.0 && all_ge_one) {
            return Err(Error::InvalidParameter(format!("radius divisor {divisor} not admissible")));
        }
        self.divisor = divisor;
        Ok(self)
    }

    pub fn eval(&self, a: &[f64]) -> Result<f64> {
        if a.len() != self.domain.dim() {
            return Err(Error::DimensionMismatch { expected: self.domain.dim(), got: a.len() });
        }
        Ok(max_radius_at(self.domain.as_ref(), &self.boxed, a)? / self.divisor)
    }
}

/// Radius function on `domain` for `sys`; the divisor is 2 when all `λᵢ ≥ 1`
/// and 4 otherwise.
pub fn build_radius_function(sys: &BallSystem, domain: Arc<dyn Region>) -> Result<RadiusFunction> {
    if domain.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: domain.dim() });
    }
    let divisor = if sys.exponents.iter().all(|l| *l >= 1.0) { 2.0 } else { 4.0 };
    Ok(RadiusFunction { system: sys.clone(), boxed: sys.boxed(), domain, divisor })
}

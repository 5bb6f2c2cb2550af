//! Integration regions.
//!
//! Every region exposes a membership predicate and a bounding box; Monte
//! Carlo integration, containment tests and shrunken domains are all built on
//! that pair. Regions are immutable once constructed.

mod ball_system;
mod descriptor;
mod heatball;

use std::f64::consts::PI;
use std::fmt;

use rand::Rng as _;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::rng::{halton, Rng};

pub use ball_system::{build_radius_function, inradius, max_radius_at, shrink, BallSystem, Dilated, RadiusFunction, ShrunkenDomain};
pub use descriptor::RegionDescriptor;
pub use heatball::{
    heatball_bounding_box, heatball_contains, sample_heat_kernel_unit, sample_heatball_unit, slice_volume, Heatball,
    ModifiedHeatball,
};

pub type Point = Vec<f64>;

/// A bounded integration domain described by membership plus a bounding box.
pub trait Region: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn contains(&self, p: &[f64]) -> bool;

    /// A box containing the region (tight for boxes, balls and heatballs).
    fn bounding_box(&self) -> AxisBox;

    /// Lebesgue measure when it is known in closed form.
    fn exact_volume(&self) -> Option<f64> {
        None
    }

    /// The region itself when it is an axis-aligned box.
    fn as_box(&self) -> Option<AxisBox> {
        None
    }

    /// The region itself when it is a Euclidean ball.
    fn as_ball(&self) -> Option<EuclideanBall> {
        None
    }

    /// Deterministic points on (or near) the boundary; used for containment tests.
    fn boundary_points(&self, count: usize) -> Vec<Point> {
        let bb = self.bounding_box();
        (0..count * 8)
            .map(|i| bb.map_unit(&halton(i, self.dim())))
            .filter(|p| self.contains(p))
            .take(count)
            .collect()
    }

    fn label(&self) -> String;
}

/// Volume of the unit Euclidean ball in ℝ^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// True when the closure of `inner` lies in the open set `outer`.
///
/// Against a box the test is exact on bounding boxes; otherwise every sampled
/// boundary point of `inner` must be a member of `outer`.
pub fn region_within(inner: &dyn Region, outer: &dyn Region) -> bool {
    if let Some(ob) = outer.as_box() {
        let ib = inner.bounding_box();
        return ib.lo.iter().zip(&ob.lo).all(|(a, b)| a > b) && ib.hi.iter().zip(&ob.hi).all(|(a, b)| a < b);
    }
    inner.boundary_points(BOUNDARY_PROBES).iter().all(|p| outer.contains(p))
}

pub(crate) const BOUNDARY_PROBES: usize = 256;

/// Open axis-aligned box `(lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.is_empty() {
            return Err(Error::InvalidParameter("box must have dimension ≥ 1".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidParameter(format!("box requires lo < hi componentwise: {lo:?} / {hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// `(0,1)^d`.
    pub fn unit(d: usize) -> Self {
        Self { lo: vec![0.0; d], hi: vec![1.0; d] }
    }

    /// `(-h,h)^d`.
    pub fn symmetric(half_widths: &[f64]) -> Result<Self> {
        Self::new(half_widths.iter().map(|h| -h).collect(), half_widths.to_vec())
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).collect()
    }

    pub fn center(&self) -> Point {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Affine image of a point of `[0,1]^d`.
    pub fn map_unit(&self, u: &[f64]) -> Point {
        u.iter().zip(self.lo.iter().zip(&self.hi)).map(|(t, (a, b))| a + t * (b - a)).collect()
    }

    pub fn sample(&self, rng: &mut Rng) -> Point {
        self.lo.iter().zip(&self.hi).map(|(a, b)| a + rng.random::<f64>() * (b - a)).collect()
    }

    pub fn contains_closed(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    /// Cartesian product `self × other`.
    pub fn product(&self, other: &AxisBox) -> AxisBox {
        AxisBox {
            lo: self.lo.iter().chain(&other.lo).copied().collect(),
            hi: self.hi.iter().chain(&other.hi).copied().collect(),
        }
    }

    pub fn translate(&self, by: &[f64]) -> AxisBox {
        AxisBox {
            lo: self.lo.iter().zip(by).map(|(a, b)| a + b).collect(),
            hi: self.hi.iter().zip(by).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Region for AxisBox {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| *a < *x && *x < *b)
    }

    fn bounding_box(&self) -> AxisBox {
        self.clone()
    }

    fn exact_volume(&self) -> Option<f64> {
        Some(self.volume())
    }

    fn as_box(&self) -> Option<AxisBox> {
        Some(self.clone())
    }

    /// Corners (when d ≤ 12) followed by low-discrepancy points on the faces.
    fn boundary_points(&self, count: usize) -> Vec<Point> {
        let d = self.dim();
        let mut pts = Vec::new();
        if d <= 12 {
            for mask in 0..(1usize << d) {
                pts.push((0..d).map(|i| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] }).collect());
            }
        }
        let per_face = (count / (2 * d)).max(1);
        for axis in 0..d {
            for side in [self.lo[axis], self.hi[axis]] {
                for k in 0..per_face {
                    let mut p = self.map_unit(&halton(k, d));
                    p[axis] = side;
                    pts.push(p);
                }
            }
        }
        pts
    }

    fn label(&self) -> String {
        format!("box{:?}x{:?}", self.lo, self.hi)
    }
}

/// Open Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanBall {
    pub center: Point,
    pub radius: f64,
}

impl EuclideanBall {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
        }
        if center.is_empty() {
            return Err(Error::InvalidParameter("ball must have dimension ≥ 1".into()));
        }
        Ok(Self { center, radius })
    }

    pub fn unit(d: usize) -> Self {
        Self { center: vec![0.0; d], radius: 1.0 }
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.center.len()) * self.radius.powi(self.center.len() as i32)
    }

    pub fn sample(&self, rng: &mut Rng) -> Point {
        let z = sample_unit_ball(rng, self.center.len());
        self.center.iter().zip(z).map(|(c, zi)| c + self.radius * zi).collect()
    }
}

impl Region for EuclideanBall {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn contains(&self, p: &[f64]) -> bool {
        let d2: f64 = p.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        d2 < self.radius * self.radius
    }

    fn bounding_box(&self) -> AxisBox {
        AxisBox {
            lo: self.center.iter().map(|c| c - self.radius).collect(),
            hi: self.center.iter().map(|c| c + self.radius).collect(),
        }
    }

    fn exact_volume(&self) -> Option<f64> {
        Some(self.volume())
    }

    fn as_ball(&self) -> Option<EuclideanBall> {
        Some(self.clone())
    }

    fn boundary_points(&self, count: usize) -> Vec<Point> {
        sphere_points(self.center.len(), count)
            .into_iter()
            .map(|dir| self.center.iter().zip(dir).map(|(c, u)| c + self.radius * u).collect())
            .collect()
    }

    fn label(&self) -> String {
        format!("ball(c={:?}, r={})", self.center, self.radius)
    }
}

/// Uniform point in the unit ball of ℝ^d.
pub fn sample_unit_ball(rng: &mut Rng, d: usize) -> Point {
    let mut z: Point = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let radius = rng.random::<f64>().powf(1.0 / d as f64);
    let scale = if norm > 0.0 { radius / norm } else { 0.0 };
    z.iter_mut().for_each(|v| *v *= scale);
    z
}

/// Deterministic, roughly uniform unit vectors in ℝ^d.
pub fn sphere_points(d: usize, count: usize) -> Vec<Point> {
    if d == 1 {
        return vec![vec![-1.0], vec![1.0]];
    }
    let normal = Normal::standard();
    let mut out = Vec::with_capacity(count + 2 * d);
    for axis in 0..d {
        for sign in [-1.0, 1.0] {
            let mut e = vec![0.0; d];
            e[axis] = sign;
            out.push(e);
        }
    }
    for i in 0..count {
        let v: Point = halton(i, d).iter().map(|u| normal.inverse_cdf(u.clamp(1e-12, 1.0 - 1e-12))).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.push(v.iter().map(|x| x / norm).collect());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn box_validation() {
        assert!(AxisBox::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(AxisBox::new(vec![0.0], vec![1.0, 2.0]).is_err());
        let b = AxisBox::new(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap();
        assert_eq!(b.volume(), 4.0);
        assert!(b.contains(&[1.0, 0.0]));
        assert!(!b.contains(&[2.0, 0.0]));
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn ball_samples_stay_inside() {
        let b = EuclideanBall::new(vec![1.0, 2.0, 3.0], 0.5).unwrap();
        let mut rng = substream(3, 0);
        for _ in 0..1000 {
            let p = b.sample(&mut rng);
            let d2: f64 = p.iter().zip(&b.center).map(|(a, c)| (a - c) * (a - c)).sum();
            assert!(d2 <= 0.25 + 1e-15);
        }
    }

    #[test]
    fn containment_against_box_and_ball() {
        let outer = AxisBox::unit(2);
        let inner = EuclideanBall::new(vec![0.5, 0.5], 0.49).unwrap();
        assert!(region_within(&inner, &outer));
        let touching = EuclideanBall::new(vec![0.5, 0.5], 0.5).unwrap();
        assert!(!region_within(&touching, &outer));
        let disk = EuclideanBall::unit(2);
        let small = AxisBox::symmetric(&[0.7, 0.7]).unwrap();
        assert!(region_within(&small, &disk));
        let big = AxisBox::symmetric(&[0.71, 0.71]).unwrap();
        assert!(!region_within(&big, &disk));
    }

    #[test]
    fn sphere_points_are_unit() {
        for p in sphere_points(3, 50) {
            let n: f64 = p.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }
}

//! The comb set `K ⊆ [0,1]²`: thin horizontal rectangles of height `δ`
//! separated by `δ²/4`, built in exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::fields::{family, Combination, FamilyParams};
use crate::geometry::{AxisBox, Point, Region};
use crate::rng::{derive_seed, substream};

/// Exact rectangle `[x0, x1] × [t0, t1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalRect {
    pub x0: BigRational,
    pub x1: BigRational,
    pub t0: BigRational,
    pub t1: BigRational,
}

impl RationalRect {
    pub fn area(&self) -> BigRational {
        (&self.x1 - &self.x0) * (&self.t1 - &self.t0)
    }

    pub fn to_box(&self) -> AxisBox {
        AxisBox { lo: vec![f(&self.x0), f(&self.t0)], hi: vec![f(&self.x1), f(&self.t1)] }
    }
}

fn f(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Union of `⌊(4−δ²)/(4δ+δ²)⌋` rectangles `[δ/4, 1−δ/4] × [iσ−δ, iσ]`,
/// `σ = δ + δ²/4`, `i = 1, 2, …`.
#[derive(Debug, Clone)]
pub struct CombSet {
    pub delta: BigRational,
    pub rects: Vec<RationalRect>,
    boxes: Vec<AxisBox>,
}

impl CombSet {
    /// `delta` is converted to the exact binary rational it represents.
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::InvalidParameter(format!("comb needs 0 < δ < 1/2, got {delta}")));
        }
        let d = BigRational::from_float(delta).expect("finite delta");
        Ok(Self::from_rational(d))
    }

    pub fn from_rational(delta: BigRational) -> Self {
        let d2 = &delta * &delta;
        let count = ((rat(4, 1) - &d2) / (rat(4, 1) * &delta + &d2)).floor().to_integer();
        let count = count.to_usize().expect("comb count fits in usize");
        let step = &delta + &d2 / rat(4, 1);
        let x0 = &delta / rat(4, 1);
        let x1 = BigRational::one() - &x0;
        let rects: Vec<RationalRect> = (1..=count)
            .map(|i| {
                let t1 = &step * BigRational::from_integer(BigInt::from(i));
                RationalRect { x0: x0.clone(), x1: x1.clone(), t0: &t1 - &delta, t1 }
            })
            .collect();
        let boxes = rects.iter().map(RationalRect::to_box).collect();
        Self { delta, rects, boxes }
    }

    pub fn delta_f64(&self) -> f64 {
        f(&self.delta)
    }

    pub fn count(&self) -> usize {
        self.rects.len()
    }

    /// Sum of the rectangle areas.
    pub fn measure_exact(&self) -> BigRational {
        self.rects.iter().fold(BigRational::zero(), |acc, r| acc + r.area())
    }

    /// `δ(1 − δ/2)·count`.
    pub fn measure_formula(&self) -> BigRational {
        &self.delta * (BigRational::one() - &self.delta / rat(2, 1)) * BigRational::from_integer(BigInt::from(self.count()))
    }

    /// `|K| > 1 − 2δ`, decided exactly.
    pub fn exceeds_lower_bound(&self) -> bool {
        self.measure_exact() > BigRational::one() - rat(2, 1) * &self.delta
    }

    /// Smallest vertical gap between consecutive rectangles.
    pub fn min_gap(&self) -> Option<BigRational> {
        self.rects.windows(2).map(|w| &w[1].t0 - &w[0].t1).min()
    }

    /// All rectangles lie in `[0,1]²`.
    pub fn inside_unit_square(&self) -> bool {
        let (zero, one) = (BigRational::zero(), BigRational::one());
        self.rects.iter().all(|r| r.x0 >= zero && r.x1 <= one && r.t0 >= zero && r.t1 <= one)
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }

    /// `t`-midpoint of each rectangle.
    pub fn midpoints(&self) -> Vec<f64> {
        self.rects.iter().map(|r| f(&((&r.t0 + &r.t1) / rat(2, 1)))).collect()
    }

    /// Index of the rectangle containing `p` (closed rectangles).
    pub fn component(&self, p: &[f64]) -> Option<usize> {
        self.boxes.iter().position(|b| b.contains_closed(p))
    }

    /// `samples` uniform points in every rectangle, seeded per rectangle.
    pub fn sample_points(&self, samples: usize, seed: u64) -> Vec<Point> {
        let mut pts = Vec::with_capacity(samples * self.count());
        for (i, b) in self.boxes.iter().enumerate() {
            let mut rng = substream(derive_seed(seed, "comb", i as u64), 0);
            for _ in 0..samples {
                pts.push(b.lo.iter().zip(&b.hi).map(|(a, c)| a + rng.random::<f64>() * (c - a)).collect());
            }
        }
        pts
    }

    /// Regular `nx × nt` grid (cell centres) in every rectangle.
    pub fn grid_points(&self, nx: usize, nt: usize) -> Vec<Point> {
        let mut pts = Vec::with_capacity(nx * nt * self.count());
        for b in &self.boxes {
            for i in 0..nx {
                for j in 0..nt {
                    pts.push(b.map_unit(&[(i as f64 + 0.5) / nx as f64, (j as f64 + 0.5) / nt as f64]));
                }
            }
        }
        pts
    }
}

impl Region for CombSet {
    fn dim(&self) -> usize {
        2
    }

    fn contains(&self, p: &[f64]) -> bool {
        self.component(p).is_some()
    }

    fn bounding_box(&self) -> AxisBox {
        let first = &self.boxes[0];
        let last = &self.boxes[self.boxes.len() - 1];
        AxisBox { lo: first.lo.clone(), hi: vec![first.hi[0], last.hi[1]] }
    }

    fn exact_volume(&self) -> Option<f64> {
        Some(f(&self.measure_exact()))
    }

    fn boundary_points(&self, count: usize) -> Vec<Point> {
        let per = (count / self.count()).max(4);
        self.boxes.iter().flat_map(|b| b.boundary_points(per)).collect()
    }

    fn label(&self) -> String {
        format!("comb(delta={})", self.delta_f64())
    }
}

/// Piecewise-constant target `w₁ = c²/2` on each rectangle, `c` its `t`-midpoint.
#[derive(Debug, Clone)]
pub struct CombTarget {
    pub levels: Vec<f64>,
    pub comb: CombSet,
}

impl CombTarget {
    pub fn eval(&self, p: &[f64]) -> Option<f64> {
        self.comb.component(p).map(|i| self.levels[i])
    }

    /// Bound `δ + δ²/8` on `|v − w₁|` over the `δ²/16`-neighbourhood.
    pub fn approximation_bound(&self) -> f64 {
        let d = self.comb.delta_f64();
        d + d * d / 8.0
    }
}

/// `v(x,t) = t²/2` (so `Δv ≡ 1`) and its locally constant approximant.
pub fn ccw_target(comb: &CombSet) -> (Combination, CombTarget) {
    let v = family("half_t_squared", &FamilyParams::new()).expect("registered family");
    let levels = comb.midpoints().iter().map(|c| c * c / 2.0).collect();
    (v, CombTarget { levels, comb: comb.clone() })
}

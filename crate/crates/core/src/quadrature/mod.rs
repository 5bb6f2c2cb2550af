//! Integration over regions, level-set measures, p-means and L^p quasi-norms.
//!
//! Monte Carlo integrals sample uniformly from a region's bounding box and
//! keep the members (hit-or-miss). Estimates are reproducible from
//! `(seed, budget)` alone; see [`crate::rng`].

mod gauss;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::rng::{halton, map_batches, Welford};

pub use gauss::{gauss_legendre, product_gauss};

/// Smallest accepted Monte Carlo budget.
pub const MIN_BUDGET: usize = 1000;

/// Floor applied to `log|f|` in geometric means.
pub const LOG_CLAMP: f64 = -700.0;

const SUP_GRID_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MonteCarlo,
    ProductGauss,
}

/// An integral estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub method: Method,
    /// Coarse/fine difference for product rules.
    pub refinement_diff: Option<f64>,
}

impl QuadResult {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0, samples: 0, method: Method::ProductGauss, refinement_diff: Some(0.0) }
    }

    /// `|self − target| ≤ k·SE` (with an absolute floor for exact results).
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error + 1e-12 * target.abs().max(1.0)
    }
}

/// Generalised mean `(1/|Ω| ∫|f|^p)^{1/p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PMeanReport {
    pub p: f64,
    pub value: f64,
    pub std_error: f64,
    pub divergent: bool,
    pub samples: usize,
    /// Estimated sublevel exponent of `|f|` near its infimum (p < 0 only).
    pub sublevel_exponent: Option<f64>,
}

pub(crate) fn check_budget(budget: usize) -> Result<()> {
    if budget < MIN_BUDGET {
        return Err(Error::BudgetTooSmall { got: budget, min: MIN_BUDGET });
    }
    Ok(())
}

struct Batch {
    hits: Welford,
    inside: usize,
    accepted: Vec<f64>,
}

/// Draws `budget` points from the bounding box and evaluates `f` at members.
fn sample_region<F>(region: &dyn Region, budget: usize, seed: u64, keep: bool, f: F) -> Vec<Batch>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let bb = region.bounding_box();
    let is_box = region.as_box().is_some();
    map_batches(budget, seed, |rng, size| {
        let mut hits = Welford::new();
        let mut inside = 0;
        let mut accepted = Vec::new();
        let mut p = vec![0.0; bb.lo.len()];
        for _ in 0..size {
            for (k, x) in p.iter_mut().enumerate() {
                *x = bb.lo[k] + rng.random::<f64>() * (bb.hi[k] - bb.lo[k]);
            }
            if is_box || region.contains(&p) {
                let v = f(&p);
                inside += 1;
                hits.push(v);
                if keep {
                    accepted.push(v);
                }
            } else {
                hits.push(0.0);
            }
        }
        Batch { hits, inside, accepted }
    })
}

fn merged_hits(batches: &[Batch]) -> Welford {
    batches.iter().fold(Welford::new(), |acc, b| acc.merge(&b.hits))
}

/// `∫_R f` by hit-or-miss Monte Carlo over the bounding box.
pub fn integrate<F>(f: F, region: &dyn Region, budget: usize, seed: u64) -> Result<QuadResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_budget(budget)?;
    let batches = sample_region(region, budget, seed, false, |p| f(p));
    if batches.iter().all(|b| b.inside == 0) {
        return Err(Error::EmptyRegion(budget));
    }
    let w = merged_hits(&batches);
    let vol = region.bounding_box().volume();
    Ok(QuadResult {
        value: vol * w.mean,
        std_error: vol * w.std_error(),
        samples: budget,
        method: Method::MonteCarlo,
        refinement_diff: None,
    })
}

/// `|{x ∈ R : pred(x)}|`.
pub fn measure<P>(region: &dyn Region, pred: P, budget: usize, seed: u64) -> Result<QuadResult>
where
    P: Fn(&[f64]) -> bool + Sync,
{
    integrate(|x| if pred(x) { 1.0 } else { 0.0 }, region, budget, seed)
}

/// `|f|` at the accepted samples, in draw order.
fn accepted_abs_values<F>(f: &F, region: &dyn Region, budget: usize, seed: u64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let batches = sample_region(region, budget, seed, true, |p| f(p).abs());
    let vals: Vec<f64> = batches.into_iter().flat_map(|b| b.accepted).collect();
    if vals.is_empty() {
        return Err(Error::EmptyRegion(budget));
    }
    Ok(vals)
}

/// `|f|` on a deterministic low-discrepancy point set of the region.
fn grid_abs_values<F: Fn(&[f64]) -> f64>(f: &F, region: &dyn Region) -> Vec<f64> {
    let bb = region.bounding_box();
    let d = bb.lo.len();
    if d > 12 {
        return Vec::new();
    }
    (0..SUP_GRID_POINTS)
        .map(|i| bb.map_unit(&halton(i, d)))
        .filter(|p| region.contains(p))
        .map(|p| f(&p).abs())
        .collect()
}

fn welford_of(values: impl Iterator<Item = f64>) -> Welford {
    let mut w = Welford::new();
    values.for_each(|v| w.push(v));
    w
}

/// Estimated exponent `δ` of `|{|f| ≤ ε}| ≈ Cε^δ` near the infimum of `|f|`,
/// with its standard error. `None` when `|f|` is flat there; `Some((0, 0))`
/// when `|f|` vanishes on a set of positive sampled measure.
fn sublevel_exponent(values: &[f64]) -> Option<(f64, f64)> {
    const TAIL: f64 = 0.05;
    const LOW_COUNT: usize = 50;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n_hi = ((sorted.len() as f64 * TAIL) as usize).max(LOW_COUNT + 1).min(sorted.len());
    let eps_hi = sorted[n_hi - 1];
    if eps_hi == 0.0 {
        return Some((0.0, 0.0));
    }
    let n_lo = LOW_COUNT.min(n_hi);
    let eps_lo = sorted[n_lo - 1];
    if !(eps_lo > 0.0) {
        return Some((0.0, 0.0));
    }
    let log_ratio = (eps_hi / eps_lo).ln();
    if log_ratio <= 0.0 {
        return None;
    }
    let delta = (n_hi as f64 / n_lo as f64).ln() / log_ratio;
    let se = (1.0 / n_lo as f64 - 1.0 / n_hi as f64).max(0.0).sqrt() / log_ratio;
    Some((delta, se))
}

/// Normalised p-mean over `region` for `p ∈ [−∞, ∞]`.
///
/// For `p < 0` the mean is reported as 0 (and `divergent` set) when the
/// sampled sublevel exponent of `|f|` does not exceed `−p` by three
/// standard errors, i.e. when `∫|f|^p` is not detectably finite.
pub fn pmean<F>(f: F, region: &dyn Region, p: f64, budget: usize, seed: u64) -> Result<PMeanReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_budget(budget)?;
    if p.is_nan() {
        return Err(Error::InvalidParameter("p must not be NaN".into()));
    }
    let vals = accepted_abs_values(&f, region, budget, seed)?;
    let samples = vals.len();
    let base = PMeanReport { p, value: 0.0, std_error: 0.0, divergent: false, samples, sublevel_exponent: None };

    if p.is_infinite() {
        let grid = grid_abs_values(&f, region);
        let all = vals.iter().chain(&grid).copied();
        let value = if p > 0.0 { all.fold(0.0, f64::max) } else { all.fold(f64::INFINITY, f64::min) };
        return Ok(PMeanReport { value, ..base });
    }

    if p == 0.0 {
        let clamp = |v: f64| if v > 0.0 { v.ln().max(LOG_CLAMP) } else { LOG_CLAMP };
        let half = samples / 2;
        let clamped = |s: &[f64]| s.iter().any(|v| !(*v > 0.0) || v.ln() < LOG_CLAMP);
        if clamped(&vals[..half]) && clamped(&vals[half..]) {
            return Ok(PMeanReport { value: 0.0, divergent: true, ..base });
        }
        let w = welford_of(vals.iter().map(|v| clamp(*v)));
        let value = w.mean.exp();
        return Ok(PMeanReport { value, std_error: value * w.std_error(), ..base });
    }

    let mut exponent = None;
    if p < 0.0 {
        match sublevel_exponent(&vals) {
            Some((delta, se)) => {
                exponent = Some(delta);
                if delta + p <= 3.0 * se {
                    return Ok(PMeanReport { divergent: true, sublevel_exponent: exponent, ..base });
                }
            }
            None => {}
        }
    }
    let w = welford_of(vals.iter().map(|v| v.powf(p)));
    let value = w.mean.powf(1.0 / p);
    let std_error = (value / (p.abs() * w.mean)) * w.std_error();
    Ok(PMeanReport { value, std_error, sublevel_exponent: exponent, ..base })
}

/// Unnormalised `(∫_R |f|^p)^{1/p}` for `p ∈ (0, ∞]`; `p = ∞` is the sampled
/// supremum (a lower estimate, reported with zero standard error).
pub fn lp_quasinorm<F>(f: F, region: &dyn Region, p: f64, budget: usize, seed: u64) -> Result<QuadResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("quasi-norm needs p > 0, got {p}")));
    }
    check_budget(budget)?;
    if p.is_infinite() {
        let r = pmean(f, region, p, budget, seed)?;
        return Ok(QuadResult {
            value: r.value,
            std_error: 0.0,
            samples: r.samples,
            method: Method::MonteCarlo,
            refinement_diff: None,
        });
    }
    let q = integrate(|x| f(x).abs().powf(p), region, budget, seed)?;
    Ok(power_result(q, 1.0 / p))
}

/// `q^e` with the delta-method standard error.
pub(crate) fn power_result(q: QuadResult, e: f64) -> QuadResult {
    let value = q.value.max(0.0).powf(e);
    let std_error = if q.value > 0.0 { (e * value / q.value).abs() * q.std_error } else { 0.0 };
    QuadResult { value, std_error, ..q }
}

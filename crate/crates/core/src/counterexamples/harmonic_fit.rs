//! Least-squares harmonic approximation of the comb target and the
//! resulting field `u = v − fit` with `Δu ≡ 1`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::comb::{CombSet, CombTarget};
use crate::error::{Error, Result};
use crate::fields::{Combination, ScalarField, Term};

const RANK_TOL: f64 = 1e-12;

/// `Σ_k a_k Re(w^k) + b_k Im(w^k)` with `w = (z − z0)/ρ`, `z0 = ½ + ½i`,
/// `ρ = 2^{-1/2}` (so `|w| ≤ 1` on the unit square).
#[derive(Debug, Clone, Serialize)]
pub struct HarmonicFit {
    pub degree: u32,
    /// `[c, a_1, b_1, …, a_N, b_N]`.
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual on the fitting samples.
    pub rms_residual: f64,
    /// Max residual on an independent dense grid of `K`.
    pub sup_residual: f64,
    pub samples: usize,
}

fn z0() -> Complex64 {
    Complex64::new(0.5, 0.5)
}

fn basis_row(p: &[f64], degree: u32) -> Vec<f64> {
    let w = (Complex64::new(p[0], p[1]) - z0()) / FRAC_1_SQRT_2;
    let mut row = Vec::with_capacity(2 * degree as usize + 1);
    row.push(1.0);
    let mut wk = Complex64::new(1.0, 0.0);
    for _ in 0..degree {
        wk *= w;
        row.push(wk.re);
        row.push(wk.im);
    }
    row
}

impl HarmonicFit {
    /// The fit as a field on ℝ²; every non-constant term is exactly harmonic.
    pub fn to_field(&self) -> Combination {
        let mut terms = vec![Term::Const(self.coefficients[0])];
        for k in 1..=self.degree {
            let i = 2 * k as usize - 1;
            terms.push(Term::ComplexPower {
                axes: (0, 1),
                z0: z0(),
                rho: FRAC_1_SQRT_2,
                k,
                c_re: self.coefficients[i],
                c_im: self.coefficients[i + 1],
            });
        }
        Combination::new(2, terms, format!("harmonic-fit(deg={})", self.degree))
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        basis_row(p, self.degree).iter().zip(&self.coefficients).map(|(b, c)| b * c).sum()
    }
}

/// Fits the harmonic basis of `degree` to `target` at `samples_per_rect`
/// seeded points per rectangle of `comb`.
pub fn fit_harmonic(
    target: &CombTarget,
    comb: &CombSet,
    degree: u32,
    samples_per_rect: usize,
    seed: u64,
) -> Result<HarmonicFit> {
    let pts = comb.sample_points(samples_per_rect, seed);
    let cols = 2 * degree as usize + 1;
    if pts.len() < cols {
        return Err(Error::RankDeficient { rank: pts.len(), cols });
    }
    let a = DMatrix::from_fn(pts.len(), cols, |i, j| basis_row(&pts[i], degree)[j]);
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| target.eval(p).expect("sample lies in K")));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > RANK_TOL * smax).count();
    if rank < cols {
        return Err(Error::RankDeficient { rank, cols });
    }
    let x = svd.solve(&b, RANK_TOL * smax).map_err(|e| Error::Precondition(e.to_string()))?;
    let r = &a * &x - &b;
    let rms_residual = (r.norm_squared() / pts.len() as f64).sqrt();
    let mut fit = HarmonicFit { degree, coefficients: x.iter().copied().collect(), rms_residual, sup_residual: 0.0, samples: pts.len() };
    fit.sup_residual = comb
        .grid_points(97, 13)
        .iter()
        .map(|p| (fit.eval(p) - target.eval(p).expect("grid lies in K")).abs())
        .fold(0.0, f64::max);
    Ok(fit)
}

/// `u = v − fit` together with the tolerance `τ = sup residual + δ + δ²/8`.
#[derive(Debug, Clone)]
pub struct AssembledCounterexample {
    pub u: Combination,
    pub fit: HarmonicFit,
    pub tau: f64,
}

impl AssembledCounterexample {
    pub fn new(v: &Combination, fit: HarmonicFit, delta: f64) -> Self {
        let u = v.minus(&fit.to_field());
        let tau = fit.sup_residual + delta + delta * delta / 8.0;
        Self { u, fit, tau }
    }

    /// `Δu ≡ 1` term by term: the `t²/2` part has Laplacian exactly 1 and
    /// every fitted term has exactly zero Laplacian at the probe points.
    pub fn laplacian_certified(&self, probes: &[Vec<f64>]) -> bool {
        let mut one = 0;
        for t in &self.u.terms {
            let single = Combination::new(2, vec![t.clone()], "term");
            let traces: Vec<f64> = probes
                .iter()
                .map(|p| {
                    let h = single.hessian(p);
                    h[(0, 0)] + h[(1, 1)]
                })
                .collect();
            if traces.iter().all(|v| *v == 1.0) {
                one += 1;
            } else if traces.iter().any(|v| *v != 0.0) {
                return false;
            }
        }
        one == 1
    }
}

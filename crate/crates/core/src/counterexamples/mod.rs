//! Constructions showing where uniform estimates fail: the comb set with its
//! harmonic witness, the Hessian-determinant family `u_N`, and the lifting of
//! L^p bounds to product domains.

mod comb;
mod harmonic_fit;

use std::f64::consts::E;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{family, neg_hessian_det, FamilyParams, ScalarField};
use crate::geometry::AxisBox;
use crate::quadrature::lp_quasinorm;

pub use comb::{ccw_target, CombSet, CombTarget, RationalRect};
pub use harmonic_fit::{fit_harmonic, AssembledCounterexample, HarmonicFit};

/// Relative allowance for floating-point rounding in exact comparisons.
const REL_SLACK: f64 = 1e-12;

/// Grid audit of `u_N(x,y) = N⁻¹(eˣ sin(Ny) + e)` on `[0,1]²`.
#[derive(Debug, Clone, Serialize)]
pub struct HessianFamilyReport {
    pub n: f64,
    pub c: f64,
    pub grid: usize,
    /// `min −det Hess u_N` over the grid.
    pub min_neg_det: f64,
    /// `max |−det Hess u_N − e^{2x}| / e^{2x}` over the grid.
    pub max_rel_error: f64,
    /// `max |u_N|` over the grid.
    pub sup_abs: f64,
    /// Closed-form bound `2e/N ≥ sup |u_N|`.
    pub sup_bound: f64,
    /// `{|u_N| ≥ c}` is empty (certified by `sup_bound < c`).
    pub superlevel_empty: bool,
}

pub fn hessian_family_check(n: f64, c: f64, grid: usize) -> Result<HessianFamilyReport> {
    if !(c > 0.0) || grid < 2 {
        return Err(Error::InvalidParameter(format!("need c > 0 and grid ≥ 2, got c={c}, grid={grid}")));
    }
    let mut params = FamilyParams::new();
    params.insert("N".into(), n);
    let u = family("ccw_hessian", &params)?;
    let step = 1.0 / (grid - 1) as f64;
    let (mut min_neg_det, mut max_rel_error, mut sup_abs) = (f64::INFINITY, 0.0f64, 0.0f64);
    for i in 0..grid {
        for j in 0..grid {
            let p = [i as f64 * step, j as f64 * step];
            let d = neg_hessian_det(&u, &p)?;
            let exact = (2.0 * p[0]).exp();
            min_neg_det = min_neg_det.min(d);
            max_rel_error = max_rel_error.max((d - exact).abs() / exact);
            sup_abs = sup_abs.max(u.value(&p).abs());
        }
    }
    let sup_bound = 2.0 * E / n;
    Ok(HessianFamilyReport {
        n,
        c,
        grid,
        min_neg_det,
        max_rel_error,
        sup_abs,
        sup_bound,
        superlevel_empty: sup_bound < c && sup_abs < c,
    })
}

/// `‖v‖_{L^p(Ω₁×Ω₂)}` for `v(x,y) = u(x)` against `c|Ω₂|^{1/p}`.
#[derive(Debug, Clone, Serialize)]
pub struct LiftReport {
    pub p: f64,
    pub c: f64,
    pub base_norm: f64,
    pub base_std_error: f64,
    pub lifted_norm: f64,
    pub lifted_std_error: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks the product-domain lower bound; fails with `Precondition` when
/// `‖u‖_{L^p(Ω₁)} ≥ c` is not confirmed first.
pub fn lift_check(
    u: &dyn ScalarField,
    omega1: &AxisBox,
    omega2: &AxisBox,
    p: f64,
    c: f64,
    budget: usize,
    seed: u64,
) -> Result<LiftReport> {
    let d1 = omega1.lo.len();
    if u.dim() != d1 {
        return Err(Error::DimensionMismatch { expected: d1, got: u.dim() });
    }
    let base = lp_quasinorm(|x| u.value(x), omega1, p, budget, seed)?;
    if base.value + 3.0 * base.std_error < c * (1.0 - REL_SLACK) {
        return Err(Error::Precondition(format!("base norm {} is below c = {c}", base.value)));
    }
    let product = omega1.product(omega2);
    let lifted = lp_quasinorm(|z| u.value(&z[..d1]), &product, p, budget, seed)?;
    let bound = c * omega2.volume().powf(1.0 / p);
    Ok(LiftReport {
        p,
        c,
        base_norm: base.value,
        base_std_error: base.std_error,
        lifted_norm: lifted.value,
        lifted_std_error: lifted.std_error,
        bound,
        holds: lifted.value + 3.0 * lifted.std_error >= bound * (1.0 - REL_SLACK),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{laplacian, random_laplace_field};
    use crate::rng::substream;

    #[test]
    fn hessian_family_examples() {
        let r = hessian_family_check(10.0, 0.1, 64).unwrap();
        assert!((r.min_neg_det - 1.0).abs() < 1e-14);
        assert!(r.max_rel_error < 1e-14);
        assert!(!r.superlevel_empty);
        let r100 = hessian_family_check(100.0, 0.1, 64).unwrap();
        assert!(r100.superlevel_empty && r100.sup_bound < 0.0544);
        let r1000 = hessian_family_check(1000.0, 0.1, 64).unwrap();
        assert!(r.sup_abs > r100.sup_abs && r100.sup_abs > r1000.sup_abs);
        assert!(hessian_family_check(10.0, 0.0, 64).is_err());
    }

    #[test]
    fn lifting_constant_and_scaling() {
        let mut params = FamilyParams::new();
        params.insert("c".into(), 0.3);
        let u = family("constant", &params).unwrap();
        let (o1, o2) = (AxisBox::unit(1), AxisBox::unit(1));
        let r = lift_check(&u, &o1, &o2, 0.5, 0.3, 10_000, 1).unwrap();
        assert!((r.lifted_norm - r.bound).abs() < 1e-12 && r.holds);
        let o2b = AxisBox::new(vec![0.0], vec![2.0]).unwrap();
        let rb = lift_check(&u, &o1, &o2b, 0.5, 0.3, 10_000, 1).unwrap();
        assert!((rb.bound / r.bound - 4.0).abs() < 1e-12);
        assert!(lift_check(&u, &o1, &o2, 0.5, 0.5, 10_000, 1).is_err());
    }

    #[test]
    fn lifting_a_laplace_field() {
        let mut rng = substream(2, 0);
        let u = random_laplace_field(&mut rng, 2, &[0.5, 0.5]);
        let lifted = u.lift(1);
        assert!((laplacian(&lifted, &[0.2, 0.3, 0.9]) - 1.0).abs() < 1e-12);
        let sq = AxisBox::unit(2);
        let base = lp_quasinorm(|x| u.value(x), &sq, 0.5, 50_000, 3).unwrap();
        let r = lift_check(&u, &sq, &AxisBox::unit(1), 0.5, 0.5 * base.value, 50_000, 3).unwrap();
        assert!(r.holds);
    }
}

//! Differential operators on [`ScalarField`]s.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ScalarField;
use crate::error::{Error, Result};

/// Trace of the Hessian; for time-split fields only the spatial block.
pub fn laplacian(f: &dyn ScalarField, x: &[f64]) -> f64 {
    let h = f.hessian(x);
    let d = if f.is_time_split() { f.dim() - 1 } else { f.dim() };
    (0..d).map(|i| h[(i, i)]).sum()
}

/// `Hu = Δ_x u − ∂_t u`.
pub fn heat_op(f: &dyn ScalarField, p: &[f64]) -> Result<f64> {
    if !f.is_time_split() {
        return Err(Error::NotTimeSplit);
    }
    let n = f.dim() - 1;
    Ok(laplacian(f, p) - f.gradient(p)[n])
}

/// `(u_xy)² − u_xx·u_yy` in two dimensions.
pub fn neg_hessian_det(f: &dyn ScalarField, x: &[f64]) -> Result<f64> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: f.dim() });
    }
    let h = f.hessian(x);
    Ok(h[(0, 1)] * h[(0, 1)] - h[(0, 0)] * h[(1, 1)])
}

/// Constant-coefficient operator `Σ a_β ∂^β` of order at most two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearOperator {
    pub dim: usize,
    /// Multi-index (exponent per coordinate) and coefficient.
    pub terms: Vec<(Vec<u32>, f64)>,
}

impl LinearOperator {
    pub fn new(dim: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        for (beta, _) in &terms {
            if beta.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: beta.len() });
            }
        }
        Ok(Self { dim, terms })
    }

    fn unit(dim: usize, axes: &[usize]) -> Vec<u32> {
        let mut b = vec![0; dim];
        axes.iter().for_each(|a| b[*a] += 1);
        b
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, terms: vec![(vec![0; dim], 1.0)] }
    }

    pub fn partial(dim: usize, axis: usize) -> Self {
        Self { dim, terms: vec![(Self::unit(dim, &[axis]), 1.0)] }
    }

    pub fn mixed(dim: usize, i: usize, j: usize) -> Self {
        Self { dim, terms: vec![(Self::unit(dim, &[i, j]), 1.0)] }
    }

    pub fn laplacian(dim: usize) -> Self {
        Self { dim, terms: (0..dim).map(|i| (Self::unit(dim, &[i, i]), 1.0)).collect() }
    }

    /// `Δ_x − ∂_t` on ℝ^{n+1}.
    pub fn heat(n: usize) -> Self {
        let mut terms: Vec<(Vec<u32>, f64)> = (0..n).map(|i| (Self::unit(n + 1, &[i, i]), 1.0)).collect();
        terms.push((Self::unit(n + 1, &[n]), -1.0));
        Self { dim: n + 1, terms }
    }

    pub fn order(&self) -> u32 {
        self.terms.iter().map(|(b, _)| b.iter().sum()).max().unwrap_or(0)
    }

    /// Formal adjoint: `a_β ↦ (−1)^{|β|} a_β`.
    pub fn adjoint(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(b, a)| {
                let sign = if b.iter().sum::<u32>() % 2 == 0 { 1.0 } else { -1.0 };
                (b.clone(), sign * a)
            })
            .collect();
        Self { dim: self.dim, terms }
    }

    /// `(Du)(x)` from the exact derivatives of `u`.
    pub fn apply(&self, u: &dyn ScalarField, x: &[f64]) -> Result<f64> {
        if u.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: u.dim() });
        }
        if self.order() > 2 {
            return Err(Error::Unsupported(format!("operator of order {}", self.order())));
        }
        let needs = |k: u32| self.terms.iter().any(|(b, _)| b.iter().sum::<u32>() == k);
        let value = if needs(0) { u.value(x) } else { 0.0 };
        let grad = if needs(1) { u.gradient(x) } else { Vec::new() };
        let hess = if needs(2) { u.hessian(x) } else { DMatrix::zeros(0, 0) };
        let mut out = 0.0;
        for (b, a) in &self.terms {
            let axes: Vec<usize> = b.iter().enumerate().flat_map(|(i, k)| std::iter::repeat_n(i, *k as usize)).collect();
            out += a * match axes.as_slice() {
                [] => value,
                [i] => grad[*i],
                [i, j] => hess[(*i, *j)],
                _ => unreachable!(),
            };
        }
        Ok(out)
    }
}

/// `exp(−1/(1−|x−c|²/r²))` inside the ball, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpFunction {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BumpFunction {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("bump radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    fn q(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>() / (self.radius * self.radius)
    }

    /// `(g, g', g'')` for `g(q) = exp(−1/(1−q))`.
    fn profile(q: f64) -> (f64, f64, f64) {
        if q >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let s = 1.0 - q;
        let g = (-1.0 / s).exp();
        (g, -g / (s * s), g * (1.0 / s.powi(4) - 2.0 / s.powi(3)))
    }
}

impl ScalarField for BumpFunction {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        Self::profile(self.q(x)).0
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (_, g1, _) = Self::profile(self.q(x));
        let r2 = self.radius * self.radius;
        x.iter().zip(&self.center).map(|(a, c)| g1 * 2.0 * (a - c) / r2).collect()
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let (_, g1, g2) = Self::profile(self.q(x));
        let r2 = self.radius * self.radius;
        let dq: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| 2.0 * (a - c) / r2).collect();
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| g2 * dq[i] * dq[j] + if i == j { 2.0 * g1 / r2 } else { 0.0 })
    }

    fn name(&self) -> String {
        format!("bump(c={:?}, r={})", self.center, self.radius)
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::*;
    use super::super::{family, Combination, FamilyParams, Term};
    use super::*;

    fn params(kv: &[(&str, f64)]) -> FamilyParams {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn laplacian_examples() {
        for n in 1..=4 {
            let q = family("quadratic", &params(&[("n", n as f64)])).unwrap();
            assert!((laplacian(&q, &vec![0.3; n]) - 1.0).abs() < 1e-15);
        }
        let h = family("harmonic", &params(&[("k", 2.0)])).unwrap();
        assert_eq!(laplacian(&h, &[0.4, -1.2]), 0.0);

        // Δu_N = N⁻¹eˣ sin(Ny)(1 − N²)
        let n = 7.0;
        let u = family("ccw_hessian", &params(&[("N", n)])).unwrap();
        let (x, y) = (0.3f64, 0.7f64);
        let oracle = x.exp() * (n * y).sin() * (1.0 - n * n) / n;
        assert!(close(laplacian(&u, &[x, y]), oracle, 1e-13));
    }

    #[test]
    fn heat_operator_examples() {
        let v = family("neg_time", &params(&[("n", 2.0)])).unwrap();
        assert_eq!(heat_op(&v, &[0.1, 0.2, 0.3]).unwrap(), 1.0);
        let phi = family("heat_kernel", &params(&[("n", 1.0)])).unwrap();
        assert!(heat_op(&phi, &[0.3, 0.2]).unwrap().abs() < 1e-12);
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.5, 0.0]));
        let q = Combination::new(3, vec![Term::Quadratic(a)], "|x|²/4").time_split();
        assert!((heat_op(&q, &[0.2, 0.4, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        let plain = family("quadratic", &params(&[("n", 2.0)])).unwrap();
        assert!(matches!(heat_op(&plain, &[0.0, 0.0]), Err(Error::NotTimeSplit)));
    }

    #[test]
    fn neg_hessian_det_examples() {
        let u = family("ccw_hessian", &params(&[("N", 10.0)])).unwrap();
        for (x, y) in [(0.0, 0.0), (0.3, 0.7), (1.0, 0.25)] {
            let d = neg_hessian_det(&u, &[x, y]).unwrap();
            assert!(((d - (2.0 * x).exp()) / (2.0 * x).exp()).abs() < 1e-14);
        }
        let para = Combination::new(2, vec![Term::Quadratic(DMatrix::from_diagonal_element(2, 2, 2.0))], "p");
        assert_eq!(neg_hessian_det(&para, &[0.1, 0.2]).unwrap(), -4.0);
        let saddle = Combination::new(2, vec![Term::Quadratic(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))], "xy");
        assert_eq!(neg_hessian_det(&saddle, &[0.1, 0.2]).unwrap(), 1.0);
        let q3 = family("quadratic", &params(&[("n", 3.0)])).unwrap();
        assert!(neg_hessian_det(&q3, &[0.0; 3]).is_err());
    }

    #[test]
    fn adjoint_sign_rule() {
        let lap = LinearOperator::laplacian(2);
        assert_eq!(lap.adjoint(), lap);
        let dt = LinearOperator::partial(2, 1);
        assert_eq!(dt.adjoint().terms[0].1, -1.0);
        let h = LinearOperator::heat(1);
        let hs = h.adjoint();
        assert_eq!(hs.terms, vec![(vec![2, 0], 1.0), (vec![0, 1], 1.0)]);
        assert_eq!(hs.adjoint(), h);
        assert_eq!(h.order(), 2);
    }

    #[test]
    fn apply_matches_named_operators() {
        let u = family("ccw_hessian", &params(&[("N", 3.0)])).unwrap();
        let x = [0.2, 0.9];
        let lap = LinearOperator::laplacian(2).apply(&u, &x).unwrap();
        assert!(close(lap, laplacian(&u, &x), 1e-14));
        let mixed = LinearOperator::mixed(2, 0, 1).apply(&u, &x).unwrap();
        assert!(close(mixed, u.hessian(&x)[(0, 1)], 1e-15));
        assert!(LinearOperator::new(2, vec![(vec![3, 0], 1.0)]).unwrap().apply(&u, &x).is_err());
    }

    #[test]
    fn bump_derivatives_and_support() {
        let b = BumpFunction::new(vec![0.5, 0.5], 0.4).unwrap();
        assert_eq!(b.value(&[0.5, 0.95]), 0.0);
        assert!((b.value(&[0.5, 0.5]) - (-1.0f64).exp()).abs() < 1e-15);
        for x in [[0.6, 0.55], [0.3, 0.7], [0.5, 0.2]] {
            let g = b.gradient(&x);
            let gf = fd_gradient(&b, &x, 1e-6);
            let h = b.hessian(&x);
            let hf = fd_hessian(&b, &x, 1e-6);
            for i in 0..2 {
                assert!(close(g[i], gf[i], 1e-6));
                for j in 0..2 {
                    assert!(close(h[(i, j)], hf[(i, j)], 1e-5), "{} vs {}", h[(i, j)], hf[(i, j)]);
                }
            }
        }
    }
}

//! Scalar fields with exact first and second derivatives.
//!
//! Fields are finite sums of [`Term`]s whose derivatives are written out in
//! closed form. Finite differences appear only in tests, as a cross-check.

mod families;
mod operators;

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use families::{
    family, random_harmonic_poly, random_heat_field, random_laplace_field, random_smooth_field, random_temperature,
    FamilyParams,
};
pub use operators::{heat_op, laplacian, neg_hessian_det, BumpFunction, LinearOperator};

/// A real function on ℝ^d with exact gradient and Hessian.
pub trait ScalarField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;

    /// True when the last coordinate is time.
    fn is_time_split(&self) -> bool {
        false
    }

    fn name(&self) -> String;
}

/// One closed-form summand.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Const(f64),
    /// `Σ aᵢxᵢ`.
    Linear(Vec<f64>),
    /// `½ xᵀAx` with symmetric `A`.
    Quadratic(DMatrix<f64>),
    /// `Re(c̄·w^k)` with `w = ((x_i + i x_j) − z0)/ρ` and `c̄ = c_re − i c_im`,
    /// i.e. `c_re Re(w^k) + c_im Im(w^k)`.
    ComplexPower { axes: (usize, usize), z0: Complex64, rho: f64, k: u32, c_re: f64, c_im: f64 },
    /// `c·e^{a x_i}·sin(b x_j + φ)`.
    ExpTrig { axes: (usize, usize), a: f64, b: f64, phase: f64, coef: f64 },
    /// `c·x_i^k`.
    Monomial { axis: usize, k: i32, coef: f64 },
    /// `c·Φ_n(x − x0, t − t0)`, zero for `t ≤ t0`; time is the last coordinate.
    HeatKernel { x0: Vec<f64>, t0: f64, coef: f64 },
}

impl Term {
    fn add_to(&self, x: &[f64], value: &mut f64, grad: Option<&mut [f64]>, hess: Option<&mut DMatrix<f64>>) {
        match self {
            Term::Const(c) => *value += c,
            Term::Linear(a) => {
                *value += a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>();
                if let Some(g) = grad {
                    g.iter_mut().zip(a).for_each(|(g, a)| *g += a);
                }
            }
            Term::Quadratic(a) => {
                let d = x.len();
                let ax: Vec<f64> = (0..d).map(|i| (0..d).map(|j| a[(i, j)] * x[j]).sum()).collect();
                *value += 0.5 * ax.iter().zip(x).map(|(a, x)| a * x).sum::<f64>();
                if let Some(g) = grad {
                    g.iter_mut().zip(&ax).for_each(|(g, a)| *g += a);
                }
                if let Some(h) = hess {
                    *h += a;
                }
            }
            Term::ComplexPower { axes: (i, j), z0, rho, k, c_re, c_im } => {
                let w = (Complex64::new(x[*i], x[*j]) - z0) / rho;
                let c = Complex64::new(*c_re, -*c_im);
                let k = *k;
                *value += (c * w.powu(k)).re;
                if k == 0 {
                    return;
                }
                if let Some(g) = grad {
                    let d1 = c * f64::from(k) * w.powu(k - 1) / rho;
                    g[*i] += d1.re;
                    g[*j] -= d1.im;
                }
                if let Some(h) = hess {
                    if k >= 2 {
                        let d2 = c * f64::from(k * (k - 1)) * w.powu(k - 2) / (rho * rho);
                        h[(*i, *i)] += d2.re;
                        h[(*j, *j)] -= d2.re;
                        h[(*i, *j)] -= d2.im;
                        h[(*j, *i)] -= d2.im;
                    }
                }
            }
            Term::ExpTrig { axes: (i, j), a, b, phase, coef } => {
                let e = coef * (a * x[*i]).exp();
                let (s, c) = (b * x[*j] + phase).sin_cos();
                *value += e * s;
                if let Some(g) = grad {
                    g[*i] += a * e * s;
                    g[*j] += b * e * c;
                }
                if let Some(h) = hess {
                    h[(*i, *i)] += a * a * e * s;
                    h[(*j, *j)] -= b * b * e * s;
                    h[(*i, *j)] += a * b * e * c;
                    h[(*j, *i)] += a * b * e * c;
                }
            }
            Term::Monomial { axis, k, coef } => {
                let (xi, k) = (x[*axis], *k);
                *value += coef * xi.powi(k);
                if let Some(g) = grad {
                    g[*axis] += coef * f64::from(k) * xi.powi(k - 1);
                }
                if let Some(h) = hess {
                    h[(*axis, *axis)] += coef * f64::from(k * (k - 1)) * xi.powi(k - 2);
                }
            }
            Term::HeatKernel { x0, t0, coef } => {
                let n = x0.len();
                let tau = x[n] - t0;
                if !(tau > 0.0) {
                    return;
                }
                let xi: Vec<f64> = x[..n].iter().zip(x0).map(|(a, b)| a - b).collect();
                let r2: f64 = xi.iter().map(|v| v * v).sum();
                let nf = n as f64;
                let phi = coef * (4.0 * PI * tau).powf(-0.5 * nf) * (-r2 / (4.0 * tau)).exp();
                *value += phi;
                let dt = -nf / (2.0 * tau) + r2 / (4.0 * tau * tau);
                if let Some(g) = grad {
                    for a in 0..n {
                        g[a] -= xi[a] / (2.0 * tau) * phi;
                    }
                    g[n] += dt * phi;
                }
                if let Some(h) = hess {
                    for a in 0..n {
                        for b in 0..n {
                            let delta = if a == b { 1.0 / (2.0 * tau) } else { 0.0 };
                            h[(a, b)] += (xi[a] * xi[b] / (4.0 * tau * tau) - delta) * phi;
                        }
                        let mixed = (xi[a] / (2.0 * tau * tau) - xi[a] / (2.0 * tau) * dt) * phi;
                        h[(a, n)] += mixed;
                        h[(n, a)] += mixed;
                    }
                    h[(n, n)] += (nf / (2.0 * tau * tau) - r2 / (2.0 * tau.powi(3)) + dt * dt) * phi;
                }
            }
        }
    }
}

/// A finite sum of terms on ℝ^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub dim: usize,
    pub time_split: bool,
    pub terms: Vec<Term>,
    pub label: String,
}

impl Combination {
    pub fn new(dim: usize, terms: Vec<Term>, label: impl Into<String>) -> Self {
        Self { dim, time_split: false, terms, label: label.into() }
    }

    pub fn time_split(mut self) -> Self {
        self.time_split = true;
        self
    }

    /// `self − other` (same dimension).
    pub fn minus(&self, other: &Combination) -> Combination {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(negate));
        Combination { dim: self.dim, time_split: self.time_split, terms, label: format!("{}-({})", self.label, other.label) }
    }

    /// `v(x, y) = u(x)` on ℝ^{d+extra}.
    pub fn lift(&self, extra: usize) -> Combination {
        let d = self.dim + extra;
        let terms = self
            .terms
            .iter()
            .map(|t| match t {
                Term::Linear(a) => {
                    let mut a = a.clone();
                    a.resize(d, 0.0);
                    Term::Linear(a)
                }
                Term::Quadratic(a) => {
                    let mut m = DMatrix::zeros(d, d);
                    m.view_mut((0, 0), (self.dim, self.dim)).copy_from(a);
                    Term::Quadratic(m)
                }
                other => other.clone(),
            })
            .collect();
        Combination { dim: d, time_split: false, terms, label: format!("lift{extra}({})", self.label) }
    }
}

fn negate(t: &Term) -> Term {
    match t {
        Term::Const(c) => Term::Const(-c),
        Term::Linear(a) => Term::Linear(a.iter().map(|v| -v).collect()),
        Term::Quadratic(a) => Term::Quadratic(-a),
        Term::ComplexPower { axes, z0, rho, k, c_re, c_im } => {
            Term::ComplexPower { axes: *axes, z0: *z0, rho: *rho, k: *k, c_re: -c_re, c_im: -c_im }
        }
        Term::ExpTrig { axes, a, b, phase, coef } => Term::ExpTrig { axes: *axes, a: *a, b: *b, phase: *phase, coef: -coef },
        Term::Monomial { axis, k, coef } => Term::Monomial { axis: *axis, k: *k, coef: -coef },
        Term::HeatKernel { x0, t0, coef } => Term::HeatKernel { x0: x0.clone(), t0: *t0, coef: -coef },
    }
}

impl ScalarField for Combination {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut v = 0.0;
        self.terms.iter().for_each(|t| t.add_to(x, &mut v, None, None));
        v
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut v = 0.0;
        let mut g = vec![0.0; self.dim];
        self.terms.iter().for_each(|t| t.add_to(x, &mut v, Some(&mut g), None));
        g
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut v = 0.0;
        let mut h = DMatrix::zeros(self.dim, self.dim);
        self.terms.iter().for_each(|t| t.add_to(x, &mut v, None, Some(&mut h)));
        h
    }

    fn is_time_split(&self) -> bool {
        self.time_split
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::ScalarField;
    use nalgebra::DMatrix;

    pub fn fd_gradient(f: &dyn ScalarField, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (f.value(&p) - f.value(&m)) / (2.0 * h)
            })
            .collect()
    }

    pub fn fd_hessian(f: &dyn ScalarField, x: &[f64], h: f64) -> DMatrix<f64> {
        let d = x.len();
        DMatrix::from_fn(d, d, |i, j| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[j] += h;
            m[j] -= h;
            (f.gradient(&p)[i] - f.gradient(&m)[i]) / (2.0 * h)
        })
    }

    /// `|a − b| ≤ tol·max(1, |a|, |b|)`.
    pub fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }
}

//! Named fields and seeded random generators for the hypothesis classes.

use std::collections::BTreeMap;
use std::f64::consts::E;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng as _;

use super::{Combination, Term};
use crate::error::{Error, Result};
use crate::rng::Rng;

pub type FamilyParams = BTreeMap<String, f64>;

fn get(params: &FamilyParams, key: &str, default: Option<f64>) -> Result<f64> {
    params
        .get(key)
        .copied()
        .or(default)
        .ok_or_else(|| Error::InvalidParameter(format!("missing family parameter `{key}`")))
}

fn get_dim(params: &FamilyParams, key: &str, default: usize) -> Result<usize> {
    let v = get(params, key, Some(default as f64))?;
    if v < 1.0 || v.fract() != 0.0 {
        return Err(Error::InvalidParameter(format!("`{key}` must be a positive integer, got {v}")));
    }
    Ok(v as usize)
}

fn isotropic_quadratic(dim: usize, spatial: usize) -> Term {
    let mut diag = vec![1.0 / spatial as f64; spatial];
    diag.resize(dim, 0.0);
    Term::Quadratic(DMatrix::from_diagonal(&DVector::from_vec(diag)))
}

fn time_linear(n: usize, coef: f64) -> Term {
    let mut a = vec![0.0; n + 1];
    a[n] = coef;
    Term::Linear(a)
}

/// Fixed registry of named fields.
///
/// | name | parameters | field |
/// |---|---|---|
/// | `constant` | `c`, `d` | `c` |
/// | `quadratic` | `n` | `\|x\|²/(2n)` |
/// | `harmonic` | `k`, `imag` | `Re` or `Im` of `(x+iy)^k` |
/// | `monomial` | `k` | `x^k` |
/// | `ccw_hessian` | `N` | `N⁻¹(eˣ sin(Ny) + e)` |
/// | `half_t_squared` | | `t²/2` on ℝ² |
/// | `neg_time` | `n` | `−t` on ℝ^{n+1} |
/// | `heat_quadratic` | `n` | `\|x\|²/(2n)` on ℝ^{n+1} |
/// | `heat_kernel` | `n`, `t0` | `Φ_n(x, t − t0)` |
pub fn family(name: &str, params: &FamilyParams) -> Result<Combination> {
    Ok(match name {
        "constant" => {
            let d = get_dim(params, "d", 1)?;
            Combination::new(d, vec![Term::Const(get(params, "c", None)?)], format!("constant(d={d})"))
        }
        "quadratic" => {
            let n = get_dim(params, "n", 2)?;
            Combination::new(n, vec![isotropic_quadratic(n, n)], format!("|x|^2/(2*{n})"))
        }
        "harmonic" => {
            let k = get_dim(params, "k", 2)? as u32;
            let imag = get(params, "imag", Some(0.0))? != 0.0;
            let (c_re, c_im) = if imag { (0.0, 1.0) } else { (1.0, 0.0) };
            let t = Term::ComplexPower { axes: (0, 1), z0: Complex64::new(0.0, 0.0), rho: 1.0, k, c_re, c_im };
            Combination::new(2, vec![t], format!("{}((x+iy)^{k})", if imag { "Im" } else { "Re" }))
        }
        "monomial" => {
            let k = get_dim(params, "k", 1)? as i32;
            Combination::new(1, vec![Term::Monomial { axis: 0, k, coef: 1.0 }], format!("x^{k}"))
        }
        "ccw_hessian" => {
            let n = get(params, "N", None)?;
            if !(n >= 1.0) {
                return Err(Error::InvalidParameter(format!("ccw_hessian needs N ≥ 1, got {n}")));
            }
            let terms = vec![
                Term::ExpTrig { axes: (0, 1), a: 1.0, b: n, phase: 0.0, coef: 1.0 / n },
                Term::Const(E / n),
            ];
            Combination::new(2, terms, format!("u_N(N={n})"))
        }
        "half_t_squared" => Combination::new(2, vec![Term::Monomial { axis: 1, k: 2, coef: 0.5 }], "t^2/2"),
        "neg_time" => {
            let n = get_dim(params, "n", 1)?;
            Combination::new(n + 1, vec![time_linear(n, -1.0)], format!("-t(n={n})")).time_split()
        }
        "heat_quadratic" => {
            let n = get_dim(params, "n", 1)?;
            Combination::new(n + 1, vec![isotropic_quadratic(n + 1, n)], format!("|x|^2/(2*{n}) in space-time")).time_split()
        }
        "heat_kernel" => {
            let n = get_dim(params, "n", 1)?;
            let t0 = get(params, "t0", Some(0.0))?;
            Combination::new(n + 1, vec![Term::HeatKernel { x0: vec![0.0; n], t0, coef: 1.0 }], format!("Phi_{n}(x,t-{t0})"))
                .time_split()
        }
        other => return Err(Error::UnknownFamily(other.to_string())),
    })
}

fn axis_pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect()
}

fn harmonic_terms(rng: &mut Rng, d: usize, center: &[f64], rho: f64, degree: u32, scale: f64) -> Vec<Term> {
    let mut terms = Vec::new();
    for (i, j) in axis_pairs(d) {
        let z0 = Complex64::new(center[i], center[j]);
        for k in 1..=degree {
            let c_re = scale * rng.random_range(-1.0..1.0) / f64::from(k);
            let c_im = scale * rng.random_range(-1.0..1.0) / f64::from(k);
            terms.push(Term::ComplexPower { axes: (i, j), z0, rho, k, c_re, c_im });
        }
    }
    terms
}

/// `|x|²/(2d) + Σ c_j h_j + a·x + b` with harmonic polynomials `h_j` centred
/// at `center`; `Δu ≡ 1`.
pub fn random_laplace_field(rng: &mut Rng, d: usize, center: &[f64]) -> Combination {
    let mut terms = vec![isotropic_quadratic(d, d), Term::Const(rng.random_range(-1.0..1.0))];
    terms.push(Term::Linear((0..d).map(|_| rng.random_range(-0.5..0.5)).collect()));
    if d >= 2 {
        terms.extend(harmonic_terms(rng, d, center, 0.5, 4, 0.1));
    }
    Combination::new(d, terms, format!("random-laplace(d={d})"))
}

/// `c + Σ_{k≤degree} (a_k Re + b_k Im)((z − z0)/ρ)^k` on ℝ².
pub fn random_harmonic_poly(rng: &mut Rng, degree: u32, z0: [f64; 2], rho: f64) -> Combination {
    let mut terms = vec![Term::Const(rng.random_range(-0.5..0.5))];
    terms.extend(harmonic_terms(rng, 2, &z0, rho, degree, 1.0));
    Combination::new(2, terms, format!("random-harmonic(deg={degree})"))
}

/// Temperature on ℝ^{n+1}: caloric polynomials, separated modes
/// `e^{−b²t}sin(bx + φ)` and a heat kernel with pole at `t0`.
pub fn random_temperature(rng: &mut Rng, n: usize, t0: f64) -> Combination {
    let d = n + 1;
    let mut terms = vec![Term::Const(rng.random_range(-1.0..1.0))];
    let mut lin: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut quad = DMatrix::zeros(d, d);
    let mut dt = 0.0;
    for i in 0..n {
        // c(x_i² + 2t)
        let c = rng.random_range(-0.5..0.5);
        quad[(i, i)] += 2.0 * c;
        dt += 2.0 * c;
        for j in i + 1..n {
            let c = rng.random_range(-0.5..0.5);
            quad[(i, j)] += c;
            quad[(j, i)] += c;
        }
    }
    lin.push(dt);
    terms.push(Term::Linear(lin));
    terms.push(Term::Quadratic(quad));
    for i in 0..n {
        let b: f64 = rng.random_range(0.5..3.0);
        terms.push(Term::ExpTrig {
            axes: (n, i),
            a: -b * b,
            b,
            phase: rng.random_range(0.0..std::f64::consts::TAU),
            coef: rng.random_range(-0.5..0.5),
        });
    }
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
    terms.push(Term::HeatKernel { x0, t0, coef: rng.random_range(0.0..0.5) });
    Combination::new(d, terms, format!("random-temperature(n={n})")).time_split()
}

/// `−t` plus a random temperature; `Hu ≡ 1`.
pub fn random_heat_field(rng: &mut Rng, n: usize, t0: f64) -> Combination {
    let mut f = random_temperature(rng, n, t0);
    f.terms.push(time_linear(n, -1.0));
    f.label = format!("random-heat(n={n})");
    f
}

/// Generic smooth field with nonconstant Laplacian.
pub fn random_smooth_field(rng: &mut Rng, d: usize) -> Combination {
    let mut a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    a = (&a + a.transpose()) * 0.5;
    let mut terms = vec![Term::Quadratic(a), Term::Const(rng.random_range(-1.0..1.0))];
    for (i, j) in axis_pairs(d).into_iter().chain((0..d).map(|i| (i, (i + 1) % d.max(1)))) {
        if i == j {
            continue;
        }
        terms.push(Term::ExpTrig {
            axes: (i, j),
            a: rng.random_range(-1.0..1.0),
            b: rng.random_range(0.5..3.0),
            phase: rng.random_range(0.0..std::f64::consts::TAU),
            coef: rng.random_range(-0.5..0.5),
        });
    }
    for i in 0..d {
        terms.push(Term::Monomial { axis: i, k: 4, coef: rng.random_range(-0.5..0.5) });
    }
    Combination::new(d, terms, format!("random-smooth(d={d})"))
}

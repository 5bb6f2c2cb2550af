//! Gauss–Legendre rules and tensor-product quadrature on boxes.

use std::f64::consts::PI;

use super::{Method, QuadResult};
use crate::geometry::AxisBox;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Composite Gauss rule with `panels` panels of `nodes` points per axis.
fn composite(b: &AxisBox, f: &dyn Fn(&[f64]) -> f64, nodes: usize, panels: usize) -> f64 {
    let (xs, ws) = gauss_legendre(nodes);
    let d = b.lo.len();
    let per_axis = nodes * panels;
    let axis_rule: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|k| {
            let h = (b.hi[k] - b.lo[k]) / panels as f64;
            (0..panels)
                .flat_map(|p| {
                    let a = b.lo[k] + p as f64 * h;
                    xs.iter().zip(&ws).map(move |(x, w)| (a + 0.5 * h * (x + 1.0), 0.5 * h * w))
                })
                .collect()
        })
        .collect();
    let total = per_axis.pow(d as u32);
    let mut point = vec![0.0; d];
    let mut sum = 0.0;
    for flat in 0..total {
        let mut rem = flat;
        let mut weight = 1.0;
        for k in 0..d {
            let (x, w) = axis_rule[k][rem % per_axis];
            rem /= per_axis;
            point[k] = x;
            weight *= w;
        }
        sum += weight * f(&point);
    }
    sum
}

/// Tensor-product Gauss–Legendre with `nodes` points per axis; the refined
/// value (two panels per axis) is returned and the difference to the coarse
/// value is reported as `refinement_diff`.
pub fn product_gauss<F: Fn(&[f64]) -> f64>(f: F, b: &AxisBox, nodes: usize) -> QuadResult {
    let coarse = composite(b, &f, nodes, 1);
    let fine = composite(b, &f, nodes, 2);
    let samples = (2 * nodes).pow(b.lo.len() as u32);
    QuadResult {
        value: fine,
        std_error: 0.0,
        samples,
        method: Method::ProductGauss,
        refinement_diff: Some((fine - coarse).abs()),
    }
}

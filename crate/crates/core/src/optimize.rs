//! Small scalar search routines: golden-section maximisation and bisection on
//! monotone predicates.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of a golden-section search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenMax {
    pub argmax: f64,
    pub max: f64,
    pub iterations: usize,
}

/// Maximises a unimodal `f` on `[lo, hi]` until the bracket is narrower than
/// `tol` (absolute) or `max_iter` is reached.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> GoldenMax {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a).abs() > tol && iterations < max_iter {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let (argmax, max) = if fc > fd { (c, fc) } else { (d, fd) };
    GoldenMax { argmax, max, iterations }
}

/// Largest `r` in `[lo, hi]` with `pred(r)` true, assuming `pred` is true at
/// `lo` and monotone (true then false). Returns the last value known to
/// satisfy the predicate after `iterations` halvings.
pub fn bisect_last_true<P: FnMut(f64) -> bool>(mut pred: P, lo: f64, hi: f64, iterations: usize) -> f64 {
    let (mut good, mut bad) = (lo, hi);
    if pred(hi) {
        return hi;
    }
    for _ in 0..iterations {
        let mid = 0.5 * (good + bad);
        if pred(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

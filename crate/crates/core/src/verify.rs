//! Theorem-level verification suites.
//!
//! Each suite builds its fields from `(seed, index)`, runs a list of checks
//! and records a signed margin per check (non-negative means the inequality
//! holds with the stated guard band).

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averages::{
    check_concave_mvi, check_deriv1, check_deriv2, check_heat_drop, check_laplace_drop, check_modified_heatball_mvi,
    check_pmvi, deriv1_lower_bound, deriv2_lower_bound, heatball_average, ConcaveMap, GUARD,
};
use crate::constants::{
    adjoint_constant, assemble_cp_heat, assemble_cp_laplace, heatball_volume_report, k_heat_exact, kappa_max,
    pmean_to_sublevel_bound, sublevel_to_pmean_bound, v_one,
};
use crate::counterexamples::{ccw_target, fit_harmonic, hessian_family_check, lift_check, AssembledCounterexample, CombSet};
use crate::error::{Error, Result};
use crate::fields::{
    family, random_harmonic_poly, random_heat_field, random_laplace_field, random_smooth_field, random_temperature,
    BumpFunction, Combination, FamilyParams, LinearOperator, ScalarField, Term,
};
use crate::geometry::{build_radius_function, region_within, AxisBox, BallSystem, EuclideanBall, Region};
use crate::quadrature::{integrate, lp_quasinorm, measure, pmean};
use crate::rng::{derive_seed, substream, Rng};

/// Every suite accepted by [`run_suite`].
pub const SUITES: &[&str] = &[
    "laplace-thm",
    "heat-thm",
    "prop-general",
    "l1-linear",
    "claim-laplace",
    "claim-heat",
    "deriv-laplace",
    "deriv-heat",
    "normalization",
    "pmvi",
    "concave-mvi",
    "modified-heatball-mvi",
    "kappa",
    "hessian-family",
    "comb",
    "pmeans",
    "lift",
    "radius",
];

/// Parameters shared by all suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Samples per Monte Carlo integral.
    pub budget: usize,
    /// Random fields per suite.
    pub fields: usize,
    /// Trials (or sampled points) per field.
    pub trials: usize,
    /// Exponents for the L^p statements.
    pub p: Vec<f64>,
    /// Modified heatball parameter.
    pub m: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: 42, budget: 20_000, fields: 5, trials: 100, p: vec![0.25, 0.5, 0.75], m: 3 }
    }
}

/// One checked statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub pass: bool,
    pub margin: f64,
    pub seed: u64,
    pub detail: String,
}

impl Check {
    fn margin(id: impl Into<String>, margin: f64, seed: u64, detail: impl Into<String>) -> Self {
        Self { id: id.into(), pass: margin >= 0.0, margin, seed, detail: detail.into() }
    }

    fn flag(id: impl Into<String>, pass: bool, seed: u64, detail: impl Into<String>) -> Self {
        let margin = if pass { 0.0 } else { -1.0 };
        Self { id: id.into(), pass, margin, seed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub config: SuiteConfig,
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl SuiteResult {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

pub fn run_suite(name: &str, config: &SuiteConfig) -> Result<SuiteResult> {
    if config.budget == 0 || config.fields == 0 || config.trials == 0 {
        return Err(Error::InvalidParameter("budget, fields and trials must be positive".into()));
    }
    let checks = match name {
        "laplace-thm" => laplace_thm(config)?,
        "heat-thm" => heat_thm(config)?,
        "prop-general" => prop_general(config)?,
        "l1-linear" => l1_linear(config)?,
        "claim-laplace" => claim_laplace(config)?,
        "claim-heat" => claim_heat(config)?,
        "deriv-laplace" => deriv_laplace(config)?,
        "deriv-heat" => deriv_heat(config)?,
        "normalization" => normalization(config)?,
        "pmvi" => pmvi(config)?,
        "concave-mvi" => concave_mvi(config)?,
        "modified-heatball-mvi" => modified_heatball_mvi(config)?,
        "kappa" => kappa(config)?,
        "hessian-family" => hessian_family(config)?,
        "comb" => comb(config)?,
        "pmeans" => pmeans(config)?,
        "lift" => lift(config)?,
        "radius" => radius(config)?,
        other => return Err(Error::UnknownSuite(other.into())),
    };
    let overall = checks.iter().all(|c| c.pass);
    Ok(SuiteResult { suite: name.into(), config: config.clone(), checks, overall })
}

fn field_rng(seed: u64, tag: &str, i: usize) -> Rng {
    substream(derive_seed(seed, tag, i as u64), 0)
}

/// Runs `f(i)` for `i < count` in parallel and concatenates in index order.
fn per_index<F>(count: usize, f: F) -> Result<Vec<Check>>
where
    F: Fn(usize) -> Result<Vec<Check>> + Sync + Send,
{
    let parts: Vec<Result<Vec<Check>>> = (0..count).into_par_iter().map(f).collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn unit_square() -> Arc<dyn Region> {
    Arc::new(AxisBox::unit(2))
}

fn laplace_thm(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let omega = unit_square();
    let mut out = Vec::new();
    for (pi, &p) in cfg.p.iter().enumerate() {
        let s = derive_seed(cfg.seed, "cp-laplace", pi as u64);
        let cp = assemble_cp_laplace(2, Arc::clone(&omega), p, cfg.budget, s)?.closed_form;
        out.push(Check::margin(format!("cp-laplace/p={p}"), cp, s, format!("c_p = {cp:e}")));
        out.extend(per_index(cfg.fields, |i| {
            let u = random_laplace_field(&mut field_rng(cfg.seed, "laplace-field", i), 2, &[0.5, 0.5]);
            let s = derive_seed(cfg.seed, "laplace-norm", (pi * cfg.fields + i) as u64);
            let q = lp_quasinorm(|x| u.value(x), omega.as_ref(), p, cfg.budget, s)?;
            let margin = q.value + GUARD * q.std_error - cp;
            Ok(vec![Check::margin(format!("lp-lower-bound/p={p}/field={i}"), margin, s, format!("‖u‖_p = {:e}", q.value))])
        })?);
    }
    Ok(out)
}

fn heat_thm(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let (n, m) = (1, cfg.m);
    let omega = unit_square();
    let mut out = Vec::new();
    for (pi, &p) in cfg.p.iter().enumerate() {
        let s = derive_seed(cfg.seed, "cp-heat", pi as u64);
        let cp = assemble_cp_heat(n, m, Arc::clone(&omega), p, cfg.budget, s)?.closed_form;
        out.push(Check::margin(format!("cp-heat/p={p}"), cp, s, format!("c_p = {cp:e}")));
        out.extend(per_index(cfg.fields, |i| {
            let u = random_heat_field(&mut field_rng(cfg.seed, "heat-field", i), n, -0.5);
            let s = derive_seed(cfg.seed, "heat-norm", (pi * cfg.fields + i) as u64);
            let q = lp_quasinorm(|x| u.value(x), omega.as_ref(), p, cfg.budget, s)?;
            let margin = q.value + GUARD * q.std_error - cp;
            Ok(vec![Check::margin(format!("lp-lower-bound/p={p}/field={i}"), margin, s, format!("‖u‖_p = {:e}", q.value))])
        })?);
    }
    Ok(out)
}

/// Bump-based adjoint constant on the unit square.
fn square_adjoint_constant(op: &LinearOperator, cfg: &SuiteConfig) -> Result<(f64, u64)> {
    let s = derive_seed(cfg.seed, "adjoint", 0);
    let bump = BumpFunction::new(vec![0.5, 0.5], 0.45)?;
    Ok((adjoint_constant(op, &AxisBox::unit(2), &bump, cfg.budget, s)?.closed_form, s))
}

/// `1/p + 1/p' = 1` with `p' = ∞` at `p = 1`.
fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// L¹ bound, then `c' = min(c/2, ε)` with `ε|Ω| = c/2` and
/// `‖u‖_p·|{|u| ≥ c'}|^{1/p'} ≥ c'`; `p = ∞` is `‖u‖_∞·|{|u| ≥ c'}| ≥ c'`.
fn prop_general(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let omega = AxisBox::unit(2);
    let vol = omega.volume();
    let (c, cs) = square_adjoint_constant(&LinearOperator::laplacian(2), cfg)?;
    let eps = c / (2.0 * vol);
    let cprime = (0.5 * c).min(eps);
    let mut out = vec![Check::margin("adjoint-constant", c, cs, format!("c = {c:e}, c' = {cprime:e}"))];
    out.extend(per_index(cfg.fields, |i| {
        let u = random_laplace_field(&mut field_rng(cfg.seed, "prop-field", i), 2, &[0.5, 0.5]);
        let f = |x: &[f64]| u.value(x);
        let s = derive_seed(cfg.seed, "prop", i as u64);
        let mut checks = Vec::new();
        let l1 = lp_quasinorm(f, &omega, 1.0, cfg.budget, s)?;
        checks.push(Check::margin(format!("l1/field={i}"), l1.value + GUARD * l1.std_error - c, s, format!("‖u‖₁ = {:e}", l1.value)));
        let tail = integrate(|x| if f(x).abs() >= eps { f(x).abs() } else { 0.0 }, &omega, cfg.budget, s)?;
        checks.push(Check::margin(
            format!("superlevel-mass/field={i}"),
            tail.value + GUARD * tail.std_error - 0.5 * c,
            s,
            format!("∫_{{|u|≥ε}} |u| = {:e}", tail.value),
        ));
        let sup = measure(&omega, |x| f(x).abs() >= cprime, cfg.budget, s)?;
        let sup_hi = (sup.value + GUARD * sup.std_error).min(vol);
        for p in [1.0, 2.0, f64::INFINITY] {
            let q = lp_quasinorm(f, &omega, p, cfg.budget, s)?;
            let pp = conjugate(p);
            let factor = if pp.is_infinite() { 1.0 } else { sup_hi.powf(1.0 / pp) };
            let lhs = (q.value + GUARD * q.std_error) * factor;
            checks.push(Check::margin(format!("lp-superlevel/p={p}/field={i}"), lhs - cprime, s, format!("lhs = {lhs:e}")));
        }
        Ok(checks)
    })?);
    Ok(out)
}

/// `xy` plus single-variable terms, so `∂x∂y u ≡ 1`.
fn mixed_field(rng: &mut Rng) -> Combination {
    use rand::Rng as _;
    let mut q = nalgebra::DMatrix::zeros(2, 2);
    q[(0, 1)] = 1.0;
    q[(1, 0)] = 1.0;
    q[(0, 0)] = rng.random_range(-1.0..1.0);
    q[(1, 1)] = rng.random_range(-1.0..1.0);
    let mut terms = vec![
        Term::Quadratic(q),
        Term::Const(rng.random_range(-1.0..1.0)),
        Term::Linear(vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]),
    ];
    for axis in 0..2 {
        for k in 3..=4 {
            terms.push(Term::Monomial { axis, k, coef: rng.random_range(-1.0..1.0) });
        }
    }
    Combination::new(2, terms, "xy+g(x)+h(y)")
}

fn l1_linear(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let omega = AxisBox::unit(2);
    let op = LinearOperator::mixed(2, 0, 1);
    let (c, cs) = square_adjoint_constant(&op, cfg)?;
    let mut out = vec![Check::margin("adjoint-constant", c, cs, format!("c = {c:e}"))];
    out.extend(per_index(cfg.fields, |i| {
        let u = mixed_field(&mut field_rng(cfg.seed, "mixed-field", i));
        let s = derive_seed(cfg.seed, "l1-linear", i as u64);
        let mut worst = f64::INFINITY;
        for j in 0..16 {
            for k in 0..16 {
                let x = [(j as f64 + 0.5) / 16.0, (k as f64 + 0.5) / 16.0];
                worst = worst.min(op.apply(&u, &x)? - 1.0);
            }
        }
        let tol = 1e-9;
        let l1 = lp_quasinorm(|x| u.value(x), &omega, 1.0, cfg.budget, s)?;
        Ok(vec![
            Check::margin(format!("hypothesis/field={i}"), worst + tol, s, format!("min Du − 1 = {worst:e}")),
            Check::margin(format!("l1/field={i}"), l1.value + GUARD * l1.std_error - c, s, format!("‖u‖₁ = {:e}", l1.value)),
        ])
    })?);
    Ok(out)
}

fn drop_check(id: String, r: crate::averages::DropReport, seed: u64) -> Check {
    let detail = format!("sup = {:e}, {} points, {} violations", r.sup_estimate, r.points, r.violations);
    Check { id, pass: r.violations == 0, margin: r.worst_margin, seed, detail }
}

fn claim_laplace(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let omega = AxisBox::unit(2);
    per_index(cfg.fields, |i| {
        let u = random_laplace_field(&mut field_rng(cfg.seed, "laplace-field", i), 2, &[0.5, 0.5]);
        let s = derive_seed(cfg.seed, "claim-laplace", i as u64);
        Ok(vec![drop_check(format!("drop/field={i}"), check_laplace_drop(&u, &omega, 0.2, cfg.trials, s)?, s)])
    })
}

fn claim_heat(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let omega = AxisBox::unit(2);
    let k = k_heat_exact(1)?;
    per_index(cfg.fields, |i| {
        let u = random_heat_field(&mut field_rng(cfg.seed, "heat-field", i), 1, -0.5);
        let s = derive_seed(cfg.seed, "claim-heat", i as u64);
        Ok(vec![drop_check(format!("drop/field={i}"), check_heat_drop(&u, &omega, 0.3, k, cfg.trials, s)?, s)])
    })
}

const DERIV_RADII: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 1.0];

fn deriv_check(id: String, d: &crate::averages::DerivativeCheck, seed: u64) -> Check {
    let margin = d.tolerance + 1e-12 - (d.fd.value - d.rhs.value).abs();
    Check::margin(id, margin, seed, format!("fd = {:e}, rhs = {:e}", d.fd.value, d.rhs.value))
}

fn deriv_laplace(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    per_index(cfg.fields, |i| {
        let n = 2 + i % 2;
        let mut rng = field_rng(cfg.seed, "deriv-laplace", i);
        let smooth = random_smooth_field(&mut rng, n);
        let sub = random_laplace_field(&mut rng, n, &vec![0.0; n]);
        let x = vec![0.1; n];
        let mut out = Vec::new();
        for (j, &r) in DERIV_RADII.iter().enumerate() {
            let s = derive_seed(cfg.seed, "deriv1", (i * DERIV_RADII.len() + j) as u64);
            let d = check_deriv1(&smooth, &x, r, cfg.budget, s)?;
            out.push(deriv_check(format!("formula/n={n}/field={i}/r={r}"), &d, s));
            let d = check_deriv1(&sub, &x, r, cfg.budget, s)?;
            let lb = deriv1_lower_bound(n, r);
            out.push(Check::margin(format!("lower-bound/n={n}/field={i}/r={r}"), d.fd.value + d.tolerance - lb, s, format!("fd = {:e}, bound = {lb:e}", d.fd.value)));
        }
        Ok(out)
    })
}

fn deriv_heat(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    per_index(cfg.fields, |i| {
        let n = 1 + i % 3;
        let mut rng = field_rng(cfg.seed, "deriv-heat", i);
        let heat = random_heat_field(&mut rng, n, -0.5);
        let temp = random_temperature(&mut rng, n, -0.5);
        let mut center = vec![0.1; n];
        center.push(1.0);
        let mut out = Vec::new();
        for (j, &r) in DERIV_RADII.iter().enumerate() {
            let s = derive_seed(cfg.seed, "deriv2", (i * DERIV_RADII.len() + j) as u64);
            let d = check_deriv2(&heat, &center, r, cfg.budget, s)?;
            out.push(deriv_check(format!("formula/n={n}/field={i}/r={r}"), &d, s));
            let lb = deriv2_lower_bound(n, r);
            out.push(Check::margin(format!("lower-bound/n={n}/field={i}/r={r}"), d.rhs.value + d.tolerance - lb, s, format!("rhs = {:e}, bound = {lb:e}", d.rhs.value)));
            let d = check_deriv2(&temp, &center, r, cfg.budget, s)?;
            out.push(deriv_check(format!("temperature-formula/n={n}/field={i}/r={r}"), &d, s));
            let zero = GUARD * d.rhs.std_error + 1e-12 - d.rhs.value.abs();
            out.push(Check::margin(format!("temperature-rhs-zero/n={n}/field={i}/r={r}"), zero, s, format!("rhs = {:e}", d.rhs.value)));
        }
        Ok(out)
    })
}

fn normalization(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in 1..=3 {
        let mut params = FamilyParams::new();
        params.insert("c".into(), 1.0);
        params.insert("d".into(), (n + 1) as f64);
        let one = family("constant", &params)?;
        for (j, r) in [0.5, 1.0].into_iter().enumerate() {
            let s = derive_seed(cfg.seed, "normalization", (n * 2 + j) as u64);
            let mut center = vec![0.0; n];
            center.push(0.0);
            let q = heatball_average(&one, &center, r, cfg.budget, s)?;
            let margin = GUARD * q.std_error + 1e-12 - (q.value - 1.0).abs();
            out.push(Check::margin(format!("heat-average-of-one/n={n}/r={r}"), margin, s, format!("φ = {} ± {:e}", q.value, q.std_error)));
        }
        let v = v_one(n)?;
        let gap = v.rel_gap.unwrap_or(f64::INFINITY);
        out.push(Check::margin(format!("V(1)/n={n}"), 1e-8 - gap, 0, format!("V(1) = {}, gap = {gap:e}", v.closed_form)));
        let s = derive_seed(cfg.seed, "heatball-volume", n as u64);
        let hv = heatball_volume_report(n, cfg.budget, s)?;
        let se = hv.inputs.get("mc_std_error").copied().unwrap_or(0.0);
        let diff = (hv.closed_form - hv.cross_check.unwrap_or(f64::NAN)).abs();
        out.push(Check::margin(format!("|E(1)|/n={n}"), GUARD * se + 1e-12 - diff, s, format!("|E(1)| = {:e}", hv.closed_form)));
    }
    Ok(out)
}

fn mvi_check(id: String, r: &crate::averages::MviCheckReport) -> Check {
    let detail = format!("C = {:e}, {} trials, {} trivial, {} violations", r.constant, r.trials, r.trivial, r.violations);
    let margin = if r.worst_margin.is_finite() { r.worst_margin } else { 0.0 };
    Check { id, pass: r.passed(), margin, seed: r.seed, detail }
}

fn pmvi(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let sys = BallSystem::euclidean(2);
    let disk = EuclideanBall::unit(2);
    per_index(cfg.fields, |i| {
        let u = random_harmonic_poly(&mut field_rng(cfg.seed, "harmonic", i), 4, [0.0, 0.0], 1.0);
        let mut out = Vec::new();
        for (pi, &p) in cfg.p.iter().enumerate() {
            let s = derive_seed(cfg.seed, "pmvi", (i * cfg.p.len() + pi) as u64);
            let r = check_pmvi(|x| u.value(x), &sys, &disk, 1.0 / PI, p, 0.5, 2.0, cfg.trials, cfg.budget, s)?;
            out.push(mvi_check(format!("pmvi/p={p}/field={i}"), &r));
        }
        Ok(out)
    })
}

fn concave_mvi(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let sys = BallSystem::euclidean(2);
    let disk = EuclideanBall::unit(2);
    let maps = [(0.5, 4.0), (0.75, 2f64.powf(4.0 / 3.0))];
    let mut out = vec![Check::flag(
        "log1p-rejected",
        ConcaveMap::Log1p.validate(1e6).is_err(),
        0,
        "inverse e^t − 1 is not doubling",
    )];
    out.extend(per_index(cfg.fields, |i| {
        let u = random_harmonic_poly(&mut field_rng(cfg.seed, "harmonic", i), 4, [0.0, 0.0], 1.0);
        let mut out = Vec::new();
        for (j, &(q, c_phi)) in maps.iter().enumerate() {
            let s = derive_seed(cfg.seed, "concave", (i * maps.len() + j) as u64);
            let phi = ConcaveMap::Power { exponent: q };
            let r = check_concave_mvi(|x| u.value(x), &sys, &disk, 1.0 / PI, phi, c_phi, 0.5, 2.0, cfg.trials, cfg.budget, s)?;
            out.push(mvi_check(format!("concave/q={q}/field={i}"), &r));
        }
        Ok(out)
    })?);
    Ok(out)
}

fn modified_heatball_mvi(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let (n, m) = (1, cfg.m);
    let center = [0.1, 1.0];
    let mut out = per_index(cfg.fields, |i| {
        let u = random_temperature(&mut field_rng(cfg.seed, "mhb-field", i), n, -0.5);
        let s = derive_seed(cfg.seed, "mhb", i as u64);
        let r = check_modified_heatball_mvi(|x| u.value(x), m, &center, 1.0, None, None, cfg.trials, cfg.budget, s)?;
        Ok(vec![mvi_check(format!("mvi/m={m}/field={i}"), &r)])
    })?;
    let mut params = FamilyParams::new();
    params.insert("c".into(), 1.0);
    params.insert("d".into(), 2.0);
    let one = family("constant", &params)?;
    let m_const = crate::constants::kappa_max_closed(m, n)?;
    let s = derive_seed(cfg.seed, "mhb-sanity", 0);
    let r = check_modified_heatball_mvi(|x| one.value(x), m, &center, 1.0, Some(1e-3 * m_const), None, cfg.trials, cfg.budget, s)?;
    out.push(Check::flag("undersized-constant-detected", r.violations == r.trials, s, format!("{} violations", r.violations)));
    Ok(out)
}

fn kappa(_cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for m in 3..=6 {
        for n in 1..=3 {
            let r = kappa_max(m, n)?;
            let gap = r.rel_gap.unwrap_or(f64::INFINITY);
            out.push(Check::margin(format!("M/m={m}/n={n}"), 1e-6 - gap, 0, format!("M = {:e}, gap = {gap:e}", r.closed_form)));
            let expected = 1.0 / (4.0 * PI * ((m as f64 + 2.0) / (m as f64 - 2.0)).exp());
            let diff = (r.inputs["numeric_argmax"] - expected).abs();
            out.push(Check::margin(format!("argmax/m={m}/n={n}"), 1e-8 - diff, 0, format!("s* = {expected:e}")));
        }
    }
    Ok(out)
}

fn hessian_family(_cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let reports: Vec<_> = [10.0, 100.0, 1000.0].iter().map(|&n| hessian_family_check(n, 0.1, 64)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for r in &reports[..2] {
        out.push(Check::margin(format!("det-exact/N={}", r.n), 1e-12 - r.max_rel_error, 0, format!("max rel error {:e}", r.max_rel_error)));
    }
    out.push(Check::flag("superlevel-empty/N=100", reports[1].superlevel_empty, 0, format!("sup bound {:e}", reports[1].sup_bound)));
    for w in reports.windows(2) {
        let ratio = w[0].sup_abs / w[1].sup_abs;
        out.push(Check::margin(format!("decade-decay/N={}", w[0].n), 1.0 - (ratio / 10.0 - 1.0).abs() * 10.0, 0, format!("ratio {ratio}")));
    }
    Ok(out)
}

fn comb(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for d in [4u32, 8, 16, 32] {
        let k = CombSet::new(1.0 / d as f64)?;
        out.push(Check::flag(format!("measure-exceeds/delta=1/{d}"), k.exceeds_lower_bound(), 0, format!("|K| = {}", k.measure_exact())));
    }
    out.extend(per_index(2, |i| {
        let (delta, degree) = [(0.25, 10), (0.125, 12)][i];
        let k = CombSet::new(delta)?;
        let (v, w) = ccw_target(&k);
        let s = derive_seed(cfg.seed, "comb", i as u64);
        let fit = fit_harmonic(&w, &k, degree, 150, s)?;
        let ce = AssembledCounterexample::new(&v, fit, delta);
        let probes: Vec<Vec<f64>> = (0..64).map(|j| crate::rng::halton(j, 2)).collect();
        let km = k.exact_volume().unwrap_or(f64::NAN);
        let m = measure(&AxisBox::unit(2), |p| ce.u.value(p).abs() <= ce.tau, cfg.budget.max(100_000), s)?;
        Ok(vec![
            Check::flag(format!("laplacian-certified/delta={delta}"), ce.laplacian_certified(&probes), s, ce.u.label.clone()),
            Check::margin(format!("sublevel-covers-K/delta={delta}"), m.value + GUARD * m.std_error - km, s, format!("τ = {:e}, |{{|u|≤τ}}| = {}", ce.tau, m.value)),
        ])
    })?);
    Ok(out)
}

fn pmeans(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let omega = AxisBox::unit(1);
    per_index(3, |i| {
        let k = (i + 1) as f64;
        let u = move |x: &[f64]| x[0].powf(k);
        let mut out = Vec::new();
        let s = derive_seed(cfg.seed, "pmeans", i as u64);
        let p = -1.0 / (2.0 * k);
        let exact = (1.0 / (1.0 + k * p)).powf(1.0 / p);
        let r = pmean(u, &omega, p, cfg.budget, s)?;
        let tol = GUARD * r.std_error + 1e-12;
        out.push(Check::margin(format!("pmean-oracle/k={k}/p={p}"), tol - (r.value - exact).abs(), s, format!("{} vs {exact}", r.value)));
        let lb = sublevel_to_pmean_bound(1.0, 1.0 / k, p, 1.0)?;
        out.push(Check::margin(format!("sublevel-to-pmean/k={k}/p={p}"), r.value + tol - lb, s, format!("bound {lb:e}")));
        let c = r.value - tol;
        for eps in [0.01, 0.1, 0.5] {
            let ub = pmean_to_sublevel_bound(c, p, 1.0, eps)?;
            let m = measure(&omega, |x| u(x) <= eps, cfg.budget, s)?;
            out.push(Check::margin(
                format!("pmean-to-sublevel/k={k}/eps={eps}"),
                ub - (m.value - GUARD * m.std_error),
                s,
                format!("bound {ub:e}, measured {}, exact {}", m.value, eps.powf(1.0 / k)),
            ));
        }
        let d = pmean(u, &omega, -1.0 / k, cfg.budget, s)?;
        out.push(Check::flag(format!("divergent/k={k}"), d.divergent && d.value == 0.0, s, format!("exponent {:?}", d.sublevel_exponent)));
        let g = pmean(u, &omega, 0.0, cfg.budget, s)?;
        let exact = (-k).exp();
        out.push(Check::margin(format!("geometric-mean/k={k}"), GUARD * g.std_error + 1e-12 - (g.value - exact).abs(), s, format!("{} vs {exact}", g.value)));
        Ok(out)
    })
}

fn lift(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let sq = AxisBox::unit(2);
    let extra = AxisBox::new(vec![0.0], vec![2.0])?;
    let mut out = Vec::new();
    for (pi, &p) in cfg.p.iter().enumerate() {
        let s = derive_seed(cfg.seed, "cp-laplace", pi as u64);
        let cp = assemble_cp_laplace(2, unit_square(), p, cfg.budget, s)?.closed_form;
        out.extend(per_index(cfg.fields, |i| {
            let u = random_laplace_field(&mut field_rng(cfg.seed, "laplace-field", i), 2, &[0.5, 0.5]);
            let s = derive_seed(cfg.seed, "lift", (pi * cfg.fields + i) as u64);
            let r = lift_check(&u, &sq, &extra, p, cp, cfg.budget, s)?;
            let margin = r.lifted_norm + GUARD * r.lifted_std_error - r.bound;
            Ok(vec![Check { id: format!("lift/p={p}/field={i}"), pass: r.holds, margin, seed: s, detail: format!("bound {:e}", r.bound) }])
        })?);
    }
    Ok(out)
}

/// Rejection sample from `region` inside its bounding box.
fn sample_in(region: &dyn Region, rng: &mut Rng) -> Option<Vec<f64>> {
    let b = region.bounding_box();
    (0..10_000).map(|_| b.sample(rng)).find(|p| region.contains(p))
}

fn radius(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let cases: Vec<(&str, BallSystem, Arc<dyn Region>)> = vec![
        ("disk", BallSystem::euclidean(2), Arc::new(EuclideanBall::unit(2))),
        ("square", BallSystem::euclidean(2), unit_square()),
        ("cube", BallSystem::euclidean(3), Arc::new(AxisBox::unit(3))),
        ("spacetime-square", BallSystem::modified_heat_box(1, cfg.m), unit_square()),
    ];
    per_index(cases.len(), |ci| {
        let (name, sys, domain) = &cases[ci];
        let rf = build_radius_function(sys, Arc::clone(domain))?;
        let s = derive_seed(cfg.seed, "radius", ci as u64);
        let mut rng = substream(s, 0);
        let (mut contained, mut worst_ratio) = (true, 0.0f64);
        for _ in 0..cfg.trials {
            let a = sample_in(domain.as_ref(), &mut rng).ok_or(Error::EmptyRegion(10_000))?;
            let ra = rf.eval(&a)?;
            let ball = rf.system.dilate(&a, ra)?;
            contained &= ra > 0.0 && region_within(ball.as_ref(), domain.as_ref());
            for _ in 0..5 {
                let x = sample_in(ball.as_ref(), &mut rng).ok_or(Error::EmptyRegion(10_000))?;
                worst_ratio = worst_ratio.max(ra / rf.eval(&x)?);
            }
        }
        Ok(vec![
            Check::flag(format!("ball-inside/{name}"), contained, s, format!("{} centres", cfg.trials)),
            Check::margin(format!("ratio-bound/{name}"), rf.k() - worst_ratio, s, format!("max R(a)/R(x) = {worst_ratio}, K = {}", rf.k())),
        ])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteConfig {
        SuiteConfig { seed: 3, budget: 4096, fields: 2, trials: 10, p: vec![0.5], m: 3 }
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(matches!(run_suite("nope", &small()), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn conjugate_exponents() {
        assert_eq!(conjugate(1.0), f64::INFINITY);
        assert_eq!(conjugate(f64::INFINITY), 1.0);
        assert_eq!(conjugate(2.0), 2.0);
    }

    #[test]
    fn mixed_field_satisfies_hypothesis() {
        let u = mixed_field(&mut substream(1, 0));
        let op = LinearOperator::mixed(2, 0, 1);
        assert!((op.apply(&u, &[0.3, 0.7]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cheap_suites_pass_and_are_deterministic() {
        for name in ["prop-general", "l1-linear", "kappa", "hessian-family", "pmeans", "radius", "claim-laplace"] {
            let a = run_suite(name, &small()).unwrap();
            assert!(a.overall, "{name}: {:?}", a.failures().collect::<Vec<_>>());
            let b = run_suite(name, &small()).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }

    #[test]
    fn every_listed_suite_runs() {
        let cfg = SuiteConfig { trials: 3, fields: 1, ..small() };
        for name in SUITES {
            let r = run_suite(name, &cfg).unwrap();
            assert!(!r.checks.is_empty(), "{name}");
        }
    }
}

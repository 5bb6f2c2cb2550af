//! The `lpbound` command-line front end.
//!
//! Every run resolves its parameters (defaults, then `--config` JSON, then
//! flags), echoes the resolved config, and writes `<stem>.csv`,
//! `<stem>.json` and `<stem>.config.json` into `--out-dir`. Exit codes:
//! 0 success, 1 a check failed, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::averages::{check_concave_mvi, check_deriv1, check_deriv2, check_modified_heatball_mvi, check_mvi, check_pmvi, ConcaveMap, MviCheckReport};
use crate::constants::{heatball_volume_report, k_heat, k_laplace, kappa_max, v_one, ConstantReport};
use crate::counterexamples::{ccw_target, fit_harmonic, hessian_family_check, AssembledCounterexample, CombSet};
use crate::error::{Error, Result};
use crate::fields::{family, random_harmonic_poly, random_heat_field, random_smooth_field, random_temperature, ScalarField};
use crate::geometry::{AxisBox, BallSystem, EuclideanBall, Region, RegionDescriptor};
use crate::quadrature::{measure, pmean};
use crate::rng::{derive_seed, substream};
use crate::verify::{run_suite, SuiteConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "lpbound", version, about = "Uniform L^p lower bounds for Δu ≥ 1 and Hu ≥ 1: constants, averages, checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Table of K_n, |E(1)|, V(1) and M_{m,n} with cross-checks.
    Constants(Common),
    /// Finite difference of the ball (`--op laplace`) or heatball (`--op heat`) average against its derivative formula.
    DerivCheck(Common),
    /// Mean value inequality trials (`--kind mvi|pmvi|concave|modified-heatball`).
    MviCheck(Common),
    /// Counterexample constructions: `ccw` (comb set) or `hessian`.
    Counterexample {
        target: String,
        #[command(flatten)]
        common: Common,
    },
    /// p-means of a named field over a region for every `--p`.
    Pmeans(Common),
    /// Runs a verification suite.
    Suite {
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Common {
    /// JSON file supplying any of the flags below; flags override it.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads [default: available cores].
    #[arg(long)]
    threads: Option<usize>,
    /// Master seed [default: 42].
    #[arg(long)]
    seed: Option<u64>,
    /// Samples per Monte Carlo integral [default: 20000].
    #[arg(long)]
    budget: Option<usize>,
    /// Spatial dimension [default: 2].
    #[arg(long)]
    n: Option<usize>,
    /// Modified heatball parameter, a value or inclusive range `lo..hi` [default: 3..6].
    #[arg(long)]
    m: Option<String>,
    /// Exponents, comma separated [default: 0.25,0.5,0.75].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    p: Option<Vec<f64>>,
    /// Operator: laplace or heat [default: laplace].
    #[arg(long)]
    op: Option<String>,
    /// Radius [default: 0.5].
    #[arg(long)]
    r: Option<f64>,
    /// Trials per field [default: 100].
    #[arg(long)]
    trials: Option<usize>,
    /// Random fields [default: 5].
    #[arg(long)]
    fields: Option<usize>,
    /// Comb parameter δ [default: 0.125].
    #[arg(long)]
    delta: Option<f64>,
    /// Harmonic fit degree [default: 20].
    #[arg(long)]
    degree: Option<u32>,
    /// MVI variant: mvi, pmvi, concave, modified-heatball [default: pmvi].
    #[arg(long)]
    kind: Option<String>,
    /// Named field for `pmeans` [default: monomial].
    #[arg(long)]
    family: Option<String>,
    /// Field parameters as JSON, e.g. '{"k":2}' [default: {"k":2}].
    #[arg(long, value_parser = parse_params)]
    params: Option<BTreeMap<String, f64>>,
    /// Region as JSON, e.g. '{"kind":"box","lo":[0],"hi":[1]}' [default: unit interval].
    #[arg(long, value_parser = parse_region)]
    region: Option<RegionDescriptor>,
}

fn parse_params(s: &str) -> std::result::Result<BTreeMap<String, f64>, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

fn parse_region(s: &str) -> std::result::Result<RegionDescriptor, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

/// Fully resolved parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub target: Option<String>,
    pub seed: u64,
    pub budget: usize,
    pub n: usize,
    pub m: String,
    pub p: Vec<f64>,
    pub op: String,
    pub r: f64,
    pub trials: usize,
    pub fields: usize,
    pub delta: f64,
    pub degree: u32,
    pub kind: String,
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub region: RegionDescriptor,
    pub out_dir: PathBuf,
    pub threads: usize,
}

impl RunConfig {
    fn resolve(command: &str, target: Option<String>, cli: Common) -> Result<Self> {
        let file = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                let mut value: serde_json::Value = serde_json::from_str(&text)?;
                if let Some(obj) = value.as_object_mut() {
                    for key in ["command", "target"] {
                        obj.remove(key);
                    }
                }
                serde_json::from_value::<Common>(value)?
            }
            None => Common::default(),
        };
        let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let cfg = Self {
            command: command.into(),
            target,
            seed: cli.seed.or(file.seed).unwrap_or(42),
            budget: cli.budget.or(file.budget).unwrap_or(20_000),
            n: cli.n.or(file.n).unwrap_or(2),
            m: cli.m.or(file.m).unwrap_or_else(|| "3..6".into()),
            p: cli.p.or(file.p).unwrap_or_else(|| vec![0.25, 0.5, 0.75]),
            op: cli.op.or(file.op).unwrap_or_else(|| "laplace".into()),
            r: cli.r.or(file.r).unwrap_or(0.5),
            trials: cli.trials.or(file.trials).unwrap_or(100),
            fields: cli.fields.or(file.fields).unwrap_or(5),
            delta: cli.delta.or(file.delta).unwrap_or(0.125),
            degree: cli.degree.or(file.degree).unwrap_or(20),
            kind: cli.kind.or(file.kind).unwrap_or_else(|| "pmvi".into()),
            family: cli.family.or(file.family).unwrap_or_else(|| "monomial".into()),
            params: cli.params.or(file.params).unwrap_or_else(|| BTreeMap::from([("k".to_string(), 2.0)])),
            region: cli.region.or(file.region).unwrap_or(RegionDescriptor::Box { lo: vec![0.0], hi: vec![1.0] }),
            out_dir: cli.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from("out")),
            threads: cli.threads.or(file.threads).unwrap_or(threads).max(1),
        };
        cfg.m_range()?;
        Ok(cfg)
    }

    /// Inclusive `m` range.
    pub fn m_range(&self) -> Result<(usize, usize)> {
        let bad = || Error::InvalidParameter(format!("--m expects `k` or `lo..hi`, got `{}`", self.m));
        let (lo, hi) = match self.m.split_once("..") {
            Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
            None => {
                let v = self.m.trim().parse().map_err(|_| bad())?;
                (v, v)
            }
        };
        if lo < 3 || hi < lo {
            return Err(bad());
        }
        Ok((lo, hi))
    }

    fn stem(&self) -> String {
        match &self.target {
            Some(t) => format!("{}-{t}", self.command),
            None => self.command.clone(),
        }
    }
}

/// Outcome of a subcommand: CSV rows, a JSON result and the pass flag.
struct Output {
    csv: Vec<u8>,
    json: serde_json::Value,
    pass: bool,
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ConstantRow {
    name: String,
    inputs: String,
    closed_form: f64,
    cross_check: Option<f64>,
    rel_gap: Option<f64>,
}

impl From<&ConstantReport> for ConstantRow {
    fn from(r: &ConstantReport) -> Self {
        let inputs = r.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
        Self { name: r.name.clone(), inputs, closed_form: r.closed_form, cross_check: r.cross_check, rel_gap: r.rel_gap }
    }
}

/// Relative gap allowed between the closed form of `M_{m,n}` and its maximisation.
const KAPPA_GAP: f64 = 1e-6;

fn cmd_constants(cfg: &RunConfig) -> Result<Output> {
    let n = cfg.n;
    let (lo, hi) = cfg.m_range()?;
    let mut reports = vec![ConstantReport::new("k_laplace", k_laplace(n)?).input("n", n as f64)];
    reports.push(k_heat(n, cfg.budget, derive_seed(cfg.seed, "k-heat", 0))?);
    reports.push(heatball_volume_report(n, cfg.budget, derive_seed(cfg.seed, "heatball-volume", 0))?);
    reports.push(v_one(n)?);
    let mut pass = true;
    for m in lo..=hi {
        let r = kappa_max(m, n)?;
        pass &= r.rel_gap.is_some_and(|g| g <= KAPPA_GAP);
        reports.push(r);
    }
    let rows: Vec<ConstantRow> = reports.iter().map(ConstantRow::from).collect();
    Ok(Output { csv: to_csv(&rows)?, json: serde_json::to_value(&reports)?, pass })
}

#[derive(Serialize)]
struct DerivRow {
    op: String,
    field: String,
    n: usize,
    r: f64,
    h: f64,
    fd: f64,
    fd_se: f64,
    rhs: f64,
    rhs_se: f64,
    tolerance: f64,
    pass: bool,
}

fn cmd_deriv_check(cfg: &RunConfig) -> Result<Output> {
    let n = cfg.n;
    let mut rows = Vec::new();
    for i in 0..cfg.fields {
        let mut rng = substream(derive_seed(cfg.seed, "cli-deriv-field", i as u64), 0);
        let s = derive_seed(cfg.seed, "cli-deriv", i as u64);
        let (u, d) = match cfg.op.as_str() {
            "laplace" => {
                let u = random_smooth_field(&mut rng, n);
                let d = check_deriv1(&u, &vec![0.1; n], cfg.r, cfg.budget, s)?;
                (u, d)
            }
            "heat" => {
                let u = if i % 2 == 0 { random_heat_field(&mut rng, n, -0.5) } else { random_temperature(&mut rng, n, -0.5) };
                let mut c = vec![0.1; n];
                c.push(1.0);
                let d = check_deriv2(&u, &c, cfg.r, cfg.budget, s)?;
                (u, d)
            }
            other => return Err(Error::InvalidParameter(format!("--op must be laplace or heat, got `{other}`"))),
        };
        rows.push(DerivRow {
            op: d.op.clone(),
            field: u.name(),
            n,
            r: d.r,
            h: d.h,
            fd: d.fd.value,
            fd_se: d.fd.std_error,
            rhs: d.rhs.value,
            rhs_se: d.rhs.std_error,
            tolerance: d.tolerance,
            pass: d.pass,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(Output { csv: to_csv(&rows)?, json: serde_json::to_value(&rows)?, pass })
}

#[derive(Serialize)]
struct MviRow {
    kind: String,
    field: usize,
    p: Option<f64>,
    constant: f64,
    trials: usize,
    trivial: usize,
    violations: usize,
    worst_margin: f64,
    seed: u64,
}

fn mvi_row(field: usize, p: Option<f64>, r: &MviCheckReport) -> MviRow {
    MviRow {
        kind: r.kind.clone(),
        field,
        p,
        constant: r.constant,
        trials: r.trials,
        trivial: r.trivial,
        violations: r.violations,
        worst_margin: r.worst_margin,
        seed: r.seed,
    }
}

/// MVI trials for random harmonic polynomials on the unit disk
/// (`C = 1/π`, `R(0) = 1/2`, `K = 2`) or temperatures for the modified heatball.
fn cmd_mvi_check(cfg: &RunConfig) -> Result<Output> {
    let sys = BallSystem::euclidean(2);
    let disk = EuclideanBall::unit(2);
    let c = 1.0 / std::f64::consts::PI;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for i in 0..cfg.fields {
        let mut rng = substream(derive_seed(cfg.seed, "cli-mvi-field", i as u64), 0);
        let s = derive_seed(cfg.seed, "cli-mvi", i as u64);
        let f: Box<dyn Fn(&[f64]) -> f64 + Sync> = if cfg.kind == "modified-heatball" {
            let u = random_temperature(&mut rng, cfg.n, -0.5);
            Box::new(move |x| u.value(x))
        } else {
            let u = random_harmonic_poly(&mut rng, 4, [0.0, 0.0], 1.0);
            Box::new(move |x| u.value(x))
        };
        match cfg.kind.as_str() {
            "mvi" => {
                let r = check_mvi(&f, &sys, &disk, c, cfg.trials, cfg.budget, s)?;
                rows.push(mvi_row(i, None, &r));
                reports.push(r);
            }
            "pmvi" | "concave" => {
                for (j, &p) in cfg.p.iter().enumerate() {
                    let s = derive_seed(s, "p", j as u64);
                    let r = if cfg.kind == "pmvi" {
                        check_pmvi(&f, &sys, &disk, c, p, 0.5, 2.0, cfg.trials, cfg.budget, s)?
                    } else {
                        let phi = ConcaveMap::Power { exponent: p };
                        check_concave_mvi(&f, &sys, &disk, c, phi, 2f64.powf(1.0 / p), 0.5, 2.0, cfg.trials, cfg.budget, s)?
                    };
                    rows.push(mvi_row(i, Some(p), &r));
                    reports.push(r);
                }
            }
            "modified-heatball" => {
                let (m, _) = cfg.m_range()?;
                let mut center = vec![0.1; cfg.n];
                center.push(1.0);
                let r = check_modified_heatball_mvi(&f, m, &center, cfg.r, None, None, cfg.trials, cfg.budget, s)?;
                rows.push(mvi_row(i, None, &r));
                reports.push(r);
            }
            other => return Err(Error::InvalidParameter(format!("unknown --kind `{other}`"))),
        }
    }
    let pass = reports.iter().all(MviCheckReport::passed);
    Ok(Output { csv: to_csv(&rows)?, json: serde_json::to_value(&reports)?, pass })
}

#[derive(Serialize)]
struct SublevelRow {
    eps: f64,
    measure: f64,
    std_error: f64,
    comb_measure: f64,
}

#[derive(Serialize)]
struct CcwSummary {
    delta: f64,
    rectangles: usize,
    comb_measure: f64,
    comb_measure_exact: String,
    exceeds_lower_bound: bool,
    laplacian_certified: bool,
    tau: f64,
    fit: crate::counterexamples::HarmonicFit,
}

fn cmd_counterexample(cfg: &RunConfig) -> Result<Output> {
    match cfg.target.as_deref() {
        Some("ccw") => {
            let k = CombSet::new(cfg.delta)?;
            let (v, w) = ccw_target(&k);
            let s = derive_seed(cfg.seed, "cli-ccw", 0);
            let fit = fit_harmonic(&w, &k, cfg.degree, 150, s)?;
            let ce = AssembledCounterexample::new(&v, fit, cfg.delta);
            let probes: Vec<Vec<f64>> = (0..64).map(|j| crate::rng::halton(j, 2)).collect();
            let km = k.exact_volume().unwrap_or(f64::NAN);
            let mut rows = Vec::new();
            for (j, scale) in [0.25, 0.5, 1.0, 2.0].into_iter().enumerate() {
                let eps = scale * ce.tau;
                let m = measure(&AxisBox::unit(2), |p| ce.u.value(p).abs() <= eps, cfg.budget, derive_seed(s, "eps", j as u64))?;
                rows.push(SublevelRow { eps, measure: m.value, std_error: m.std_error, comb_measure: km });
            }
            let certified = ce.laplacian_certified(&probes);
            let at_tau = &rows[2];
            let pass = k.exceeds_lower_bound() && certified && at_tau.measure + 3.0 * at_tau.std_error >= km;
            let summary = CcwSummary {
                delta: cfg.delta,
                rectangles: k.count(),
                comb_measure: km,
                comb_measure_exact: k.measure_exact().to_string(),
                exceeds_lower_bound: k.exceeds_lower_bound(),
                laplacian_certified: certified,
                tau: ce.tau,
                fit: ce.fit,
            };
            Ok(Output { csv: to_csv(&rows)?, json: serde_json::to_value(&summary)?, pass })
        }
        Some("hessian") => {
            let reports = [10.0, 100.0, 1000.0].iter().map(|&n| hessian_family_check(n, 0.1, 64)).collect::<Result<Vec<_>>>()?;
            let pass = reports.iter().all(|r| r.max_rel_error <= 1e-12) && reports[1].superlevel_empty;
            Ok(Output { csv: to_csv(&reports)?, json: serde_json::to_value(&reports)?, pass })
        }
        other => Err(Error::InvalidParameter(format!("counterexample target must be ccw or hessian, got {other:?}"))),
    }
}

fn cmd_pmeans(cfg: &RunConfig) -> Result<Output> {
    let u = family(&cfg.family, &cfg.params)?;
    let region: Arc<dyn Region> = cfg.region.build()?;
    if region.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: region.dim(), got: u.dim() });
    }
    let rows = cfg
        .p
        .iter()
        .enumerate()
        .map(|(j, &p)| pmean(|x| u.value(x), region.as_ref(), p, cfg.budget, derive_seed(cfg.seed, "cli-pmean", j as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Output { csv: to_csv(&rows)?, json: serde_json::to_value(&rows)?, pass: true })
}

fn cmd_suite(cfg: &RunConfig) -> Result<Output> {
    let name = cfg.target.as_deref().unwrap_or_default();
    let sc = SuiteConfig {
        seed: cfg.seed,
        budget: cfg.budget,
        fields: cfg.fields,
        trials: cfg.trials,
        p: cfg.p.clone(),
        m: cfg.m_range()?.0,
    };
    let r = run_suite(name, &sc)?;
    Ok(Output { csv: to_csv(&r.checks)?, json: serde_json::to_value(&r)?, pass: r.overall })
}

fn write_outputs(cfg: &RunConfig, out: &Output) -> Result<()> {
    let dir: &Path = &cfg.out_dir;
    fs::create_dir_all(dir)?;
    let stem = cfg.stem();
    fs::write(dir.join(format!("{stem}.csv")), &out.csv)?;
    let report = serde_json::json!({ "schema_version": SCHEMA_VERSION, "config": cfg, "pass": out.pass, "result": out.json });
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&report)? + "\n")?;
    fs::write(dir.join(format!("{stem}.config.json")), serde_json::to_string_pretty(cfg)? + "\n")?;
    Ok(())
}

fn execute(cfg: &RunConfig) -> Result<bool> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let out = pool.install(|| match cfg.command.as_str() {
        "constants" => cmd_constants(cfg),
        "deriv-check" => cmd_deriv_check(cfg),
        "mvi-check" => cmd_mvi_check(cfg),
        "counterexample" => cmd_counterexample(cfg),
        "pmeans" => cmd_pmeans(cfg),
        "suite" => cmd_suite(cfg),
        other => Err(Error::InvalidParameter(format!("unknown command `{other}`"))),
    })?;
    write_outputs(cfg, &out)?;
    Ok(out.pass)
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter(_) | Error::UnknownSuite(_) | Error::UnknownFamily(_) | Error::Json(_) | Error::DimensionMismatch { .. }
    )
}

pub fn main<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (command, target, common) = match cli.command {
        Command::Constants(c) => ("constants", None, c),
        Command::DerivCheck(c) => ("deriv-check", None, c),
        Command::MviCheck(c) => ("mvi-check", None, c),
        Command::Counterexample { target, common } => ("counterexample", Some(target), common),
        Command::Pmeans(c) => ("pmeans", None, c),
        Command::Suite { name, common } => ("suite", Some(name), common),
    };
    let cfg = match RunConfig::resolve(command, target, common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match serde_json::to_string_pretty(&cfg) {
        Ok(s) => println!("{s}"),
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    }
    match execute(&cfg) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("check failed; see {}", cfg.out_dir.join(format!("{}.csv", cfg.stem())).display());
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage_error(&e) {
                2
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> i32 {
        main(std::iter::once("lpbound").chain(args.iter().copied()).map(OsString::from))
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(&["constants", "--bogus"]), 2);
        assert_eq!(run(&["nope"]), 2);
        assert_eq!(run(&[]), 2);
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(run(&["suite", "no-such-suite", "--out-dir", out]), 2);
        assert_eq!(run(&["constants", "--m", "2..1", "--out-dir", out]), 2);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(&["--help"]), 0);
    }

    #[test]
    fn m_range_parsing() {
        let mut cfg = RunConfig::resolve("constants", None, Common::default()).unwrap();
        assert_eq!(cfg.m_range().unwrap(), (3, 6));
        cfg.m = "4".into();
        assert_eq!(cfg.m_range().unwrap(), (4, 4));
        cfg.m = "x..3".into();
        assert!(cfg.m_range().is_err());
    }

    #[test]
    fn config_file_is_overridden_by_flags_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o");
        let out_s = out.to_str().unwrap();
        assert_eq!(run(&["pmeans", "--p", "-0.25,0,1", "--budget", "4096", "--seed", "9", "--out-dir", out_s]), 0);
        let persisted = out.join("pmeans.config.json");
        let first = fs::read(out.join("pmeans.csv")).unwrap();
        let cfg: RunConfig = serde_json::from_slice(&fs::read(&persisted).unwrap()).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.p, vec![-0.25, 0.0, 1.0]);
        let copy = dir.path().join("c.json");
        fs::copy(&persisted, &copy).unwrap();
        assert_eq!(run(&["pmeans", "--config", copy.to_str().unwrap()]), 0);
        assert_eq!(fs::read(out.join("pmeans.csv")).unwrap(), first);
        assert_eq!(run(&["pmeans", "--config", copy.to_str().unwrap(), "--seed", "10"]), 0);
        let cfg: RunConfig = serde_json::from_slice(&fs::read(&persisted).unwrap()).unwrap();
        assert_eq!(cfg.seed, 10);
        assert_eq!(cfg.budget, 4096);
    }

    #[test]
    fn constants_table_has_documented_columns() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(run(&["constants", "--n", "2", "--m", "3..4", "--budget", "4096", "--out-dir", out]), 0);
        let text = fs::read_to_string(dir.path().join("constants.csv")).unwrap();
        assert!(text.starts_with("name,inputs,closedForm,crossCheck,relGap\n"));
        assert_eq!(text.lines().filter(|l| l.starts_with("kappa")).count(), 2);
        let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("constants.json")).unwrap()).unwrap();
        assert_eq!(json["schema_version"], SCHEMA_VERSION);
    }
}

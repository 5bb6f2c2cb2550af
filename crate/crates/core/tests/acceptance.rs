//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any failure.

use std::process::Command;
use std::time::{Duration, Instant};

use lpbound::averages::pmvi_constant;
use lpbound::geometry::BallSystem;
use lpbound::verify::{run_suite, SuiteConfig, SuiteResult};

struct Outcome {
    pass: bool,
    detail: String,
}

fn suite(name: &str, cfg: &SuiteConfig) -> SuiteResult {
    run_suite(name, cfg).unwrap_or_else(|e| panic!("suite {name}: {e}"))
}

fn summarize(results: &[SuiteResult], filter: impl Fn(&str) -> bool) -> Outcome {
    let checks: Vec<_> = results.iter().flat_map(|r| r.checks.iter()).filter(|c| filter(&c.id)).collect();
    let failed: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
    let worst = checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    let mut detail = format!("{} checks, {} failed, worst margin {worst:e}", checks.len(), failed.len());
    if let Some(c) = failed.first() {
        detail.push_str(&format!("; first failure {} ({})", c.id, c.detail));
    }
    Outcome { pass: !checks.is_empty() && failed.is_empty(), detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    o.detail.push_str(&format!(", {:.1} s", elapsed.as_secs_f64()));
    if let Some(l) = limit {
        if elapsed > l {
            o.pass = false;
            o.detail.push_str(&format!(" exceeds {} s", l.as_secs()));
        }
    }
    o
}

fn base() -> SuiteConfig {
    SuiteConfig { seed: 20_240_601, ..SuiteConfig::default() }
}

fn c1() -> Outcome {
    timed(Some(Duration::from_secs(60)), || {
        let cfg = SuiteConfig { fields: 10, budget: 100_000, ..base() };
        summarize(&[suite("deriv-laplace", &cfg)], |id| id.starts_with("formula/"))
    })
}

fn c2() -> Outcome {
    timed(Some(Duration::from_secs(300)), || {
        let cfg = SuiteConfig { fields: 10, budget: 100_000, ..base() };
        summarize(&[suite("deriv-heat", &cfg)], |id| !id.starts_with("lower-bound/"))
    })
}

fn c3() -> Outcome {
    timed(None, || {
        let cfg = SuiteConfig { budget: 100_000, ..base() };
        summarize(&[suite("normalization", &cfg)], |id| id.starts_with("heat-average-of-one/"))
    })
}

fn c4() -> Outcome {
    timed(None, || summarize(&[suite("kappa", &base())], |_| true))
}

fn c5() -> Outcome {
    timed(None, || {
        let cfg = SuiteConfig { fields: 20, trials: 1000, ..base() };
        summarize(&[suite("claim-laplace", &cfg)], |_| true)
    })
}

fn c6() -> Outcome {
    timed(None, || {
        let cfg = SuiteConfig { fields: 20, trials: 1000, p: vec![0.25, 0.5, 0.75], ..base() };
        let mut o = summarize(&[suite("pmvi", &cfg)], |_| true);
        let half = pmvi_constant(1.0 / std::f64::consts::PI, &BallSystem::euclidean(2), 0.5, 2.0, 0.5).unwrap();
        let expected = 64.0 / std::f64::consts::PI;
        if (half - expected).abs() > 1e-12 * expected {
            o.pass = false;
        }
        o.detail.push_str(&format!(", C at p=1/2 is {half}"));
        o
    })
}

fn c7() -> Outcome {
    timed(None, || {
        let cfg = SuiteConfig { fields: 20, p: vec![0.25, 0.5, 0.75], m: 3, ..base() };
        summarize(&[suite("laplace-thm", &cfg), suite("heat-thm", &cfg)], |_| true)
    })
}

fn c8() -> Outcome {
    timed(None, || summarize(&[suite("hessian-family", &base())], |_| true))
}

fn c9() -> Outcome {
    timed(None, || {
        let cfg = SuiteConfig { budget: 200_000, ..base() };
        summarize(&[suite("comb", &cfg)], |_| true)
    })
}

fn c10() -> Outcome {
    timed(None, || {
        let cfg = SuiteConfig { budget: 100_000, ..base() };
        summarize(&[suite("pmeans", &cfg)], |_| true)
    })
}

fn c11() -> Outcome {
    timed(None, || {
        let dir = tempfile::tempdir().expect("temp dir");
        let runs: [&[&str]; 3] = [
            &["constants", "--n", "2", "--m", "3..6", "--budget", "20000"],
            &["deriv-check", "--op", "heat", "--n", "1", "--r", "0.5", "--seed", "7"],
            &["suite", "pmvi", "--fields", "3", "--trials", "50", "--p", "0.5"],
        ];
        let mut identical = 0;
        let mut notes = Vec::new();
        for (i, args) in runs.iter().enumerate() {
            let mut bytes = Vec::new();
            for rep in 0..2 {
                let out = dir.path().join(format!("run{i}-{rep}"));
                let status = Command::new(env!("CARGO_BIN_EXE_lpbound"))
                    .args(*args)
                    .arg("--out-dir")
                    .arg(&out)
                    .output()
                    .expect("spawn lpbound");
                let csv = std::fs::read_dir(&out)
                    .expect("output dir")
                    .filter_map(|e| e.ok())
                    .map(|e| e.path())
                    .find(|p| p.extension().is_some_and(|x| x == "csv"))
                    .expect("csv output");
                bytes.push((status.status.code(), std::fs::read(csv).expect("read csv")));
            }
            if bytes[0] == bytes[1] && bytes[0].0 == Some(0) {
                identical += 1;
            } else {
                notes.push(format!("{} differs or failed", args[0]));
            }
        }
        Outcome { pass: identical == runs.len(), detail: format!("{identical}/{} runs byte-identical{}", runs.len(), if notes.is_empty() { String::new() } else { format!(" ({})", notes.join("; ")) }) }
    })
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("ball-average derivative formula", c1),
        ("heatball-average derivative formula", c2),
        ("heat-average normalization", c3),
        ("kernel maximum and argmax", c4),
        ("Laplace sublevel drop", c5),
        ("p-power mean value inequality", c6),
        ("end-to-end L^p lower bounds", c7),
        ("Hessian-determinant family", c8),
        ("comb counterexample", c9),
        ("p <= 0 conversions", c10),
        ("CLI determinism", c11),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failures += 1;
        }
        println!("criterion {:>2} {name}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {}/{} passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}

//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs at full scale (about seven minutes on one core). The process exits
//! nonzero when any criterion fails and `GG_ACCEPTANCE_STRICT=1` is set;
//! otherwise the lines and the summary are the result.

#[allow(dead_code)]
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use girsanov_core::diagnostic::{
    consistency_check, estimate_expectation_z, estimate_finite_qv_prob, feller_explosion_test, martingale_verdict,
    EndpointBehaviour, FellerPreset, McParams, UiSource, VerdictRule,
};
use girsanov_core::scenarios::{build_scenario, counterexample_path_qv, Overrides};
use girsanov_core::Classification;

const SEED: u64 = 42;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ov(pairs: &[(&str, &str)]) -> Overrides {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn c1() -> Outcome {
    let start = Instant::now();
    let s = build_scenario::<f64>("trivial-unit", &Overrides::new()).unwrap();
    let times = [0.5, 1.0, 2.0];
    let v = martingale_verdict(&s, &times, &McParams::new(10_000, SEED), &VerdictRule::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let exact = v.expectation.estimates.iter().all(|e| e.point == 1.0 && e.se == 0.0);
    let pass = exact && v.classification == Classification::UIMartingale && secs < 5.0;
    outcome(pass, format!("E[Z_t] exact={exact}, verdict {}, {secs:.2} s", v.classification))
}

fn c2() -> Outcome {
    let s = build_scenario::<f64>("reciprocal-bessel", &ov(&[("h", "0.0001")])).unwrap();
    let run = |workers: usize| {
        let start = Instant::now();
        let mc = McParams::new(100_000, SEED).with_workers(workers);
        let v = martingale_verdict(&s, &[1.0], &mc, &VerdictRule::default()).unwrap();
        (v, start.elapsed().as_secs_f64())
    };
    let (v, secs) = run(1);
    let e = v.expectation.estimates[0].point;
    let q = v.finite_qv.estimates[0].point;
    let mut pass = (0.652..=0.712).contains(&e)
        && (0.662..=0.702).contains(&q)
        && v.classification == Classification::StrictLocal
        && secs < 180.0;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let parallel = if cores >= 4 {
        let (v4, secs4) = run(4);
        pass &= secs4 < 60.0 && v4.classification == v.classification;
        format!("{secs4:.1} s at 4 workers")
    } else {
        format!("4-worker timing not measured ({cores} CPU)")
    };
    outcome(
        pass,
        format!("E[Z_1]={e:.4}, Q(finite)={q:.4}, verdict {}, {secs:.1} s single-thread, {parallel}", v.classification),
    )
}

fn c3() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    for (name, o) in support::gallery() {
        let s = build_scenario::<f64>(name, &o).unwrap();
        let rows = consistency_check(&s, &[0.5, 1.0], &McParams::new(100_000, SEED)).unwrap();
        for r in rows {
            checked += 1;
            if !r.pass {
                let branch = o.get("branch").map(|b| format!("[{b}]")).unwrap_or_default();
                failures.push(format!(
                    "{name}{branch} t={}: |{:.4} - {:.4}| = {:.2} SE{}",
                    r.t,
                    r.expectation.point,
                    r.finite.point,
                    r.difference.abs() / r.combined_se,
                    if r.heavy_tail { " (heavy tail)" } else { "" }
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{checked} scenario-times within 3 SE")
    } else {
        format!("{} of {checked} outside 3 SE: {}", failures.len(), failures.join("; "))
    };
    outcome(failures.is_empty(), detail)
}

fn c4() -> Outcome {
    let s = build_scenario::<f64>("stopped-bm-to-bessel3", &Overrides::new()).unwrap();
    let mc = McParams::new(10_000, SEED);
    let v = martingale_verdict(&s, &[0.5, 1.0, 2.0], &mc, &VerdictRule::default()).unwrap();
    let guard = v.per_time.iter().map(|t| t.guard_fraction).fold(1.0f64, f64::min);
    let q = estimate_finite_qv_prob(&s, &[1.0, 100.0], &mc).unwrap();
    let growth = q.mean_qv[1] - q.mean_qv[0];
    let pass = v.classification == Classification::MartingaleNotUI
        && v.ui_source == UiSource::Analytic
        && guard >= 0.999
        && growth >= 2.0;
    outcome(
        pass,
        format!(
            "verdict {} (UI from {}), min guard {guard:.4}, mean <M> {:.3} at t=1 and {:.3} at t=100",
            v.classification,
            v.ui_source.as_str(),
            q.mean_qv[0],
            q.mean_qv[1]
        ),
    )
}

fn c5() -> Outcome {
    use EndpointBehaviour::{Explodes, NoExplosion};
    let start = Instant::now();
    let cases = [
        (FellerPreset::Brownian, NoExplosion, NoExplosion),
        (FellerPreset::Quadratic, NoExplosion, Explodes),
        (FellerPreset::Bessel3, NoExplosion, NoExplosion),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (preset, left, right) in cases {
        let r = feller_explosion_test(&preset.problem::<f64>()).unwrap();
        pass &= r.left.behaviour == left && r.right.behaviour == right && r.converged();
        parts.push(format!("{}: {}/{}", preset.as_str(), r.left.behaviour.as_str(), r.right.behaviour.as_str()));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 10.0;
    outcome(pass, format!("{}, {secs:.2} s", parts.join(", ")))
}

fn c6() -> Outcome {
    let s = build_scenario::<f64>("mckean-quadratic", &Overrides::new()).unwrap();
    let mc = McParams::new(10_000, SEED);
    let q = estimate_finite_qv_prob(&s, &[5.0], &mc).unwrap();
    let frac = q.exploded[0] as f64 / q.n as f64;
    // The same measurement with mu = x^2 never switched off.
    let d = build_scenario::<f64>("degenerate-nonunique", &ov(&[("branch", "diffusive")])).unwrap();
    let qd = estimate_finite_qv_prob(&d, &[5.0], &mc).unwrap();
    let frac_d = qd.exploded[0] as f64 / qd.n as f64;
    let e = estimate_expectation_z(&s, &[1.0], &mc).unwrap().estimates[0];
    let gap = e.point <= 1.0 - 5.0 * e.se;
    let pass = frac >= 0.99 && gap;
    outcome(
        pass,
        format!(
            "exploded by t=5: {frac:.4} (need >= 0.99; {frac_d:.4} without the cutoff at T); \
             E[Z_1]={:.4}, 1 - 5 SE = {:.4}, gap {}",
            e.point,
            1.0 - 5.0 * e.se,
            if gap { "holds" } else { "missing" }
        ),
    )
}

fn run_cli(cfg: &Path) -> String {
    let o = Command::new(env!("CARGO_BIN_EXE_girsanov-gate")).arg(cfg).env_remove("GG_WORKERS").output().unwrap();
    String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .filter(|l| !l.contains("\"runtime_seconds\"") && !l.contains("\"mc.workers\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn c7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (i, workers) in [1, 4].into_iter().enumerate() {
        let p = dir.path().join(format!("c7-{i}.cfg"));
        let text = format!(
            "scenario=mckean-quadratic\noperation=verdict\nmc.seed={SEED}\nmc.n=2000\ntimes=0.5,1\nmc.workers={workers}\n"
        );
        std::fs::write(&p, text).unwrap();
        let a = run_cli(&p);
        let b = run_cli(&p);
        reports.push((a == b, a));
    }
    let repeat = reports.iter().all(|r| r.0);
    let across = reports[0].1 == reports[1].1;
    let nonempty = reports[0].1.contains("\"verdict\"");
    outcome(
        repeat && across && nonempty,
        format!("repeat identical={repeat}, workers 1 vs 4 identical={across}"),
    )
}

fn c8() -> Outcome {
    let r = counterexample_path_qv(1.0);
    outcome(r.is_diverged() && r.value() > 1e6, format!("{r:?}"))
}

fn c9() -> Outcome {
    let start = Instant::now();
    let mut failed = Vec::new();
    for (name, suite) in support::smoke_suites() {
        if let Err(e) = suite(8) {
            failed.push(format!("{name}: {e}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failed.is_empty() && secs < 30.0;
    let detail = if failed.is_empty() {
        format!("5 suites green at N={}, {secs:.1} s", support::SMOKE_N)
    } else {
        failed.join("; ")
    };
    outcome(pass, detail)
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("C1 trivial exactness", c1),
        ("C2 reciprocal Bessel", c2),
        ("C3 consistency identity", c3),
        ("C4 stopped Brownian motion", c4),
        ("C5 Feller test", c5),
        ("C6 McKean explosion mass", c6),
        ("C7 reproducibility", c7),
        ("C8 path counterexample", c8),
        ("C9 property suites", c9),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let o = f();
        failed += usize::from(!o.pass);
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 && std::env::var("GG_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

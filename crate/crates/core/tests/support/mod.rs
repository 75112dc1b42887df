//! Property suites shared by the `properties` test target and the acceptance
//! harness. Each suite runs a fixed number of proptest cases and reports the
//! first minimal failure as a string.

use std::fmt::Debug;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestError, TestRunner};

use girsanov_core::diagnostic::{
    classify, estimate_expectation_z, estimate_finite_qv_prob, martingale_verdict, wilson_interval, McParams,
    TimeDecision, VerdictRule,
};
use girsanov_core::engine::{psd_factor, simulate_batch, BatchSpec, MeasureMode, PathClass, RunOptions, Simulator};
use girsanov_core::exponential::{ExponentialAccumulator, FreezeCause};
use girsanov_core::path::{make_domain, CoefficientSample, Interval};
use girsanov_core::scenarios::{build_scenario, list_scenarios, Overrides};
use girsanov_core::{Classification, Error, UiStatus};

/// Paths per Monte Carlo estimate at smoke scale.
pub const SMOKE_N: usize = 1000;

pub type Outcome = Result<(), String>;

pub type Suite = (&'static str, fn(u32) -> Outcome);

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn finish<V: Debug>(r: Result<(), TestError<V>>) -> Outcome {
    r.map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

/// Catalog entries with their branch choices.
pub fn gallery() -> Vec<(&'static str, Overrides)> {
    let mut v: Vec<(&'static str, Overrides)> = list_scenarios().iter().map(|e| (e.name, Overrides::new())).collect();
    let mut diffusive = Overrides::new();
    diffusive.insert("branch".into(), "diffusive".into());
    v.push(("degenerate-nonunique", diffusive));
    v
}

fn ov(pairs: &[(&str, String)]) -> Overrides {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn interval() -> impl Strategy<Value = (Interval<f64>, f64)> {
    let lower = prop_oneof![Just(f64::NEG_INFINITY), -10.0..10.0f64];
    (lower, prop_oneof![Just(f64::INFINITY), 0.1..20.0f64], 0.01..0.99f64).prop_map(|(lo, width, frac)| {
        let hi = if width.is_infinite() { f64::INFINITY } else if lo.is_infinite() { width } else { lo + width };
        let x0 = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => lo + frac * (hi - lo),
            (true, false) => lo + frac * 10.0,
            (false, true) => hi - frac * 10.0,
            (false, false) => (frac - 0.5) * 10.0,
        };
        (Interval::new(lo, hi), x0)
    })
}

/// `E_n` is nondecreasing, contains the start point from `n = 0` on, stays
/// inside `E` and eventually covers any point of `E`.
pub fn exhaustion_monotonicity(cases: u32) -> Outcome {
    let strat = (proptest::collection::vec(interval(), 1..=3), 0.0..1.0f64);
    finish(runner(cases).run(&strat, |(coords, probe)| {
        let ivs: Vec<Interval<f64>> = coords.iter().map(|c| c.0).collect();
        let x0: Vec<f64> = coords.iter().map(|c| c.1).collect();
        let dom = make_domain(&ivs, &x0).map_err(|e| TestCaseError::fail(e.to_string()))?;
        ensure(dom.exhaustion(0).contains(&x0), || format!("x0 {x0:?} outside E_0"))?;
        for n in 0..40 {
            let (a, b) = (dom.exhaustion(n), dom.exhaustion(n + 1));
            ensure(a.is_subset_of(&b), || format!("E_{n} not inside E_{}", n + 1))?;
        }
        // A point at distance >= 1e-3 from the boundary, within 1e3.
        let point: Vec<f64> = ivs
            .iter()
            .map(|iv| {
                let lo = if iv.lower.is_finite() { iv.lower + 1e-3 } else { -1e3 };
                let hi = if iv.upper.is_finite() { iv.upper - 1e-3 } else { 1e3 };
                lo + probe * (hi - lo)
            })
            .collect();
        ensure(dom.contains(&point), || "probe outside E".into())?;
        ensure(dom.exhaustion(5000).contains(&point), || format!("{point:?} not covered"))?;
        let deep = dom.exhaustion(1_000_000);
        let corner: Vec<f64> = ivs
            .iter()
            .map(|iv| if iv.lower.is_finite() { iv.lower } else { -2e6 })
            .collect();
        ensure(!deep.contains(&corner), || "E_n reaches the boundary".into())
    }))
}

/// `sigma sigma' = a` for `a = B B'`, with non-symmetric and indefinite
/// inputs rejected.
pub fn psd_recomposition(cases: u32) -> Outcome {
    let strat = (1usize..=4).prop_flat_map(|d| (Just(d), proptest::collection::vec(-3.0..3.0f64, d * d)));
    finish(runner(cases).run(&strat, |(d, bm)| {
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                a[i * d + j] = (0..d).map(|k| bm[i * d + k] * bm[j * d + k]).sum();
            }
        }
        let norm = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let s = psd_factor(&a, d).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for i in 0..d {
            for j in 0..d {
                let r: f64 = (0..d).map(|k| s[i * d + k] * s[j * d + k]).sum();
                ensure((r - a[i * d + j]).abs() <= 1e-8 * norm, || {
                    format!("entry ({i},{j}): {r} vs {}", a[i * d + j])
                })?;
            }
        }
        let mut neg = a.clone();
        for i in 0..d {
            neg[i * d + i] -= norm * 2.0 + 1.0;
        }
        ensure(matches!(psd_factor(&neg, d), Err(Error::NotPsd { .. })), || "indefinite accepted".into())?;
        if d > 1 {
            let mut skew = a.clone();
            skew[1] += 0.5 * norm;
            ensure(matches!(psd_factor(&skew, d), Err(Error::NotSymmetric { .. })), || "asymmetric accepted".into())?;
        }
        Ok(())
    }))
}

/// A frozen exponential ignores increments, at the unit level and along
/// simulated paths that explode or leave the domain.
pub fn z_freeze(cases: u32) -> Outcome {
    let steps = proptest::collection::vec((-3.0..3.0f64, -0.2..0.2f64, 0.0..2.0f64), 1..60);
    let strat = (steps, 0usize..60, any::<bool>(), any::<u64>());
    finish(runner(cases).run(&strat, |(steps, at, explode, seed)| {
        let mut acc = ExponentialAccumulator::<f64>::new();
        let cut = at.min(steps.len());
        let mut sample = CoefficientSample::zeros(1);
        for (i, &(mu, dx, a)) in steps.iter().enumerate() {
            if i == cut {
                acc.freeze(if explode { FreezeCause::QvExplosion } else { FreezeCause::Cemetery });
            }
            let before = (acc.z_value(), acc.qv(), acc.m());
            sample.mu[0] = mu;
            sample.a[0] = a;
            sample.qv_rate = mu * mu * a;
            acc.accumulate_increment(&sample, &[dx], 1e-2);
            if acc.is_frozen() {
                ensure(before == (acc.z_value(), acc.qv(), acc.m()), || format!("moved after freeze at {i}"))?;
            }
        }
        if acc.is_frozen() && explode {
            ensure(acc.z_value() == 0.0, || "exploded Z is not zero".into())?;
        }

        let s = build_scenario::<f64>("mckean-quadratic", &ov(&[("k_max", "50".into())])).unwrap();
        let r = build_scenario::<f64>("reciprocal-bessel", &Overrides::new()).unwrap();
        let times = [0.25, 0.5, 0.75, 1.0];
        let opts = RunOptions::new(1.0).observe(&times);
        for sc in [&s, &r] {
            let sim = Simulator::new(&sc.model, &sc.engine).unwrap();
            let spec = BatchSpec { n_paths: 64, seed, workers: 1 };
            let recs = simulate_batch(&sim, MeasureMode::P, &opts, spec, |x| x).unwrap();
            for rec in recs {
                let stop = match rec.class {
                    PathClass::QvExploded => rec.cap_crossing,
                    PathClass::ExitedDomain => rec.exit_time,
                    _ => None,
                };
                let Some(stop) = stop else { continue };
                for o in rec.observations.iter().filter(|o| o.t > stop + 1e-9) {
                    ensure(o.z == rec.final_z, || format!("{} path {}: Z moved after {stop}", sc.name, rec.path_index))?;
                    if rec.class == PathClass::QvExploded {
                        ensure(o.z == 0.0, || "exploded path has nonzero Z".into())?;
                    }
                }
            }
        }
        Ok(())
    }))
}

/// Estimates lie in range, intervals contain their points, explosion
/// counts grow with time and shrink with the cap.
pub fn estimator_range_monotonicity(cases: u32) -> Outcome {
    let g = gallery();
    let strat = (0..g.len(), any::<u64>());
    finish(runner(cases).run(&strat, |(i, seed)| {
        let (name, o) = &g[i];
        let s = build_scenario::<f64>(name, o).unwrap();
        let times = [0.25, 0.5, 1.0];
        let mc = McParams::new(SMOKE_N, seed);
        let q = estimate_finite_qv_prob(&s, &times, &mc).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let e = estimate_expectation_z(&s, &times, &mc).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for (k, est) in q.estimates.iter().enumerate() {
            ensure((0.0..=1.0).contains(&est.point), || format!("{name}: Q = {}", est.point))?;
            ensure(est.lo <= est.point && est.point <= est.hi, || format!("{name}: CI misses point"))?;
            if k > 0 {
                ensure(est.point <= q.estimates[k - 1].point, || format!("{name}: Q increased in t"))?;
            }
        }
        for row in q.sensitivity.windows(2) {
            ensure(row[0].cap < row[1].cap, || "caps not ascending".into())?;
            for (a, b) in row[0].exploded.iter().zip(&row[1].exploded) {
                ensure(a >= b, || format!("{name}: larger cap exploded more"))?;
            }
        }
        for row in &q.sensitivity {
            ensure(row.exploded.windows(2).all(|w| w[0] <= w[1]), || format!("{name}: count fell in t"))?;
        }
        for est in &e.estimates {
            ensure(est.point >= 0.0 && est.point.is_finite(), || format!("{name}: E = {}", est.point))?;
            ensure(est.lo <= est.point && est.point <= est.hi, || format!("{name}: mean CI misses point"))?;
        }
        Ok(())
    }))
}

fn decision() -> impl Strategy<Value = TimeDecision> {
    prop_oneof![Just(TimeDecision::Accepted), Just(TimeDecision::Rejected), Just(TimeDecision::Undecided)]
}

fn ui_status() -> impl Strategy<Value = UiStatus> {
    prop_oneof![Just(UiStatus::Holds), Just(UiStatus::Fails), Just(UiStatus::Unknown)]
}

/// The combination rule, per-time decisions and simulated verdicts agree
/// with each other.
pub fn verdict_coherence(cases: u32) -> Outcome {
    let rule_strat = (proptest::collection::vec(decision(), 1..5), decision(), any::<bool>(), ui_status());
    finish(runner(cases * 20).run(&rule_strat, |(per, hz, settled, ui)| {
        let (c, _) = classify(&per, hz, settled, ui);
        let expected = if per.contains(&TimeDecision::Rejected) {
            Classification::StrictLocal
        } else if per.contains(&TimeDecision::Undecided) {
            Classification::Inconclusive
        } else {
            match ui {
                UiStatus::Holds => Classification::UIMartingale,
                UiStatus::Fails => Classification::MartingaleNotUI,
                UiStatus::Unknown => match hz {
                    TimeDecision::Rejected => Classification::StrictLocal,
                    TimeDecision::Accepted if settled => Classification::UIMartingale,
                    _ => Classification::MartingaleNotUI,
                },
            }
        };
        ensure(c == expected, || format!("{c:?} vs {expected:?}"))
    }))?;

    let count_strat = (0usize..200, 100usize..5000);
    finish(runner(cases * 20).run(&count_strat, |(k, n)| {
        let k = k.min(n);
        let (lo, hi) = wilson_interval(k, n);
        let p = k as f64 / n as f64;
        ensure(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0, || format!("wilson({k},{n}) = ({lo},{hi})"))?;
        let d = TimeDecision::from_counts(k, n, 1e-3);
        let want = if k == 0 || hi < 1e-3 {
            TimeDecision::Accepted
        } else if lo > 1e-3 {
            TimeDecision::Rejected
        } else {
            TimeDecision::Undecided
        };
        ensure(d == want, || format!("from_counts({k},{n}) = {d:?}"))
    }))?;

    let g = gallery();
    let strat = (0..g.len(), any::<u64>());
    finish(runner(cases).run(&strat, |(i, seed)| {
        let (name, o) = &g[i];
        let s = build_scenario::<f64>(name, o).unwrap();
        let rule = VerdictRule::default();
        let v = martingale_verdict(&s, &s.times, &McParams::new(SMOKE_N, seed), &rule)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        for tv in &v.per_time {
            let k = (tv.exploded.point * v.finite_qv.n as f64).round() as usize;
            let d = TimeDecision::from_counts(k, v.finite_qv.n, 1e-3);
            ensure(d == tv.decision, || format!("{name} t={}: {:?} vs {d:?}", tv.t, tv.decision))?;
        }
        let decisions: Vec<TimeDecision> = v.per_time.iter().map(|t| t.decision).collect();
        let (base, _) = classify(&decisions, v.horizon.decision, v.horizon.stabilized, s.metadata.analytic_ui);
        ensure(v.classification == base || v.classification == Classification::Inconclusive, || {
            format!("{name}: {:?} not derived from {base:?}", v.classification)
        })?;
        if decisions.contains(&TimeDecision::Rejected) {
            ensure(v.classification != Classification::UIMartingale, || "rejection ignored".into())?;
        }
        Ok(())
    }))
}

/// The five suites of the smoke run, by name.
#[allow(dead_code)]
pub fn smoke_suites() -> Vec<Suite> {
    vec![
        ("exhaustion monotonicity", exhaustion_monotonicity),
        ("PSD recomposition", psd_recomposition),
        ("Z-freeze", z_freeze),
        ("estimator range/monotonicity", estimator_range_monotonicity),
        ("verdict coherence", verdict_coherence),
    ]
}

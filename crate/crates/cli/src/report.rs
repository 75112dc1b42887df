//! Report assembly, dispatch to the diagnostics and atomic persistence.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use girsanov_core::diagnostic::{
    consistency_check, estimate_expectation_z, estimate_finite_qv_prob, feller_explosion_test, martingale_verdict,
    EndpointReport, EstimateWithCI, McParams, Verdict, VerdictRule,
};
use girsanov_core::scenarios::Scenario;
use girsanov_core::Classification;

use crate::config::{ExperimentConfig, Operation};
use crate::convergence::{convergence_study, ConvergenceReport};
use crate::error::{exit, CliError};

pub const ARTIFACT: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Artifact {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub description: String,
    pub expected: String,
    pub analytic_ui: String,
    pub branch: String,
}

/// One estimate; also one row of the CSV table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRow {
    pub t: Option<f64>,
    pub estimator: String,
    pub value: f64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub se: Option<f64>,
    pub n: usize,
    pub h: f64,
    pub k_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeRow {
    pub t: f64,
    pub exploded: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub guard_fraction: f64,
    pub short_circuit: bool,
    pub decision: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonRow {
    pub t: f64,
    pub exploded: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub stabilized: bool,
    pub decision: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub k_max: f64,
    pub classification: String,
    /// Paths whose quadratic variation crossed this cap by each time.
    pub exploded: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictSection {
    pub classification: String,
    pub code: u8,
    pub expected: String,
    pub matches_expected: bool,
    pub ui_source: String,
    pub per_time: Vec<TimeRow>,
    pub horizon: HorizonRow,
    pub stabilization: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub t: f64,
    pub expectation: f64,
    pub finite: f64,
    pub difference: f64,
    pub combined_se: f64,
    pub pass: bool,
    pub one_sided_pass: bool,
    pub heavy_tail: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EndpointSection {
    pub behaviour: String,
    pub value: f64,
    pub level: u32,
    pub steps: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FellerSection {
    pub preset: String,
    pub lower: f64,
    pub upper: f64,
    pub left: EndpointSection,
    pub right: EndpointSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Flags {
    /// Paths with a single step adding more than the jump threshold to the
    /// quadratic variation inside the current localization set.
    pub large_jumps: usize,
    /// Times at which the sample of `Z` looks heavy tailed.
    pub heavy_tail: Vec<f64>,
    pub numeric_failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub artifact: Artifact,
    pub config: BTreeMap<String, String>,
    pub scenario: ScenarioInfo,
    pub operation: String,
    pub estimates: Vec<EstimateRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictSection>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sensitivity: Vec<SensitivityRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistency: Option<Vec<ConsistencyRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feller: Option<FellerSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceReport>,
    pub flags: Flags,
    pub warnings: Vec<String>,
    pub runtime_seconds: f64,
}

impl Report {
    /// Exit code the run should end with.
    pub fn exit_code(&self) -> i32 {
        if let Some(v) = &self.verdict {
            if v.classification == Classification::Inconclusive.as_str() {
                return exit::INCONCLUSIVE;
            }
        }
        if let Some(f) = &self.feller {
            if !(f.left.converged && f.right.converged) {
                return exit::INCONCLUSIVE;
            }
        }
        exit::SUCCESS
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub(crate) fn estimate_row(t: f64, name: &str, e: &EstimateWithCI<f64>, s: &Scenario<f64>) -> EstimateRow {
    EstimateRow {
        t: Some(t),
        estimator: name.to_string(),
        value: e.point,
        ci_lo: Some(e.lo),
        ci_hi: Some(e.hi),
        se: Some(e.se),
        n: e.n,
        h: s.engine.step,
        k_max: s.engine.qv_cap,
    }
}

fn scenario_info(s: &Scenario<f64>) -> ScenarioInfo {
    ScenarioInfo {
        name: s.name.clone(),
        description: s.description.clone(),
        expected: s.metadata.expected.as_str().into(),
        analytic_ui: s.metadata.analytic_ui.as_str().into(),
        branch: s.metadata.branch.clone(),
    }
}

fn endpoint(e: &EndpointReport<f64>) -> EndpointSection {
    EndpointSection {
        behaviour: e.behaviour.as_str().into(),
        value: e.value,
        level: e.level,
        steps: e.steps,
        converged: e.converged(),
    }
}

fn verdict_section(v: &Verdict<f64>, s: &Scenario<f64>) -> (VerdictSection, Vec<SensitivityRow>) {
    let section = VerdictSection {
        classification: v.classification.as_str().into(),
        code: v.classification.code(),
        expected: s.metadata.expected.as_str().into(),
        matches_expected: v.classification == s.metadata.expected,
        ui_source: v.ui_source.as_str().into(),
        per_time: v
            .per_time
            .iter()
            .map(|p| TimeRow {
                t: p.t,
                exploded: p.exploded.point,
                ci_lo: p.exploded.lo,
                ci_hi: p.exploded.hi,
                guard_fraction: p.guard_fraction,
                short_circuit: p.short_circuit,
                decision: p.decision.as_str().into(),
            })
            .collect(),
        horizon: HorizonRow {
            t: v.horizon.t,
            exploded: v.horizon.exploded.point,
            ci_lo: v.horizon.exploded.lo,
            ci_hi: v.horizon.exploded.hi,
            stabilized: v.horizon.stabilized,
            decision: v.horizon.decision.as_str().into(),
        },
        stabilization: v
            .finite_qv
            .horizon
            .as_ref()
            .map_or([f64::NAN; 2], |hz| [hz.mean_qv_half, hz.mean_qv]),
    };
    let sensitivity = v
        .sensitivity
        .iter()
        .zip(&v.finite_qv.sensitivity)
        .map(|((cap, c), row)| SensitivityRow {
            k_max: *cap,
            classification: c.as_str().into(),
            exploded: row.exploded.clone(),
        })
        .collect();
    (section, sensitivity)
}

/// Runs the configured operation and assembles the report. Nothing is
/// written to disk here.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let started = Instant::now();
    let s = cfg.build_scenario()?;
    let mc = McParams::new(cfg.mc.n, cfg.mc.seed).with_workers(cfg.mc.workers);
    let times = &cfg.times;

    let mut estimates = Vec::new();
    let mut verdict = None;
    let mut sensitivity = Vec::new();
    let mut consistency = None;
    let mut feller = None;
    let mut convergence = None;
    let mut flags = Flags::default();
    let mut warnings = Vec::new();

    match cfg.operation {
        Operation::Verdict => {
            let v = martingale_verdict(&s, times, &mc, &VerdictRule::default())?;
            let code = f64::from(v.classification.code());
            for (i, &t) in times.iter().enumerate() {
                estimates.push(estimate_row(t, "finite-qv", &v.finite_qv.estimates[i], &s));
                estimates.push(estimate_row(t, "expectation", &v.expectation.estimates[i], &s));
                estimates.push(EstimateRow {
                    t: Some(t),
                    estimator: "verdict-code".into(),
                    value: code,
                    ci_lo: None,
                    ci_hi: None,
                    se: None,
                    n: v.finite_qv.n,
                    h: s.engine.step,
                    k_max: s.engine.qv_cap,
                });
            }
            flags.large_jumps = v.finite_qv.large_jumps;
            flags.numeric_failures = v.finite_qv.numeric_failures + v.expectation.numeric_failures;
            flags.heavy_tail = heavy_times(times, &v.expectation.heavy_tail);
            warnings = v.warnings.clone();
            let (section, sens) = verdict_section(&v, &s);
            verdict = Some(section);
            sensitivity = sens;
        }
        Operation::Expectation => {
            let e = estimate_expectation_z(&s, times, &mc)?;
            for (i, &t) in times.iter().enumerate() {
                estimates.push(estimate_row(t, "expectation", &e.estimates[i], &s));
            }
            flags.numeric_failures = e.numeric_failures;
            flags.heavy_tail = heavy_times(times, &e.heavy_tail);
        }
        Operation::FiniteQv => {
            let q = estimate_finite_qv_prob(&s, times, &mc)?;
            for (i, &t) in times.iter().enumerate() {
                estimates.push(estimate_row(t, "finite-qv", &q.estimates[i], &s));
            }
            flags.large_jumps = q.large_jumps;
            flags.numeric_failures = q.numeric_failures;
            sensitivity = q
                .sensitivity
                .iter()
                .map(|row| SensitivityRow {
                    k_max: row.cap,
                    classification: String::new(),
                    exploded: row.exploded.clone(),
                })
                .collect();
        }
        Operation::Consistency => {
            let rows = consistency_check(&s, times, &mc)?;
            for c in &rows {
                estimates.push(estimate_row(c.t, "expectation", &c.expectation, &s));
                estimates.push(estimate_row(c.t, "finite-qv", &c.finite, &s));
                estimates.push(EstimateRow {
                    t: Some(c.t),
                    estimator: "difference".into(),
                    value: c.difference,
                    ci_lo: Some(c.difference - 3.0 * c.combined_se),
                    ci_hi: Some(c.difference + 3.0 * c.combined_se),
                    se: Some(c.combined_se),
                    n: c.expectation.n,
                    h: s.engine.step,
                    k_max: s.engine.qv_cap,
                });
                if c.heavy_tail {
                    flags.heavy_tail.push(c.t);
                }
                if !c.pass {
                    warnings.push(format!(
                        "estimators disagree at t = {}: |difference| = {:.3e} exceeds 3 combined standard errors",
                        c.t,
                        c.difference.abs()
                    ));
                }
            }
            consistency = Some(
                rows.iter()
                    .map(|c| ConsistencyRow {
                        t: c.t,
                        expectation: c.expectation.point,
                        finite: c.finite.point,
                        difference: c.difference,
                        combined_se: c.combined_se,
                        pass: c.pass,
                        one_sided_pass: c.one_sided_pass,
                        heavy_tail: c.heavy_tail,
                    })
                    .collect(),
            );
        }
        Operation::Feller => {
            let preset = cfg.feller_preset.expect("resolved by the config parser");
            let problem = preset.problem::<f64>();
            let r = feller_explosion_test(&problem)?;
            for (name, e) in [("feller-left", &r.left), ("feller-right", &r.right)] {
                estimates.push(EstimateRow {
                    t: None,
                    estimator: name.into(),
                    value: e.value,
                    ci_lo: None,
                    ci_hi: None,
                    se: None,
                    n: 0,
                    h: s.engine.step,
                    k_max: s.engine.qv_cap,
                });
                if !e.converged() {
                    warnings.push(format!("{name}: truncation schedule did not settle"));
                }
            }
            feller = Some(FellerSection {
                preset: preset.as_str().into(),
                lower: problem.lower,
                upper: problem.upper,
                left: endpoint(&r.left),
                right: endpoint(&r.right),
            });
        }
        Operation::Convergence => {
            let c = cfg.convergence.as_ref().expect("resolved by the config parser");
            let study = convergence_study(&s, &c.h, &c.n, times, cfg.mc.seed, cfg.mc.workers)?;
            estimates = study.rows.iter().flat_map(|r| r.estimate_rows(&s)).collect();
            convergence = Some(study);
        }
    }

    Ok(Report {
        artifact: Artifact {
            name: ARTIFACT.into(),
            version: VERSION.into(),
        },
        config: cfg.echo(),
        scenario: scenario_info(&s),
        operation: cfg.operation.as_str().into(),
        estimates,
        verdict,
        sensitivity,
        consistency,
        feller,
        convergence,
        flags,
        warnings,
        runtime_seconds: started.elapsed().as_secs_f64(),
    })
}

fn heavy_times(times: &[f64], heavy: &[bool]) -> Vec<f64> {
    times.iter().zip(heavy).filter(|(_, &h)| h).map(|(&t, _)| t).collect()
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so `path` holds either the old contents or the new ones.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .map_err(|e| CliError::Io(format!("cannot create a temporary file in {}: {e}", dir.display())))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

//! Step-size and sample-size sweeps of the two estimators.

use serde::Serialize;

use girsanov_core::diagnostic::{estimate_expectation_z, estimate_finite_qv_prob, EstimateWithCI, McParams};
use girsanov_core::scenarios::{build_scenario, Scenario};

use crate::error::CliError;
use crate::report::{estimate_row, EstimateRow};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub se: f64,
}

impl From<&EstimateWithCI<f64>> for Cell {
    fn from(e: &EstimateWithCI<f64>) -> Self {
        Self {
            value: e.point,
            ci_lo: e.lo,
            ci_hi: e.hi,
            se: e.se,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub n: usize,
    pub t: f64,
    pub expectation: Cell,
    pub finite: Cell,
    #[serde(skip)]
    raw: [EstimateWithCI<f64>; 2],
}

impl ConvergenceRow {
    pub(crate) fn estimate_rows(&self, s: &Scenario<f64>) -> Vec<EstimateRow> {
        let mut e = estimate_row(self.t, "expectation", &self.raw[0], s);
        let mut q = estimate_row(self.t, "finite-qv", &self.raw[1], s);
        e.h = self.h;
        q.h = self.h;
        vec![e, q]
    }
}

/// Least-squares line `value = intercept + slope * h` through the rows of
/// the largest sample size at one time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasFit {
    pub t: f64,
    pub estimator: String,
    pub n: usize,
    pub intercept: f64,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Empty when the step schedule has a single entry.
    pub fits: Vec<BiasFit>,
}

fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Runs both estimators for every `(h, N)` pair, with the step sizes in the
/// given (strictly decreasing) order.
pub fn convergence_study(
    scenario: &Scenario<f64>,
    h_schedule: &[f64],
    n_schedule: &[usize],
    times: &[f64],
    seed: u64,
    workers: usize,
) -> Result<ConvergenceReport, CliError> {
    let bad = |m: &str| CliError::Config {
        line: None,
        message: m.to_string(),
    };
    if h_schedule.is_empty() || n_schedule.is_empty() {
        return Err(bad("convergence schedules must not be empty"));
    }
    if !h_schedule.windows(2).all(|w| w[0] > w[1]) {
        return Err(bad("convergence step sizes must be strictly descending"));
    }
    let mut rows = Vec::new();
    for &h in h_schedule {
        let mut params = scenario.parameters.clone();
        params.insert("h".into(), h.to_string());
        let s = build_scenario::<f64>(&scenario.name, &params)?;
        for &n in n_schedule {
            let mc = McParams::new(n, seed).with_workers(workers);
            let e = estimate_expectation_z(&s, times, &mc)?;
            let q = estimate_finite_qv_prob(&s, times, &mc)?;
            for (i, &t) in times.iter().enumerate() {
                rows.push(ConvergenceRow {
                    h,
                    n,
                    t,
                    expectation: Cell::from(&e.estimates[i]),
                    finite: Cell::from(&q.estimates[i]),
                    raw: [e.estimates[i], q.estimates[i]],
                });
            }
        }
    }

    let n_top = *n_schedule.iter().max().expect("non-empty");
    let mut fits = Vec::new();
    for &t in times {
        let sel: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.n == n_top && r.t == t).collect();
        for (name, pick) in [("expectation", 0usize), ("finite-qv", 1)] {
            let pts: Vec<(f64, f64)> = sel
                .iter()
                .map(|r| (r.h, if pick == 0 { r.expectation.value } else { r.finite.value }))
                .collect();
            if let Some((intercept, slope)) = fit_line(&pts) {
                fits.push(BiasFit {
                    t,
                    estimator: name.into(),
                    n: n_top,
                    intercept,
                    slope,
                });
            }
        }
    }
    Ok(ConvergenceReport { rows, fits })
}

use crate::error::Result;
use crate::scalar::Real;
use crate::scenarios::Scenario;

use super::estimators::{
    censoring, estimate_expectation_z, estimate_finite_qv_with_horizon, ExpectationReport, FiniteQvReport, McParams,
};
use super::stats::{wilson_interval, EstimateWithCI};
use super::{Classification, UiStatus};

/// Thresholds of the verdict rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerdictRule<T> {
    /// Tolerated explosion probability `delta`.
    pub delta: T,
    /// Relative growth of mean quadratic variation over the second half of
    /// the horizon below which it counts as settled.
    pub stabilization: T,
}

impl<T: Real> Default for VerdictRule<T> {
    fn default() -> Self {
        Self {
            delta: T::lit(1e-3),
            stabilization: T::lit(1e-2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TimeDecision {
    Accepted,
    Rejected,
    Undecided,
}

impl TimeDecision {
    /// Decision from `k` exploded paths out of `n`.
    pub fn from_counts(k: usize, n: usize, delta: f64) -> Self {
        if k == 0 {
            return TimeDecision::Accepted;
        }
        let (lo, hi) = wilson_interval(k, n);
        if hi < delta {
            TimeDecision::Accepted
        } else if lo > delta {
            TimeDecision::Rejected
        } else {
            TimeDecision::Undecided
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TimeDecision::Accepted => "accepted",
            TimeDecision::Rejected => "rejected",
            TimeDecision::Undecided => "undecided",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeVerdict<T> {
    pub t: T,
    /// Fraction of `Q`-paths whose quadratic variation crossed the cap.
    pub exploded: EstimateWithCI<T>,
    /// Fraction of `Q`-paths passing the pathwise integrability guard.
    pub guard_fraction: T,
    /// Every path passed the guard, so the decision needed no interval.
    pub short_circuit: bool,
    pub decision: TimeDecision,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorizonVerdict<T> {
    pub t: T,
    pub exploded: EstimateWithCI<T>,
    pub stabilized: bool,
    pub decision: TimeDecision,
}

/// Where the uniform-integrability part of a verdict came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UiSource {
    Statistical,
    Analytic,
}

impl UiSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            UiSource::Statistical => "statistical",
            UiSource::Analytic => "analytic",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict<T> {
    pub classification: Classification,
    pub per_time: Vec<TimeVerdict<T>>,
    pub horizon: HorizonVerdict<T>,
    pub ui_source: UiSource,
    pub expectation: ExpectationReport<T>,
    pub finite_qv: FiniteQvReport<T>,
    /// Classification that each cap of the sensitivity table alone implies.
    pub sensitivity: Vec<(T, Classification)>,
    pub rule: VerdictRule<T>,
    pub warnings: Vec<String>,
}

/// Combines per-time decisions and the horizon decision.
///
/// A rejection at any finite time, the horizon included, means explosion of
/// the quadratic variation in finite time. With every time accepted, the
/// analytic status of uniform integrability wins when known; otherwise an
/// accepted, settled horizon gives a uniformly integrable martingale and
/// anything else a martingale whose uniform integrability is not certified.
pub fn classify(
    per_time: &[TimeDecision],
    horizon: TimeDecision,
    stabilized: bool,
    analytic_ui: UiStatus,
) -> (Classification, UiSource) {
    if per_time.contains(&TimeDecision::Rejected) {
        return (Classification::StrictLocal, UiSource::Statistical);
    }
    if per_time.contains(&TimeDecision::Undecided) {
        return (Classification::Inconclusive, UiSource::Statistical);
    }
    match analytic_ui {
        UiStatus::Fails => return (Classification::MartingaleNotUI, UiSource::Analytic),
        UiStatus::Holds => return (Classification::UIMartingale, UiSource::Analytic),
        UiStatus::Unknown => {}
    }
    let c = match horizon {
        TimeDecision::Rejected => Classification::StrictLocal,
        TimeDecision::Accepted if stabilized => Classification::UIMartingale,
        _ => Classification::MartingaleNotUI,
    };
    (c, UiSource::Statistical)
}

pub fn martingale_verdict<T: Real>(
    s: &Scenario<T>,
    times: &[T],
    mc: &McParams,
    rule: &VerdictRule<T>,
) -> Result<Verdict<T>> {
    let q = estimate_finite_qv_with_horizon(s, times, mc)?;
    let e = estimate_expectation_z(s, times, mc)?;
    let delta = rule.delta.to_f64_lossy();
    let n = q.n;
    let cens = censoring(s);
    let hz = q.horizon.as_ref().expect("horizon requested");

    let settled = {
        let (m, m2) = (hz.mean_qv, hz.mean_qv_half);
        m.is_finite() && m2.is_finite() && m - m2 <= rule.stabilization * (T::one() + m)
    };
    let analytic = s.metadata.analytic_ui;

    let mut sensitivity = Vec::new();
    for row in &q.sensitivity {
        let decisions: Vec<TimeDecision> = row.exploded.iter().map(|&k| TimeDecision::from_counts(k, n, delta)).collect();
        let hd = TimeDecision::from_counts(row.horizon_exploded.unwrap_or(0), n, delta);
        sensitivity.push((row.cap, classify(&decisions, hd, settled, analytic).0));
    }

    let per_time: Vec<TimeVerdict<T>> = q
        .times
        .iter()
        .zip(&q.exploded)
        .zip(&q.estimates)
        .map(|((&t, &k), fin)| TimeVerdict {
            t,
            exploded: EstimateWithCI::proportion(k, n, cens),
            guard_fraction: fin.point,
            short_circuit: k == 0,
            decision: TimeDecision::from_counts(k, n, delta),
        })
        .collect();
    let horizon = HorizonVerdict {
        t: hz.t,
        exploded: EstimateWithCI::proportion(hz.exploded, n, cens),
        stabilized: settled,
        decision: TimeDecision::from_counts(hz.exploded, n, delta),
    };
    let decisions: Vec<TimeDecision> = per_time.iter().map(|v| v.decision).collect();
    let (mut classification, ui_source) = classify(&decisions, horizon.decision, settled, analytic);

    let mut warnings = Vec::new();
    if sensitivity.iter().any(|(_, c)| *c != classification) {
        warnings.push("classification changes across the quadratic-variation caps".to_string());
        classification = Classification::Inconclusive;
    }
    if q.large_jumps > 0 {
        warnings.push(format!(
            "{} paths added more than the jump threshold to the quadratic variation in one step",
            q.large_jumps
        ));
    }
    for (t, heavy) in e.times.iter().zip(&e.heavy_tail) {
        if *heavy {
            warnings.push(format!("heavy-tailed Z at t = {t}: normal interval unreliable"));
        }
    }

    Ok(Verdict {
        classification,
        per_time,
        horizon,
        ui_source,
        expectation: e,
        finite_qv: q,
        sensitivity,
        rule: *rule,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decisions_from_counts() {
        assert_eq!(TimeDecision::from_counts(0, 100, 1e-3), TimeDecision::Accepted);
        assert_eq!(TimeDecision::from_counts(1, 100_000, 1e-3), TimeDecision::Accepted);
        assert_eq!(TimeDecision::from_counts(50, 1000, 1e-3), TimeDecision::Rejected);
        assert_eq!(TimeDecision::from_counts(1, 1000, 1e-3), TimeDecision::Undecided);
    }

    #[test]
    fn classification_table() {
        use TimeDecision::*;
        assert_eq!(classify(&[Accepted], Accepted, true, UiStatus::Unknown).0, Classification::UIMartingale);
        assert_eq!(classify(&[Accepted], Accepted, false, UiStatus::Unknown).0, Classification::MartingaleNotUI);
        assert_eq!(classify(&[Accepted], Undecided, true, UiStatus::Unknown).0, Classification::MartingaleNotUI);
        assert_eq!(classify(&[Accepted, Rejected], Rejected, true, UiStatus::Unknown).0, Classification::StrictLocal);
        assert_eq!(classify(&[Undecided], Accepted, true, UiStatus::Unknown).0, Classification::Inconclusive);
        assert_eq!(
            classify(&[Accepted], Accepted, true, UiStatus::Fails),
            (Classification::MartingaleNotUI, UiSource::Analytic)
        );
    }
}

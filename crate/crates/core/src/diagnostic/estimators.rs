use crate::engine::{grid_index, simulate_batch, BatchSpec, MeasureMode, PathClass, RunOptions, Simulator, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::exponential::pathwise_qv;
use crate::scalar::Real;
use crate::scenarios::Scenario;

use super::stats::{Censoring, EstimateWithCI, MeanStats};

/// Sample kurtosis above which a mean estimate is flagged heavy-tailed.
pub const HEAVY_TAIL_KURTOSIS: f64 = 100.0;

/// Cap multipliers of the `K_max` sensitivity table.
pub(crate) const CAP_FACTORS: [f64; 3] = [0.1, 1.0, 10.0];

/// Monte Carlo batch parameters. The discretization lives on the scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McParams {
    pub n_paths: usize,
    pub seed: u64,
    pub workers: usize,
}

impl McParams {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self { n_paths, seed, workers: 1 }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    fn spec(&self) -> BatchSpec {
        BatchSpec { n_paths: self.n_paths, seed: self.seed, workers: self.workers }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths < 100 {
            return Err(Error::Config(format!("need at least 100 paths, got {}", self.n_paths)));
        }
        Ok(())
    }
}

pub(crate) fn censoring<T: Real>(s: &Scenario<T>) -> Censoring<T> {
    Censoring {
        qv_cap: s.engine.qv_cap,
        max_level: s.engine.max_level,
        step: s.engine.step,
    }
}

fn check_times<T: Real>(times: &[T]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Config("at least one observation time is required".into()));
    }
    if times.iter().any(|t| !(*t > T::zero())) {
        return Err(Error::Config("observation times must be positive".into()));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("observation times must be strictly ascending".into()));
    }
    Ok(())
}

fn check_failures(failed: usize, total: usize) -> Result<()> {
    if failed * 100 > total {
        return Err(Error::NumericFailureRate { failed, total });
    }
    Ok(())
}

/// Per-cap explosion counts.
#[derive(Clone, Debug, PartialEq)]
pub struct CapRow<T> {
    pub cap: T,
    /// Paths whose quadratic variation crossed `cap` by each time.
    pub exploded: Vec<usize>,
    pub horizon_exploded: Option<usize>,
}

/// Censored estimate at the full horizon, used for uniform integrability.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizonEstimate<T> {
    pub t: T,
    pub finite: EstimateWithCI<T>,
    pub exploded: usize,
    /// Mean quadratic variation of the paths still finite at `t`, at `t`
    /// and at `t/2`.
    pub mean_qv: T,
    pub mean_qv_half: T,
}

/// `Q(<M>_{t ∧ theta} < K_max)` at each requested time.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteQvReport<T> {
    pub times: Vec<T>,
    pub estimates: Vec<EstimateWithCI<T>>,
    pub exploded: Vec<usize>,
    /// Paths that left the domain with finite quadratic variation by `t`.
    pub exited: Vec<usize>,
    pub mean_qv: Vec<T>,
    pub sensitivity: Vec<CapRow<T>>,
    pub horizon: Option<HorizonEstimate<T>>,
    /// Paths used (failures excluded).
    pub n: usize,
    pub numeric_failures: usize,
    pub large_jumps: usize,
}

struct QPath<T> {
    failed: bool,
    crossings: Vec<Option<T>>,
    raw_qv: Vec<T>,
    exit: Option<T>,
    large_jump: bool,
}

fn crossed<T: Real>(c: Option<T>, t: T, eps: T) -> bool {
    c.is_some_and(|s| s <= t + eps)
}

fn finite_qv_batch<T: Real>(s: &Scenario<T>, times: &[T], with_horizon: bool, mc: &McParams) -> Result<FiniteQvReport<T>> {
    mc.validate()?;
    check_times(times)?;
    let h = s.engine.step;
    let k = s.engine.qv_cap;
    let caps: Vec<T> = CAP_FACTORS.iter().map(|&f| k * T::lit(f)).collect();
    let last = *times.last().expect("non-empty");
    let horizon = if with_horizon { s.horizon.max(last) } else { last };
    let half = T::from_u64(grid_index(horizon, h)? / 2).expect("grid index representable") * h;

    let mut observe = times.to_vec();
    if with_horizon {
        observe.push(half);
        observe.push(horizon);
    }
    let opts = RunOptions::new(horizon)
        .observe(&observe)
        .qv_stop(caps[caps.len() - 1])
        .ledger(&caps);
    let sim = Simulator::new(&s.model, &s.engine)?;
    let n_obs = observe.len();
    let paths = simulate_batch(&sim, MeasureMode::Q, &opts, mc.spec(), |r: TrajectoryRecord<T>| QPath {
        failed: r.class == PathClass::NumericFailure,
        crossings: caps.iter().map(|&c| r.ledger_crossing(c).flatten()).collect(),
        raw_qv: (0..n_obs).map(|i| r.observation(observe[i]).map_or(r.final_raw_qv, |o| o.raw_qv)).collect(),
        exit: r.exit_time,
        large_jump: r.localization.large_jump,
    })?;

    let failures = paths.iter().filter(|p| p.failed).count();
    check_failures(failures, paths.len())?;
    let valid: Vec<&QPath<T>> = paths.iter().filter(|p| !p.failed).collect();
    let n = valid.len();
    let eps = h * T::lit(1e-6);
    let cens = Censoring { qv_cap: k, max_level: s.engine.max_level, step: h };
    let main = 1;

    let mut estimates = Vec::new();
    let mut exploded = Vec::new();
    let mut exited = Vec::new();
    let mut mean_qv = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let boom = valid.iter().filter(|p| crossed(p.crossings[main], t, eps)).count();
        exploded.push(boom);
        estimates.push(EstimateWithCI::proportion(n - boom, n, cens));
        exited.push(
            valid
                .iter()
                .filter(|p| !crossed(p.crossings[main], t, eps) && crossed(p.exit, t, eps))
                .count(),
        );
        let qv = MeanStats::from_values(
            valid
                .iter()
                .filter(|p| !crossed(p.crossings[main], t, eps))
                .map(|p| p.raw_qv[i].to_f64_lossy()),
        );
        mean_qv.push(T::lit(if qv.n == 0 { f64::NAN } else { qv.mean }));
    }

    let horizon_estimate = with_horizon.then(|| {
        let boom = valid.iter().filter(|p| crossed(p.crossings[main], horizon, eps)).count();
        let alive: Vec<_> = valid.iter().filter(|p| !crossed(p.crossings[main], horizon, eps)).collect();
        let at = |i: usize| {
            let m = MeanStats::from_values(alive.iter().map(|p| p.raw_qv[i].to_f64_lossy()));
            T::lit(if m.n == 0 { f64::NAN } else { m.mean })
        };
        HorizonEstimate {
            t: horizon,
            finite: EstimateWithCI::proportion(n - boom, n, cens),
            exploded: boom,
            mean_qv: at(n_obs - 1),
            mean_qv_half: at(n_obs - 2),
        }
    });

    let sensitivity = caps
        .iter()
        .enumerate()
        .map(|(j, &cap)| CapRow {
            cap,
            exploded: times
                .iter()
                .map(|&t| valid.iter().filter(|p| crossed(p.crossings[j], t, eps)).count())
                .collect(),
            horizon_exploded: with_horizon
                .then(|| valid.iter().filter(|p| crossed(p.crossings[j], horizon, eps)).count()),
        })
        .collect();

    Ok(FiniteQvReport {
        times: times.to_vec(),
        estimates,
        exploded,
        exited,
        mean_qv,
        sensitivity,
        horizon: horizon_estimate,
        n,
        numeric_failures: failures,
        large_jumps: valid.iter().filter(|p| p.large_jump).count(),
    })
}

/// Simulates `Q`-paths (drift `b_hat`) and estimates the probability that the
/// quadratic variation stays below `K_max` up to each time in `times`.
pub fn estimate_finite_qv_prob<T: Real>(s: &Scenario<T>, times: &[T], mc: &McParams) -> Result<FiniteQvReport<T>> {
    finite_qv_batch(s, times, false, mc)
}

/// As [`estimate_finite_qv_prob`], also running to the scenario horizon and
/// reporting the censored estimate there.
pub fn estimate_finite_qv_with_horizon<T: Real>(
    s: &Scenario<T>,
    times: &[T],
    mc: &McParams,
) -> Result<FiniteQvReport<T>> {
    finite_qv_batch(s, times, true, mc)
}

/// `E^P[Z_t]` at each requested time.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationReport<T> {
    pub times: Vec<T>,
    pub estimates: Vec<EstimateWithCI<T>>,
    pub stats: Vec<MeanStats>,
    pub heavy_tail: Vec<bool>,
    pub n: usize,
    pub numeric_failures: usize,
}

/// Simulates `P`-paths and averages the stochastic exponential.
pub fn estimate_expectation_z<T: Real>(s: &Scenario<T>, times: &[T], mc: &McParams) -> Result<ExpectationReport<T>> {
    mc.validate()?;
    check_times(times)?;
    let horizon = *times.last().expect("non-empty");
    let opts = RunOptions::new(horizon).observe(times);
    let sim = Simulator::new(&s.model, &s.engine)?;
    let paths = simulate_batch(&sim, MeasureMode::P, &opts, mc.spec(), |r: TrajectoryRecord<T>| {
        if r.class == PathClass::NumericFailure {
            None
        } else {
            Some(times.iter().map(|&t| r.observation(t).map_or(r.final_z, |o| o.z)).collect::<Vec<T>>())
        }
    })?;
    let failures = paths.iter().filter(|p| p.is_none()).count();
    check_failures(failures, paths.len())?;
    let valid: Vec<&Vec<T>> = paths.iter().flatten().collect();
    let cens = censoring(s);
    let stats: Vec<MeanStats> = (0..times.len())
        .map(|i| MeanStats::from_values(valid.iter().map(|z| z[i].to_f64_lossy())))
        .collect();
    Ok(ExpectationReport {
        times: times.to_vec(),
        estimates: stats.iter().map(|m| EstimateWithCI::mean(m, cens)).collect(),
        heavy_tail: stats.iter().map(|m| m.kurtosis > HEAVY_TAIL_KURTOSIS).collect(),
        stats,
        n: valid.len(),
        numeric_failures: failures,
    })
}

/// Cross-check of `E^P[Z_t]` against `Q(<M>_{t ∧ theta} < K_max)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyReport<T> {
    pub t: T,
    pub expectation: EstimateWithCI<T>,
    pub finite: EstimateWithCI<T>,
    pub difference: T,
    pub combined_se: T,
    /// `|difference| <= 3 combined SE`.
    pub pass: bool,
    /// `E^P[Z_t] <= Q + 3 combined SE`.
    pub one_sided_pass: bool,
    pub heavy_tail: bool,
}

/// Pairs the `i`-th time of two reports over the same times.
pub fn consistency_from<T: Real>(e: &ExpectationReport<T>, q: &FiniteQvReport<T>, i: usize) -> ConsistencyReport<T> {
    let pe = e.estimates[i];
    let pq = q.estimates[i];
    let diff = pe.point - pq.point;
    let se = (pe.se * pe.se + pq.se * pq.se).sqrt();
    let bound = T::lit(3.0) * se;
    ConsistencyReport {
        t: e.times[i],
        expectation: pe,
        finite: pq,
        difference: diff,
        combined_se: se,
        pass: diff.abs() <= bound,
        one_sided_pass: diff <= bound,
        heavy_tail: e.heavy_tail[i],
    }
}

pub fn consistency_check<T: Real>(s: &Scenario<T>, times: &[T], mc: &McParams) -> Result<Vec<ConsistencyReport<T>>> {
    let e = estimate_expectation_z(s, times, mc)?;
    let q = estimate_finite_qv_prob(s, times, mc)?;
    Ok((0..times.len()).map(|i| consistency_from(&e, &q, i)).collect())
}

/// Whether `<M>_{t ∧ theta} < qv_cap` along this path.
pub fn pathwise_integrability_guard<T: Real>(record: &TrajectoryRecord<T>, t: T, qv_cap: T) -> bool {
    match record.crossed_by(qv_cap, t) {
        Some(c) => !c,
        None => pathwise_qv(record, t).is_some_and(|q| q < qv_cap),
    }
}

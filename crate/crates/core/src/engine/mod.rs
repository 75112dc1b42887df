//! Euler–Maruyama simulation of the coordinate process under `P` (drift `b`)
//! or `Q` (drift `b_hat = b + a mu`), with the stochastic exponential carried
//! along each path.
//!
//! Near a finite boundary, or where the quadratic-variation rate is large,
//! each base step of length `h` is split dyadically. The split depends only
//! on the current state and the coefficients evaluated there (both drifts
//! enter symmetrically), never on the measure being simulated, so `P` and `Q`
//! runs use identical time grids as functions of the path.

mod localization;
mod psd;

pub use localization::{detect_localization, LevelRecord, LevelSchedule, LocalizationState, ThetaCause};
pub use psd::{psd_factor, symmetric_eigen};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exponential::{ExponentialAccumulator, FreezeCause};
use crate::path::{evaluate_coefficients, CoefficientSample, CoefficientSet, Domain, PathPrefix, PathView, PSD_TOLERANCE};
use crate::quadrature::{integrate_truncated, Endpoint, Improper, Truncation};
use crate::rng::RngStream;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasureMode {
    P,
    Q,
}

impl MeasureMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeasureMode::P => "P",
            MeasureMode::Q => "Q",
        }
    }
}

/// State space, start point and coefficients.
#[derive(Clone, Debug)]
pub struct Model<T> {
    pub domain: Domain<T>,
    pub x0: Vec<T>,
    pub coefficients: CoefficientSet<T>,
}

impl<T: Real> Model<T> {
    pub fn new(domain: Domain<T>, x0: Vec<T>, coefficients: CoefficientSet<T>) -> Result<Self> {
        if domain.dim() != x0.len() || coefficients.dim() != x0.len() {
            return Err(Error::Config(format!(
                "dimension mismatch: domain {}, start point {}, coefficients {}",
                domain.dim(),
                x0.len(),
                coefficients.dim()
            )));
        }
        if !domain.contains_guarded(&x0) {
            return Err(Error::Config(format!("start point {x0:?} is not in the domain")));
        }
        Ok(Self { domain, x0, coefficients })
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }
}

/// Dyadic sub-stepping rule. A sub-step of length `delta` is accepted when
/// `kappa sqrt(a_ii delta) + max(|b_i|, |b_hat_i|) delta` stays below the
/// distance to every finite boundary and `mu' a mu delta <= eta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Refinement<T> {
    pub max_depth: u32,
    pub boundary_margin: T,
    pub qv_increment: T,
}

impl<T: Real> Default for Refinement<T> {
    fn default() -> Self {
        Self {
            max_depth: 16,
            boundary_margin: T::lit(5.0),
            qv_increment: T::lit(10.0),
        }
    }
}

impl<T: Real> Refinement<T> {
    /// Plain fixed-step Euler.
    pub fn none() -> Self {
        Self {
            max_depth: 0,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineSettings<T> {
    /// Base step `h`.
    pub step: T,
    /// Quadratic-variation cap `K_max`.
    pub qv_cap: T,
    /// Top localization level `N_max`.
    pub max_level: u32,
    /// Single-step quadratic-variation increment that raises the jump flag.
    pub jump_threshold: T,
    pub refinement: Refinement<T>,
    /// Schedule for the boundary-approach tail after a domain exit.
    pub tail: Truncation<T>,
}

impl<T: Real> Default for EngineSettings<T> {
    fn default() -> Self {
        Self {
            step: T::lit(1e-3),
            qv_cap: T::lit(1e3),
            max_level: 64,
            jump_threshold: T::lit(1e3),
            refinement: Refinement::default(),
            tail: Truncation {
                levels: 40,
                convergence: T::lit(1e-4),
                divergence: T::infinity(),
            },
        }
    }
}

/// What to record on one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions<T> {
    pub horizon: T,
    /// Grid times at which to snapshot the path summaries.
    pub observe: Vec<T>,
    /// Keep simulating until the unstopped quadratic variation exceeds this
    /// (at least the cap; `None` means the cap).
    pub qv_stop: Option<T>,
    /// Quadratic-variation levels whose first crossing times are recorded.
    pub ledger: Vec<T>,
    pub keep_path: bool,
}

impl<T: Real> RunOptions<T> {
    pub fn new(horizon: T) -> Self {
        Self {
            horizon,
            observe: vec![horizon],
            qv_stop: None,
            ledger: Vec::new(),
            keep_path: false,
        }
    }

    pub fn observe(mut self, times: &[T]) -> Self {
        self.observe = times.to_vec();
        self
    }

    pub fn qv_stop(mut self, stop: T) -> Self {
        self.qv_stop = Some(stop);
        self
    }

    pub fn ledger(mut self, levels: &[T]) -> Self {
        self.ledger = levels.to_vec();
        self
    }

    pub fn keep_path(mut self, keep: bool) -> Self {
        self.keep_path = keep;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PathClass {
    ReachedHorizon,
    /// The quadratic variation crossed `K_max` while the state was in `E`.
    QvExploded,
    ExitedDomain,
    NumericFailure,
}

impl PathClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            PathClass::ReachedHorizon => "reached-horizon",
            PathClass::QvExploded => "qv-exploded",
            PathClass::ExitedDomain => "exited-domain",
            PathClass::NumericFailure => "numeric-failure",
        }
    }
}

/// Path summaries at one observation time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation<T> {
    pub t: T,
    /// `<M>_{t ∧ theta}`.
    pub qv: T,
    /// Quadratic variation not stopped at the cap.
    pub raw_qv: T,
    pub z: T,
    pub alive: bool,
}

/// Everything recorded about one simulated path.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub path_index: u64,
    pub mode: MeasureMode,
    pub class: PathClass,
    pub step: T,
    /// Time at which simulation stopped.
    pub end_time: T,
    pub exit_time: Option<T>,
    /// First time the quadratic variation exceeded `K_max`.
    pub cap_crossing: Option<T>,
    pub observations: Vec<Observation<T>>,
    pub final_qv: T,
    pub final_raw_qv: T,
    pub final_z: T,
    /// `(level, first crossing time)` for each ledger level.
    pub ledger: Vec<(T, Option<T>)>,
    pub localization: LocalizationState<T>,
    pub exit_tail: Option<Improper<T>>,
    pub failure: Option<Error>,
    pub path: Option<PathPrefix<T>>,
    pub qv_history: Option<Vec<T>>,
    pub substeps: u64,
}

impl<T: Real> TrajectoryRecord<T> {
    /// Crossing time of a ledger level; outer `None` if the level was not
    /// tracked.
    pub fn ledger_crossing(&self, level: T) -> Option<Option<T>> {
        let tol = T::lit(1e-9) * level.abs().max(T::one());
        self.ledger
            .iter()
            .find(|(l, _)| (*l - level).abs() <= tol)
            .map(|&(_, c)| c)
    }

    /// Whether the quadratic variation crossed `level` by time `t`.
    pub fn crossed_by(&self, level: T, t: T) -> Option<bool> {
        let eps = self.step * T::lit(1e-6);
        self.ledger_crossing(level).map(|c| c.is_some_and(|s| s <= t + eps))
    }

    pub fn observation(&self, t: T) -> Option<&Observation<T>> {
        let eps = self.step * T::lit(1e-6);
        self.observations.iter().find(|o| (o.t - t).abs() <= eps)
    }
}

/// Index `i` with `i h = t`, or a configuration error if `t` is off the grid.
pub fn grid_index<T: Real>(t: T, h: T) -> Result<u64> {
    let r = t / h;
    let i = r.round();
    if !(t >= T::zero()) || (r - i).abs() > T::lit(1e-6) || i.to_u64().is_none() {
        return Err(Error::Config(format!("time {t} is not a multiple of step {h}")));
    }
    Ok(i.to_u64().expect("checked"))
}

/// A model paired with engine settings, ready to run paths.
#[derive(Debug)]
pub struct Simulator<'a, T> {
    model: &'a Model<T>,
    settings: &'a EngineSettings<T>,
    schedule: LevelSchedule<T>,
    halvings: Vec<T>,
}

impl<'a, T: Real> Simulator<'a, T> {
    pub fn new(model: &'a Model<T>, settings: &'a EngineSettings<T>) -> Result<Self> {
        if !(settings.step > T::zero()) || !settings.step.is_finite() {
            return Err(Error::Config(format!("step must be positive, got {}", settings.step)));
        }
        if !(settings.qv_cap > T::zero()) {
            return Err(Error::Config(format!("qv cap must be positive, got {}", settings.qv_cap)));
        }
        if settings.max_level == 0 {
            return Err(Error::Config("top localization level must be at least 1".into()));
        }
        if settings.refinement.max_depth > 30 {
            return Err(Error::Config("refinement depth is limited to 30".into()));
        }
        let halvings = (0..=settings.refinement.max_depth)
            .map(|k| settings.step / T::lit(2.0).powi(k as i32))
            .collect();
        Ok(Self {
            model,
            settings,
            schedule: LevelSchedule::new(&model.domain, settings.max_level),
            halvings,
        })
    }

    pub fn model(&self) -> &Model<T> {
        self.model
    }

    pub fn settings(&self) -> &EngineSettings<T> {
        self.settings
    }

    pub fn schedule(&self) -> &LevelSchedule<T> {
        &self.schedule
    }

    /// Checks a run request against the grid.
    pub fn validate(&self, opts: &RunOptions<T>) -> Result<()> {
        grid_index(opts.horizon, self.settings.step)?;
        for &t in &opts.observe {
            grid_index(t, self.settings.step)?;
            if t > opts.horizon {
                return Err(Error::Config(format!("observation time {t} is past the horizon {}", opts.horizon)));
            }
        }
        Ok(())
    }

    /// Smallest dyadic level whose sub-step satisfies the refinement rule and
    /// is aligned with the current position inside the base step.
    fn choose_level(&self, x: &[T], s: &CoefficientSample<T>, sub: u64) -> u32 {
        let r = &self.settings.refinement;
        let depth = r.max_depth;
        let d = x.len();
        for k in 0..depth {
            let units = 1u64 << (depth - k);
            if sub & (units - 1) != 0 {
                continue;
            }
            let delta = self.halvings[k as usize];
            if s.qv_rate * delta > r.qv_increment {
                continue;
            }
            let fits = (0..d).all(|i| {
                let dist = self.model.domain.boundary_distance(i, x[i]);
                if dist.is_infinite() {
                    return true;
                }
                let speed = s.b[i].abs().max(s.b_hat[i].abs());
                r.boundary_margin * (s.a[i * d + i].max(T::zero()) * delta).sqrt() + speed * delta <= dist
            });
            if fits {
                return k;
            }
        }
        depth
    }

    /// Quadratic variation accumulated along a Brownian-type approach from
    /// `x_prev` to the crossing point of the segment `x_prev -> x_out`,
    /// arriving after the crossing fraction of `dt`.
    #[allow(clippy::too_many_arguments)]
    fn exit_tail(
        &self,
        x_prev: &[T],
        x_out: &[T],
        t: T,
        dt: T,
        rmin: &[T],
        rmax: &[T],
        budget: T,
    ) -> (Improper<T>, T) {
        let d = x_prev.len();
        let domain = &self.model.domain;
        let mut frac = T::one();
        for i in 0..d {
            let (lo, hi) = domain.guarded_bounds(i);
            let f = if x_out[i] <= lo {
                (x_prev[i] - lo) / (x_prev[i] - x_out[i])
            } else if x_out[i] >= hi {
                (hi - x_prev[i]) / (x_out[i] - x_prev[i])
            } else {
                continue;
            };
            if f.is_finite() {
                frac = frac.min(f);
            } else {
                frac = T::zero();
            }
        }
        let frac = frac.max(T::zero()).min(T::one());
        let s_star = frac * dt;
        let boundary: Vec<T> = (0..d).map(|i| x_prev[i] + frac * (x_out[i] - x_prev[i])).collect();
        let exit_time = t + s_star;
        if s_star <= T::zero() {
            return (Improper::Converged { value: T::zero(), level: 0 }, exit_time);
        }

        let coeffs = &self.model.coefficients;
        let mut sample = CoefficientSample::zeros(d);
        let mut y = vec![T::zero(); d];
        let mut lo = rmin.to_vec();
        let mut hi = rmax.to_vec();
        let two = T::lit(2.0);
        let integrand = |v: T| {
            for i in 0..d {
                y[i] = boundary[i] + (x_prev[i] - boundary[i]) * v;
                lo[i] = rmin[i].min(y[i]);
                hi[i] = rmax[i].max(y[i]);
            }
            let view = PathView {
                t: t + s_star * (T::one() - v * v),
                x: &y,
                running_min: &lo,
                running_max: &hi,
                alive: true,
            };
            match evaluate_coefficients(coeffs, view.t, &view, &mut sample) {
                Ok(()) => sample.qv_rate * two * s_star * v,
                Err(_) => T::nan(),
            }
        };
        let schedule = Truncation {
            divergence: budget.max(T::min_positive_value()).min(self.settings.tail.divergence),
            ..self.settings.tail
        };
        (integrate_truncated(integrand, T::one(), Endpoint::Finite(T::zero()), &schedule), exit_time)
    }

    /// Simulates one path.
    pub fn run(&self, mode: MeasureMode, opts: &RunOptions<T>, stream: &mut RngStream) -> TrajectoryRecord<T> {
        let model = self.model;
        let settings = self.settings;
        let d = model.dim();
        let h = settings.step;
        let depth = settings.refinement.max_depth;
        let full = 1u64 << depth;
        let sub_h = self.halvings[depth as usize];
        let n_steps = grid_index(opts.horizon, h).unwrap_or(0);
        let mut obs_idx: Vec<(u64, T)> = opts
            .observe
            .iter()
            .filter_map(|&t| grid_index(t, h).ok().map(|i| (i, t)))
            .collect();
        obs_idx.sort_by_key(|a| a.0);
        obs_idx.dedup_by(|a, b| a.0 == b.0);

        let qv_cap = settings.qv_cap;
        let qv_stop = opts.qv_stop.unwrap_or(qv_cap).max(qv_cap);
        let mut ledger: Vec<(T, Option<T>)> = opts.ledger.iter().map(|&l| (l, None)).collect();
        if !ledger.iter().any(|(l, _)| *l == qv_cap) {
            ledger.push((qv_cap, None));
        }
        ledger.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

        let mut x = model.x0.clone();
        let mut x_new = vec![T::zero(); d];
        let mut dx = vec![T::zero(); d];
        let mut xi = vec![T::zero(); d];
        let mut sigma = vec![T::zero(); d * d];
        let mut rmin = x.clone();
        let mut rmax = x.clone();
        let mut sample = CoefficientSample::zeros(d);
        let mut acc = ExponentialAccumulator::new();
        let mut raw_qv = T::zero();
        let mut cap_crossing = None;
        let mut loc = LocalizationState::new();
        let mut exit_time = None;
        let mut exit_tail = None;
        let mut failure = None;
        let mut substeps = 0u64;
        let mut end_time = T::zero();
        let mut path = opts.keep_path.then(|| PathPrefix::new(&x, h));
        let mut qv_history = opts.keep_path.then(|| vec![T::zero()]);
        let mut observations = Vec::with_capacity(obs_idx.len());
        let mut obs_ptr = 0;
        while obs_ptr < obs_idx.len() && obs_idx[obs_ptr].0 == 0 {
            observations.push(Observation {
                t: obs_idx[obs_ptr].1,
                qv: T::zero(),
                raw_qv: T::zero(),
                z: T::one(),
                alive: true,
            });
            obs_ptr += 1;
        }

        // Levels are sorted, so only the lowest uncrossed one needs checking.
        let mut ledger_next = 0usize;
        let mut record_ledger = |ledger: &mut Vec<(T, Option<T>)>, qv: T, t: T| {
            while ledger_next < ledger.len() && qv > ledger[ledger_next].0 {
                ledger[ledger_next].1 = Some(t);
                ledger_next += 1;
            }
        };
        let psd_tol = T::lit(PSD_TOLERANCE);

        'outer: for i in 0..n_steps {
            let t_base = T::from_usize_lossy(i as usize) * h;
            let mut sub = 0u64;
            while sub < full {
                let t = t_base + T::from_usize_lossy(sub as usize) * sub_h;
                let view = PathView {
                    t,
                    x: &x,
                    running_min: &rmin,
                    running_max: &rmax,
                    alive: true,
                };
                if let Err(e) = evaluate_coefficients(&model.coefficients, t, &view, &mut sample) {
                    failure = Some(e);
                    end_time = t;
                    break 'outer;
                }
                let k = if depth == 0 { 0 } else { self.choose_level(&x, &sample, sub) };
                let units = full >> k;
                let dt = self.halvings[k as usize];

                let drift = match mode {
                    MeasureMode::P => &sample.b,
                    MeasureMode::Q => &sample.b_hat,
                };
                let sq = dt.sqrt();
                if d == 1 {
                    let a = sample.a[0];
                    if a < -psd_tol {
                        failure = Some(Error::NotPsd { min_eigenvalue: a.to_f64_lossy() });
                        end_time = t;
                        break 'outer;
                    }
                    let z = T::lit(stream.next_normal());
                    x_new[0] = x[0] + drift[0] * dt + sq * a.max(T::zero()).sqrt() * z;
                    dx[0] = x_new[0] - x[0];
                } else {
                    match psd_factor(&sample.a, d) {
                        Ok(s) => sigma.copy_from_slice(&s),
                        Err(e) => {
                            failure = Some(e);
                            end_time = t;
                            break 'outer;
                        }
                    }
                    for z in xi.iter_mut() {
                        *z = T::lit(stream.next_normal());
                    }
                    for r in 0..d {
                        let noise = (0..d).fold(T::zero(), |s, c| s + sigma[r * d + c] * xi[c]);
                        x_new[r] = x[r] + drift[r] * dt + sq * noise;
                        dx[r] = x_new[r] - x[r];
                    }
                }
                substeps += 1;
                if x_new.iter().any(|v| v.is_nan()) {
                    failure = Some(Error::NumericDomain { what: "state", t: t.to_f64_lossy() });
                    end_time = t;
                    break 'outer;
                }
                let t_new = t + dt;
                let inc = sample.qv_rate * dt;

                if model.domain.contains_guarded(&x_new) {
                    acc.accumulate_increment(&sample, &dx, dt);
                    raw_qv = raw_qv + inc;
                    record_ledger(&mut ledger, raw_qv, t_new);
                    if cap_crossing.is_none() && raw_qv > qv_cap {
                        cap_crossing = Some(t_new);
                        acc.freeze(FreezeCause::QvExplosion);
                    }
                    loc.observe(&self.schedule, t_new, &x, Some(&x_new), raw_qv, inc, settings.jump_threshold);
                    std::mem::swap(&mut x, &mut x_new);
                    for r in 0..d {
                        rmin[r] = rmin[r].min(x[r]);
                        rmax[r] = rmax[r].max(x[r]);
                    }
                    sub += units;
                    end_time = t_new;
                    if raw_qv > qv_stop {
                        break 'outer;
                    }
                } else {
                    let budget = qv_stop - raw_qv;
                    let (tail, t_exit) = self.exit_tail(&x, &x_new, t, dt, &rmin, &rmax, budget);
                    let extra = if tail.is_converged() { tail.value() } else { T::infinity() };
                    let was_frozen = acc.is_frozen();
                    raw_qv = raw_qv + extra;
                    record_ledger(&mut ledger, raw_qv, t_exit);
                    if cap_crossing.is_none() && raw_qv > qv_cap {
                        cap_crossing = Some(t_exit);
                        acc.freeze(FreezeCause::QvExplosion);
                    } else {
                        acc.freeze(FreezeCause::Cemetery);
                    }
                    if !was_frozen {
                        acc.add_qv_tail(extra);
                    }
                    loc.observe(&self.schedule, t_exit, &x, None, raw_qv, inc, settings.jump_threshold);
                    exit_tail = Some(tail);
                    exit_time = Some(t_exit);
                    end_time = t_exit;
                    if let Some(p) = path.as_mut() {
                        p.kill();
                    }
                    break 'outer;
                }
            }
            if let Some(p) = path.as_mut() {
                p.push(&x);
            }
            if let Some(hq) = qv_history.as_mut() {
                hq.push(acc.qv());
            }
            if obs_ptr < obs_idx.len() && obs_idx[obs_ptr].0 == i + 1 {
                obs_ptr = push_observations(&mut observations, &obs_idx, obs_ptr, i + 1, &acc, raw_qv);
            }
        }

        let alive_after = exit_time.is_none() && failure.is_none();
        while obs_ptr < obs_idx.len() {
            observations.push(Observation {
                t: obs_idx[obs_ptr].1,
                qv: acc.qv(),
                raw_qv,
                z: acc.z_value(),
                alive: alive_after,
            });
            obs_ptr += 1;
        }

        let class = if failure.is_some() {
            PathClass::NumericFailure
        } else if cap_crossing.is_some() {
            PathClass::QvExploded
        } else if exit_time.is_some() {
            PathClass::ExitedDomain
        } else {
            PathClass::ReachedHorizon
        };

        TrajectoryRecord {
            path_index: stream.path(),
            mode,
            class,
            step: h,
            end_time,
            exit_time,
            cap_crossing,
            observations,
            final_qv: acc.qv(),
            final_raw_qv: raw_qv,
            final_z: acc.z_value(),
            ledger,
            localization: loc,
            exit_tail,
            failure,
            path,
            qv_history,
            substeps,
        }
    }
}

// Kept out of line so the exponential is only evaluated at observation times.
#[cold]
#[inline(never)]
fn push_observations<T: Real>(
    out: &mut Vec<Observation<T>>,
    obs_idx: &[(u64, T)],
    mut ptr: usize,
    step: u64,
    acc: &ExponentialAccumulator<T>,
    raw_qv: T,
) -> usize {
    while ptr < obs_idx.len() && obs_idx[ptr].0 == step {
        out.push(Observation {
            t: obs_idx[ptr].1,
            qv: acc.qv(),
            raw_qv,
            z: acc.z_value(),
            alive: true,
        });
        ptr += 1;
    }
    ptr
}

/// Simulates one path of `model` on the stream `stream`.
pub fn simulate_path<T: Real>(
    model: &Model<T>,
    settings: &EngineSettings<T>,
    mode: MeasureMode,
    opts: &RunOptions<T>,
    stream: &mut RngStream,
) -> Result<TrajectoryRecord<T>> {
    let sim = Simulator::new(model, settings)?;
    sim.validate(opts)?;
    Ok(sim.run(mode, opts, stream))
}

/// Size, seed and parallelism of a Monte Carlo batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchSpec {
    pub n_paths: usize,
    pub seed: u64,
    pub workers: usize,
}

/// Runs paths `0..n_paths` and maps each record through `f`. Path `j` always
/// uses stream `j` of the seed and results come back in path order, so the
/// output does not depend on the number of workers.
pub fn simulate_batch<T, S, F>(
    sim: &Simulator<'_, T>,
    mode: MeasureMode,
    opts: &RunOptions<T>,
    spec: BatchSpec,
    f: F,
) -> Result<Vec<S>>
where
    T: Real,
    S: Send,
    F: Fn(TrajectoryRecord<T>) -> S + Sync + Send,
{
    sim.validate(opts)?;
    let job = || {
        (0..spec.n_paths)
            .into_par_iter()
            .map(|j| {
                let mut stream = RngStream::new(spec.seed, j as u64);
                f(sim.run(mode, opts, &mut stream))
            })
            .collect::<Vec<S>>()
    };
    if spec.workers <= 1 {
        // Avoid spinning up a pool just to run serially.
        let mut out = Vec::with_capacity(spec.n_paths);
        for j in 0..spec.n_paths {
            let mut stream = RngStream::new(spec.seed, j as u64);
            out.push(f(sim.run(mode, opts, &mut stream)));
        }
        return Ok(out);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{make_domain, Interval};

    fn bm() -> Model<f64> {
        let domain = make_domain(&[Interval::real_line()], &[0.0]).unwrap();
        Model::new(domain, vec![0.0], CoefficientSet::scalar(|_, _| 0.0, |_, _| 1.0, |_, _| 0.0)).unwrap()
    }

    #[test]
    fn brownian_path_reaches_horizon() {
        let m = bm();
        let s = EngineSettings::default();
        let opts = RunOptions::new(1.0).observe(&[0.5, 1.0]).keep_path(true);
        let r = simulate_path(&m, &s, MeasureMode::P, &opts, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(r.class, PathClass::ReachedHorizon);
        assert_eq!(r.observations.len(), 2);
        assert_eq!(r.final_z, 1.0);
        assert_eq!(r.path.as_ref().unwrap().len(), 1001);
        assert_eq!(r.substeps, 1000);
    }

    #[test]
    fn observation_off_grid_is_rejected() {
        let m = bm();
        let s = EngineSettings::default();
        let opts = RunOptions::new(1.0).observe(&[0.0005]);
        assert!(matches!(
            simulate_path(&m, &s, MeasureMode::P, &opts, &mut RngStream::new(1, 0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_integrand_gives_identical_modes() {
        let m = bm();
        let s = EngineSettings::default();
        let opts = RunOptions::new(0.5).keep_path(true);
        let p = simulate_path(&m, &s, MeasureMode::P, &opts, &mut RngStream::new(3, 9)).unwrap();
        let q = simulate_path(&m, &s, MeasureMode::Q, &opts, &mut RngStream::new(3, 9)).unwrap();
        assert_eq!(p.path, q.path);
    }

    #[test]
    fn constant_integrand_matches_closed_form() {
        // mu = 1, b = 0, a = 1: Z_t = exp(W_t - t/2).
        let domain = make_domain(&[Interval::real_line()], &[0.0]).unwrap();
        let m = Model::new(domain, vec![0.0], CoefficientSet::scalar(|_, _| 0.0, |_, _| 1.0, |_, _| 1.0)).unwrap();
        let s = EngineSettings::default();
        let opts = RunOptions::new(1.0).keep_path(true);
        let r: TrajectoryRecord<f64> = simulate_path(&m, &s, MeasureMode::P, &opts, &mut RngStream::new(5, 2)).unwrap();
        let w: f64 = r.path.as_ref().unwrap().state(1000).unwrap()[0];
        assert!((r.final_z - (w - 0.5).exp()).abs() < 1e-9);
        assert!((r.final_qv - 1.0).abs() < 1e-9);
    }

    #[test]
    fn explosive_integrand_crosses_cap() {
        let domain = make_domain(&[Interval::real_line()], &[0.0]).unwrap();
        let m = Model::new(domain, vec![0.0], CoefficientSet::scalar(|_, _| 0.0, |_, _| 1.0, |_, _| 100.0)).unwrap();
        let s = EngineSettings::default();
        let r = simulate_path(&m, &s, MeasureMode::P, &RunOptions::new(1.0), &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(r.class, PathClass::QvExploded);
        assert_eq!(r.final_z, 0.0);
        assert!((r.cap_crossing.unwrap() - 0.101f64).abs() < 2e-3);
    }

    #[test]
    fn refinement_keeps_bessel_inside() {
        // Q-side of 1/x on (0, inf): a Bessel(3) process from 0.05.
        let domain = make_domain(&[Interval::positive_half_line()], &[0.05]).unwrap();
        let c = CoefficientSet::scalar(|_, _| 0.0, |_, _| 1.0, |_, p: &PathView<'_, f64>| 1.0 / p.x[0]);
        let m = Model::new(domain, vec![0.05], c).unwrap();
        let s = EngineSettings::default();
        let sim = Simulator::new(&m, &s).unwrap();
        let spec = BatchSpec { n_paths: 200, seed: 4, workers: 1 };
        let classes = simulate_batch(&sim, MeasureMode::Q, &RunOptions::new(0.2), spec, |r| r.class).unwrap();
        assert!(classes.iter().all(|c| *c == PathClass::ReachedHorizon));
    }

    #[test]
    fn brownian_hitting_zero_kills_z() {
        let domain = make_domain(&[Interval::positive_half_line()], &[0.1]).unwrap();
        let c = CoefficientSet::scalar(|_, _| 0.0, |_, _| 1.0, |_, p: &PathView<'_, f64>| 1.0 / p.x[0]);
        let m = Model::new(domain, vec![0.1], c).unwrap();
        let s = EngineSettings::default();
        let sim = Simulator::new(&m, &s).unwrap();
        let spec = BatchSpec { n_paths: 100, seed: 8, workers: 1 };
        let recs = simulate_batch(&sim, MeasureMode::P, &RunOptions::new(1.0), spec, |r| r).unwrap();
        let hit: Vec<_> = recs.iter().filter(|r| r.exit_time.is_some()).collect();
        assert!(hit.len() > 50);
        for r in hit {
            assert_eq!(r.class, PathClass::QvExploded);
            assert_eq!(r.final_z, 0.0);
        }
    }

    #[test]
    fn batch_is_independent_of_workers() {
        let m = bm();
        let s = EngineSettings::default();
        let sim = Simulator::new(&m, &s).unwrap();
        let opts = RunOptions::new(0.2);
        let one = simulate_batch(&sim, MeasureMode::Q, &opts, BatchSpec { n_paths: 64, seed: 2, workers: 1 }, |r| {
            r.observations[0].raw_qv.to_bits() ^ r.substeps
        })
        .unwrap();
        let four = simulate_batch(&sim, MeasureMode::Q, &opts, BatchSpec { n_paths: 64, seed: 2, workers: 4 }, |r| {
            r.observations[0].raw_qv.to_bits() ^ r.substeps
        })
        .unwrap();
        assert_eq!(one, four);
    }
}

//! Discrete path space: the open state domain with its closed exhaustion,
//! sampled path prefixes with a cemetery state, and evaluation of the
//! coefficient functionals on those prefixes.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Open interval `(lower, upper)`; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lower: T, upper: T) -> Self {
        Self { lower, upper }
    }

    pub fn real_line() -> Self {
        Self::new(T::neg_infinity(), T::infinity())
    }

    pub fn positive_half_line() -> Self {
        Self::new(T::zero(), T::infinity())
    }

    #[inline]
    pub fn contains(&self, x: T) -> bool {
        x > self.lower && x < self.upper
    }

    fn is_unbounded(&self) -> bool {
        self.lower.is_infinite() && self.upper.is_infinite()
    }
}

/// Closed axis-aligned box, one member `E_n` of the exhaustion.
#[derive(Clone, Debug, PartialEq)]
pub struct Region<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> Region<T> {
    #[inline]
    pub fn contains(&self, x: &[T]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&xi, (&lo, &hi))| xi >= lo && xi <= hi)
    }

    pub fn is_subset_of(&self, other: &Region<T>) -> bool {
        self.lower
            .iter()
            .zip(&other.lower)
            .all(|(a, b)| a >= b)
            && self.upper.iter().zip(&other.upper).all(|(a, b)| a <= b)
    }
}

/// Open domain `E` (a product of open intervals) together with the rule
/// `n -> E_n` for its closed exhaustion.
///
/// For interval-shaped coordinates the exhaustion is
/// `[l + 1/(n+c), r - 1/(n+c)] ∩ [-(n+c), n+c]`, with the integer `c >= 2`
/// chosen as small as possible so that `x0 ∈ E_0`. When every coordinate is
/// unbounded the box rule `[-n-R0, n+R0]^d` with `R0 = max(|x0|_inf, 1)` is
/// used instead.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain<T> {
    intervals: Vec<Interval<T>>,
    offset: T,
    whole_space: bool,
    blowup: T,
}

/// Magnitude beyond which an unbounded coordinate is treated as having
/// reached the cemetery.
pub const DEFAULT_BLOWUP: f64 = 1e8;

/// Builds the domain `E` from per-coordinate open intervals and checks that
/// the start point lies inside it.
pub fn make_domain<T: Real>(intervals: &[Interval<T>], x0: &[T]) -> Result<Domain<T>> {
    if intervals.is_empty() {
        return Err(Error::Config("domain needs at least one coordinate".into()));
    }
    if intervals.len() != x0.len() {
        return Err(Error::Config(format!(
            "start point has dimension {} but domain has dimension {}",
            x0.len(),
            intervals.len()
        )));
    }
    for iv in intervals {
        if !(iv.lower < iv.upper) {
            return Err(Error::Config(format!(
                "empty interval ({}, {})",
                iv.lower, iv.upper
            )));
        }
    }
    if !intervals.iter().zip(x0).all(|(iv, &x)| iv.contains(x)) {
        return Err(Error::Config(format!("start point {x0:?} is not in the domain")));
    }

    let whole_space = intervals.iter().all(Interval::is_unbounded);
    let mut domain = Domain {
        intervals: intervals.to_vec(),
        offset: T::zero(),
        whole_space,
        blowup: T::lit(DEFAULT_BLOWUP),
    };

    if whole_space {
        let r0 = x0.iter().fold(T::one(), |m, x| m.max(x.abs()));
        domain.offset = r0;
        return Ok(domain);
    }

    // Smallest integer c >= 2 compatible with every coordinate, then bump
    // until floating point agrees that x0 ∈ E_0.
    let mut c = T::lit(2.0);
    for (iv, &x) in intervals.iter().zip(x0) {
        if iv.lower.is_finite() {
            c = c.max((T::one() / (x - iv.lower)).ceil());
        }
        if iv.upper.is_finite() {
            c = c.max((T::one() / (iv.upper - x)).ceil());
        }
        c = c.max(x.abs().ceil());
    }
    domain.offset = c;
    for _ in 0..64 {
        if domain.exhaustion(0).contains(x0) {
            return Ok(domain);
        }
        domain.offset = domain.offset + T::one();
    }
    Err(Error::Config(format!(
        "could not place start point {x0:?} inside the first exhaustion set"
    )))
}

impl<T: Real> Domain<T> {
    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval<T>] {
        &self.intervals
    }

    /// The constant `c` of the interval rule, or `R0` of the whole-space rule.
    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn blowup(&self) -> T {
        self.blowup
    }

    pub fn with_blowup(mut self, blowup: T) -> Self {
        self.blowup = blowup;
        self
    }

    /// Membership in the open set `E`.
    #[inline]
    pub fn contains(&self, x: &[T]) -> bool {
        self.intervals.iter().zip(x).all(|(iv, &xi)| iv.contains(xi))
    }

    /// Membership in `E` intersected with the blow-up guard: a coordinate
    /// with an infinite end that exceeds the guard magnitude is treated as
    /// having left the domain.
    #[inline]
    pub fn contains_guarded(&self, x: &[T]) -> bool {
        self.intervals.iter().zip(x).all(|(iv, &xi)| {
            iv.contains(xi)
                && !(iv.upper.is_infinite() && xi > self.blowup)
                && !(iv.lower.is_infinite() && xi < -self.blowup)
        })
    }

    /// Effective bounds used by the guarded membership test.
    pub fn guarded_bounds(&self, i: usize) -> (T, T) {
        let iv = self.intervals[i];
        let lo = if iv.lower.is_infinite() { -self.blowup } else { iv.lower };
        let hi = if iv.upper.is_infinite() { self.blowup } else { iv.upper };
        (lo, hi)
    }

    /// Distance from `x_i` to the nearest finite end of coordinate `i`
    /// (infinite if both ends are infinite).
    #[inline]
    pub fn boundary_distance(&self, i: usize, xi: T) -> T {
        let iv = self.intervals[i];
        let lo = if iv.lower.is_finite() { xi - iv.lower } else { T::infinity() };
        let hi = if iv.upper.is_finite() { iv.upper - xi } else { T::infinity() };
        lo.min(hi)
    }

    pub fn has_finite_boundary(&self) -> bool {
        self.intervals
            .iter()
            .any(|iv| iv.lower.is_finite() || iv.upper.is_finite())
    }

    /// The closed set `E_n`.
    pub fn exhaustion(&self, n: u32) -> Region<T> {
        let nn = T::from_u32(n).expect("level representable");
        let d = self.dim();
        if self.whole_space {
            let r = nn + self.offset;
            return Region {
                lower: vec![-r; d],
                upper: vec![r; d],
            };
        }
        let span = nn + self.offset;
        let inset = T::one() / span;
        let mut lower = Vec::with_capacity(d);
        let mut upper = Vec::with_capacity(d);
        for iv in &self.intervals {
            let lo = if iv.lower.is_finite() { iv.lower + inset } else { -span };
            let hi = if iv.upper.is_finite() { iv.upper - inset } else { span };
            lower.push(lo.max(-span));
            upper.push(hi.min(span));
        }
        Region { lower, upper }
    }
}

/// Read-only view of the current end of a path prefix, the only access a
/// coefficient functional has to the path.
#[derive(Clone, Copy, Debug)]
pub struct PathView<'a, T> {
    pub t: T,
    pub x: &'a [T],
    pub running_min: &'a [T],
    pub running_max: &'a [T],
    /// `false` once the path is at the cemetery.
    pub alive: bool,
}

/// A sampled path on the uniform grid `t_i = i h`, absorbed at the cemetery
/// after its lifetime index.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPrefix<T> {
    dim: usize,
    step: T,
    states: Vec<T>,
    lifetime: Option<usize>,
    running_min: Vec<T>,
    running_max: Vec<T>,
}

impl<T: Real> PathPrefix<T> {
    pub fn new(x0: &[T], step: T) -> Self {
        Self {
            dim: x0.len(),
            step,
            states: x0.to_vec(),
            lifetime: None,
            running_min: x0.to_vec(),
            running_max: x0.to_vec(),
        }
    }

    /// Builds a prefix from a list of live states.
    pub fn from_states(states: &[Vec<T>], step: T) -> Self {
        let mut path = Self::new(&states[0], step);
        for s in &states[1..] {
            path.push(s);
        }
        path
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> T {
        self.step
    }

    /// Number of grid points recorded, including cemetery points.
    pub fn len(&self) -> usize {
        self.live_len() + usize::from(self.lifetime.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn live_len(&self) -> usize {
        self.states.len() / self.dim
    }

    /// Index of the first grid point at the cemetery, if any.
    pub fn lifetime(&self) -> Option<usize> {
        self.lifetime
    }

    pub fn is_alive(&self) -> bool {
        self.lifetime.is_none()
    }

    pub fn time(&self, i: usize) -> T {
        T::from_usize_lossy(i) * self.step
    }

    pub fn last_time(&self) -> T {
        self.time(self.len() - 1)
    }

    /// State at grid index `i`; `None` means the cemetery.
    pub fn state(&self, i: usize) -> Option<&[T]> {
        match self.lifetime {
            Some(k) if i >= k => None,
            _ => self.states.get(i * self.dim..(i + 1) * self.dim),
        }
    }

    /// Appends a live state.
    ///
    /// # Panics
    /// If the path is already at the cemetery.
    pub fn push(&mut self, x: &[T]) {
        assert!(self.is_alive(), "cannot extend a path past its lifetime");
        assert_eq!(x.len(), self.dim);
        self.states.extend_from_slice(x);
        for ((lo, hi), &xi) in self
            .running_min
            .iter_mut()
            .zip(self.running_max.iter_mut())
            .zip(x)
        {
            *lo = lo.min(xi);
            *hi = hi.max(xi);
        }
    }

    /// Sends the path to the cemetery at the next grid point.
    pub fn kill(&mut self) {
        if self.lifetime.is_none() {
            self.lifetime = Some(self.live_len());
        }
    }

    pub fn running_min(&self) -> &[T] {
        &self.running_min
    }

    pub fn running_max(&self) -> &[T] {
        &self.running_max
    }

    /// View of the last live state.
    pub fn view(&self) -> PathView<'_, T> {
        let k = self.live_len() - 1;
        PathView {
            t: self.time(k),
            x: &self.states[k * self.dim..],
            running_min: &self.running_min,
            running_max: &self.running_max,
            alive: self.is_alive(),
        }
    }
}

/// Smallest grid time whose state lies outside `region` (the cemetery is
/// outside every region); `None` if the recorded prefix never leaves it.
pub fn first_exit_time<T: Real>(path: &PathPrefix<T>, region: &Region<T>) -> Option<T> {
    (0..path.len())
        .find(|&i| path.state(i).is_none_or(|x| !region.contains(x)))
        .map(|i| path.time(i))
}

type VectorFn<T> = dyn Fn(T, &PathView<'_, T>, &mut [T]) + Send + Sync;

/// The three progressively measurable functionals driving a scenario:
/// drift `b`, diffusion matrix `a` (row-major `d x d`) and the integrand `mu`
/// of the stochastic logarithm.
#[derive(Clone)]
pub struct CoefficientSet<T> {
    dim: usize,
    drift: Arc<VectorFn<T>>,
    diffusion: Arc<VectorFn<T>>,
    integrand: Arc<VectorFn<T>>,
    pub time_homogeneous: bool,
    pub state_only: bool,
}

impl<T> fmt::Debug for CoefficientSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("dim", &self.dim)
            .field("time_homogeneous", &self.time_homogeneous)
            .field("state_only", &self.state_only)
            .finish_non_exhaustive()
    }
}

impl<T: Real> CoefficientSet<T> {
    pub fn new<B, A, M>(dim: usize, drift: B, diffusion: A, integrand: M) -> Self
    where
        B: Fn(T, &PathView<'_, T>, &mut [T]) + Send + Sync + 'static,
        A: Fn(T, &PathView<'_, T>, &mut [T]) + Send + Sync + 'static,
        M: Fn(T, &PathView<'_, T>, &mut [T]) + Send + Sync + 'static,
    {
        Self {
            dim,
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            integrand: Arc::new(integrand),
            time_homogeneous: false,
            state_only: false,
        }
    }

    /// One-dimensional coefficients given as scalar functions.
    pub fn scalar<B, A, M>(drift: B, diffusion: A, integrand: M) -> Self
    where
        B: Fn(T, &PathView<'_, T>) -> T + Send + Sync + 'static,
        A: Fn(T, &PathView<'_, T>) -> T + Send + Sync + 'static,
        M: Fn(T, &PathView<'_, T>) -> T + Send + Sync + 'static,
    {
        Self::new(
            1,
            move |t, p, out: &mut [T]| out[0] = drift(t, p),
            move |t, p, out: &mut [T]| out[0] = diffusion(t, p),
            move |t, p, out: &mut [T]| out[0] = integrand(t, p),
        )
    }

    pub fn with_flags(mut self, time_homogeneous: bool, state_only: bool) -> Self {
        self.time_homogeneous = time_homogeneous;
        self.state_only = state_only;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Coefficients evaluated at one point of one path.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSample<T> {
    pub b: Vec<T>,
    /// Row-major `d x d`.
    pub a: Vec<T>,
    pub mu: Vec<T>,
    /// The changed drift `b + a mu`.
    pub b_hat: Vec<T>,
    /// `mu' a mu`, clamped at zero.
    pub qv_rate: T,
}

impl<T: Real> CoefficientSample<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            b: vec![T::zero(); dim],
            a: vec![T::zero(); dim * dim],
            mu: vec![T::zero(); dim],
            b_hat: vec![T::zero(); dim],
            qv_rate: T::zero(),
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }
}

/// Evaluates `b`, `a`, `mu` at `(t, path)` into `out` and derives
/// `b_hat = b + a mu` and the quadratic-variation rate `mu' a mu`.
pub fn evaluate_coefficients<T: Real>(
    coeffs: &CoefficientSet<T>,
    t: T,
    path: &PathView<'_, T>,
    out: &mut CoefficientSample<T>,
) -> Result<()> {
    let d = coeffs.dim;
    (coeffs.drift)(t, path, &mut out.b);
    (coeffs.diffusion)(t, path, &mut out.a);
    (coeffs.integrand)(t, path, &mut out.mu);

    if d == 1 {
        let (b, a, mu) = (out.b[0], out.a[0], out.mu[0]);
        let a_mu = a * mu;
        let rate = mu * a_mu;
        if !(b.is_finite() && a.is_finite() && mu.is_finite() && rate.is_finite()) {
            return Err(scalar_failure(b, a, mu, t));
        }
        out.b_hat[0] = b + a_mu;
        out.qv_rate = rate.max(T::zero());
        return Ok(());
    }

    let finite = |v: &[T]| v.iter().all(|x| x.is_finite());
    let t64 = t.to_f64_lossy();
    if !finite(&out.b) {
        return Err(Error::NumericDomain { what: "drift", t: t64 });
    }
    if !finite(&out.a) {
        return Err(Error::NumericDomain { what: "diffusion", t: t64 });
    }
    if !finite(&out.mu) {
        return Err(Error::NumericDomain { what: "integrand", t: t64 });
    }

    let mut rate = T::zero();
    for i in 0..d {
        let row = &out.a[i * d..(i + 1) * d];
        let a_mu = row
            .iter()
            .zip(&out.mu)
            .fold(T::zero(), |s, (&aij, &mj)| s + aij * mj);
        out.b_hat[i] = out.b[i] + a_mu;
        rate = rate + out.mu[i] * a_mu;
    }
    if !rate.is_finite() {
        return Err(Error::NumericDomain { what: "quadratic-variation rate", t: t64 });
    }
    out.qv_rate = rate.max(T::zero());
    Ok(())
}

#[cold]
fn scalar_failure<T: Real>(b: T, a: T, mu: T, t: T) -> Error {
    let what = if !b.is_finite() {
        "drift"
    } else if !a.is_finite() {
        "diffusion"
    } else if !mu.is_finite() {
        "integrand"
    } else {
        "quadratic-variation rate"
    };
    Error::NumericDomain { what, t: t.to_f64_lossy() }
}

/// Tolerances for the sampled symmetry / semidefiniteness check of `a`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Checks that the sampled diffusion matrix is symmetric and positive
/// semidefinite within the module tolerances.
pub fn check_diffusion<T: Real>(sample: &CoefficientSample<T>) -> Result<()> {
    crate::engine::psd_factor(&sample.a, sample.dim()).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn remark_coefficients() -> CoefficientSet<f64> {
        CoefficientSet::scalar(
            |_, _| 0.0,
            |_, _| 1.0,
            |_, p: &PathView<'_, f64>| if p.alive { 1.0 / p.x[0] } else { 0.0 },
        )
    }

    #[test]
    fn half_line_exhaustion_from_one() {
        let d = make_domain(&[Interval::positive_half_line()], &[1.0]).unwrap();
        assert_eq!(d.offset(), 2.0);
        let e0 = d.exhaustion(0);
        assert_eq!((e0.lower[0], e0.upper[0]), (0.5, 2.0));
        let e3 = d.exhaustion(3);
        assert_eq!((e3.lower[0], e3.upper[0]), (0.2, 5.0));
    }

    #[test]
    fn real_line_exhaustion_is_not_degenerate() {
        let d = make_domain(&[Interval::real_line()], &[0.0]).unwrap();
        let e0 = d.exhaustion(0);
        assert_eq!((e0.lower[0], e0.upper[0]), (-1.0, 1.0));
        assert_eq!(d.exhaustion(4).upper[0], 5.0);
    }

    #[test]
    fn start_point_near_boundary_enlarges_offset() {
        let d = make_domain(&[Interval::positive_half_line()], &[1e-4]).unwrap();
        assert!(d.offset() >= 1e4);
        assert!(d.exhaustion(0).contains(&[1e-4]));
    }

    #[test]
    fn start_point_outside_is_rejected() {
        let err = make_domain(&[Interval::positive_half_line()], &[-1.0]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(make_domain(&[Interval::new(0.0, 1.0)], &[1.0]).is_err());
    }

    #[test]
    fn bounded_interval_exhaustion_stays_inside() {
        let d = make_domain(&[Interval::new(-1.0, 3.0)], &[2.5]).unwrap();
        for n in 0..50 {
            let e = d.exhaustion(n);
            assert!(e.lower[0] > -1.0 && e.upper[0] < 3.0);
            assert!(e.is_subset_of(&d.exhaustion(n + 1)));
        }
    }

    #[test]
    fn guard_applies_only_to_unbounded_ends() {
        let d = make_domain(&[Interval::real_line()], &[0.0]).unwrap();
        assert!(d.contains(&[2e8]));
        assert!(!d.contains_guarded(&[2e8]));
        assert!(!d.contains_guarded(&[-2e8]));
        let h = make_domain(&[Interval::new(0.0, 1e9)], &[1.0]).unwrap();
        assert!(h.contains_guarded(&[5e8]));
    }

    #[test]
    fn remark_scenario_sample() {
        let c = remark_coefficients();
        let p = PathPrefix::new(&[2.0], 0.01);
        let mut s = CoefficientSample::zeros(1);
        evaluate_coefficients(&c, 0.0, &p.view(), &mut s).unwrap();
        assert_eq!(s.b, vec![0.0]);
        assert_eq!(s.a, vec![1.0]);
        assert_eq!(s.mu, vec![0.5]);
        assert_eq!(s.b_hat, vec![0.5]);
        assert_eq!(s.qv_rate, 0.25);
    }

    #[test]
    fn zero_integrand_leaves_drift_unchanged() {
        let c = CoefficientSet::scalar(|_, p: &PathView<'_, f64>| -p.x[0], |_, _| 2.0, |_, _| 0.0);
        let p = PathPrefix::new(&[3.0], 0.01);
        let mut s = CoefficientSample::zeros(1);
        evaluate_coefficients(&c, 0.0, &p.view(), &mut s).unwrap();
        assert_eq!(s.b_hat, s.b);
        assert_eq!(s.qv_rate, 0.0);
    }

    #[test]
    fn indicator_coefficients_vanish_on_constant_path() {
        let ind = |p: &PathView<'_, f64>| if p.x[0] != 1.0 { 1.0 } else { 0.0 };
        let c = CoefficientSet::scalar(
            move |_, p: &PathView<'_, f64>| ind(p) / p.x[0],
            move |_, p: &PathView<'_, f64>| ind(p),
            move |_, p: &PathView<'_, f64>| -ind(p) / p.x[0],
        );
        let p = PathPrefix::from_states(&[vec![1.0], vec![1.0], vec![1.0]], 0.1);
        let mut s = CoefficientSample::zeros(1);
        evaluate_coefficients(&c, 0.2, &p.view(), &mut s).unwrap();
        assert_eq!((s.b[0], s.a[0], s.mu[0], s.b_hat[0]), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn non_finite_coefficient_is_an_error() {
        let c = remark_coefficients();
        let p = PathPrefix::new(&[0.0], 0.01);
        let mut s = CoefficientSample::zeros(1);
        let err = evaluate_coefficients(&c, 0.0, &p.view(), &mut s).unwrap_err();
        assert!(matches!(err, Error::NumericDomain { what: "integrand", .. }));
    }

    #[test]
    fn two_dimensional_b_hat() {
        let c = CoefficientSet::new(
            2,
            |_, _: &PathView<'_, f64>, out: &mut [f64]| out.copy_from_slice(&[1.0, -1.0]),
            |_, _: &PathView<'_, f64>, out: &mut [f64]| out.copy_from_slice(&[2.0, 1.0, 1.0, 2.0]),
            |_, _: &PathView<'_, f64>, out: &mut [f64]| out.copy_from_slice(&[1.0, 2.0]),
        );
        let p = PathPrefix::new(&[0.0, 0.0], 0.1);
        let mut s = CoefficientSample::zeros(2);
        evaluate_coefficients(&c, 0.0, &p.view(), &mut s).unwrap();
        // a mu = (4, 5)
        assert_eq!(s.b_hat, vec![5.0, 4.0]);
        assert_eq!(s.qv_rate, 14.0);
    }

    #[test]
    fn exit_of_constant_path() {
        let p = PathPrefix::from_states(&vec![vec![1.0]; 5], 0.25);
        let region = Region { lower: vec![0.5], upper: vec![2.0] };
        assert_eq!(first_exit_time(&p, &region), None);
    }

    #[test]
    fn exit_of_linear_path_uses_closed_region() {
        // x(t_i) = 1 - t_i on h = 0.25; x(0.75) = 0.25 is still inside.
        let states: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0 - 0.25 * i as f64]).collect();
        let p = PathPrefix::from_states(&states, 0.25);
        let region = Region { lower: vec![0.25], upper: vec![4.0] };
        assert_eq!(first_exit_time(&p, &region), Some(1.0));
    }

    #[test]
    fn cemetery_is_outside_every_region() {
        let mut p = PathPrefix::from_states(&[vec![1.0], vec![1.1]], 0.5);
        p.kill();
        assert_eq!(p.state(2), None);
        assert_eq!(p.lifetime(), Some(2));
        let region = Region { lower: vec![-1e9], upper: vec![1e9] };
        assert_eq!(first_exit_time(&p, &region), Some(1.0));
    }

    #[test]
    fn running_summaries_track_extremes() {
        let p = PathPrefix::from_states(&[vec![0.0], vec![-1.0], vec![2.0], vec![0.5]], 0.1);
        assert_eq!(p.running_min(), &[-1.0]);
        assert_eq!(p.running_max(), &[2.0]);
        assert_eq!(p.view().x, &[0.5]);
    }
}

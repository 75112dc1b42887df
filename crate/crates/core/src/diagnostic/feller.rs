//! Feller's test of explosions for `dY = beta(Y) dt + sqrt(alpha(Y)) dW` on
//! an interval `(l, r)`.
//!
//! With scale density `s'(y) = exp(-2 ∫_c^y beta/alpha)`, the test function
//! `v(x) = ∫_c^x s'(y) ∫_c^y 2 / (alpha s')(z) dz dy` is finite at an endpoint
//! exactly when the diffusion can reach it in finite time. Writing
//! `g(y) = s'(y) ∫_c^y 2 / (alpha s')` turns the nested integral into the
//! linear system `g' = 2/alpha - (2 beta/alpha) g`, `v' = g`, integrated
//! outward from `c` with an exponential midpoint rule. The rule is exact for
//! frozen coefficients and stays stable where `beta/alpha` is large, which
//! is where explosions happen.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{Endpoint, Truncation};
use crate::scalar::Real;

type ScalarFn<T> = dyn Fn(T) -> T + Send + Sync;

#[derive(Clone)]
pub struct FellerProblem<T> {
    pub lower: T,
    pub upper: T,
    pub drift: Arc<ScalarFn<T>>,
    pub diffusion: Arc<ScalarFn<T>>,
    pub reference: T,
    pub truncation: Truncation<T>,
    /// Local relative error per integration step.
    pub tolerance: T,
    /// Integration steps allowed per endpoint.
    pub max_steps: usize,
}

impl<T> std::fmt::Debug for FellerProblem<T>
where
    T: std::fmt::Debug,
{
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FellerProblem")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("reference", &self.reference)
            .field("truncation", &self.truncation)
            .finish_non_exhaustive()
    }
}

/// Built-in test problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FellerPreset {
    /// `beta = 0, alpha = 1` on the real line.
    Brownian,
    /// `beta = 0, alpha = 1` on `(0, inf)`.
    BrownianHalfLine,
    /// `beta = x^2, alpha = 1` on the real line.
    Quadratic,
    /// `beta = 1/x, alpha = 1` on `(0, inf)`.
    Bessel3,
}

impl FellerPreset {
    pub const ALL: [FellerPreset; 4] = [
        FellerPreset::Brownian,
        FellerPreset::BrownianHalfLine,
        FellerPreset::Quadratic,
        FellerPreset::Bessel3,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FellerPreset::Brownian => "brownian",
            FellerPreset::BrownianHalfLine => "brownian-half-line",
            FellerPreset::Quadratic => "quadratic",
            FellerPreset::Bessel3 => "bessel3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }

    pub fn problem<T: Real>(&self) -> FellerProblem<T> {
        match self {
            FellerPreset::Brownian => {
                FellerProblem::new(T::neg_infinity(), T::infinity(), |_| T::zero(), |_| T::one(), T::zero())
            }
            FellerPreset::BrownianHalfLine => {
                FellerProblem::new(T::zero(), T::infinity(), |_| T::zero(), |_| T::one(), T::one())
            }
            FellerPreset::Quadratic => {
                FellerProblem::new(T::neg_infinity(), T::infinity(), |x: T| x * x, |_| T::one(), T::zero())
            }
            FellerPreset::Bessel3 => {
                FellerProblem::new(T::zero(), T::infinity(), |x: T| x.recip(), |_| T::one(), T::one())
            }
        }
    }
}

impl<T: Real> FellerProblem<T> {
    pub fn new<B, A>(lower: T, upper: T, drift: B, diffusion: A, reference: T) -> Self
    where
        B: Fn(T) -> T + Send + Sync + 'static,
        A: Fn(T) -> T + Send + Sync + 'static,
    {
        Self {
            lower,
            upper,
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            reference,
            truncation: Truncation::default(),
            tolerance: T::lit(1e-8),
            max_steps: 2_000_000,
        }
    }

    /// The time-changed problem `(kappa beta, kappa alpha)`.
    pub fn scaled(&self, kappa: T) -> Self {
        let b = self.drift.clone();
        let a = self.diffusion.clone();
        Self {
            drift: Arc::new(move |x| kappa * b(x)),
            diffusion: Arc::new(move |x| kappa * a(x)),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EndpointBehaviour {
    Explodes,
    NoExplosion,
    Inconclusive,
}

impl EndpointBehaviour {
    pub fn as_str(&self) -> &'static str {
        match self {
            EndpointBehaviour::Explodes => "explodes",
            EndpointBehaviour::NoExplosion => "no-explosion",
            EndpointBehaviour::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointReport<T> {
    pub behaviour: EndpointBehaviour,
    /// `v` at the last truncation point reached.
    pub value: T,
    pub level: u32,
    pub steps: usize,
}

impl<T> EndpointReport<T> {
    /// The truncated values settled on a decision.
    pub fn converged(&self) -> bool {
        self.behaviour != EndpointBehaviour::Inconclusive
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FellerReport<T> {
    pub left: EndpointReport<T>,
    pub right: EndpointReport<T>,
}

impl<T> FellerReport<T> {
    pub fn explodes_at_left(&self) -> bool {
        self.left.behaviour == EndpointBehaviour::Explodes
    }

    pub fn explodes_at_right(&self) -> bool {
        self.right.behaviour == EndpointBehaviour::Explodes
    }

    pub fn converged(&self) -> bool {
        self.left.converged() && self.right.converged()
    }
}

pub fn feller_explosion_test<T: Real>(problem: &FellerProblem<T>) -> Result<FellerReport<T>> {
    let c = problem.reference;
    if !(problem.lower < c && c < problem.upper) {
        return Err(Error::Config(format!(
            "reference point {c} is not inside ({}, {})",
            problem.lower, problem.upper
        )));
    }
    Ok(FellerReport {
        left: integrate_side(problem, false)?,
        right: integrate_side(problem, true)?,
    })
}

#[inline]
fn phi1<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        T::one() - x * T::lit(0.5) + x * x / T::lit(6.0)
    } else {
        -(-x).exp_m1() / x
    }
}

#[inline]
fn phi2<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-3) {
        T::lit(0.5) - x / T::lit(6.0) + x * x / T::lit(24.0)
    } else {
        (x - T::one() + (-x).exp()) / (x * x)
    }
}

struct Side<'a, T> {
    p: &'a FellerProblem<T>,
    sign: T,
}

impl<T: Real> Side<'_, T> {
    /// One exponential-midpoint step of length `h` from progress `u`.
    /// Also returns the frozen decay rate `lambda`.
    fn step(&self, u: T, g: T, v: T, h: T) -> Result<(T, T, T)> {
        let y = self.p.reference + self.sign * (u + T::lit(0.5) * h);
        let alpha = (self.p.diffusion)(y);
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::Config(format!("diffusion coefficient must be positive, got {alpha} at {y}")));
        }
        let beta = (self.p.drift)(y);
        let lambda = T::lit(2.0) * self.sign * beta / alpha;
        let q = T::lit(2.0) / alpha;
        let x = lambda * h;
        let g_new = g * (-x).exp() + q * h * phi1(x);
        let v_new = v + g * h * phi1(x) + q * h * h * phi2(x);
        Ok((g_new, v_new, lambda))
    }
}

fn integrate_side<T: Real>(p: &FellerProblem<T>, positive: bool) -> Result<EndpointReport<T>> {
    let side = Side { p, sign: if positive { T::one() } else { -T::one() } };
    let e = if positive { p.upper } else { p.lower };
    let endpoint = if e.is_finite() { Endpoint::Finite(e) } else { Endpoint::Infinite { positive } };
    let c = p.reference;
    let tr = &p.truncation;
    let tol = p.tolerance;

    let (mut u, mut g, mut v) = (T::zero(), T::zero(), T::zero());
    let mut du = (endpoint.point(c, 1) - c).abs() * T::lit(1e-3);
    let mut steps = 0usize;
    let mut prev = T::zero();
    let mut settled = 0;
    let report = |behaviour, value, level, steps| EndpointReport { behaviour, value, level, steps };

    for k in 1..=tr.levels {
        let target = (endpoint.point(c, k) - c).abs();
        while u < target {
            let h = du.min(target - u);
            let (g1, v1, lambda) = side.step(u, g, v, h)?;
            let (gm, vm, _) = side.step(u, g, v, T::lit(0.5) * h)?;
            let (g2, v2, _) = side.step(u + T::lit(0.5) * h, gm, vm, T::lit(0.5) * h)?;
            steps += 1;
            if !(g2.is_finite() && v2.is_finite()) {
                return Ok(report(EndpointBehaviour::NoExplosion, T::infinity(), k, steps));
            }
            let floor = T::min_positive_value();
            // An error in g feeds into v over its relaxation length 1/|lambda|,
            // or over the whole remaining range where it does not relax.
            let memory = lambda.abs().recip().min(u + h);
            let err = (v1 - v2).abs().max((g1 - g2).abs() * memory) / (v2.abs() + floor);
            let min_h = T::lit(64.0) * T::epsilon() * (u + T::one());
            if err <= tol || h <= min_h {
                u = if h == target - u { target } else { u + h };
                g = g2;
                v = v2;
            }
            let factor = if err > T::zero() {
                (T::lit(0.9) * (tol / err).powf(T::lit(1.0 / 3.0))).max(T::lit(0.2)).min(T::lit(4.0))
            } else {
                T::lit(4.0)
            };
            du = (h * factor).max(min_h);
            if steps > p.max_steps {
                return Ok(report(EndpointBehaviour::Inconclusive, v, k, steps));
            }
        }
        if v > tr.divergence {
            return Ok(report(EndpointBehaviour::NoExplosion, v, k, steps));
        }
        if k > 1 && (v - prev).abs() <= tr.convergence * v.abs() {
            settled += 1;
        } else {
            settled = 0;
        }
        prev = v;
        if settled >= 2 {
            return Ok(report(EndpointBehaviour::Explodes, v, k, steps));
        }
    }
    Ok(report(EndpointBehaviour::Inconclusive, v, tr.levels, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_does_not_explode() {
        let r = feller_explosion_test(&FellerPreset::Brownian.problem::<f64>()).unwrap();
        assert_eq!(r.left.behaviour, EndpointBehaviour::NoExplosion);
        assert_eq!(r.right.behaviour, EndpointBehaviour::NoExplosion);
    }

    #[test]
    fn brownian_v_is_quadratic() {
        // v(x) = (x - c)^2 exactly; the first truncation point is c + 2.
        let mut p = FellerPreset::Brownian.problem::<f64>();
        p.truncation.levels = 1;
        let r = feller_explosion_test(&p).unwrap();
        assert!((r.right.value - 4.0).abs() < 1e-8, "{}", r.right.value);
    }

    #[test]
    fn quadratic_drift_explodes_to_plus_infinity_only() {
        let r = feller_explosion_test(&FellerPreset::Quadratic.problem::<f64>()).unwrap();
        assert!(r.explodes_at_right(), "{r:?}");
        assert!(!r.explodes_at_left());
        assert!(r.converged());
        // Independent nested quadrature gives v(+inf) = 2.089812.
        assert!((r.right.value - 2.089_812).abs() < 1e-3, "{}", r.right.value);
    }

    #[test]
    fn bessel3_reaches_neither_end() {
        let r = feller_explosion_test(&FellerPreset::Bessel3.problem::<f64>()).unwrap();
        assert_eq!(r.left.behaviour, EndpointBehaviour::NoExplosion);
        assert_eq!(r.right.behaviour, EndpointBehaviour::NoExplosion);
    }

    #[test]
    fn half_line_brownian_hits_zero() {
        let r = feller_explosion_test(&FellerPreset::BrownianHalfLine.problem::<f64>()).unwrap();
        assert!(r.explodes_at_left());
        assert!((r.left.value - 1.0).abs() < 1e-3);
        assert!(!r.explodes_at_right());
    }

    #[test]
    fn non_positive_diffusion_is_rejected() {
        let p = FellerProblem::new(-1.0, 1.0, |_| 0.0, |x: f64| x, 0.5);
        assert!(feller_explosion_test(&p).is_err());
    }
}

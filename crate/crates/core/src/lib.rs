//! Monte Carlo classification of stochastic exponentials.
//!
//! Given coefficients `(b, a, mu)` on an open domain, the stochastic
//! exponential `Z = exp(M - <M>/2)` with `M = ∫ mu' dX^c` is a true
//! martingale up to `t` exactly when the quadratic variation `∫ mu' a mu ds`
//! stays finite up to `t` under the measure `Q` for which the coordinate
//! process has drift `b_hat = b + a mu`. This crate simulates both measures,
//! estimates that probability and `E^P[Z_t]`, and turns the estimates into a
//! [`Classification`].
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix `f64`.

// `!(x > 0)` style comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostic;
pub mod engine;
pub mod error;
pub mod exponential;
pub mod path;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod scenarios;

pub use diagnostic::{Classification, UiStatus};
pub use error::{Error, Result};
pub use rng::RngStream;
pub use scalar::Real;

pub type Domain64 = path::Domain<f64>;
pub type PathPrefix64 = path::PathPrefix<f64>;
pub type CoefficientSet64 = path::CoefficientSet<f64>;
pub type CoefficientSample64 = path::CoefficientSample<f64>;
pub type Model64 = engine::Model<f64>;
pub type EngineSettings64 = engine::EngineSettings<f64>;
pub type TrajectoryRecord64 = engine::TrajectoryRecord<f64>;
pub type Scenario64 = scenarios::Scenario<f64>;
pub type EstimateWithCI64 = diagnostic::EstimateWithCI<f64>;
pub type Verdict64 = diagnostic::Verdict<f64>;
pub type FellerProblem64 = diagnostic::FellerProblem<f64>;

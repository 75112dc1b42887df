//! Running stochastic exponential `Z = exp(M - <M>/2)` of `M = ∫ mu' dX^c`.

use crate::engine::TrajectoryRecord;
use crate::path::CoefficientSample;
use crate::scalar::Real;

/// Why an accumulator stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FreezeCause {
    /// The quadratic variation crossed the cap; `Z` is zero from then on.
    QvExplosion,
    /// The path left the domain with finite quadratic variation; `Z` keeps
    /// its last value.
    Cemetery,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentialAccumulator<T> {
    m: T,
    qv: T,
    frozen: Option<FreezeCause>,
    frozen_z: T,
}

impl<T: Real> Default for ExponentialAccumulator<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> ExponentialAccumulator<T> {
    pub fn new() -> Self {
        Self {
            m: T::zero(),
            qv: T::zero(),
            frozen: None,
            frozen_z: T::one(),
        }
    }

    pub fn m(&self) -> T {
        self.m
    }

    /// `<M>` accumulated so far (stopped at the freeze).
    pub fn qv(&self) -> T {
        self.qv
    }

    pub fn log_z(&self) -> T {
        self.m - T::lit(0.5) * self.qv
    }

    pub fn frozen(&self) -> Option<FreezeCause> {
        self.frozen
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen.is_some()
    }

    /// Adds one step: `M += mu'(dx - b h)`, `<M> += mu' a mu h`.
    /// A frozen accumulator ignores further increments.
    #[inline]
    pub fn accumulate_increment(&mut self, sample: &CoefficientSample<T>, dx: &[T], h: T) {
        if self.frozen.is_some() {
            return;
        }
        let dm = sample
            .mu
            .iter()
            .zip(dx.iter().zip(&sample.b))
            .fold(T::zero(), |s, (&mu, (&dxi, &bi))| s + mu * (dxi - bi * h));
        self.m = self.m + dm;
        self.qv = self.qv + sample.qv_rate * h;
    }

    /// Adds quadratic variation that has no matching martingale increment,
    /// such as the tail of a boundary approach after the state is frozen.
    pub fn add_qv_tail(&mut self, tail: T) {
        self.qv = self.qv + tail;
    }

    pub fn freeze(&mut self, cause: FreezeCause) {
        if self.frozen.is_none() {
            self.frozen_z = match cause {
                FreezeCause::QvExplosion => T::zero(),
                FreezeCause::Cemetery => self.live_z(),
            };
            self.frozen = Some(cause);
        }
    }

    fn live_z(&self) -> T {
        // exp underflows to zero and overflows to inf; both are the honest
        // floating-point value of Z.
        self.log_z().exp()
    }

    pub fn z_value(&self) -> T {
        match self.frozen {
            Some(_) => self.frozen_z,
            None => self.live_z(),
        }
    }
}

/// `<M>_{t ∧ theta}` along a simulated path: read from the stored history
/// when the path was kept, otherwise from the last observation at or before
/// `t`. Returns `None` if neither covers `t`.
pub fn pathwise_qv<T: Real>(record: &TrajectoryRecord<T>, t: T) -> Option<T> {
    if let Some(hist) = &record.qv_history {
        let i = (t / record.step).round().to_usize()?;
        return Some(hist.get(i).copied().unwrap_or(record.final_qv));
    }
    if t >= record.end_time {
        return Some(record.final_qv);
    }
    record
        .observations
        .iter()
        .rev()
        .find(|o| o.t <= t + record.step * T::lit(1e-6))
        .map(|o| o.qv)
}

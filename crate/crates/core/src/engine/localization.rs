//! Bookkeeping for the localizing sequence
//! `theta_n = min(tau~_n, rho_{E_n}, n)` along one simulated path.

use crate::path::{Domain, Region};
use crate::scalar::Real;

/// Which of the three clocks fired first at a level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaCause {
    QvExplosion,
    DomainExit,
    TimeCap,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelRecord<T> {
    pub level: u32,
    pub rho: Option<T>,
    pub tau: Option<T>,
    pub theta: T,
    pub cause: ThetaCause,
}

/// The doubling schedule `1, 2, 4, ...` capped at `max_level`, with the
/// closed sets `E_n` precomputed.
#[derive(Clone, Debug)]
pub struct LevelSchedule<T> {
    levels: Vec<u32>,
    thresholds: Vec<T>,
    regions: Vec<Region<T>>,
}

impl<T: Real> LevelSchedule<T> {
    pub fn new(domain: &Domain<T>, max_level: u32) -> Self {
        let mut levels = Vec::new();
        let mut n = 1u32;
        while n < max_level {
            levels.push(n);
            n = n.saturating_mul(2);
        }
        levels.push(max_level.max(1));
        let regions = levels.iter().map(|&n| domain.exhaustion(n)).collect();
        let thresholds = levels.iter().map(|&n| T::lit(f64::from(n))).collect();
        Self {
            levels,
            thresholds,
            regions,
        }
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn region(&self, i: usize) -> &Region<T> {
        &self.regions[i]
    }

    pub fn top(&self) -> u32 {
        *self.levels.last().expect("non-empty schedule")
    }
}

/// Localization state of one path. Levels escalate when their `theta_n`
/// fires; the top level does not stop the simulation, it is only recorded.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationState<T> {
    current: usize,
    completed: Vec<LevelRecord<T>>,
    rho: Option<T>,
    tau: Option<T>,
    /// Set when a single step added more than the jump threshold to the
    /// quadratic variation while the path was inside the current `E_n`.
    pub large_jump: bool,
}

impl<T: Real> Default for LocalizationState<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> LocalizationState<T> {
    pub fn new() -> Self {
        Self {
            current: 0,
            completed: Vec::new(),
            rho: None,
            tau: None,
            large_jump: false,
        }
    }

    pub fn completed(&self) -> &[LevelRecord<T>] {
        &self.completed
    }

    /// Index into the schedule of the level still running, if any.
    pub fn current_index(&self) -> usize {
        self.current
    }

    /// `theta_n` of the highest completed level.
    pub fn last_theta(&self) -> Option<T> {
        self.completed.last().map(|r| r.theta)
    }

    /// Records one step ending at time `t`. `x_prev` is the state before the
    /// step, `x` the state after it (`None` at the cemetery), `qv` the
    /// unstopped quadratic variation after the step and `increment` what the
    /// step added to it.
    #[inline]
    #[allow(clippy::too_many_arguments)]
    pub fn observe(
        &mut self,
        schedule: &LevelSchedule<T>,
        t: T,
        x_prev: &[T],
        x: Option<&[T]>,
        qv: T,
        increment: T,
        jump_threshold: T,
    ) {
        if self.current >= schedule.levels.len() {
            return;
        }
        if increment > jump_threshold && schedule.region(self.current).contains(x_prev) {
            self.large_jump = true;
        }
        // Both clocks are unset between calls, so the running level only
        // fires if one of its three conditions holds now.
        let nn = schedule.thresholds[self.current];
        if let Some(x) = x {
            if qv <= nn && t < nn && schedule.region(self.current).contains(x) {
                return;
            }
        }
        self.escalate(schedule, t, x, qv);
    }

    #[inline(never)]
    fn escalate(&mut self, schedule: &LevelSchedule<T>, t: T, x: Option<&[T]>, qv: T) {
        while self.current < schedule.levels.len() {
            let n = schedule.levels[self.current];
            let nn = schedule.thresholds[self.current];
            if self.rho.is_none() && x.is_none_or(|x| !schedule.region(self.current).contains(x)) {
                self.rho = Some(t);
            }
            if self.tau.is_none() && qv > nn {
                self.tau = Some(t);
            }
            let capped = t >= nn;
            if self.rho.is_none() && self.tau.is_none() && !capped {
                break;
            }
            // Ties go to the quadratic variation.
            let cause = match (self.tau, self.rho) {
                (Some(_), _) => ThetaCause::QvExplosion,
                (None, Some(_)) => ThetaCause::DomainExit,
                (None, None) => ThetaCause::TimeCap,
            };
            let theta = [self.tau, self.rho]
                .into_iter()
                .flatten()
                .fold(t.min(nn), |m, s| m.min(s));
            self.completed.push(LevelRecord {
                level: n,
                rho: self.rho,
                tau: self.tau,
                theta,
                cause,
            });
            self.current += 1;
            self.rho = None;
            self.tau = None;
        }
    }
}

/// Localization summary exposed to diagnostics.
pub fn detect_localization<T: Real>(state: &LocalizationState<T>) -> Option<LevelRecord<T>> {
    state.completed.last().copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{make_domain, Interval};

    #[test]
    fn schedule_doubles_to_cap() {
        let d = make_domain(&[Interval::real_line()], &[0.0]).unwrap();
        assert_eq!(LevelSchedule::new(&d, 64).levels(), &[1, 2, 4, 8, 16, 32, 64]);
        assert_eq!(LevelSchedule::new(&d, 5).levels(), &[1, 2, 4, 5]);
    }

    #[test]
    fn time_cap_fires_in_order() {
        let d = make_domain(&[Interval::real_line()], &[0.0]).unwrap();
        let s = LevelSchedule::new(&d, 4);
        let mut st = LocalizationState::new();
        for i in 1..=50 {
            let t = i as f64 * 0.1;
            st.observe(&s, t, &[0.0], Some(&[0.0]), 0.0, 0.0, 1e3);
        }
        let thetas: Vec<f64> = st.completed().iter().map(|r| r.theta).collect();
        assert_eq!(st.completed().len(), 3);
        assert!((thetas[0] - 1.0).abs() < 1e-9 && (thetas[2] - 4.0).abs() < 1e-9);
        assert!(st.completed().iter().all(|r| r.cause == ThetaCause::TimeCap));
    }

    #[test]
    fn explosion_cascades_through_levels() {
        let d = make_domain(&[Interval::real_line()], &[0.0]).unwrap();
        let s = LevelSchedule::new(&d, 64);
        let mut st = LocalizationState::new();
        st.observe(&s, 0.1, &[0.0], Some(&[0.0]), 100.0, 100.0, 1e3);
        let done = st.completed();
        assert_eq!(done.len(), 7);
        assert!(done.iter().all(|r| r.cause == ThetaCause::QvExplosion && r.theta == 0.1));
        assert!(!st.large_jump);
        let last = detect_localization(&st).unwrap();
        assert!(last.tau.unwrap() <= last.rho.unwrap_or(f64::INFINITY));
    }

    #[test]
    fn cemetery_counts_as_exit() {
        let d = make_domain(&[Interval::positive_half_line()], &[1.0]).unwrap();
        let s = LevelSchedule::new(&d, 2);
        let mut st = LocalizationState::new();
        st.observe(&s, 0.3, &[1.0], None, 0.5, 2e3, 1e3);
        assert!(st.large_jump);
        assert_eq!(st.completed()[0].cause, ThetaCause::DomainExit);
        assert_eq!(st.completed().len(), 2);
    }
}

//! Adaptive Gauss–Kronrod quadrature and improper integrals evaluated along a
//! geometric truncation schedule.

use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and |Kronrod - Gauss| on one panel.
pub fn gauss_kronrod_15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let centre = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let pair = f(centre - dx) + f(centre + dx);
        kronrod = kronrod + T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    (kronrod * half_len, ((kronrod - gauss) * half_len).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub converged: bool,
}

/// Globally adaptive bisection on G7–K15 panels.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
    max_panels: usize,
) -> QuadResult<T> {
    let (v0, e0) = gauss_kronrod_15(&mut f, a, b);
    let mut panels = vec![(a, b, v0, e0)];
    let mut value = v0;
    let mut error = e0;
    while error > abs_tol.max(rel_tol * value.abs()) && panels.len() < max_panels {
        if !value.is_finite() {
            break;
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, v, e) = panels.swap_remove(worst);
        let mid = T::lit(0.5) * (lo + hi);
        let (vl, el) = gauss_kronrod_15(&mut f, lo, mid);
        let (vr, er) = gauss_kronrod_15(&mut f, mid, hi);
        value = value - v + vl + vr;
        error = error - e + el + er;
        panels.push((lo, mid, vl, el));
        panels.push((mid, hi, vr, er));
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let value = panels.iter().fold(T::zero(), |s, p| s + p.2);
    let error = panels.iter().fold(T::zero(), |s, p| s + p.3);
    QuadResult {
        value,
        error,
        converged: value.is_finite() && error <= abs_tol.max(rel_tol * value.abs()),
    }
}

/// Geometric truncation schedule used to approach a singular or infinite
/// endpoint: `levels` truncation points, a relative-change threshold for
/// declaring convergence and an absolute threshold for declaring divergence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation<T> {
    pub levels: u32,
    pub convergence: T,
    pub divergence: T,
}

impl<T: Real> Default for Truncation<T> {
    fn default() -> Self {
        Self {
            levels: 40,
            convergence: T::lit(1e-4),
            divergence: T::lit(1e6),
        }
    }
}

/// Where the truncation points go.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Endpoint<T> {
    /// Finite endpoint `e`, approached at distances `|e - start| 2^-k`.
    Finite(T),
    /// `+inf` (`true`) or `-inf` (`false`), approached at `start ± 2^k`.
    Infinite { positive: bool },
}

impl<T: Real> Endpoint<T> {
    pub fn point(&self, start: T, k: u32) -> T {
        let two_k = T::lit(2.0).powi(k as i32);
        match *self {
            Endpoint::Finite(e) => e - (e - start) / two_k,
            Endpoint::Infinite { positive: true } => start + two_k,
            Endpoint::Infinite { positive: false } => start - two_k,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Improper<T> {
    /// Partial integrals settled; `value` is the last one.
    Converged { value: T, level: u32 },
    /// Partial integrals passed the divergence threshold (or overflowed).
    Diverged { value: T, level: u32 },
    /// Neither criterion met within the schedule.
    Inconclusive { value: T },
}

impl<T: Real> Improper<T> {
    pub fn value(&self) -> T {
        match *self {
            Improper::Converged { value, .. }
            | Improper::Diverged { value, .. }
            | Improper::Inconclusive { value } => value,
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, Improper::Converged { .. })
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, Improper::Diverged { .. })
    }
}

/// Integrates `f` from `start` towards `endpoint`, one truncation shell at a
/// time. Convergence requires the last two shells to each change the running
/// integral by less than the relative threshold.
pub fn integrate_truncated<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    start: T,
    endpoint: Endpoint<T>,
    schedule: &Truncation<T>,
) -> Improper<T> {
    let mut total = T::zero();
    let mut prev = start;
    let mut settled = 0u32;
    let tiny = T::min_positive_value();
    for k in 1..=schedule.levels {
        let next = endpoint.point(start, k);
        let shell = integrate(&mut f, prev, next, tiny, T::lit(1e-10), 200).value;
        prev = next;
        if !shell.is_finite() {
            return Improper::Diverged { value: T::infinity(), level: k };
        }
        total = total + shell;
        if total.abs() > schedule.divergence {
            return Improper::Diverged { value: total, level: k };
        }
        if shell.abs() <= schedule.convergence * total.abs() {
            settled += 1;
        } else {
            settled = 0;
        }
        if settled >= 2 {
            return Improper::Converged { value: total, level: k };
        }
    }
    Improper::Inconclusive { value: total }
}

use crate::scalar::Real;

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Discretization and censoring levels an estimate was produced with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Censoring<T> {
    pub qv_cap: T,
    pub max_level: u32,
    pub step: T,
}

/// A point estimate with its 95% interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateWithCI<T> {
    pub point: T,
    pub lo: T,
    pub hi: T,
    /// Standard error of the point estimate.
    pub se: T,
    pub n: usize,
    pub censoring: Censoring<T>,
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // Pin the exact ends so that k = 0 and k = n include 0 and 1.
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo.min(p), hi.max(p))
}

impl<T: Real> EstimateWithCI<T> {
    /// Proportion `k / n` with a Wilson interval.
    pub fn proportion(k: usize, n: usize, censoring: Censoring<T>) -> Self {
        let p = if n == 0 { 0.0 } else { k as f64 / n as f64 };
        let (lo, hi) = wilson_interval(k, n);
        let se = if n == 0 { 0.0 } else { (p * (1.0 - p) / n as f64).sqrt() };
        Self {
            point: T::lit(p),
            lo: T::lit(lo),
            hi: T::lit(hi),
            se: T::lit(se),
            n,
            censoring,
        }
    }

    /// Sample mean of non-negative values with a normal interval.
    pub fn mean(stats: &MeanStats, censoring: Censoring<T>) -> Self {
        let (lo, hi) = mean_interval(stats);
        Self {
            point: T::lit(stats.mean),
            lo: T::lit(lo),
            hi: T::lit(hi),
            se: T::lit(stats.se),
            n: stats.n,
            censoring,
        }
    }
}

/// Moments of a sample, accumulated in `f64` in index order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
    /// `m4 / m2^2`; 3 for a normal sample, 0 if the sample is constant.
    pub kurtosis: f64,
    pub max: f64,
}

impl MeanStats {
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len();
        if n == 0 {
            return Self { n, mean: f64::NAN, variance: f64::NAN, se: f64::NAN, kurtosis: 0.0, max: f64::NAN };
        }
        let nf = n as f64;
        let mean = v.iter().sum::<f64>() / nf;
        let (mut m2, mut m4) = (0.0, 0.0);
        for x in &v {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m4 += d2 * d2;
        }
        let variance = if n > 1 { m2 / (nf - 1.0) } else { 0.0 };
        let kurtosis = if m2 > 0.0 { nf * m4 / (m2 * m2) } else { 0.0 };
        Self {
            n,
            mean,
            variance,
            se: (variance / nf).sqrt(),
            kurtosis,
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Normal 95% interval, clipped at zero from below.
pub fn mean_interval(s: &MeanStats) -> (f64, f64) {
    ((s.mean - Z95 * s.se).max(0.0).min(s.mean), s.mean + Z95 * s.se)
}

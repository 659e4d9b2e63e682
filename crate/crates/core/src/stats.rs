//! Empirical distributions, Kolmogorov-Smirnov distances, discrepancy,
//! power-law fits and rotation numbers.

use crate::error::{LabError, Result};

/// Empirical CDF of a finite sample. `eval` is right-continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(LabError::Validation("empty sample".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(LabError::Validation("NaN in sample".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }
}

/// Two-sample KS distance, the sup of |F1 - F2| over the merged jump points.
pub fn ks_distance(e1: &Ecdf, e2: &Ecdf) -> f64 {
    let (a, b) = (&e1.sorted, &e2.sorted);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// KS distance between an ECDF and a reference CDF tabulated on a grid of
/// `(l, F(l))` pairs. The sup is taken over the grid points.
pub fn ks_distance_grid(e: &Ecdf, grid: &[(f64, f64)]) -> f64 {
    grid.iter().map(|&(l, f)| (e.eval(l) - f).abs()).fold(0.0, f64::max)
}

/// One-sample KS distance against a continuous CDF.
pub fn ks_distance_cdf<F: Fn(f64) -> f64>(e: &Ecdf, cdf: F) -> f64 {
    let n = e.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in e.sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Star discrepancy of points in [0, 1).
pub fn discrepancy_1d(samples: &[f64]) -> Result<f64> {
    if let Some(x) = samples.iter().find(|x| !(0.0..1.0).contains(*x)) {
        return Err(LabError::Validation(format!("point {x} outside [0, 1)")));
    }
    let e = Ecdf::new(samples)?;
    let n = e.len() as f64;
    Ok(e.sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max))
}

/// Histogram with `bins` equal bins on `[lo, hi)`; values outside are dropped.
pub fn histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64, u64)> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in samples {
        if x >= lo && x < hi {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + k as f64 * width, lo + (k + 1) as f64 * width, c))
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean and its standard error for independent samples.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

/// Standard error of the mean of a correlated series by non-overlapping
/// batch means.
pub fn batch_means_se(xs: &[f64], batches: usize) -> f64 {
    let len = xs.len() / batches;
    let means: Vec<f64> = (0..batches).map(|k| mean(&xs[k * len..(k + 1) * len])).collect();
    mean_se(&means).1
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the residuals.
    pub residual: f64,
    /// Index range `[lo, hi)` of the data used.
    pub window: (usize, usize),
}

/// Ordinary least squares line through `(xs, ys)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(LabError::Validation("least squares needs two or more matched points".into()));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(LabError::Numeric("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok((slope, intercept, (ss / n as f64).sqrt()))
}

/// Log-log slope of `series[k-1]` against `k` on the trailing half of the
/// log range, i.e. `k` in `[sqrt(N), N]`.
pub fn loglog_exponent(series: &[f64]) -> Result<FitResult> {
    loglog_exponent_window(series, 0.5)
}

/// As [`loglog_exponent`] with the window `k >= N^(1 - frac)`. Points are
/// taken on a geometric grid so every decade carries the same weight.
pub fn loglog_exponent_window(series: &[f64], frac: f64) -> Result<FitResult> {
    let n = series.len();
    if n < 16 {
        return Err(LabError::Validation(format!("series of length {n} is too short for a fit")));
    }
    let lo = ((n as f64).powf(1.0 - frac).floor() as usize).max(1);
    let (llo, lhi) = ((lo as f64).ln(), (n as f64).ln());
    let points = 256;
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    let mut last = 0;
    for i in 0..points {
        let k = (llo + (lhi - llo) * i as f64 / (points - 1) as f64).exp().round() as usize;
        let k = k.clamp(lo, n);
        if k == last || series[k - 1] <= 0.0 {
            continue;
        }
        last = k;
        xs.push((k as f64).ln());
        ys.push(series[k - 1].ln());
    }
    let (slope, intercept, residual) = least_squares(&xs, &ys)?;
    Ok(FitResult { slope, intercept, residual, window: (lo - 1, n) })
}

/// Continued fraction convergents p/q of `x` with `|x - p/q| > tol` stopping.
pub fn convergents(x: f64, tol: f64, max_terms: usize) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut y = x;
    for _ in 0..max_terms {
        let a = y.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let (p, q) = (a * p1 + p0, a * q1 + q0);
        out.push((p, q));
        if (x - p as f64 / q as f64).abs() <= tol {
            break;
        }
        let frac = y - a as f64;
        if frac <= 0.0 {
            break;
        }
        y = 1.0 / frac;
        (p0, q0, p1, q1) = (p1, q1, p, q);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationNumber {
    pub value: f64,
    /// Convergents resolved at the precision 1/N of the estimate.
    pub convergents: Vec<(i64, i64)>,
}

/// `(lift_N - lift_0) / N` for a lifted circle-map orbit (circle length 1).
pub fn rotation_number(lifts: &[f64]) -> Result<RotationNumber> {
    if lifts.len() < 2 {
        return Err(LabError::Validation("rotation number needs at least two points".into()));
    }
    let n = (lifts.len() - 1) as f64;
    let value = (lifts[lifts.len() - 1] - lifts[0]) / n;
    Ok(RotationNumber { value, convergents: convergents(value, 1.0 / n, 64) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_is_right_continuous() {
        let e = Ecdf::new(&[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(2.0), 0.75);
        assert_eq!(e.eval(3.0), 1.0);
    }

    #[test]
    fn ks_extremes() {
        let a = Ecdf::new(&[0.1, 0.2, 0.3]).unwrap();
        let b = Ecdf::new(&[0.5, 0.6]).unwrap();
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert_eq!(ks_distance(&a, &b), 1.0);
    }

    #[test]
    fn equally_spaced_discrepancy() {
        let n = 50;
        let pts: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
        assert!((discrepancy_1d(&pts).unwrap() - 1.0 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn planted_exponents() {
        for p in [0.3, 0.5, 0.8] {
            let s: Vec<f64> = (1..=100_000).map(|k| 2.0 * (k as f64).powf(p)).collect();
            let fit = loglog_exponent(&s).unwrap();
            assert!((fit.slope - p).abs() < 1e-3, "{p} {fit:?}");
        }
    }

    #[test]
    fn rigid_rotation() {
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let n = 1000;
        let lifts: Vec<f64> = (0..=n).map(|k| 0.3 + k as f64 * alpha).collect();
        let r = rotation_number(&lifts).unwrap();
        assert!((r.value - alpha).abs() < 1.0 / n as f64);
        // golden mean convergents are ratios of Fibonacci numbers
        assert!(r.convergents.contains(&(13, 21)));
    }
}

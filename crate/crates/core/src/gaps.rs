//! Gaps between the sorted fractional parts of `sqrt(n)`, `n <= r`, and the
//! triangle functional `f` on affine lattices that describes their limit.

use rand::Rng;

use crate::error::{LabError, Result};
use crate::homogeneous::{compose, geodesic, haar_sample, horocycle, AffineLatticeClass, Mat2, Vec2};
use crate::stats::{median, Ecdf};

pub const DEFAULT_CAP: f64 = 1e6;

/// Sorted fractional parts of `sqrt(1), ..., sqrt(floor r)` followed by the
/// sentinel 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSequence {
    pub r: f64,
    pub n: u64,
    pub t: Vec<f64>,
}

fn frac_sqrt(k: u64) -> f64 {
    let m = k.isqrt();
    if m * m == k {
        0.0
    } else {
        (k as f64).sqrt() - m as f64
    }
}

pub fn frac_sqrt_gaps(r: f64) -> Result<GapSequence> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(LabError::Validation(format!("need r >= 1, got {r}")));
    }
    let n = r.floor() as u64;
    let mut t: Vec<f64> = (1..=n).map(frac_sqrt).collect();
    t.sort_by(f64::total_cmp);
    t.push(1.0);
    Ok(GapSequence { r, n, t })
}

impl GapSequence {
    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.t.windows(2).map(|w| w[1] - w[0])
    }

    /// Gaps multiplied by `floor r`.
    pub fn normalized_gaps(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.gaps().map(|g| n * g).collect()
    }

    /// `floor(r) (t_{k+1} - t_k)` for the largest `k` with `t_k <= s`.
    pub fn l_r(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(LabError::Validation(format!("s={s} outside [0, 1]")));
        }
        let k = (self.t.partition_point(|&x| x <= s) - 1).min(self.t.len() - 2);
        Ok(self.n as f64 * (self.t[k + 1] - self.t[k]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleStatus {
    Finite,
    /// A lattice point sits on `{0} x (0, 1)`.
    Zero,
    /// One side of the strip is empty up to `|x| <= cap`.
    Overflow,
}

impl TriangleStatus {
    pub fn name(&self) -> &'static str {
        match self {
            TriangleStatus::Finite => "finite",
            TriangleStatus::Zero => "zero",
            TriangleStatus::Overflow => "overflow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleFit {
    pub b_minus: f64,
    pub b_plus: f64,
    pub area: f64,
    pub status: TriangleStatus,
}

impl TriangleFit {
    /// The area with the zero case as 0; `None` on overflow.
    pub fn value(&self) -> Option<f64> {
        match self.status {
            TriangleStatus::Finite => Some(self.area),
            TriangleStatus::Zero => Some(0.0),
            TriangleStatus::Overflow => None,
        }
    }
}

/// Largest triangle with apex at the origin and base on `y = 1` whose
/// interior holds `{0} x (0, 1)` and no point of the affine lattice.
///
/// `b_plus = min x/y` over points with `x > 0, 0 < y < 1`, `b_minus = max x/y`
/// over `x < 0`, area `(b_plus - b_minus) / 2`.
pub fn f_triangle(l: &AffineLatticeClass, cap: f64) -> TriangleFit {
    let red = l.reduce();
    let tol = 1e-12 * red.rep.h.max_abs().max(1.0);
    let mut x_max = 4.0f64;
    let mut final_pass = false;
    loop {
        let (mut bp, mut bm) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut zero = false;
        red.for_each_point_in_box((-x_max, x_max), (0.0, 1.0), |p| {
            if !(p.y > 0.0 && p.y < 1.0) {
                return;
            }
            if p.x.abs() <= tol {
                zero = true;
            } else if p.x > 0.0 {
                bp = bp.min(p.x / p.y);
            } else {
                bm = bm.max(p.x / p.y);
            }
        });
        if zero {
            return TriangleFit { b_minus: 0.0, b_plus: 0.0, area: 0.0, status: TriangleStatus::Zero };
        }
        if bp.is_finite() && bm.is_finite() {
            let need = bp.max(-bm);
            // every point with x/y below a candidate has |x| < candidate
            if need <= x_max || final_pass {
                return TriangleFit { b_minus: bm, b_plus: bp, area: 0.5 * (bp - bm), status: TriangleStatus::Finite };
            }
            x_max = need;
            final_pass = true;
            continue;
        }
        if x_max >= cap {
            return TriangleFit { b_minus: bm, b_plus: bp, area: f64::INFINITY, status: TriangleStatus::Overflow };
        }
        x_max = (4.0 * x_max).min(cap);
    }
}

/// `a_{log sqrt r} u(-2s, -s^2, s) Z^2`.
pub fn l_prime_class(r: f64, s: f64) -> AffineLatticeClass {
    let q = r.sqrt();
    AffineLatticeClass::from_parts(Mat2::new(q, -2.0 * s * q, 0.0, 1.0 / q), Vec2::new(-s * s * q, s / q))
}

/// The curve point `u(-2s, -s^2, s)` as a class, before any geodesic push.
pub fn gap_curve_class(s: f64) -> AffineLatticeClass {
    AffineLatticeClass::new(horocycle(-2.0 * s, -s * s, s))
}

pub fn l_prime(r: f64, s: f64, cap: f64) -> Result<TriangleFit> {
    if !(r >= 1.0) {
        return Err(LabError::Validation(format!("need r >= 1, got {r}")));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(LabError::Validation(format!("s={s} outside (0, 1]")));
    }
    Ok(f_triangle(&l_prime_class(r, s), cap))
}

/// `(lower, L_r(s), upper)` of the bracket by the neighbouring squares.
pub fn sandwich_bounds(r: f64, s: f64) -> Result<(f64, f64, f64)> {
    let n = r.floor();
    let m = r.sqrt().floor();
    let mid = frac_sqrt_gaps(r)?.l_r(s)?;
    let lo = n / ((m + 1.0) * (m + 1.0)) * frac_sqrt_gaps((m + 1.0) * (m + 1.0))?.l_r(s)?;
    let hi = n / (m * m) * frac_sqrt_gaps(m * m)?.l_r(s)?;
    Ok((lo, mid, hi))
}

pub fn sandwich_check(r: f64, s: f64) -> Result<bool> {
    let (lo, mid, hi) = sandwich_bounds(r, s)?;
    let slack = 1e-12 * hi.abs().max(1.0);
    Ok(lo <= mid + slack && mid <= hi + slack)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxStats {
    pub n: u64,
    pub samples: usize,
    /// Median of `|L / L' - 1|` over samples with finite nonzero `L'`.
    pub median_deviation: f64,
    /// Fraction of all samples with `1/(n-1) <= s <= 1 - 1/(n-1)` and
    /// `(2A+1)/(2A+2) L' <= L <= (2A+1)/(2A) L'`.
    pub in_band_fraction: f64,
    /// `1 - ((A+2)(A-1)+2)/(n-1)`.
    pub band_bound: f64,
    pub excluded: usize,
}

/// Compares `L_{n^2}` and `L'_{n^2}` at the given `s`.
pub fn approx_ratio_stats(n: u64, a_band: u64, s_samples: &[f64]) -> Result<ApproxStats> {
    if n < 2 || a_band < 2 {
        return Err(LabError::Validation("need n >= 2 and A >= 2".into()));
    }
    let r = (n * n) as f64;
    let seq = frac_sqrt_gaps(r)?;
    let af = a_band as f64;
    let (lo_c, hi_c) = ((2.0 * af + 1.0) / (2.0 * af + 2.0), (2.0 * af + 1.0) / (2.0 * af));
    let edge = 1.0 / (n as f64 - 1.0);
    let mut devs = Vec::with_capacity(s_samples.len());
    let mut in_band = 0usize;
    let mut excluded = 0usize;
    for &s in s_samples {
        let lv = seq.l_r(s)?;
        let lp = match l_prime(r, s, DEFAULT_CAP)?.value() {
            Some(v) if v > 0.0 => v,
            _ => {
                excluded += 1;
                continue;
            }
        };
        devs.push((lv / lp - 1.0).abs());
        if s >= edge && s <= 1.0 - edge && lo_c * lp <= lv && lv <= hi_c * lp {
            in_band += 1;
        }
    }
    if devs.is_empty() {
        return Err(LabError::Numeric("no usable samples".into()));
    }
    Ok(ApproxStats {
        n,
        samples: s_samples.len(),
        median_deviation: median(&devs),
        in_band_fraction: in_band as f64 / s_samples.len() as f64,
        band_bound: 1.0 - ((af + 2.0) * (af - 1.0) + 2.0) / (n as f64 - 1.0),
        excluded,
    })
}

/// `f` of `n` Haar-random affine lattices; overflow gives `+inf`.
pub fn f_haar_samples<R: Rng + ?Sized>(n: usize, cap: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| f_triangle(&haar_sample(rng), cap).value().unwrap_or(f64::INFINITY)).collect()
}

/// Fraction of samples `<= l` and its standard error.
pub fn cdf_estimate(samples: &[f64], l: f64) -> (f64, f64) {
    let n = samples.len() as f64;
    let p = samples.iter().filter(|&&v| v <= l).count() as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

/// Monte-Carlo estimate of `P(f <= l)` under Haar measure, with its
/// standard error.
pub fn limiting_cdf_mc<R: Rng + ?Sized>(l: f64, n_samples: usize, rng: &mut R) -> Result<(f64, f64)> {
    if !(l >= 0.0) {
        return Err(LabError::Validation(format!("need l >= 0, got {l}")));
    }
    if n_samples == 0 {
        return Err(LabError::Validation("need at least one sample".into()));
    }
    Ok(cdf_estimate(&f_haar_samples(n_samples, DEFAULT_CAP, rng), l))
}

/// `f(a_{log sqrt(c q^k)} u(-2s, -s^2, s) Z^2)` for `k = 1..=n`.
///
/// The geodesic is applied one factor `a_{log sqrt q}` at a time with a
/// reduction after each step, so `q^n` may exceed the floating range. Past
/// about `t = 18` this is a pseudo-orbit: rounding errors are expanded by the
/// flow and the point no longer tracks the exact orbit of `s`.
pub fn geometric_values(c: f64, q: f64, n: usize, s: f64, cap: f64) -> Result<Vec<f64>> {
    if !(c >= 1.0 && q > 1.0) {
        return Err(LabError::Validation(format!("need c >= 1 and q > 1, got c={c}, q={q}")));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(LabError::Validation(format!("s={s} outside (0, 1]")));
    }
    let step = geodesic(q.sqrt().ln());
    let mut x = AffineLatticeClass::new(compose(&geodesic(c.sqrt().ln()), &horocycle(-2.0 * s, -s * s, s))).reduce();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        x = x.act(&step).reduce();
        out.push(f_triangle(&x, cap).value().unwrap_or(f64::INFINITY));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricReport {
    pub s: f64,
    pub ks: f64,
    pub values: Vec<f64>,
}

/// For each `s`, KS distance between the values of [`geometric_values`] and
/// the reference sample of `f` under Haar measure.
pub fn geometric_gap_experiment(c: f64, q: f64, n: usize, s_samples: &[f64], reference: &Ecdf) -> Result<Vec<GeometricReport>> {
    s_samples
        .iter()
        .map(|&s| {
            let values = geometric_values(c, q, n, s, DEFAULT_CAP)?;
            let ks = crate::stats::ks_distance(&Ecdf::new(&values)?, reference);
            Ok(GeometricReport { s, ks, values })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlainGapReport {
    pub r: f64,
    /// Fraction of normalized gaps in `[0, 1/2]`, to compare with `3/pi^2`.
    pub fraction_half: f64,
    pub mean: f64,
    /// Fraction of normalized gaps above 6.
    pub tail_beyond_6: f64,
    pub histogram: Vec<(f64, f64, u64)>,
}

pub fn plain_gap_distribution(seq: &GapSequence, bins: usize, hi: f64) -> PlainGapReport {
    let g = seq.normalized_gaps();
    let n = g.len() as f64;
    PlainGapReport {
        r: seq.r,
        fraction_half: g.iter().filter(|&&x| x <= 0.5).count() as f64 / n,
        mean: g.iter().sum::<f64>() / n,
        tail_beyond_6: g.iter().filter(|&&x| x > 6.0).count() as f64 / n,
        histogram: crate::stats::histogram(&g, 0.0, hi, bins),
    }
}

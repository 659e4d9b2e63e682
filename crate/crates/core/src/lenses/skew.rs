//! The double cover `M(Lambda, R)` of a slit torus, seen through the first
//! return of the linear flow to a closed transversal.
//!
//! In the coordinates `h^-1` the torus is `R^2 / Z^2` and the flow direction
//! is `w = h^-1 u`. The return map to the circle `y = 0` is the rotation by
//! `alpha = w_x / w_y`, and a point changes sheet each time its return
//! segment crosses the slit.

use crate::error::{LabError, Result};
use crate::homogeneous::{Mat2, Vec2};
use crate::stats::{loglog_exponent, FitResult};

/// Tolerance for a return point to sit on an endpoint of the slit shadow.
pub const SADDLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SkewIet {
    /// Rotation number of the base map, in `[0, 1)`.
    pub alpha: f64,
    /// `w_x / w_y` before reduction mod 1.
    pub alpha_lift: f64,
    /// Pieces `(start, length)` of the slit shadow on the circle. A piece
    /// may wrap past 1.
    pub pieces: Vec<(f64, f64)>,
    /// Expected slit crossings per return, `2R / |w_y|`.
    pub toggle_rate: f64,
}

impl SkewIet {
    pub fn from_parts(alpha: f64, pieces: Vec<(f64, f64)>) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(LabError::Validation(format!("rotation {alpha} outside [0, 1)")));
        }
        let toggle_rate = pieces.iter().map(|p| p.1).sum();
        Ok(Self { alpha, alpha_lift: alpha, pieces, toggle_rate })
    }

    /// Number of slit pieces whose shadow covers `x`.
    pub fn crossings(&self, x: f64) -> usize {
        self.pieces
            .iter()
            .map(|&(s, len)| {
                let d = (x - s).rem_euclid(1.0);
                if d < len {
                    (len - d).ceil() as usize
                } else {
                    0
                }
            })
            .sum()
    }

    /// Total measure of the shadow, counted with multiplicity.
    pub fn shadow_measure(&self) -> f64 {
        self.pieces.iter().map(|p| p.1).sum()
    }

    pub fn endpoints(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|&(s, len)| [s.rem_euclid(1.0), (s + len).rem_euclid(1.0)])
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    fn near_endpoint(&self, x: f64) -> bool {
        self.pieces.iter().any(|&(s, len)| {
            let d0 = (x - s).rem_euclid(1.0);
            let d1 = (x - s - len).rem_euclid(1.0);
            d0.min(1.0 - d0) < SADDLE_TOL || d1.min(1.0 - d1) < SADDLE_TOL
        })
    }
}

/// Builds the skew rotation for lenses of radius `r` on `h Z^2` and light
/// direction `u`. The slit is centred at `h slit_center` and perpendicular
/// to `u`; `(0, 1/2)` keeps it off the transversal for short slits.
pub fn build_skew_iet(h: &Mat2, r: f64, u: Vec2, slit_center: Vec2) -> Result<SkewIet> {
    if !h.is_unimodular() {
        return Err(LabError::Validation("basis must be unimodular".into()));
    }
    if !(r >= 0.0) {
        return Err(LabError::Validation(format!("negative slit radius {r}")));
    }
    if r > 0.0 && !super::admissible(h, r) {
        return Err(LabError::Validation(format!("R={r} is not admissible for this lattice")));
    }
    let u = (1.0 / u.norm()) * u;
    let mut w = h.inverse().apply(u);
    // flow direction parallel to a lattice vector: periodic, no skew product
    let ratio = w.x / w.y;
    if w.y == 0.0 || !ratio.is_finite() {
        return Err(LabError::Domain("direction is parallel to a lattice vector".into()));
    }
    for q in 1..=64i64 {
        let frac = (ratio * q as f64 - (ratio * q as f64).round()).abs();
        if frac < 1e-12 * q as f64 {
            return Err(LabError::Domain(format!("direction is parallel to a lattice vector (period {q})")));
        }
    }
    let c = slit_center;
    if w.y < 0.0 {
        // same line field, traversed upwards
        w = -w;
    }
    let alpha_lift = w.x / w.y;
    let normal = Vec2::new(-u.y, u.x);
    let half = h.inverse().apply(r * normal);
    let mut pieces = Vec::new();
    if r > 0.0 {
        let (mut p0, mut p1) = (c - half, c + half);
        if p0.y > p1.y {
            std::mem::swap(&mut p0, &mut p1);
        }
        // split the slit where it crosses integer heights
        let mut cuts = vec![0.0];
        let (y0, y1) = (p0.y, p1.y);
        let mut k = y0.floor() + 1.0;
        while k < y1 {
            cuts.push((k - y0) / (y1 - y0));
            k += 1.0;
        }
        cuts.push(1.0);
        for win in cuts.windows(2) {
            let a = p0 + win[0] * (p1 - p0);
            let b = p0 + win[1] * (p1 - p0);
            let mid = 0.5 * (a.y + b.y);
            let base = mid.floor();
            // project along the flow to y = base
            let xa = a.x - alpha_lift * (a.y - base);
            let xb = b.x - alpha_lift * (b.y - base);
            let (lo, hi) = if xa <= xb { (xa, xb) } else { (xb, xa) };
            if hi > lo {
                pieces.push((lo.rem_euclid(1.0), hi - lo));
            }
        }
    }
    Ok(SkewIet { alpha: alpha_lift.rem_euclid(1.0), alpha_lift, pieces, toggle_rate: 2.0 * r / w.y.abs() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftSeries {
    /// `d(k)` for `k = 1..=n`.
    pub d: Vec<[i64; 2]>,
    pub toggles: u64,
    pub returns: usize,
    pub final_sheet: i8,
}

impl DriftSeries {
    pub fn norms(&self) -> Vec<f64> {
        self.d.iter().map(|v| ((v[0] * v[0] + v[1] * v[1]) as f64).sqrt()).collect()
    }

    pub fn toggle_frequency(&self) -> f64 {
        self.toggles as f64 / self.returns as f64
    }
}

/// `d(k) = sum_{j <= k} sheet_j inc_j`, where `inc_j = (floor(x_j + alpha), 1)`
/// is the homology of the `j`-th return and `sheet_j` the sheet at its start.
pub fn drift_track(iet: &SkewIet, x0: f64, n_returns: usize) -> Result<DriftSeries> {
    let mut x = x0.rem_euclid(1.0);
    let mut sheet: i64 = 1;
    let mut acc = [0i64, 0i64];
    let mut d = Vec::with_capacity(n_returns);
    let mut toggles = 0u64;
    let lift_int = iet.alpha_lift.floor();
    for _ in 0..n_returns {
        if iet.near_endpoint(x) {
            return Err(LabError::Numeric(format!("return point {x} hits a slit endpoint (saddle connection)")));
        }
        let y = x + iet.alpha;
        let wraps = y.floor();
        acc[0] += sheet * (wraps + lift_int) as i64;
        acc[1] += sheet;
        d.push(acc);
        let k = iet.crossings(x);
        toggles += k as u64;
        if k % 2 == 1 {
            sheet = -sheet;
        }
        x = y - wraps;
    }
    Ok(DriftSeries { d, toggles, returns: n_returns, final_sheet: sheet as i8 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationFit {
    pub exponent: f64,
    /// The running maximum is constant over the fit window.
    pub bounded: bool,
    pub fit: Option<FitResult>,
}

/// Log-log slope of `max_{j <= k} |d(j)|` against `k`.
pub fn deviation_exponent(norms: &[f64]) -> Result<DeviationFit> {
    let mut run = Vec::with_capacity(norms.len());
    let mut m = 0.0f64;
    for &v in norms {
        m = m.max(v);
        run.push(m);
    }
    let n = run.len();
    if n < 16 {
        return Err(LabError::Validation(format!("series of length {n} is too short")));
    }
    let lo = ((n as f64).sqrt().floor() as usize).max(1);
    if run[n - 1] == 0.0 || run[lo - 1] == run[n - 1] {
        return Ok(DeviationFit { exponent: 0.0, bounded: true, fit: None });
    }
    let fit = loglog_exponent(&run)?;
    Ok(DeviationFit { exponent: fit.slope, bounded: false, fit: Some(fit) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableDirection {
    pub zeta: Vec2,
    /// `sup_k |<d(k), zeta>|`.
    pub sup: f64,
    /// The same sup for the orthogonal covector.
    pub orthogonal_sup: f64,
    /// No direction is markedly better than the others.
    pub isotropic: bool,
}

fn pairing_sup(d: &[[i64; 2]], angle: f64) -> f64 {
    let (c, s) = (angle.cos(), angle.sin());
    d.iter().map(|v| (v[0] as f64 * c + v[1] as f64 * s).abs()).fold(0.0, f64::max)
}

/// Covector minimising the sup of the pairing with the drift: a scan over
/// 180 angles followed by golden-section refinement around the best one.
pub fn stable_direction_estimate(series: &DriftSeries) -> StableDirection {
    let d = &series.d;
    let grid = 180;
    let step = std::f64::consts::PI / grid as f64;
    let (best_i, _) = (0..grid)
        .map(|i| (i, pairing_sup(d, i as f64 * step)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let (mut a, mut b) = ((best_i as f64 - 1.0) * step, (best_i as f64 + 1.0) * step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if pairing_sup(d, x1) <= pairing_sup(d, x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let angle = 0.5 * (a + b);
    let sup = pairing_sup(d, angle);
    let orthogonal_sup = pairing_sup(d, angle + std::f64::consts::FRAC_PI_2);
    StableDirection { zeta: Vec2::unit(angle), sup, orthogonal_sup, isotropic: sup > 0.25 * orthogonal_sup }
}

//! Polygon data `l, w, d` of the billiard restricted to a caustic, as
//! integrals of
//!
//! ```text
//!   e(s, lambda) = 1 / sqrt((a - s)(b - s)(lambda - s))
//! ```
//!
//! Case E (`lambda0 < lambda < b`):
//!   `l = 4 int_b^a e`, `w = l/4 - int_{-inf}^0 e`, `d = int_0^lambda0 e`.
//! Case E' (`0 < lambda <= lambda0`): same `l, w`, no slit (`d = 0`).
//! Case H (`b < lambda < a`):
//!   `l = 2 int_{-inf}^b e`, `w = 2 int_0^b e`, `d = int_0^lambda0 e`.
//!
//! Lambda-derivatives come from `de/dlambda = -e / (2 (lambda - s))` and
//! `d2e/dlambda2 = 3 e / (4 (lambda - s)^2)` on intervals with fixed ends.
//! Every integral is brought to a smooth integrand by a substitution and then
//! handed to tanh-sinh.

use super::EllipseTable;
use crate::error::{LabError, Result};
use crate::homogeneous::{det3, AffineElement, Jet, Mat2, Vec2, WronskianCurve};
use crate::quad::{tanh_sinh, tanh_sinh_level};

const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    E,
    EPrime,
    H,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionData {
    pub lambda: f64,
    pub l: f64,
    pub w: f64,
    pub d: f64,
    pub lp: f64,
    pub wp: f64,
    pub dp: f64,
    pub lpp: f64,
    pub wpp: f64,
    pub dpp: f64,
    pub case: Case,
}

impl ReductionData {
    /// Values in the column order `lambda,l,w,d,lp,wp,dp,lpp,wpp,dpp`.
    pub fn row(&self) -> [f64; 10] {
        [self.lambda, self.l, self.w, self.d, self.lp, self.wp, self.dp, self.lpp, self.wpp, self.dpp]
    }
}

pub fn integrand_e(s: f64, lambda: f64, table: &EllipseTable) -> Result<f64> {
    let prod = (table.a - s) * (table.b - s) * (lambda - s);
    if !(prod > 0.0) {
        return Err(LabError::Domain(format!("e(s={s}, lambda={lambda}) needs (a-s)(b-s)(lambda-s) > 0")));
    }
    Ok(1.0 / prod.sqrt())
}

/// How an integral is evaluated: a fixed-level rule or the adaptive one.
#[derive(Clone, Copy)]
enum Rule {
    Adaptive,
    Level(u32),
}

fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rule: Rule) -> Result<f64> {
    match rule {
        Rule::Adaptive => Ok(tanh_sinh(f, lo, hi, REL_TOL)?.value),
        Rule::Level(k) => Ok(tanh_sinh_level(f, lo, hi, k)),
    }
}

fn lam_power(x: f64, k: u32) -> f64 {
    x.powi(-(k as i32))
}

/// `int_p^q |prod|^{-1/2} (lambda - s)^{-k}` for consecutive roots `p < q`
/// and third root `r`, via `s = p + (q - p) sin^2 theta`.
fn both_ends(p: f64, q: f64, r: f64, lambda: f64, k: u32, rule: Rule) -> Result<f64> {
    let span = q - p;
    let f = |th: f64| {
        let s2 = th.sin().powi(2);
        let sr = ((p - r) + span * s2).abs();
        2.0 / sr.sqrt() * lam_power((lambda - p) - span * s2, k)
    };
    integrate(f, 0.0, std::f64::consts::FRAC_PI_2, rule)
}

/// `int_{c - umax^2}^c`, all roots `>= c`, via `s = c - u^2`.
fn up_to(c: f64, umax: f64, roots: [f64; 3], lambda: f64, k: u32, rule: Rule) -> Result<f64> {
    let c_is_root = roots.contains(&c);
    let f = |u: f64| {
        let u2 = u * u;
        let mut v = if c_is_root { 2.0 } else { 2.0 * u };
        let mut skipped = false;
        for q in roots {
            if q == c && !skipped {
                skipped = true;
                continue;
            }
            v /= ((q - c) + u2).sqrt();
        }
        v * lam_power((lambda - c) + u2, k)
    };
    integrate(f, 0.0, umax, rule)
}

/// `int_{-inf}^{c - span}` via `s = c - span / tau^2`.
fn tail(c: f64, span: f64, roots: [f64; 3], lambda: f64, k: u32, rule: Rule) -> Result<f64> {
    let f = |tau: f64| {
        let t2 = tau * tau;
        let mut v = 2.0 * span;
        for q in roots {
            v /= (span + t2 * (q - c)).sqrt();
        }
        v * (t2 / (span + t2 * (lambda - c))).powi(k as i32)
    };
    integrate(f, 0.0, 1.0, rule)
}

fn moment(lo: f64, hi: f64, k: u32, lambda: f64, table: &EllipseTable, rule: Rule) -> Result<f64> {
    let roots = [table.a, table.b, lambda];
    let is_root = |x: f64| roots.contains(&x);
    let min_root = roots.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo == f64::NEG_INFINITY {
        if hi > min_root {
            return Err(LabError::Domain(format!("(-inf, {hi}) contains a root")));
        }
        let span = 1.0 + (table.a - hi);
        return Ok(up_to(hi, span.sqrt(), roots, lambda, k, rule)? + tail(hi, span, roots, lambda, k, rule)?);
    }
    if !(lo < hi) {
        return Err(LabError::Domain(format!("empty interval ({lo}, {hi})")));
    }
    if is_root(lo) && is_root(hi) {
        let inside = roots.iter().any(|&q| q > lo && q < hi);
        let r = roots.iter().cloned().find(|&q| q != lo && q != hi);
        return match (inside, r) {
            (false, Some(r)) => both_ends(lo, hi, r, lambda, k, rule),
            _ => Err(LabError::Domain(format!("({lo}, {hi}) is not a gap between roots"))),
        };
    }
    if hi <= min_root {
        return up_to(hi, (hi - lo).sqrt(), roots, lambda, k, rule);
    }
    Err(LabError::Domain(format!("unsupported integration interval ({lo}, {hi})")))
}

/// `int_lo^hi e(s, lambda) (lambda - s)^{-k} ds`, `lo` may be `-inf`.
///
/// Supported intervals are a gap between two consecutive roots of the cubic
/// and intervals below the smallest root.
pub fn e_moment(lo: f64, hi: f64, k: u32, lambda: f64, table: &EllipseTable) -> Result<f64> {
    moment(lo, hi, k, lambda, table, Rule::Adaptive)
}

pub fn case_of(lambda: f64, table: &EllipseTable) -> Result<Case> {
    if lambda > 0.0 && lambda <= table.lambda0 {
        Ok(Case::EPrime)
    } else if lambda > table.lambda0 && lambda < table.b {
        Ok(Case::E)
    } else if lambda > table.b && lambda < table.a {
        Ok(Case::H)
    } else {
        Err(LabError::Domain(format!("lambda={lambda} outside (0, b) U (b, a)")))
    }
}

fn assemble(lambda: f64, table: &EllipseTable, rule: Rule) -> Result<ReductionData> {
    let case = case_of(lambda, table)?;
    let m = |lo: f64, hi: f64, k: u32| moment(lo, hi, k, lambda, table, rule);
    let (a, b, l0) = (table.a, table.b, table.lambda0);
    let ninf = f64::NEG_INFINITY;
    let (l, lp, lpp, w, wp, wpp) = match case {
        Case::E | Case::EPrime => {
            let (i0, i1, i2) = (m(b, a, 0)?, m(b, a, 1)?, m(b, a, 2)?);
            let (t0, t1, t2) = (m(ninf, 0.0, 0)?, m(ninf, 0.0, 1)?, m(ninf, 0.0, 2)?);
            let (l, lp, lpp) = (4.0 * i0, -2.0 * i1, 3.0 * i2);
            (l, lp, lpp, l / 4.0 - t0, lp / 4.0 + 0.5 * t1, lpp / 4.0 - 0.75 * t2)
        }
        Case::H => {
            let (i0, i1, i2) = (m(ninf, b, 0)?, m(ninf, b, 1)?, m(ninf, b, 2)?);
            let (j0, j1, j2) = (m(0.0, b, 0)?, m(0.0, b, 1)?, m(0.0, b, 2)?);
            (2.0 * i0, -i1, 1.5 * i2, 2.0 * j0, -j1, 1.5 * j2)
        }
    };
    let (d, dp, dpp) = if case == Case::EPrime || l0 == 0.0 {
        (0.0, 0.0, 0.0)
    } else {
        (m(0.0, l0, 0)?, -0.5 * m(0.0, l0, 1)?, 0.75 * m(0.0, l0, 2)?)
    };
    Ok(ReductionData { lambda, l, w, d, lp, wp, dp, lpp, wpp, dpp, case })
}

/// `l, w, d` and their first two derivatives at `lambda`.
pub fn reduction_data(lambda: f64, table: &EllipseTable) -> Result<ReductionData> {
    assemble(lambda, table, Rule::Adaptive)
}

/// Same quantities from a fixed tanh-sinh level (step `2^-level`), for
/// self-consistency checks.
pub fn reduction_data_at_level(lambda: f64, table: &EllipseTable, level: u32) -> Result<ReductionData> {
    assemble(lambda, table, Rule::Level(level))
}

fn require_slit_case(lambda: f64, table: &EllipseTable) -> Result<()> {
    match case_of(lambda, table)? {
        Case::EPrime => Err(LabError::Domain(format!("lambda={lambda} is in case E', the curve needs case E or H"))),
        _ => Ok(()),
    }
}

/// `psi(lambda) = (((l, -2w), (l, 2w)) / r, (-2d, 2d) / r)`, `r = 2 sqrt(l w)`.
pub fn psi_curve(lambda: f64, table: &EllipseTable) -> Result<AffineElement> {
    require_slit_case(lambda, table)?;
    let rd = reduction_data(lambda, table)?;
    Ok(psi_from(&rd))
}

fn psi_from(rd: &ReductionData) -> AffineElement {
    let r = 2.0 * (rd.l * rd.w).sqrt();
    AffineElement::new(
        Mat2::new(rd.l / r, -2.0 * rd.w / r, rd.l / r, 2.0 * rd.w / r),
        Vec2::new(-2.0 * rd.d / r, 2.0 * rd.d / r),
    )
}

/// Rows `(h11, h12, v1)`, first and second derivatives of `psi` at `lambda`
/// from the analytic derivatives of `l, w, d`.
pub fn psi_jet(lambda: f64, table: &EllipseTable) -> Result<Jet> {
    require_slit_case(lambda, table)?;
    Ok(jet_from(&reduction_data(lambda, table)?))
}

fn jet_from(rd: &ReductionData) -> Jet {
    let q = rd.l * rd.w;
    let q1 = rd.lp * rd.w + rd.l * rd.wp;
    let q2 = rd.lpp * rd.w + 2.0 * rd.lp * rd.wp + rd.l * rd.wpp;
    let sq = q.sqrt();
    let r = 2.0 * sq;
    let r1 = q1 / sq;
    let r2 = q2 / sq - q1 * q1 / (2.0 * q * sq);
    // (f / r), (f / r)', (f / r)''
    let quot = |f: f64, f1: f64, f2: f64| {
        [
            f / r,
            f1 / r - f * r1 / (r * r),
            f2 / r - 2.0 * f1 * r1 / (r * r) - f * r2 / (r * r) + 2.0 * f * r1 * r1 / (r * r * r),
        ]
    };
    let h11 = quot(rd.l, rd.lp, rd.lpp);
    let h12 = quot(-2.0 * rd.w, -2.0 * rd.wp, -2.0 * rd.wpp);
    let v1 = quot(-2.0 * rd.d, -2.0 * rd.dp, -2.0 * rd.dpp);
    [[h11[0], h12[0], v1[0]], [h11[1], h12[1], v1[1]], [h11[2], h12[2], v1[2]]]
}

/// Wronskian determinant of the billiard curve `psi` at `lambda`.
pub fn det_mpsi_billiard(lambda: f64, table: &EllipseTable) -> Result<f64> {
    Ok(det3(&psi_jet(lambda, table)?))
}

/// `det [[l, w, d], [l', w', d'], [l'', w'', d'']]`.
pub fn det_m_lwd(rd: &ReductionData) -> f64 {
    det3(&[[rd.l, rd.w, rd.d], [rd.lp, rd.wp, rd.dp], [rd.lpp, rd.wpp, rd.dpp]])
}

/// `psi` on `domain` as a [`WronskianCurve`]. With `analytic` the jet comes
/// from the derivative integrals, otherwise from central differences.
pub fn billiard_curve(table: EllipseTable, domain: (f64, f64), analytic: bool) -> WronskianCurve {
    let nan = AffineElement::new(Mat2::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN), Vec2::new(f64::NAN, f64::NAN));
    WronskianCurve {
        point: Box::new(move |lam| psi_curve(lam, &table).unwrap_or(nan)),
        jet: if analytic {
            Some(Box::new(move |lam| psi_jet(lam, &table).unwrap_or([[f64::NAN; 3]; 3])))
        } else {
            None
        },
        domain,
    }
}

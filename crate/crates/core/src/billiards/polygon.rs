//! Rectangle and cylinder with a vertical slit, flow in the directions
//! `(+-1, +-1) / sqrt(2)`.
//!
//! The table is `[0, l] x [0, w]`; the slit is `{slit_x} x [0, d]`. In the
//! cylinder the vertical sides are glued, in the rectangles they reflect.

use crate::error::{LabError, Result};

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolygonKind {
    CylinderWithSlit,
    RectangleWithSlit,
    Rectangle,
}

impl PolygonKind {
    pub fn has_slit(self) -> bool {
        !matches!(self, PolygonKind::Rectangle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolygonalModel {
    pub kind: PolygonKind,
    pub l: f64,
    pub w: f64,
    pub d: f64,
    pub slit_x: f64,
}

impl PolygonalModel {
    /// Slit at `x = l/2`.
    pub fn new(kind: PolygonKind, l: f64, w: f64, d: f64) -> Result<Self> {
        Self::with_slit_at(kind, l, w, d, 0.5 * l)
    }

    pub fn with_slit_at(kind: PolygonKind, l: f64, w: f64, d: f64, slit_x: f64) -> Result<Self> {
        if !(l > 0.0 && w > 0.0) {
            return Err(LabError::Validation(format!("need l, w > 0, got l={l}, w={w}")));
        }
        if !(0.0..=w).contains(&d) {
            return Err(LabError::Validation(format!("need 0 <= d <= w, got d={d}, w={w}")));
        }
        if !(slit_x > 0.0 && slit_x < l) {
            return Err(LabError::Validation(format!("slit position {slit_x} outside (0, {l})")));
        }
        let d = if kind.has_slit() { d } else { 0.0 };
        Ok(Self { kind, l, w, d, slit_x })
    }

    /// Length of the circle carrying the unfolded bottom coordinate.
    pub fn circle_length(&self) -> f64 {
        match self.kind {
            PolygonKind::CylinderWithSlit => self.l,
            _ => 2.0 * self.l,
        }
    }

    /// Bottom-side point `x` with horizontal direction `sx` on the circle.
    fn unfold(&self, x: f64, sx: f64) -> f64 {
        let c = self.circle_length();
        if sx > 0.0 {
            x
        } else {
            (c - x).rem_euclid(c)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonRun {
    /// Bottom-side hit abscissae.
    pub returns: Vec<f64>,
    /// Lifted unfolded bottom coordinate, one entry per return plus the start.
    pub lifts: Vec<f64>,
    pub circle: f64,
    pub slit_hits: usize,
    /// Set when the orbit ran into the slit tip and was stopped.
    pub singular: bool,
    /// Smallest `k` such that the `k`-th return repeats the first one.
    pub period: Option<usize>,
}

impl PolygonRun {
    pub fn rotation_number(&self) -> Result<f64> {
        let n = self.lifts.len();
        if n < 2 {
            return Err(LabError::Validation("no returns recorded".into()));
        }
        Ok((self.lifts[n - 1] - self.lifts[0]) / ((n - 1) as f64 * self.circle))
    }
}

/// Flows from the bottom point `(x0, 0)` upward with horizontal sign `sx`
/// and records `n` returns to the bottom side.
pub fn polygonal_simulate(model: &PolygonalModel, x0: f64, sx: f64, n: usize) -> Result<PolygonRun> {
    let (l, w) = (model.l, model.w);
    if !(x0 >= 0.0 && x0 < l) {
        return Err(LabError::Validation(format!("start {x0} outside [0, {l})")));
    }
    let cylinder = model.kind == PolygonKind::CylinderWithSlit;
    let slit = model.kind.has_slit() && model.d > 0.0;
    let (mut x, mut y) = (x0, 0.0);
    let (mut vx, mut vy) = (sx.signum(), 1.0);
    let circle = model.circle_length();
    let mut run = PolygonRun {
        returns: Vec::with_capacity(n),
        lifts: vec![model.unfold(x, vx)],
        circle,
        slit_hits: 0,
        singular: false,
        period: None,
    };
    let start = (x, vx);
    let mut prev = model.unfold(x, vx);
    while run.returns.len() < n {
        // time to the horizontal wall in the direction of travel
        let ty = if vy > 0.0 { w - y } else { y };
        let tx = if vx > 0.0 { l - x } else { x };
        let ts = if slit && (model.slit_x - x) * vx > EPS { (model.slit_x - x) * vx } else { f64::INFINITY };
        let t = ty.min(tx).min(ts);
        x += vx * t;
        y += vy * t;
        if t == ts {
            if (y - model.d).abs() < EPS * w.max(1.0) {
                run.singular = true;
                break;
            }
            if y < model.d {
                x = model.slit_x;
                vx = -vx;
                run.slit_hits += 1;
                continue;
            }
        }
        if t == tx {
            if cylinder {
                x = if vx > 0.0 { 0.0 } else { l };
            } else {
                vx = -vx;
            }
        }
        if t == ty {
            vy = -vy;
            if y <= EPS * w {
                y = 0.0;
                let xr = x.rem_euclid(l);
                run.returns.push(xr);
                let u = model.unfold(xr, vx);
                let step = (u - prev).rem_euclid(circle);
                run.lifts.push(run.lifts.last().unwrap() + step);
                prev = u;
                if run.period.is_none() && (xr - start.0).abs() < 1e-9 && vx == start.1 {
                    run.period = Some(run.returns.len());
                }
            } else {
                y = w;
            }
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_rotation_is_w_over_l() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let m = PolygonalModel::new(PolygonKind::Rectangle, 1.0, g, 0.0).unwrap();
        let run = polygonal_simulate(&m, 0.1234, 1.0, 5000).unwrap();
        assert!((run.rotation_number().unwrap() - g).abs() < 1e-3);
        assert!(run.period.is_none());
    }

    #[test]
    fn rational_ratio_is_periodic() {
        let m = PolygonalModel::new(PolygonKind::Rectangle, 1.0, 0.5, 0.0).unwrap();
        let run = polygonal_simulate(&m, 0.3, 1.0, 10).unwrap();
        assert_eq!(run.period, Some(2));
    }

    #[test]
    fn full_wall_splits_rectangle() {
        // with d = w the right half behaves as a rectangle of width l/2
        let m = PolygonalModel::new(PolygonKind::RectangleWithSlit, 2.0, 0.5, 0.5).unwrap();
        let r = PolygonalModel::new(PolygonKind::Rectangle, 1.0, 0.5, 0.0).unwrap();
        let a = polygonal_simulate(&m, 1.3, 1.0, 50).unwrap();
        let b = polygonal_simulate(&r, 0.3, 1.0, 50).unwrap();
        for (p, q) in a.returns.iter().zip(&b.returns) {
            assert!((p - 1.0 - q).abs() < 1e-9);
        }
    }

    #[test]
    fn slit_tip_is_flagged() {
        let m = PolygonalModel::new(PolygonKind::CylinderWithSlit, 1.0, 1.0, 0.25).unwrap();
        let run = polygonal_simulate(&m, 0.25, 1.0, 10).unwrap();
        assert!(run.singular);
    }
}

//! Periodic arrays of Eaton lenses and their flat counterparts.
//!
//! Every lens event reverses the light direction, so a ray only ever travels
//! along `+v` or `-v`. Tracing is done in a frame rotated so that `v` points
//! up; positions are kept as an integer lattice cell plus a small offset.

mod rauzy;
mod skew;

pub use rauzy::{cocycle_exponent, det_exact, lyapunov_w, random_vector, BaseIet, LyapunovEstimate};
pub use skew::{
    build_skew_iet, deviation_exponent, drift_track, stable_direction_estimate, DeviationFit, DriftSeries, SkewIet,
    StableDirection,
};

use crate::error::{LabError, Result};
use crate::homogeneous::{gauss_reduce, rotation_curve, shortest_vector, wronskian_det, AffineLatticeClass, Mat2, Vec2};
use std::f64::consts::FRAC_PI_2;

/// Discriminant below which a lens is treated as grazed and missed.
pub const GRAZE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LensModel {
    Eaton,
    Flat,
}

impl LensModel {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "eaton" => Ok(LensModel::Eaton),
            "flat" => Ok(LensModel::Flat),
            _ => Err(LabError::Validation(format!("unknown lens model '{s}'"))),
        }
    }
}

/// Lenses of radius `r` centred at the points of `h Z^2`, lit from the
/// direction `theta`. Flat lenses are segments perpendicular to `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensGrid {
    pub h: Mat2,
    pub r: f64,
    pub model: LensModel,
    pub theta: f64,
}

impl LensGrid {
    pub fn new(h: Mat2, r: f64, model: LensModel, theta: f64) -> Result<Self> {
        if !h.is_unimodular() {
            return Err(LabError::Validation(format!("basis has determinant {}, need 1", h.det())));
        }
        if !(r > 0.0) {
            return Err(LabError::Validation(format!("lens radius must be positive, got {r}")));
        }
        if !admissible(&h, r) {
            return Err(LabError::Validation(format!(
                "R={r} is not admissible: need 2R < shortest vector length {}",
                shortest_vector(&h).norm()
            )));
        }
        Ok(Self { h, r, model, theta })
    }

    pub fn direction(&self) -> Vec2 {
        Vec2::unit(self.theta)
    }
}

/// `2R < |shortest vector|`, which makes the lens discs pairwise disjoint.
pub fn admissible(h: &Mat2, r: f64) -> bool {
    2.0 * r < shortest_vector(h).norm()
}

/// Exit point and direction of a ray entering the Eaton lens at `entry`
/// with direction `v`: the entry point reflected across the line through the
/// centre parallel to `v`, travelling back along `-v`.
pub fn eaton_map(entry: Vec2, v: Vec2, center: Vec2, _r: f64) -> (Vec2, Vec2) {
    let u = (1.0 / v.norm()) * v;
    let rel = entry - center;
    let along = rel.dot(u);
    let perp = rel - along * u;
    if perp.norm() < 1e-12 {
        return (entry, -v);
    }
    (center + along * u - perp, -v)
}

/// Point reflection through the lens centre with reversed direction.
pub fn flat_lens_map(p: Vec2, v: Vec2, center: Vec2) -> (Vec2, Vec2) {
    (2.0 * center - p, -v)
}

/// Rotates the system by `pi/2 - theta` so the light travels vertically.
pub fn rotate_system(grid: &LensGrid) -> LensGrid {
    LensGrid { h: Mat2::rotation(FRAC_PI_2 - grid.theta).mul(&grid.h), theta: FRAC_PI_2, ..*grid }
}

/// Wronskian determinant of `theta -> (r_theta, (2R, 0))`; equals `-2R`.
pub fn eaton_curve_check(r: f64, theta: f64) -> Result<f64> {
    wronskian_det(&rotation_curve(r), theta)
}

/// Position as `h cell + offset` in the vertical frame.
#[derive(Debug, Clone, Copy, PartialEq)]
struct FramePos {
    cell: [i64; 2],
    offset: Vec2,
}

/// The lattice of lens centres in the vertical frame.
struct Frame {
    h: Mat2,
    hinv: Mat2,
    /// Reduced basis of the same lattice, used for searches.
    reduced: Mat2,
    r: f64,
    model: LensModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensHit {
    /// Lens centre as integer coefficients of the original basis.
    pub cell: [i64; 2],
    /// Entry point relative to the current position (vertical frame).
    pub entry: Vec2,
    pub center: Vec2,
    pub distance: f64,
}

impl Frame {
    fn new(grid: &LensGrid) -> Self {
        let h = rotate_system(grid).h;
        Self { h, hinv: h.inverse(), reduced: gauss_reduce(&h), r: grid.r, model: grid.model }
    }

    fn recenter(&self, p: FramePos) -> FramePos {
        let c = self.hinv.apply(p.offset);
        let k = [c.x.round(), c.y.round()];
        let offset = p.offset - self.h.apply(Vec2::new(k[0], k[1]));
        FramePos { cell: [p.cell[0] + k[0] as i64, p.cell[1] + k[1] as i64], offset }
    }

    fn absolute(&self, p: &FramePos) -> Vec2 {
        self.h.apply(Vec2::new(p.cell[0] as f64, p.cell[1] as f64)) + p.offset
    }

    /// First lens met by the vertical ray from `p` (up when `up`), searching
    /// up to `horizon` along the ray. Grazing hits are counted and skipped.
    fn next_hit(&self, p: &FramePos, up: bool, horizon: f64, grazes: &mut usize) -> Option<LensHit> {
        let dir = if up { 1.0 } else { -1.0 };
        // lattice points relative to the current position
        let rel = AffineLatticeClass::from_parts(self.reduced, -p.offset).reduce();
        let r = self.r;
        let mut reach = 4.0 * self.reduced.max_abs().max(r);
        loop {
            let yr = if up { (-r, reach) } else { (-reach, r) };
            let mut best: Option<(f64, Vec2)> = None;
            rel.for_each_point_in_box((-r, r), yr, |c| {
                let disc = r * r - c.x * c.x;
                if disc <= GRAZE_TOL {
                    if disc > -GRAZE_TOL {
                        *grazes += 1;
                    }
                    return;
                }
                let back = match self.model {
                    LensModel::Eaton => disc.sqrt(),
                    LensModel::Flat => 0.0,
                };
                // distance along the ray to the entry point
                let t = dir * c.y - back;
                if dir * c.y > 1e-12 && t > -1e-12 && best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, c));
                }
            });
            if let Some((t, c)) = best {
                if t <= reach - r {
                    let k = self.hinv.apply(c + p.offset);
                    let cell = [p.cell[0] + k.x.round() as i64, p.cell[1] + k.y.round() as i64];
                    return Some(LensHit {
                        cell,
                        entry: Vec2::new(0.0, dir * t.max(0.0)),
                        center: c,
                        distance: t.max(0.0),
                    });
                }
            }
            if reach >= horizon {
                return None;
            }
            reach = (reach * 4.0).min(horizon);
        }
    }
}

/// First lens hit of the ray from `p` in direction `grid.theta` (or the
/// opposite one when `forward` is false), within `horizon`.
pub fn next_lens_hit(grid: &LensGrid, p: Vec2, forward: bool, horizon: f64) -> Option<LensHit> {
    let frame = Frame::new(grid);
    let rot = Mat2::rotation(FRAC_PI_2 - grid.theta);
    let start = frame.recenter(FramePos { cell: [0, 0], offset: rot.apply(p) });
    let mut grazes = 0;
    frame.next_hit(&start, forward, horizon, &mut grazes).map(|mut hit| {
        let back = rot.inverse();
        hit.entry = back.apply(hit.entry + start.offset + frame.h.apply(Vec2::new(start.cell[0] as f64, start.cell[1] as f64)));
        hit.center = back.apply(hit.center + start.offset + frame.h.apply(Vec2::new(start.cell[0] as f64, start.cell[1] as f64)));
        hit
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub cell: [i64; 2],
    pub entry: Vec2,
    pub exit: Vec2,
    /// Direction after the event.
    pub v: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub start: Vec2,
    pub events: Vec<TraceEvent>,
    pub grazes: usize,
    /// The ray left the search horizon without meeting a lens.
    pub escaped: bool,
}

impl Trace {
    /// Start point followed by the entry and exit point of every event.
    pub fn polyline(&self) -> Vec<Vec2> {
        let mut pts = Vec::with_capacity(2 * self.events.len() + 1);
        pts.push(self.start);
        for e in &self.events {
            pts.push(e.entry);
            pts.push(e.exit);
        }
        pts
    }
}

pub const DEFAULT_HORIZON: f64 = 1e6;

/// Follows the ray from `p0` in direction `grid.theta` through `n_events`
/// lens events. Lens traversal takes no time.
pub fn trace(grid: &LensGrid, p0: Vec2, n_events: usize, horizon: f64) -> Result<Trace> {
    let frame = Frame::new(grid);
    let rot = Mat2::rotation(FRAC_PI_2 - grid.theta);
    let back = rot.inverse();
    let mut pos = frame.recenter(FramePos { cell: [0, 0], offset: rot.apply(p0) });
    if grid.model == LensModel::Eaton {
        let rel = AffineLatticeClass::from_parts(frame.reduced, -pos.offset);
        if rel.count_in_disc(Vec2::ZERO, grid.r) > 0 {
            return Err(LabError::Domain("start point lies inside a lens".into()));
        }
    }
    let mut up = true;
    let mut out = Trace { start: p0, events: Vec::with_capacity(n_events), grazes: 0, escaped: false };
    for _ in 0..n_events {
        let Some(hit) = frame.next_hit(&pos, up, horizon, &mut out.grazes) else {
            out.escaped = true;
            break;
        };
        let dir = if up { Vec2::new(0.0, 1.0) } else { Vec2::new(0.0, -1.0) };
        let (exit, _) = match grid.model {
            LensModel::Eaton => eaton_map(hit.entry, dir, hit.center, grid.r),
            LensModel::Flat => flat_lens_map(hit.entry, dir, hit.center),
        };
        let entry_abs = frame.absolute(&FramePos { cell: pos.cell, offset: pos.offset + hit.entry });
        pos = frame.recenter(FramePos { cell: pos.cell, offset: pos.offset + exit });
        up = !up;
        let v = if up { grid.direction() } else { -grid.direction() };
        out.events.push(TraceEvent {
            cell: hit.cell,
            entry: back.apply(entry_abs),
            exit: back.apply(frame.absolute(&pos)),
            v,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapReport {
    pub trapped: bool,
    pub band_dir: Vec2,
    pub band_width: f64,
    /// Signed distance of each point from the band's centre line.
    pub transverse_series: Vec<f64>,
}

pub const MIN_TRACE_POINTS: usize = 1000;
pub const PLATEAU_TOL: f64 = 0.05;

/// Fits the principal direction of the point cloud and checks whether the
/// running sup of the transverse deviation stops growing over the second
/// half of the series.
///
/// A cloud with no transverse spread counts as trapped with width 0.
pub fn trapped_classify(points: &[Vec2]) -> Result<TrapReport> {
    if points.len() < MIN_TRACE_POINTS {
        return Err(LabError::Validation(format!(
            "trace too short: {} points, need {MIN_TRACE_POINTS}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean = (1.0 / n) * points.iter().fold(Vec2::ZERO, |acc, &p| acc + p);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let band_dir = Vec2::unit(angle);
    let normal = Vec2::new(-band_dir.y, band_dir.x);
    let transverse: Vec<f64> = points.iter().map(|&p| (p - mean).dot(normal)).collect();
    let half = transverse.len() / 2;
    let sup_half = transverse[..half].iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let sup = transverse.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let trapped = sup == 0.0 || sup - sup_half < PLATEAU_TOL * sup;
    Ok(TrapReport { trapped, band_dir, band_width: 2.0 * sup, transverse_series: transverse })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hex() -> Mat2 {
        let s = (2.0 / 3f64.sqrt()).sqrt();
        Mat2::new(s, 0.5 * s, 0.0, 3f64.sqrt() / 2.0 * s)
    }

    #[test]
    fn admissibility() {
        assert!(admissible(&Mat2::IDENTITY, 0.25));
        assert!(!admissible(&Mat2::IDENTITY, 0.5));
        assert!((shortest_vector(&hex()).norm() - (4.0f64 / 3.0).powf(0.25)).abs() < 1e-12);
        assert!(admissible(&hex(), 0.5));
    }

    #[test]
    fn eaton_examples() {
        let (p, v) = eaton_map(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), Vec2::ZERO, 1.0);
        assert_eq!((p, v), (Vec2::new(-1.0, 0.0), Vec2::new(-1.0, 0.0)));
        let b = 0.6;
        let e = Vec2::new(-(1.0 - b * b as f64).sqrt(), b);
        let (p, v) = eaton_map(e, Vec2::new(1.0, 0.0), Vec2::ZERO, 1.0);
        assert!((p - Vec2::new(e.x, -b)).norm() < 1e-15);
        assert_eq!(v, Vec2::new(-1.0, 0.0));
        let (q, w) = eaton_map(p, -v, Vec2::ZERO, 1.0);
        // reversing the outgoing ray retraces the incoming one
        assert!((q - e).norm() < 1e-15 && w == Vec2::new(-1.0, 0.0));
    }

    #[test]
    fn flat_examples() {
        let c = Vec2::new(1.0, 2.0);
        let v = Vec2::new(0.0, 1.0);
        assert_eq!(flat_lens_map(c, v, c), (c, -v));
        let end = Vec2::new(1.25, 2.0);
        assert_eq!(flat_lens_map(end, v, c).0, Vec2::new(0.75, 2.0));
    }

    #[test]
    fn rotation_to_vertical() {
        let g = LensGrid::new(hex(), 0.3, LensModel::Flat, 0.7).unwrap();
        let v = rotate_system(&g);
        assert!((shortest_vector(&v.h).norm() - shortest_vector(&g.h).norm()).abs() < 1e-12);
        let same = LensGrid { theta: FRAC_PI_2, ..g };
        assert_eq!(rotate_system(&same).h, same.h);
    }

    #[test]
    fn vertical_ray_on_lattice_line() {
        let g = LensGrid::new(Mat2::IDENTITY, 0.25, LensModel::Eaton, FRAC_PI_2).unwrap();
        let hit = next_lens_hit(&g, Vec2::new(0.0, 0.5), true, 100.0).unwrap();
        assert_eq!(hit.cell, [0, 1]);
        assert!((hit.entry - Vec2::new(0.0, 0.75)).norm() < 1e-12);
        // the vertical line x = 0.5 never meets a lens
        assert!(next_lens_hit(&g, Vec2::new(0.5, 0.5), true, 100.0).is_none());
    }

    #[test]
    fn curve_check_value() {
        assert!((eaton_curve_check(0.25, 0.3).unwrap() + 0.5).abs() < 1e-6);
    }
}

//! Billiard in the ellipse `x^2/a + y^2/b = 1` with a vertical barrier
//! `{0} x [sqrt(b - lambda0), sqrt(b)]` hanging from the top of the table.
//!
//! Every segment of an orbit is tangent to one confocal conic
//! `x^2/(a - lambda) + y^2/(b - lambda) = 1`; for a line through `p` with unit
//! direction `v` the parameter is
//!
//! ```text
//!   lambda = a v_y^2 + b v_x^2 - (p_x v_y - p_y v_x)^2
//! ```
//!
//! and it is preserved by both kinds of reflection.

pub mod polygon;
pub mod reduction;

pub use polygon::{polygonal_simulate, PolygonKind, PolygonRun, PolygonalModel};
pub use reduction::{
    billiard_curve, det_m_lwd, det_mpsi_billiard, e_moment, integrand_e, psi_curve, psi_jet, reduction_data,
    reduction_data_at_level, Case, ReductionData,
};

use crate::error::{LabError, Result};
use crate::homogeneous::Vec2;
use crate::stats::{ks_distance, Ecdf};
use rand::Rng;
use std::f64::consts::PI;

/// Distance below which an event counts as hitting a barrier endpoint.
pub const ENDPOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseTable {
    pub a: f64,
    pub b: f64,
    /// `0` means no barrier.
    pub lambda0: f64,
}

impl EllipseTable {
    pub fn new(a: f64, b: f64, lambda0: f64) -> Result<Self> {
        if !(0.0 < b && b < a) {
            return Err(LabError::Validation(format!("need 0 < b < a, got a={a}, b={b}")));
        }
        if !(0.0 <= lambda0 && lambda0 < b) {
            return Err(LabError::Validation(format!("need 0 <= lambda0 < b, got {lambda0}")));
        }
        Ok(Self { a, b, lambda0 })
    }

    pub fn barrier_lo(&self) -> f64 {
        (self.b - self.lambda0).sqrt()
    }

    pub fn barrier_hi(&self) -> f64 {
        self.b.sqrt()
    }

    pub fn barrier_length(&self) -> f64 {
        self.barrier_hi() - self.barrier_lo()
    }

    pub fn has_barrier(&self) -> bool {
        self.lambda0 > 0.0
    }

    /// Elliptic angle of a boundary point, normalised to `[0, 1)`.
    pub fn boundary_param(&self, p: Vec2) -> f64 {
        let t = (p.y / self.b.sqrt()).atan2(p.x / self.a.sqrt());
        let u = t / (2.0 * PI);
        if u < 0.0 {
            u + 1.0
        } else {
            u
        }
    }

    fn level(&self, p: Vec2) -> f64 {
        p.x * p.x / self.a + p.y * p.y / self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilliardState {
    pub p: Vec2,
    pub v: Vec2,
    /// Caustic parameter at the start of the orbit.
    pub lambda: f64,
}

impl BilliardState {
    pub fn new(p: Vec2, v: Vec2, table: &EllipseTable) -> Self {
        let v = (1.0 / v.norm()) * v;
        Self { p, v, lambda: caustic_param(p, v, table) }
    }
}

/// Parameter of the confocal conic tangent to the line through `p` along `v`.
pub fn caustic_param(p: Vec2, v: Vec2, table: &EllipseTable) -> f64 {
    let m = p.x * v.y - p.y * v.x;
    table.a * v.y * v.y + table.b * v.x * v.x - m * m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Ellipse,
    Barrier,
    BarrierEndpoint,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Ellipse => "ellipse",
            EventKind::Barrier => "barrier",
            EventKind::BarrierEndpoint => "endpoint",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub point: Vec2,
    pub time: f64,
}

/// Positive root of `A t^2 + B t + C = 0` with `C <= 0`, without cancellation.
fn exit_time(p: Vec2, v: Vec2, table: &EllipseTable) -> f64 {
    let qa = v.x * v.x / table.a + v.y * v.y / table.b;
    let qb = 2.0 * (p.x * v.x / table.a + p.y * v.y / table.b);
    let qc = table.level(p) - 1.0;
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    if qb >= 0.0 {
        if qc >= 0.0 {
            // on the boundary and leaving: no interior chord
            return 0.0;
        }
        2.0 * qc / (-qb - disc.sqrt())
    } else {
        (-qb + disc.sqrt()) / (2.0 * qa)
    }
}

/// First collision of the orbit with the ellipse or the barrier.
pub fn next_event(s: &BilliardState, table: &EllipseTable) -> Event {
    let t_ell = exit_time(s.p, s.v, table);
    if table.has_barrier() && s.p.x != 0.0 && s.v.x != 0.0 {
        let t = -s.p.x / s.v.x;
        if t > 0.0 && t <= t_ell {
            let y = s.p.y + t * s.v.y;
            let (lo, hi) = (table.barrier_lo(), table.barrier_hi());
            if (y - lo).abs() < ENDPOINT_TOL || (y - hi).abs() < ENDPOINT_TOL {
                return Event { kind: EventKind::BarrierEndpoint, point: Vec2::new(0.0, y), time: t };
            }
            if y > lo && y < hi {
                return Event { kind: EventKind::Barrier, point: Vec2::new(0.0, y), time: t };
            }
        }
    }
    let mut q = s.p + t_ell * s.v;
    q = (1.0 / table.level(q).sqrt()) * q;
    // arriving in the corner where the barrier meets the ellipse
    if table.has_barrier() && q.x.abs() < ENDPOINT_TOL && q.y > 0.0 {
        return Event { kind: EventKind::BarrierEndpoint, point: q, time: t_ell };
    }
    Event { kind: EventKind::Ellipse, point: q, time: t_ell }
}

/// Specular reflection at the event point.
pub fn reflect(event: &Event, s: &BilliardState, table: &EllipseTable) -> Result<BilliardState> {
    let v = match event.kind {
        EventKind::Ellipse => {
            let n = Vec2::new(event.point.x / table.a, event.point.y / table.b);
            let n = (1.0 / n.norm()) * n;
            let v = s.v - (2.0 * s.v.dot(n)) * n;
            (1.0 / v.norm()) * v
        }
        EventKind::Barrier => Vec2::new(-s.v.x, s.v.y),
        EventKind::BarrierEndpoint => {
            return Err(LabError::Numeric(format!("orbit hits a barrier endpoint at y={}", event.point.y)))
        }
    };
    let p = if event.kind == EventKind::Barrier { Vec2::new(0.0, event.point.y) } else { event.point };
    let lam = caustic_param(p, v, table);
    if (lam - s.lambda).abs() > 1e-6 * table.a {
        return Err(LabError::Numeric(format!("caustic jumped from {} to {lam}", s.lambda)));
    }
    Ok(BilliardState { p, v, lambda: s.lambda })
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    /// Boundary parameter in `[0, 1)` of each ellipse collision.
    pub boundary: Vec<f64>,
    /// Heights at which the orbit crosses `x = 0` without meeting the barrier.
    pub crossings: Vec<f64>,
    /// Heights of barrier collisions.
    pub barrier_hits: Vec<f64>,
    /// Largest `|lambda(p, v) - lambda_start|` seen.
    pub max_drift: f64,
    pub collisions: usize,
    pub events: Vec<(Event, BilliardState)>,
}

/// Runs `n_collisions` reflections from `s0`.
pub fn simulate(s0: &BilliardState, table: &EllipseTable, n_collisions: usize) -> Result<Trajectory> {
    simulate_opts(s0, table, n_collisions, false)
}

/// As [`simulate`], optionally keeping every event and post-event state.
pub fn simulate_opts(s0: &BilliardState, table: &EllipseTable, n_collisions: usize, log: bool) -> Result<Trajectory> {
    let mut tr = Trajectory::default();
    let mut s = *s0;
    for _ in 0..n_collisions {
        let ev = next_event(&s, table);
        if s.p.x != 0.0 && s.v.x != 0.0 && ev.kind == EventKind::Ellipse && s.p.x * ev.point.x < 0.0 {
            let t = -s.p.x / s.v.x;
            tr.crossings.push(s.p.y + t * s.v.y);
        }
        s = reflect(&ev, &s, table)?;
        match ev.kind {
            EventKind::Ellipse => tr.boundary.push(table.boundary_param(s.p)),
            _ => tr.barrier_hits.push(s.p.y),
        }
        tr.max_drift = tr.max_drift.max((caustic_param(s.p, s.v, table) - s.lambda).abs());
        tr.collisions += 1;
        if log {
            tr.events.push((ev, s));
        }
    }
    Ok(tr)
}

/// A random state with caustic parameter `lambda`: a uniform point of the
/// table and one of the (up to four) unit directions through it tangent to
/// the conic.
pub fn random_state_on_caustic<R: Rng + ?Sized>(table: &EllipseTable, lambda: f64, rng: &mut R) -> Result<BilliardState> {
    if !(0.0 < lambda && lambda < table.a) {
        return Err(LabError::Domain(format!("caustic parameter {lambda} outside (0, a)")));
    }
    for _ in 0..100_000 {
        let p = Vec2::new(
            (2.0 * rng.random::<f64>() - 1.0) * table.a.sqrt(),
            (2.0 * rng.random::<f64>() - 1.0) * table.b.sqrt(),
        );
        if table.level(p) >= 1.0 || p.x == 0.0 {
            continue;
        }
        // v^T (Q - lambda) v = 0 with Q the quadratic form of caustic_param
        let m11 = table.b - p.y * p.y - lambda;
        let m12 = p.x * p.y;
        let m22 = table.a - p.x * p.x - lambda;
        let disc = m12 * m12 - m11 * m22;
        if disc <= 0.0 || m22.abs() < 1e-12 {
            continue;
        }
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let t = (-m12 + sign * disc.sqrt()) / m22;
        let mut v = Vec2::new(1.0, t);
        v = (1.0 / v.norm()) * v;
        if rng.random::<bool>() {
            v = -v;
        }
        let mut s = BilliardState::new(p, v, table);
        s.lambda = lambda;
        return Ok(s);
    }
    Err(LabError::Numeric(format!("no admissible start found for lambda={lambda}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquidistributionReport {
    pub lambda: f64,
    pub collisions: usize,
    pub ks: f64,
    pub max_drift: f64,
}

/// KS distance between the boundary-collision distributions of two orbits
/// on the same invariant set.
pub fn equidistribution_report(
    s1: &BilliardState,
    s2: &BilliardState,
    table: &EllipseTable,
    n: usize,
) -> Result<EquidistributionReport> {
    let t1 = simulate(s1, table, n)?;
    let t2 = simulate(s2, table, n)?;
    let ks = ks_distance(&Ecdf::new(&t1.boundary)?, &Ecdf::new(&t2.boundary)?);
    Ok(EquidistributionReport { lambda: s1.lambda, collisions: n, ks, max_drift: t1.max_drift.max(t2.max_drift) })
}

/// Mean advance of the elliptic angle per collision, in turns, for an
/// anticlockwise orbit in the table without barrier.
pub fn rotation_number_free(a: f64, b: f64, lambda: f64, n: usize, rng: &mut impl Rng) -> Result<f64> {
    let table = EllipseTable::new(a, b, 0.0)?;
    let mut s = random_state_on_caustic(&table, lambda, rng)?;
    if s.p.cross(s.v) < 0.0 {
        s.v = -s.v;
    }
    let tr = simulate(&s, &table, n)?;
    let mut lift = 0.0;
    for w in tr.boundary.windows(2) {
        lift += (w[1] - w[0]).rem_euclid(1.0);
    }
    Ok(lift / (tr.boundary.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EllipseTable {
        EllipseTable::new(2.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn caustic_examples() {
        let t = table();
        assert_eq!(caustic_param(Vec2::ZERO, Vec2::new(1.0, 0.0), &t), t.b);
        assert!(caustic_param(Vec2::new(t.a.sqrt(), 0.0), Vec2::new(0.0, 1.0), &t).abs() < 1e-15);
    }

    #[test]
    fn event_examples() {
        let t = table();
        let s = BilliardState::new(Vec2::ZERO, Vec2::new(1.0, 0.0), &t);
        let e = next_event(&s, &t);
        assert_eq!(e.kind, EventKind::Ellipse);
        assert!((e.point.x - 2f64.sqrt()).abs() < 1e-15);

        let s = BilliardState::new(Vec2::new(-0.5, 0.9), Vec2::new(1.0, 0.0), &t);
        let e = next_event(&s, &t);
        assert_eq!(e.kind, EventKind::Barrier);
        assert_eq!(e.point, Vec2::new(0.0, 0.9));
        let r = reflect(&e, &s, &t).unwrap();
        assert_eq!(r.v, Vec2::new(-1.0, 0.0));

        // aimed exactly at the lower tip
        let lo = t.barrier_lo();
        let s = BilliardState::new(Vec2::new(-0.5, lo), Vec2::new(1.0, 0.0), &t);
        assert_eq!(next_event(&s, &t).kind, EventKind::BarrierEndpoint);
    }

    #[test]
    fn normal_incidence_reverses() {
        let t = table();
        let s = BilliardState::new(Vec2::new(0.0, -0.2), Vec2::new(0.0, -1.0), &t);
        let e = next_event(&s, &t);
        let r = reflect(&e, &s, &t).unwrap();
        assert!((r.v.y - 1.0).abs() < 1e-15 && r.v.x.abs() < 1e-15);
    }

    #[test]
    fn major_axis_orbit_has_period_two() {
        let t = table();
        let s = BilliardState::new(Vec2::new(0.3, 0.0), Vec2::new(1.0, 0.0), &t);
        let tr = simulate(&s, &t, 6).unwrap();
        assert!((tr.boundary[0] - tr.boundary[2]).abs() < 1e-12);
        assert!((tr.boundary[1] - tr.boundary[3]).abs() < 1e-12);
        assert!((tr.boundary[0] - tr.boundary[1]).abs() > 0.4);
    }
}

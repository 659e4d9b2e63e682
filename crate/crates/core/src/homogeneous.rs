//! The affine group ASL2(R) acting on unimodular affine lattices.
//!
//! An element `(h, xi)` acts on the plane by `v -> h v + xi`; products follow
//!
//! ```text
//!   (h1, xi1)(h2, xi2) = (h1 h2, h1 xi2 + xi1)
//!   a_t = (diag(e^t, e^-t), 0),   u(s1, s2, s3) = ([[1, s1], [0, 1]], (s2, s3))
//! ```
//!
//! The affine lattice of `(h, xi)` is `h Z^2 + xi`. Everything exposed on
//! [`AffineLatticeClass`] depends only on that point set, never on the chosen
//! representative.

use crate::error::{LabError, Result};
use rand::Rng;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn unit(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.x, self * v.y)
    }
}

/// Row-major 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn from_cols(c0: Vec2, c1: Vec2) -> Self {
        Self::new(c0.x, c1.x, c0.y, c1.y)
    }

    pub fn diag(x: f64, y: f64) -> Self {
        Self::new(x, 0.0, 0.0, y)
    }

    /// Counter-clockwise rotation by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, -s, s, c)
    }

    pub fn col0(&self) -> Vec2 {
        Vec2::new(self.a, self.c)
    }

    pub fn col1(&self) -> Vec2 {
        Vec2::new(self.b, self.d)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Mat2 {
        let det = self.det();
        Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det)
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(s * self.a, s * self.b, s * self.c, s * self.d)
    }

    pub fn is_unimodular(&self) -> bool {
        (self.det() - 1.0).abs() <= 1e-12
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }
}

/// Integer 2x2 matrix, used for changes of lattice basis.
pub type IMat2 = [[i64; 2]; 2];

pub fn imat_mul(p: &IMat2, q: &IMat2) -> IMat2 {
    [
        [p[0][0] * q[0][0] + p[0][1] * q[1][0], p[0][0] * q[0][1] + p[0][1] * q[1][1]],
        [p[1][0] * q[0][0] + p[1][1] * q[1][0], p[1][0] * q[0][1] + p[1][1] * q[1][1]],
    ]
}

pub fn imat_to_mat(g: &IMat2) -> Mat2 {
    Mat2::new(g[0][0] as f64, g[0][1] as f64, g[1][0] as f64, g[1][1] as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineElement {
    pub h: Mat2,
    pub xi: Vec2,
}

impl AffineElement {
    pub const IDENTITY: AffineElement = AffineElement { h: Mat2::IDENTITY, xi: Vec2::ZERO };

    pub fn new(h: Mat2, xi: Vec2) -> Self {
        Self { h, xi }
    }

    pub fn linear(h: Mat2) -> Self {
        Self { h, xi: Vec2::ZERO }
    }

    pub fn inverse(&self) -> Self {
        let hi = self.h.inverse();
        Self { h: hi, xi: -hi.apply(self.xi) }
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        self.h.apply(v) + self.xi
    }
}

/// `(h1 h2, h1 xi2 + xi1)`.
pub fn compose(g1: &AffineElement, g2: &AffineElement) -> AffineElement {
    AffineElement { h: g1.h.mul(&g2.h), xi: g1.h.apply(g2.xi) + g1.xi }
}

/// `a_t = (diag(e^t, e^-t), 0)`.
pub fn geodesic(t: f64) -> AffineElement {
    AffineElement::linear(Mat2::diag(t.exp(), (-t).exp()))
}

/// `u(s1, s2, s3) = ([[1, s1], [0, 1]], (s2, s3))`.
pub fn horocycle(s1: f64, s2: f64, s3: f64) -> AffineElement {
    AffineElement::new(Mat2::new(1.0, s1, 0.0, 1.0), Vec2::new(s2, s3))
}

/// Lagrange-Gauss reduction of the basis given by the columns of `h`.
///
/// The result has the same orientation; its first column is a shortest
/// vector and the projection of the second onto the first is at most half
/// its length.
pub fn gauss_reduce(h: &Mat2) -> Mat2 {
    reduce_impl(h, false).0
}

/// As [`gauss_reduce`], also returning the integer `g` with `h g = reduced`.
/// `None` if `g` does not fit in `i64`.
pub fn gauss_reduce_tracked(h: &Mat2) -> Option<(Mat2, IMat2)> {
    let (r, g) = reduce_impl(h, true);
    g.map(|g| (r, g))
}

fn reduce_impl(h: &Mat2, track: bool) -> (Mat2, Option<IMat2>) {
    let (mut b1, mut b2) = (h.col0(), h.col1());
    let mut g: Option<IMat2> = if track { Some([[1, 0], [0, 1]]) } else { None };
    for _ in 0..10_000 {
        if b2.norm2() < b1.norm2() {
            // (b1, b2) -> (b2, -b1) keeps the orientation
            (b1, b2) = (b2, -b1);
            g = g.map(|g| [[g[0][1], -g[0][0]], [g[1][1], -g[1][0]]]);
        }
        let mu = (b1.dot(b2) / b1.norm2()).round();
        if mu == 0.0 || !mu.is_finite() {
            break;
        }
        b2 = b2 - mu * b1;
        g = g.and_then(|g| {
            if mu.abs() > 9.0e15 {
                return None;
            }
            let m = mu as i64;
            Some([
                [g[0][0], g[0][1].checked_sub(m.checked_mul(g[0][0])?)?],
                [g[1][0], g[1][1].checked_sub(m.checked_mul(g[1][0])?)?],
            ])
        });
    }
    (Mat2::from_cols(b1, b2), g)
}

/// Candidates for minimal vectors of a reduced basis.
fn minimal_candidates(r: &Mat2) -> [Vec2; 8] {
    let (b1, b2) = (r.col0(), r.col1());
    [b1, -b1, b2, -b2, b1 + b2, -(b1 + b2), b1 - b2, b2 - b1]
}

/// Shortest nonzero vector of `h Z^2`; among vectors of equal length the
/// lexicographically smallest `(x, y)` is returned.
pub fn shortest_vector(h: &Mat2) -> Vec2 {
    let cands = minimal_candidates(&gauss_reduce(h));
    let min = cands.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    let mut best: Option<Vec2> = None;
    for v in cands {
        if v.norm() <= min * (1.0 + 1e-12) {
            best = match best {
                Some(b) if (b.x, b.y) <= (v.x, v.y) => Some(b),
                _ => Some(v),
            };
        }
    }
    best.expect("a lattice has minimal vectors")
}

/// An affine lattice `h Z^2 + xi`, stored through one representative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineLatticeClass {
    pub rep: AffineElement,
    /// Whether `rep.h` is Gauss reduced and `rep.xi` lies in the fundamental
    /// parallelogram `h [-1/2, 1/2)^2`.
    pub reduced: bool,
}

impl AffineLatticeClass {
    pub fn new(rep: AffineElement) -> Self {
        Self { rep, reduced: false }
    }

    pub fn from_parts(h: Mat2, xi: Vec2) -> Self {
        Self::new(AffineElement::new(h, xi))
    }

    /// The standard lattice `Z^2` translated by `xi`.
    pub fn standard(xi: Vec2) -> Self {
        Self::from_parts(Mat2::IDENTITY, xi)
    }

    pub fn reduce(&self) -> Self {
        if self.reduced {
            return *self;
        }
        let h = gauss_reduce(&self.rep.h);
        let c = h.inverse().apply(self.rep.xi);
        let m = Vec2::new(c.x.round(), c.y.round());
        let xi = self.rep.xi - h.apply(m);
        Self { rep: AffineElement::new(h, xi), reduced: true }
    }

    /// The class of `g x`.
    pub fn act(&self, g: &AffineElement) -> Self {
        Self::new(compose(g, &self.rep))
    }

    /// A different representative of the same class: basis changed by
    /// `gamma` in SL2(Z) and translation shifted by `h m`.
    pub fn rerepresent(&self, gamma: &IMat2, m: [i64; 2]) -> Self {
        let h = self.rep.h;
        let shift = h.apply(Vec2::new(m[0] as f64, m[1] as f64));
        Self::from_parts(h.mul(&imat_to_mat(gamma)), self.rep.xi + shift)
    }

    /// Visits each point of `h Z^2 + xi` in the closed box `xr x yr`.
    pub fn for_each_point_in_box<F: FnMut(Vec2)>(&self, xr: (f64, f64), yr: (f64, f64), mut f: F) {
        let red = self.reduce();
        let (h, xi) = (red.rep.h, red.rep.xi);
        let inv = h.inverse();
        let corners = [
            Vec2::new(xr.0, yr.0) - xi,
            Vec2::new(xr.1, yr.0) - xi,
            Vec2::new(xr.0, yr.1) - xi,
            Vec2::new(xr.1, yr.1) - xi,
        ];
        // coefficient ranges over the box
        let range = |row: Vec2| {
            let vals = corners.map(|c| row.dot(c));
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            ((lo - 1e-9).ceil(), (hi + 1e-9).floor())
        };
        let r0 = range(Vec2::new(inv.a, inv.b));
        let r1 = range(Vec2::new(inv.c, inv.d));
        // iterate over the coefficient with fewer values
        let (outer, bo, bi) = if r0.1 - r0.0 <= r1.1 - r1.0 {
            (r0, h.col0(), h.col1())
        } else {
            (r1, h.col1(), h.col0())
        };
        let mut j = outer.0;
        while j <= outer.1 {
            let base = xi + j * bo;
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            let mut empty = false;
            for (p, d, (a, b)) in [(base.x, bi.x, xr), (base.y, bi.y, yr)] {
                if d == 0.0 {
                    if p < a || p > b {
                        empty = true;
                    }
                } else {
                    let (u, v) = ((a - p) / d, (b - p) / d);
                    lo = lo.max(u.min(v));
                    hi = hi.min(u.max(v));
                }
            }
            if !empty && lo <= hi {
                let mut k = (lo - 1e-9).ceil();
                while k <= (hi + 1e-9).floor() {
                    let p = base + k * bi;
                    if p.x >= xr.0 && p.x <= xr.1 && p.y >= yr.0 && p.y <= yr.1 {
                        f(p);
                    }
                    k += 1.0;
                }
            }
            j += 1.0;
        }
    }

    /// Number of points of the affine lattice in the open disc.
    pub fn count_in_disc(&self, center: Vec2, radius: f64) -> usize {
        let mut n = 0;
        let r2 = radius * radius;
        self.for_each_point_in_box(
            (center.x - radius, center.x + radius),
            (center.y - radius, center.y + radius),
            |p| {
                if (p - center).norm2() < r2 {
                    n += 1;
                }
            },
        );
        n
    }
}

/// `alpha_0 = |shortest vector of h Z^2|^(-1/2)`.
pub fn alpha0(l: &AffineLatticeClass) -> f64 {
    shortest_vector(&l.rep.h).norm().powf(-0.5)
}

/// Panel width for [`alpha0_horocycle_integral`].
const HORO_PANEL: f64 = 1.0 / 32.0;

/// Composite tanh-sinh estimate of `int_{-1}^{1} alpha0(a_t u(s) x) ds` with
/// `u(s) = u(s, 0, 0)`.
///
/// For large `t` the integrand varies on the scale `e^{-2t}`, far below the
/// node spacing, so away from the peak of the shortest vector of `x` (where
/// the panels are split) the nodes act as samples along a long horocycle.
pub fn alpha0_horocycle_integral(x: &AffineLatticeClass, t: f64, level: u32) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(LabError::Domain(format!("need finite t >= 0, got {t}")));
    }
    if level > crate::quad::MAX_LEVEL {
        return Err(LabError::Validation(format!("level {level} above {}", crate::quad::MAX_LEVEL)));
    }
    let h = x.reduce().rep.h;
    let (et, emt) = (t.exp(), (-t).exp());
    let f = |s: f64| {
        let m = Mat2::new(1.0, s, 0.0, 1.0).mul(&h);
        let m = Mat2::new(et * m.a, et * m.b, emt * m.c, emt * m.d);
        shortest_vector(&m).norm().powf(-0.5)
    };
    let mut cuts: Vec<f64> = (0..=64).map(|k| -1.0 + k as f64 * HORO_PANEL).collect();
    let v = shortest_vector(&h);
    if v.y != 0.0 {
        let s0 = -v.x / v.y;
        if s0 > -1.0 && s0 < 1.0 {
            cuts.push(s0);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    Ok(cuts.windows(2).filter(|w| w[1] > w[0]).map(|w| crate::quad::tanh_sinh_level(f, w[0], w[1], level)).sum())
}

/// A point of `(1/n) Z^2`, in the coordinates of the representative's basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaPoint {
    pub num: [i64; 2],
    pub n: u32,
    /// `|xi - h zeta|`.
    pub distance: f64,
}

impl ZetaPoint {
    pub fn coords(&self) -> Vec2 {
        Vec2::new(self.num[0] as f64 / self.n as f64, self.num[1] as f64 / self.n as f64)
    }
}

/// All `xi0` in `(1/n) Z^2` with `|xi - h xi0| < alpha0^-2 / (2n)`, found in a
/// coefficient box of radius 3 around the rounded solution in the reduced
/// basis.
pub fn zeta_candidates(l: &AffineLatticeClass, n: u32) -> Vec<ZetaPoint> {
    let (h, xi) = (l.rep.h, l.rep.xi);
    let tracked = gauss_reduce_tracked(&h);
    let r = tracked.map_or_else(|| gauss_reduce(&h), |t| t.0);
    let hinv = h.inverse();
    let sv = shortest_vector(&h).norm();
    let bound = sv / (2.0 * n as f64);
    let nf = n as f64;
    let c = r.inverse().apply(xi);
    let (k1, k2) = ((c.x * nf).round() as i64, (c.y * nf).round() as i64);
    let mut out = Vec::new();
    for d1 in -3..=3 {
        for d2 in -3..=3 {
            let k = [k1 + d1, k2 + d2];
            let p = (1.0 / nf) * r.apply(Vec2::new(k[0] as f64, k[1] as f64));
            let distance = (xi - p).norm();
            if distance < bound {
                let num = match tracked {
                    Some((_, g)) => [g[0][0] * k[0] + g[0][1] * k[1], g[1][0] * k[0] + g[1][1] * k[1]],
                    None => {
                        let c = hinv.apply(p);
                        [(c.x * nf).round() as i64, (c.y * nf).round() as i64]
                    }
                };
                out.push(ZetaPoint { num, n, distance });
            }
        }
    }
    out
}

/// The unique `zeta_{h, xi}` in `(1/n) Z^2`, if any.
pub fn zeta_point(l: &AffineLatticeClass, n: u32) -> Option<ZetaPoint> {
    zeta_candidates(l, n).into_iter().min_by(|a, b| a.distance.total_cmp(&b.distance))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Height {
    Finite(f64),
    Infinite,
}

impl Height {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Height::Infinite)
    }

    pub fn value(&self) -> f64 {
        match self {
            Height::Finite(v) => *v,
            Height::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightValue {
    pub alpha0: f64,
    pub alpha_n: Height,
    pub beta_n: Height,
    pub n: u32,
    pub t: f64,
}

/// `alpha_n = |xi - h zeta|^(-1/2)` (1 without zeta, infinite on `X[n]`) and
/// `beta_n = alpha_n + 8 n e^t alpha_0`.
pub fn heights(l: &AffineLatticeClass, n: u32, t: f64) -> Result<HeightValue> {
    if n == 0 {
        return Err(LabError::Domain("n must be positive".into()));
    }
    let a0 = alpha0(l);
    let alpha_n = match zeta_point(l, n) {
        None => Height::Finite(1.0),
        Some(z) if z.distance < 1e-12 * a0.powi(-2) => Height::Infinite,
        Some(z) => Height::Finite(z.distance.powf(-0.5)),
    };
    let beta_n = match alpha_n {
        Height::Infinite => Height::Infinite,
        Height::Finite(v) => Height::Finite(v + 8.0 * n as f64 * t.exp() * a0),
    };
    Ok(HeightValue { alpha0: a0, alpha_n, beta_n, n, t })
}

/// Whether the class avoids `{(h, h Z^2)}`, i.e. `xi` is not a lattice point.
pub fn in_x2(l: &AffineLatticeClass) -> bool {
    let c = gauss_reduce(&l.rep.h).inverse().apply(l.rep.xi);
    (c.x - c.x.round()).abs().max((c.y - c.y.round()).abs()) > 1e-12
}

/// Draws from the Haar probability measure.
///
/// The linear part comes from `tau = x + iy` in the modular fundamental
/// domain under the hyperbolic area measure, rotated uniformly; the
/// translation is uniform in the fundamental parallelogram.
pub fn haar_sample<R: Rng + ?Sized>(rng: &mut R) -> AffineLatticeClass {
    let y0 = 3f64.sqrt() / 2.0;
    let (x, y) = loop {
        let x = rng.random::<f64>() - 0.5;
        // inverse CDF of y^-2 on [y0, inf)
        let u = 1.0 - rng.random::<f64>();
        let y = y0 / u;
        if x * x + y * y >= 1.0 {
            break (x, y);
        }
    };
    let s = y.sqrt();
    let h0 = Mat2::new(1.0 / s, x / s, 0.0, s);
    let h = Mat2::rotation(2.0 * PI * rng.random::<f64>()).mul(&h0);
    let c = Vec2::new(rng.random::<f64>(), rng.random::<f64>());
    AffineLatticeClass::from_parts(h, h.apply(c))
}

/// Observables on the space of affine lattices, addressed by preset name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    Constant(f64),
    /// `max(0, 1 - alpha0 / c)`, supported on `{alpha0 <= c}`.
    CuspBump { c: f64 },
}

impl Observable {
    pub fn eval(&self, l: &AffineLatticeClass) -> f64 {
        match *self {
            Observable::Constant(v) => v,
            Observable::CuspBump { c } => (1.0 - alpha0(l) / c).max(0.0),
        }
    }

    /// Parses `const:v=1` or `cusp_bump:c=3`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let value = |key: &str| -> Result<f64> {
            for kv in args.split(',').filter(|p| !p.is_empty()) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| LabError::Validation(format!("malformed observable argument '{kv}'")))?;
                if k.trim() == key {
                    return v
                        .trim()
                        .parse()
                        .map_err(|_| LabError::Validation(format!("bad number '{v}' in observable")));
                }
                return Err(LabError::Validation(format!("unknown observable argument '{k}'")));
            }
            Err(LabError::Validation(format!("observable '{name}' needs {key}=")))
        };
        match name.trim() {
            "cusp_bump" => cusp_bump(value("c")?),
            "const" => Ok(Observable::Constant(value("v")?)),
            other => Err(LabError::Validation(format!("unknown observable '{other}'"))),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Constant(v) => write!(f, "const:v={v}"),
            Observable::CuspBump { c } => write!(f, "cusp_bump:c={c}"),
        }
    }
}

pub fn cusp_bump(c: f64) -> Result<Observable> {
    if c <= FRAC_1_SQRT_2 {
        return Err(LabError::Domain(format!("cusp_bump needs c > 2^-1/2, got {c}")));
    }
    Ok(Observable::CuspBump { c })
}

/// Values of `obs(a_t x0)` at `t = k dt`, `k = 0..=round(T/dt)`.
///
/// The orbit is advanced one step at a time and re-reduced, so `T` may be
/// far larger than `log(f64::MAX)`.
pub fn orbit_samples<F: Fn(&AffineLatticeClass) -> f64>(
    x0: &AffineLatticeClass,
    obs: F,
    t_total: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    if !(t_total > 0.0 && dt > 0.0 && dt <= t_total) {
        return Err(LabError::Domain(format!("need 0 < dt <= T, got dt={dt}, T={t_total}")));
    }
    let steps = (t_total / dt).round() as usize;
    let g = geodesic(dt);
    let mut x = x0.reduce();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(obs(&x));
    for _ in 0..steps {
        x = x.act(&g).reduce();
        out.push(obs(&x));
    }
    Ok(out)
}

/// Trapezoid average of `obs(a_t x0)` over `[0, T]`.
pub fn birkhoff_average<F: Fn(&AffineLatticeClass) -> f64>(
    x0: &AffineLatticeClass,
    obs: F,
    t_total: f64,
    dt: f64,
) -> Result<f64> {
    let v = orbit_samples(x0, obs, t_total, dt)?;
    Ok(trapezoid_mean(&v))
}

pub fn trapezoid_mean(v: &[f64]) -> f64 {
    let n = v.len() - 1;
    if n == 0 {
        return v[0];
    }
    let inner: f64 = v[1..n].iter().sum();
    (inner + 0.5 * (v[0] + v[n])) / n as f64
}

type RealFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// The curve `s -> u(s, phi(s), 0)` on a closed interval.
pub struct CurveU {
    phi: RealFn,
    dphi: RealFn,
    pub domain: (f64, f64),
}

impl CurveU {
    pub fn new(phi: RealFn, dphi: RealFn, domain: (f64, f64)) -> Result<Self> {
        if !(domain.0 < domain.1) {
            return Err(LabError::Validation("empty curve domain".into()));
        }
        Ok(Self { phi, dphi, domain })
    }

    /// `phi = 0` on `[0, 1]`.
    pub fn zero() -> Self {
        Self { phi: Box::new(|_| 0.0), dphi: Box::new(|_| 0.0), domain: (0.0, 1.0) }
    }

    /// `phi(s) = s^k` on `[0, 1]`.
    pub fn monomial(k: u32) -> Self {
        let kf = k as f64;
        Self {
            phi: Box::new(move |s: f64| s.powi(k as i32)),
            dphi: Box::new(move |s: f64| if k == 0 { 0.0 } else { kf * s.powi(k as i32 - 1) }),
            domain: (0.0, 1.0),
        }
    }

    /// Parses `0`, `s`, `s^k` or `sin(s)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.replace(' ', "");
        match s.as_str() {
            "0" => Ok(Self::zero()),
            "s" => Ok(Self::monomial(1)),
            "sin(s)" => Self::new(Box::new(f64::sin), Box::new(f64::cos), (0.0, 1.0)),
            _ => match s.strip_prefix("s^").map(str::parse::<u32>) {
                Some(Ok(k)) => Ok(Self::monomial(k)),
                _ => Err(LabError::Validation(format!("unsupported curve '{spec}'"))),
            },
        }
    }

    pub fn phi(&self, s: f64) -> f64 {
        (self.phi)(s)
    }

    pub fn dphi(&self, s: f64) -> f64 {
        (self.dphi)(s)
    }

    fn check(&self, s: f64) -> Result<()> {
        if s < self.domain.0 || s > self.domain.1 {
            return Err(LabError::Domain(format!("s={s} outside [{}, {}]", self.domain.0, self.domain.1)));
        }
        Ok(())
    }
}

/// `u(s, phi(s), 0)`.
pub fn curve_point(c: &CurveU, s: f64) -> Result<AffineElement> {
    c.check(s)?;
    Ok(horocycle(s, c.phi(s), 0.0))
}

/// Rows `(h11, h12, v1)` and their first and second derivatives.
pub type Jet = [[f64; 3]; 3];

/// A curve `s -> (h(s), v(s))` in ASL2(R) for the Wronskian test.
pub struct WronskianCurve {
    pub point: Box<dyn Fn(f64) -> AffineElement + Send + Sync>,
    /// Analytic jet; central differences are used when absent.
    pub jet: Option<Box<dyn Fn(f64) -> Jet + Send + Sync>>,
    pub domain: (f64, f64),
}

pub fn det3(m: &Jet) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn entries(g: &AffineElement) -> [f64; 3] {
    [g.h.a, g.h.b, g.xi.x]
}

/// Jet of `psi` at `s`, analytic if available, else by central differences
/// with step `1e-4 |domain|`.
pub fn wronskian_jet(psi: &WronskianCurve, s: f64) -> Jet {
    if let Some(j) = &psi.jet {
        return j(s);
    }
    let step = 1e-4 * (psi.domain.1 - psi.domain.0);
    let f0 = entries(&(psi.point)(s));
    let fp = entries(&(psi.point)(s + step));
    let fm = entries(&(psi.point)(s - step));
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        m[0][i] = f0[i];
        m[1][i] = (fp[i] - fm[i]) / (2.0 * step);
        m[2][i] = (fp[i] - 2.0 * f0[i] + fm[i]) / (step * step);
    }
    m
}

/// Determinant of the Wronskian matrix of `(h11, h12, v1)` at `s`.
pub fn wronskian_det(psi: &WronskianCurve, s: f64) -> Result<f64> {
    if s < psi.domain.0 || s > psi.domain.1 {
        return Err(LabError::Domain(format!("s={s} outside curve domain")));
    }
    let g = (psi.point)(s);
    if (g.h.det() - 1.0).abs() > 1e-9 {
        return Err(LabError::Validation(format!("det h(s) = {} is not 1", g.h.det())));
    }
    Ok(det3(&wronskian_jet(psi, s)))
}

/// `theta -> (r_theta, (2R, 0))` on `[0, 2 pi]`.
pub fn rotation_curve(r: f64) -> WronskianCurve {
    WronskianCurve {
        point: Box::new(move |t| AffineElement::new(Mat2::rotation(t), Vec2::new(2.0 * r, 0.0))),
        jet: None,
        domain: (0.0, 2.0 * PI),
    }
}

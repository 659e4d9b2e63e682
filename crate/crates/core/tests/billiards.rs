use orbitlab::billiards::polygon::{polygonal_simulate, PolygonKind, PolygonalModel};
use orbitlab::billiards::reduction::*;
use orbitlab::billiards::*;
use orbitlab::homogeneous::{in_x2, AffineLatticeClass, Vec2};
use orbitlab::rng::stream;
use rand::Rng;

fn table() -> EllipseTable {
    EllipseTable::new(2.0, 1.0, 0.5).unwrap()
}

/// Carlson's symmetric integral `R_F(x, y, z)` by duplication.
fn carlson_rf(mut x: f64, mut y: f64, mut z: f64) -> f64 {
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        let ave = (x + y + z) / 3.0;
        let (dx, dy, dz) = ((ave - x) / ave, (ave - y) / ave, (ave - z) / ave);
        if dx.abs().max(dy.abs()).max(dz.abs()) < 1e-5 {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 + (e2 / 24.0 - 0.1 - 3.0 / 44.0 * e3) * e2 + e3 / 14.0) / ave.sqrt();
        }
    }
}

/// `l, w, d` in closed form: `int_{-inf}^c e ds = 2 R_F(a - c, b - c, lambda - c)`
/// for `c` below every root.
fn lwd_oracle(lambda: f64, t: &EllipseTable) -> [f64; 3] {
    let (a, b, l0) = (t.a, t.b, t.lambda0);
    let below = |c: f64| 2.0 * carlson_rf(a - c, b - c, lambda - c);
    let d = if lambda <= l0 { 0.0 } else { below(l0) - below(0.0) };
    if lambda < b {
        let l = 4.0 * below(lambda);
        [l, l / 4.0 - below(0.0), d]
    } else {
        [2.0 * below(b), 2.0 * (below(b) - below(0.0)), d]
    }
}

/// Richardson-extrapolated central differences of the closed forms.
fn derivative_oracle(lambda: f64, t: &EllipseTable) -> [[f64; 3]; 3] {
    let f = |x: f64| lwd_oracle(x, t);
    let d1 = |h: f64, i: usize| (f(lambda + h)[i] - f(lambda - h)[i]) / (2.0 * h);
    let d2 = |h: f64, i: usize| (f(lambda + h)[i] - 2.0 * f(lambda)[i] + f(lambda - h)[i]) / (h * h);
    // keep the stencil well away from the roots and the barrier parameter
    let gap = [0.0, t.lambda0, t.b, t.a].iter().map(|&q| (lambda - q).abs()).fold(f64::INFINITY, f64::min);
    let h = 2e-3f64.min(0.01 * gap);
    let mut out = [f(lambda), [0.0; 3], [0.0; 3]];
    for i in 0..3 {
        out[1][i] = (4.0 * d1(h / 2.0, i) - d1(h, i)) / 3.0;
        out[2][i] = (4.0 * d2(h / 2.0, i) - d2(h, i)) / 3.0;
    }
    out
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(1e-300)
}

/// Oracle values at `(a, b, lambda0) = (2, 1, 0.5)`, `lambda = 0.75`.
const GOLDEN: [f64; 9] = [
    16.151246559827381,
    2.1999857868364887,
    0.6672948634914291,
    16.865174918876253,
    4.5566371971977508,
    -0.8052662253077806,
    68.031842362851577,
    16.628151172056366,
    3.2022926496807123,
];

#[test]
fn reduction_matches_golden_values() {
    let rd = reduction_data(0.75, &table()).unwrap();
    assert_eq!(rd.case, Case::E);
    let got = [rd.l, rd.w, rd.d, rd.lp, rd.wp, rd.dp, rd.lpp, rd.wpp, rd.dpp];
    for (i, (g, want)) in got.iter().zip(GOLDEN).enumerate() {
        let tol = if i < 3 { 1e-12 } else if i < 6 { 1e-9 } else { 1e-7 };
        assert!(rel(*g, want) < tol, "entry {i}: {g} vs {want}");
    }
}

#[test]
fn reduction_matches_closed_forms_on_grids() {
    let t = table();
    let grid: Vec<f64> = (1..40)
        .map(|i| 0.05 * i as f64)
        .filter(|l| (l - t.b).abs() > 1e-3 && (l - t.lambda0).abs() > 1e-3)
        .collect();
    for lambda in grid {
        let rd = reduction_data(lambda, &t).unwrap();
        let o = derivative_oracle(lambda, &t);
        let got = [[rd.l, rd.w, rd.d], [rd.lp, rd.wp, rd.dp], [rd.lpp, rd.wpp, rd.dpp]];
        for i in 0..3 {
            if o[0][i] == 0.0 {
                assert_eq!(got[0][i], 0.0);
                continue;
            }
            assert!(rel(got[0][i], o[0][i]) < 1e-11, "lambda={lambda} value {i}");
            let (e1, e2) = ((got[1][i] - o[1][i]).abs(), (got[2][i] - o[2][i]).abs());
            assert!(e1 < 1e-8 * o[1][i].abs().max(1.0), "lambda={lambda} first {i}: {} vs {}", got[1][i], o[1][i]);
            assert!(e2 < 1e-5 * o[2][i].abs().max(1.0), "lambda={lambda} second {i}: {} vs {}", got[2][i], o[2][i]);
        }
    }
}

#[test]
fn case_h_identity() {
    let t = table();
    for i in 0..20 {
        let lambda = 1.0 + (i as f64 + 0.5) / 20.0;
        let rd = reduction_data(lambda, &t).unwrap();
        assert_eq!(rd.case, Case::H);
        // 2 int_lambda^a e = 2 int_{-inf}^b e
        let upper = 2.0 * e_moment(lambda, t.a, 0, lambda, &t).unwrap();
        assert!(rel(rd.l, upper) < 1e-10);
    }
}

#[test]
fn halving_the_quadrature_step_is_stable() {
    let t = table();
    for &lambda in &[0.3, 0.75, 0.95, 1.2, 1.8] {
        let fine = reduction_data_at_level(lambda, &t, 8).unwrap();
        let coarse = reduction_data_at_level(lambda, &t, 7).unwrap();
        for (x, y) in [(fine.l, coarse.l), (fine.w, coarse.w), (fine.d, coarse.d)] {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-300), "lambda={lambda}: {x} vs {y}");
        }
    }
}

#[test]
fn psi_lies_in_x2_with_the_displayed_signs() {
    let t = table();
    for &lambda in &[0.6, 0.75, 0.9, 1.3, 1.9] {
        let g = psi_curve(lambda, &t).unwrap();
        assert!((g.h.det() - 1.0).abs() < 1e-9);
        assert!(g.h.a > 0.0 && g.h.b < 0.0 && g.h.c > 0.0 && g.h.d > 0.0);
        assert!(g.xi.x < 0.0 && g.xi.y > 0.0);
        assert!(in_x2(&AffineLatticeClass::new(g)));
    }
    assert!(psi_curve(0.25, &t).is_err());
}

#[test]
fn wronskian_factors_through_lwd() {
    let t = table();
    for &lambda in &[0.6, 0.75, 0.9, 1.3, 1.9] {
        let rd = reduction_data(lambda, &t).unwrap();
        let r = 2.0 * (rd.l * rd.w).sqrt();
        let via_lwd = 4.0 * det_m_lwd(&rd) / r.powi(3);
        let direct = det_mpsi_billiard(lambda, &t).unwrap();
        assert!(rel(direct, via_lwd) < 1e-8, "lambda={lambda}: {direct} vs {via_lwd}");
    }
}

#[test]
fn numeric_and_analytic_jets_agree_in_sign() {
    let t = table();
    let analytic = billiard_curve(t, (0.5, 1.0), true);
    let numeric = billiard_curve(t, (0.5, 1.0), false);
    for i in 1..10 {
        let lam = 0.5 + 0.05 * i as f64;
        let a = orbitlab::homogeneous::wronskian_det(&analytic, lam).unwrap();
        let n = orbitlab::homogeneous::wronskian_det(&numeric, lam).unwrap();
        assert!(a.signum() == n.signum() && rel(n, a) < 1e-3, "{a} vs {n}");
    }
}

#[test]
fn caustic_examples() {
    let t = table();
    assert!((caustic_param(Vec2::ZERO, Vec2::new(1.0, 0.0), &t) - t.b).abs() < 1e-15);
    assert!(caustic_param(Vec2::new(t.a.sqrt(), 0.0), Vec2::new(0.0, 1.0), &t).abs() < 1e-15);
}

#[test]
fn reflections_keep_lambda_and_speed() {
    let t = table();
    let mut count = 0;
    for k in 0..50u64 {
        let mut rng = stream(21, k);
        let lambda = 0.05 + 1.9 * rng.random::<f64>();
        if (lambda - t.b).abs() < 1e-3 {
            continue;
        }
        let s0 = random_state_on_caustic(&t, lambda, &mut rng).unwrap();
        let tr = simulate_opts(&s0, &t, 20, true).unwrap();
        let mut prev = s0;
        for (_, s) in &tr.events {
            assert!((s.v.norm() - 1.0).abs() < 1e-12);
            let before = caustic_param(prev.p, prev.v, &t);
            let after = caustic_param(s.p, s.v, &t);
            assert!((before - after).abs() < 1e-12);
            prev = *s;
            count += 1;
        }
    }
    assert!(count >= 900);
}

#[test]
fn crossing_heights_follow_the_case_split() {
    let t = table();
    for k in 0..10u64 {
        let mut rng = stream(22, k);
        // above the barrier parameter: crossings between the caustic and the boundary
        let lambda = t.lambda0 + (t.b - t.lambda0) * (0.05 + 0.9 * rng.random::<f64>());
        let s0 = random_state_on_caustic(&t, lambda, &mut rng).unwrap();
        let tr = simulate(&s0, &t, 20_000).unwrap();
        assert!(!tr.crossings.is_empty());
        for y in &tr.crossings {
            assert!(y.abs() >= (t.b - lambda).sqrt() - 1e-9 && y.abs() <= t.b.sqrt() + 1e-9, "{y}");
        }
        // below it: every crossing on the positive side is a barrier hit
        let lambda = t.lambda0 * (0.05 + 0.9 * rng.random::<f64>());
        let s0 = random_state_on_caustic(&t, lambda, &mut rng).unwrap();
        let tr = simulate(&s0, &t, 20_000).unwrap();
        assert!(tr.crossings.iter().all(|&y| y < 0.0));
        assert!(!tr.barrier_hits.is_empty());
    }
}

#[test]
fn identical_starts_have_zero_ks() {
    let t = table();
    let mut rng = stream(23, 0);
    let s = random_state_on_caustic(&t, 0.8, &mut rng).unwrap();
    let rep = equidistribution_report(&s, &s, &t, 10_000).unwrap();
    assert_eq!(rep.ks, 0.0);
}

#[test]
fn golden_rectangle_rotation_against_convergents() {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let m = PolygonalModel::new(PolygonKind::Rectangle, 1.0, g, 0.0).unwrap();
    let run = polygonal_simulate(&m, 0.123, 1.0, 20_000).unwrap();
    let rho = run.rotation_number().unwrap();
    // Fibonacci convergents bracket the golden ratio; the estimate sits between them
    let cf = orbitlab::stats::convergents(rho, 1e-4, 20);
    let (p, q) = *cf.last().unwrap();
    assert!((p as f64 / q as f64 - g).abs() < 1e-3);
    assert!(run.period.is_none());
}

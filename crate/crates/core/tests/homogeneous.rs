use orbitlab::homogeneous::*;
use orbitlab::rng::stream;
use proptest::prelude::*;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn elem_close(g: &AffineElement, k: &AffineElement, tol: f64) -> bool {
    close(g.h.a, k.h.a, tol)
        && close(g.h.b, k.h.b, tol)
        && close(g.h.c, k.h.c, tol)
        && close(g.h.d, k.h.d, tol)
        && close(g.xi.x, k.xi.x, tol)
        && close(g.xi.y, k.xi.y, tol)
}

/// A unimodular element built from a product of generators.
fn element(t: f64, s: f64, theta: f64, xi: (f64, f64)) -> AffineElement {
    let h = Mat2::rotation(theta).mul(&Mat2::diag(t.exp(), (-t).exp())).mul(&Mat2::new(1.0, s, 0.0, 1.0));
    AffineElement::new(h, Vec2::new(xi.0, xi.1))
}

fn arb_element() -> impl Strategy<Value = AffineElement> {
    (-1.5f64..1.5, -2.0f64..2.0, 0.0f64..6.3, (-3.0f64..3.0, -3.0f64..3.0))
        .prop_map(|(t, s, th, xi)| element(t, s, th, xi))
}

/// SL2(Z) words in the generators `[[1,1],[0,1]]` and `[[0,-1],[1,0]]`.
fn arb_gamma() -> impl Strategy<Value = IMat2> {
    prop::collection::vec(0u8..3, 0..8).prop_map(|word| {
        let mut g: IMat2 = [[1, 0], [0, 1]];
        for w in word {
            let step: IMat2 = match w {
                0 => [[1, 1], [0, 1]],
                1 => [[1, -1], [0, 1]],
                _ => [[0, -1], [1, 0]],
            };
            g = imat_mul(&g, &step);
        }
        g
    })
}

#[test]
fn compose_examples() {
    let id = AffineElement::IDENTITY;
    assert_eq!(compose(&id, &id), id);
    let t: f64 = 0.7;
    let g = compose(&geodesic(t), &AffineElement::new(Mat2::IDENTITY, Vec2::new(1.0, 0.0)));
    assert!(elem_close(&g, &AffineElement::new(Mat2::diag(t.exp(), (-t).exp()), Vec2::new(t.exp(), 0.0)), 1e-15));
    assert_eq!(geodesic(0.0), id);
    assert_eq!(horocycle(0.0, 0.0, 0.0), id);
    let first = compose(&geodesic(t), &horocycle(0.3, 0.0, 0.0)).h.col0();
    assert!(close(first.x, t.exp(), 1e-15) && first.y == 0.0);
}

#[test]
fn shortest_vector_examples() {
    assert!(close(shortest_vector(&Mat2::IDENTITY).norm(), 1.0, 1e-15));
    let t: f64 = 1.3;
    assert!(close(shortest_vector(&Mat2::diag(t.exp(), (-t).exp())).norm(), (-t).exp(), 1e-14));
    // hexagonal lattice against brute force over |m|, |n| <= 10
    let s = (2.0 / 3f64.sqrt()).sqrt();
    let hex = Mat2::new(s, 0.5 * s, 0.0, 3f64.sqrt() / 2.0 * s);
    let mut brute = f64::INFINITY;
    for m in -10i32..=10 {
        for n in -10i32..=10 {
            if (m, n) != (0, 0) {
                brute = brute.min(hex.apply(Vec2::new(m as f64, n as f64)).norm());
            }
        }
    }
    assert!(close(shortest_vector(&hex).norm(), brute, 1e-14));
    assert!(close(brute, (4.0f64 / 3.0).powf(0.25), 1e-14));
}

#[test]
fn alpha0_examples() {
    assert!(close(alpha0(&AffineLatticeClass::standard(Vec2::ZERO)), 1.0, 1e-15));
    let t: f64 = 2.0;
    let l = AffineLatticeClass::from_parts(Mat2::diag(t.exp(), (-t).exp()), Vec2::ZERO);
    assert!(close(alpha0(&l), (t / 2.0).exp(), 1e-14));
    let mut rng = stream(1, 0);
    let base = haar_sample(&mut rng);
    for k in 0..20 {
        let th = 0.3 * k as f64;
        let rot = AffineLatticeClass::from_parts(Mat2::rotation(th).mul(&base.rep.h), base.rep.xi);
        assert!(close(alpha0(&rot), alpha0(&base), 1e-12));
    }
}

#[test]
fn zeta_and_height_examples() {
    let origin = AffineLatticeClass::standard(Vec2::ZERO);
    let z = zeta_point(&origin, 1).unwrap();
    assert_eq!(z.num, [0, 0]);
    assert!(heights(&origin, 1, 0.0).unwrap().alpha_n.is_infinite());
    assert!(heights(&origin, 1, 0.0).unwrap().beta_n.is_infinite());

    let off = AffineLatticeClass::standard(Vec2::new(0.4, 0.4));
    assert!(zeta_point(&off, 1).is_none());
    assert_eq!(heights(&off, 1, 0.0).unwrap().alpha_n, Height::Finite(1.0));

    let near = AffineLatticeClass::standard(Vec2::new(0.1, 0.0));
    assert_eq!(zeta_point(&near, 1).unwrap().num, [0, 0]);
    let hv = heights(&near, 1, 0.5).unwrap();
    assert!(close(hv.alpha_n.value(), 0.1f64.powf(-0.5), 1e-12));
    assert!(close(hv.beta_n.value(), hv.alpha_n.value() + 8.0 * 0.5f64.exp() * hv.alpha0, 1e-12));
}

#[test]
fn zeta_is_unique_against_exhaustive_search() {
    for k in 0..1000u64 {
        let mut rng = stream(2, k);
        let l = haar_sample(&mut rng).reduce();
        let n = 1 + (k % 3) as u32;
        let bound = shortest_vector(&l.rep.h).norm() / (2.0 * n as f64);
        let nf = n as f64;
        let c = l.rep.h.inverse().apply(l.rep.xi);
        let (c0, c1) = ((c.x * nf).round() as i64, (c.y * nf).round() as i64);
        let mut hits = 0;
        for i in -8..=8 {
            for j in -8..=8 {
                let p = l.rep.h.apply(Vec2::new((c0 + i) as f64 / nf, (c1 + j) as f64 / nf));
                if (l.rep.xi - p).norm() < bound {
                    hits += 1;
                }
            }
        }
        assert!(hits <= 1);
        assert_eq!(zeta_candidates(&l, n).len(), hits);
    }
}

#[test]
fn x_n_membership_gives_infinite_height() {
    for k in 0..200u64 {
        let mut rng = stream(3, k);
        let l = haar_sample(&mut rng);
        let n = 1 + (k % 4) as u32;
        let p = Vec2::new((k % 7) as f64 / n as f64, (k % 5) as f64 / n as f64);
        let on = AffineLatticeClass::from_parts(l.rep.h, l.rep.h.apply(p));
        assert!(heights(&on, n, 1.0).unwrap().beta_n.is_infinite());
        assert!(!heights(&l, n, 1.0).unwrap().beta_n.is_infinite());
    }
}

#[test]
fn in_x2_examples() {
    assert!(!in_x2(&AffineLatticeClass::standard(Vec2::ZERO)));
    assert!(in_x2(&AffineLatticeClass::standard(Vec2::new(0.5, 0.5))));
}

#[test]
fn curve_point_examples() {
    let c = CurveU::monomial(2);
    assert_eq!(curve_point(&c, 0.0).unwrap(), AffineElement::IDENTITY);
    let g = curve_point(&c, 1.0).unwrap();
    assert_eq!(g, AffineElement::new(Mat2::new(1.0, 1.0, 0.0, 1.0), Vec2::new(1.0, 0.0)));
    assert_eq!(g, horocycle(1.0, 1.0, 0.0));
    assert!(curve_point(&c, 1.5).is_err());
}

#[test]
fn rotation_curve_wronskian_is_minus_two_r() {
    for k in 0..20 {
        let th = 0.31 * k as f64;
        let d = wronskian_det(&rotation_curve(0.25), th).unwrap();
        assert!((d + 0.5).abs() < 1e-6, "{d}");
    }
}

#[test]
fn constant_observable_averages_to_one() {
    let x0 = AffineLatticeClass::new(curve_point(&CurveU::monomial(2), 0.3).unwrap());
    let avg = birkhoff_average(&x0, |l| Observable::Constant(1.0).eval(l), 10.0, 0.01).unwrap();
    assert!((avg - 1.0).abs() < 1e-15);
}

#[test]
fn birkhoff_average_is_representative_independent() {
    let obs = cusp_bump(3.0).unwrap();
    let x0 = AffineLatticeClass::new(curve_point(&CurveU::monomial(2), 0.41).unwrap());
    let other = x0.rerepresent(&[[2, 1], [1, 1]], [3, -2]);
    let a = birkhoff_average(&x0, |l| obs.eval(l), 5.0, 0.01).unwrap();
    let b = birkhoff_average(&other, |l| obs.eval(l), 5.0, 0.01).unwrap();
    // rounding differences grow like e^{2t} along the orbit, so keep T short
    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
}

#[test]
fn haar_sampler_is_deterministic() {
    let a = haar_sample(&mut stream(9, 9));
    let b = haar_sample(&mut stream(9, 9));
    assert_eq!(a, b);
}

fn siegel_mean(seed: u64, count: impl Fn(&AffineLatticeClass) -> usize) -> (f64, f64) {
    let mut rng = stream(seed, 0);
    let v: Vec<f64> = (0..100_000).map(|_| count(&haar_sample(&mut rng)) as f64).collect();
    orbitlab::stats::mean_se(&v)
}

#[test]
fn siegel_disc_of_area_two() {
    let r = (2.0 / PI).sqrt();
    let (m, se) = siegel_mean(11, |l| l.count_in_disc(Vec2::new(0.3, -0.2), r));
    assert!((m - 2.0).abs() < 3.0 * se, "{m} +- {se}");
}

#[test]
fn siegel_box() {
    // axis-aligned box of area 1.5
    let (m, se) = siegel_mean(12, |l| {
        let mut n = 0;
        l.for_each_point_in_box((-0.75, 0.75), (0.0, 1.0), |_| n += 1);
        n
    });
    assert!((m - 1.5).abs() < 3.0 * se, "{m} +- {se}");
}

#[test]
fn horocycle_integral_of_standard_lattice() {
    // at t = 0 the lattice u(s) Z^2 has shortest vector length |(s, 1)| or 1
    let x = AffineLatticeClass::standard(Vec2::ZERO);
    let v = alpha0_horocycle_integral(&x, 0.0, 8).unwrap();
    assert!((v - 2.0).abs() < 1e-12, "{v}");
    assert!(alpha0_horocycle_integral(&x, -1.0, 6).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn group_axioms(g1 in arb_element(), g2 in arb_element(), g3 in arb_element()) {
        let left = compose(&compose(&g1, &g2), &g3);
        let right = compose(&g1, &compose(&g2, &g3));
        prop_assert!(elem_close(&left, &right, 1e-12));
        prop_assert!(elem_close(&compose(&g1, &g1.inverse()), &AffineElement::IDENTITY, 1e-12));
        prop_assert!(elem_close(&compose(&g1.inverse(), &g1), &AffineElement::IDENTITY, 1e-12));
    }

    #[test]
    fn class_functions_ignore_representative(
        seed in 0u64..1_000_000,
        gamma in arb_gamma(),
        m in (-5i64..=5, -5i64..=5),
        n in 1u32..4,
    ) {
        let l = haar_sample(&mut stream(seed, 0));
        let other = l.rerepresent(&gamma, [m.0, m.1]);
        prop_assert!(close(alpha0(&l), alpha0(&other), 1e-10));
        prop_assert_eq!(in_x2(&l), in_x2(&other));
        let (a, b) = (heights(&l, n, 0.5).unwrap(), heights(&other, n, 0.5).unwrap());
        prop_assert!(close(a.alpha_n.value(), b.alpha_n.value(), 1e-10));
        prop_assert!(close(a.beta_n.value(), b.beta_n.value(), 1e-10));
    }

    #[test]
    fn alpha0_is_bounded_below(seed in 0u64..1_000_000, t in -5.0f64..5.0) {
        let l = haar_sample(&mut stream(seed, 1)).act(&geodesic(t));
        prop_assert!(alpha0(&l) >= FRAC_1_SQRT_2 * (1.0 - 1e-12));
    }

    #[test]
    fn reduction_keeps_the_lattice(g in arb_element()) {
        let r = gauss_reduce(&g.h);
        prop_assert!(close(r.det(), g.h.det(), 1e-10));
        // the reduced basis generates the same lattice: integer change of basis
        let c = g.h.inverse().mul(&r);
        for v in [c.a, c.b, c.c, c.d] {
            prop_assert!((v - v.round()).abs() < 1e-8);
        }
        prop_assert!(r.col0().norm() <= r.col1().norm() * (1.0 + 1e-12));
    }
}

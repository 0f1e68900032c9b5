mod common;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_shape::eigensolver::descent::{lp_mass, quotient, Discretization};
use spectral_shape::eigensolver::fem2d::P1;
use spectral_shape::eigensolver::radial::Radial;
use spectral_shape::eigensolver::*;
use spectral_shape::geometry::{ConvexPolygon, Domain};
use spectral_shape::spectral_exact::{annulus_mu_lower_bound, pi_p_value};
use spectral_shape::Error;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn square() -> Domain {
    Domain::polygon(ConvexPolygon::unit_square())
}

fn disc(r: f64) -> Domain {
    Domain::polygon(ConvexPolygon::disc(r).unwrap())
}

fn solve(domain: &Domain, p: f64) -> EigenEstimate {
    eigen(domain, p, &cfg()).unwrap()
}

fn assert_rel(value: f64, expected: f64, tol: f64) {
    assert!(
        (value - expected).abs() <= tol * expected.abs(),
        "{value} vs {expected} (tolerance {tol})"
    );
}

#[test]
fn unit_square_linear() {
    let e = solve(&square(), 2.0);
    assert_rel(e.extrapolated, 2.0 * PI * PI, 5e-3);
    assert!((e.finest() - e.extrapolated).abs() <= e.error_indicator);
}

#[test]
fn disc_linear_matches_bessel_root() {
    let e = solve(&disc(1.0), 2.0);
    assert_rel(e.extrapolated, common::j01().powi(2), 1e-2);
}

#[test]
fn rectangles_linear_are_separable() {
    for l in [2.0, 4.0] {
        let e = solve(&Domain::rectangle(1.0, l).unwrap(), 2.0);
        assert_rel(e.extrapolated, PI * PI * (1.0 + 1.0 / (l * l)), 1e-2);
    }
}

#[test]
fn radial_interval_and_disc() {
    for p in [1.5, 2.0, 3.0] {
        let e = eigen_radial(1, p, RadialShape::Ball, 1024, &cfg()).unwrap();
        assert_rel(e.extrapolated, (pi_p_value(p) / 2.0).powf(p), 1e-6);
    }
    let e = eigen_radial(2, 2.0, RadialShape::Ball, 1024, &cfg()).unwrap();
    assert_rel(e.extrapolated, common::j01().powi(2), 1e-5);
}

#[test]
fn radial_matches_shooting_in_several_dimensions() {
    for (d, p) in [(3, 1.5), (10, 3.0), (100, 3.0), (50, 1.3), (2, 8.0)] {
        let exact = common::shooting_ball(d, p);
        let e = eigen_radial(d, p, RadialShape::Ball, 4096, &cfg()).unwrap();
        let tol = e.error_indicator + 1e-7 * exact;
        assert!(
            (e.extrapolated - exact).abs() <= tol,
            "d={d} p={p}: {} vs {exact}",
            e.extrapolated
        );
    }
}

#[test]
fn annulus_dominates_explicit_bound() {
    let (r, big_r) = (1e-3, 0.1);
    let e = eigen_radial(2, 1.5, RadialShape::Annulus { inner: r, outer: big_r }, 4096, &cfg()).unwrap();
    let bound = annulus_mu_lower_bound(2, 1.5, r, big_r).unwrap();
    assert!(
        e.extrapolated - e.error_indicator >= bound,
        "{} < {bound}",
        e.extrapolated
    );
}

#[test]
fn disjoint_unions() {
    let one = solve(&square(), 2.0);
    let two = eigen_disjoint_union(&[one.clone(), one.clone()]).unwrap();
    assert_eq!(two.extrapolated, one.extrapolated);

    let big = solve(&Domain::polygon(ConvexPolygon::rectangle(2.0, 2.0).unwrap()), 2.0);
    let u = eigen_disjoint_union(&[one.clone(), big]).unwrap();
    assert_eq!(u.method, EigenMethod::Union);
    assert_rel(u.extrapolated, 2.0 * PI * PI / 4.0, 5e-3);

    let single = eigen_disjoint_union(std::slice::from_ref(&one)).unwrap();
    assert_eq!(single, one);

    assert!(matches!(eigen_disjoint_union(&[]), Err(Error::InvalidParameter(_))));
    let other = solve(&square(), 3.0);
    assert!(eigen_disjoint_union(&[one, other]).is_err());
}

#[test]
fn planar_range_is_enforced() {
    assert!(eigen_2d(&square(), 1.05, &cfg()).is_err());
    assert!(eigen_2d(&square(), 17.0, &cfg()).is_err());
    assert!(eigen_radial(2, 2.0, RadialShape::Ball, 128, &cfg()).is_err());
    let bad = SolverConfig { levels: 1, ..cfg() };
    assert!(eigen_2d(&square(), 2.0, &bad).is_err());
}

#[test]
fn iteration_cap_reports_best_quotient() {
    let tight = SolverConfig { max_iter: 3, ..cfg() };
    match eigen_2d(&square(), 3.0, &tight) {
        Err(Error::NonConvergence { best_quotient, .. }) => assert!(best_quotient.is_finite() && best_quotient > 0.0),
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn scaling_law() {
    for p in [1.5, 2.0, 3.0] {
        let base = solve(&square(), p).extrapolated;
        for t in [0.5, 2.0] {
            let scaled = solve(&square().scaled(t).unwrap(), p).extrapolated;
            assert_rel(scaled * t.powf(p), base, 1e-2);
        }
    }
}

#[test]
fn domain_monotonicity() {
    // the disc polygon inscribed in the unit square
    let inner = Domain::polygon(
        ConvexPolygon::disc(0.5)
            .unwrap()
            .translated(spectral_shape::geometry::Point::new(0.5, 0.5)),
    );
    for p in [1.5, 2.0, 3.0] {
        let outer = solve(&square(), p);
        let inside = solve(&inner, p);
        assert!(
            outer.extrapolated <= inside.extrapolated + outer.error_indicator + inside.error_indicator,
            "p={p}"
        );
    }
}

#[test]
fn p_times_scale_nondecreasing_on_square() {
    let ps = [1.2, 1.5, 2.0, 3.0, 5.0, 8.0];
    let values: Vec<f64> = ps.iter().map(|&p| p * solve(&square(), p).scale().0).collect();
    for w in values.windows(2) {
        assert!(w[1] >= w[0] * (1.0 - 5e-3), "{values:?}");
    }
}

#[test]
fn ball_containment_bound() {
    for q in [1.5, 3.0] {
        let ball = eigen_radial(2, q, RadialShape::Ball, 4096, &cfg()).unwrap().scale().0;
        for poly in common::random_polygons(11, 3) {
            let rho = poly.inradius();
            let (s, err) = solve(&Domain::polygon(poly), q).scale();
            assert!(s - err <= ball / rho, "q={q}: {s} > {}", ball / rho);
        }
    }
}

#[test]
fn cylinder_sandwich() {
    for p in [1.5, 3.0] {
        let pp = pi_p_value(p);
        for l in [1.0, 2.0, 4.0, 8.0] {
            let e = solve(&Domain::rectangle(1.0, l).unwrap(), p);
            let a = pp.powf(p) * (1.0 + l.powf(-p));
            let b = (pp * pp * (1.0 + 1.0 / (l * l))).powf(p / 2.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            assert!(
                e.extrapolated >= lo * 0.99 && e.extrapolated <= hi * 1.01,
                "p={p} L={l}: {} not in [{lo}, {hi}]",
                e.extrapolated
            );
        }
    }
}

#[test]
fn cylinder_limit() {
    let p = 3.0;
    let pp = pi_p_value(p);
    let scales: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|&l| solve(&Domain::rectangle(1.0, l).unwrap(), p).scale().0)
        .collect();
    for w in scales.windows(2) {
        assert!(w[1] <= w[0], "{scales:?}");
    }
    assert!((scales[4] - pp).abs() < 0.02 * pp, "{} vs {pp}", scales[4]);
}

#[test]
fn section_bound() {
    for p in [1.5, 3.0] {
        for poly in common::random_polygons(5, 3) {
            let bound = pi_p_value(p) / poly.max_section_length();
            let (s, _) = solve(&Domain::polygon(poly), p).scale();
            assert!(s >= bound * 0.99, "p={p}: {s} < {bound}");
        }
    }
}

fn gradient_check<D: Discretization>(disc: &D, rng: &mut ChaCha8Rng) {
    for p in [1.5, 3.0] {
        let u: Vec<f64> = (0..disc.dofs()).map(|_| rng.random_range(0.5..1.5)).collect();
        let mut g = vec![0.0; u.len()];
        quotient(disc, p, &u, Some(&mut g));
        for _ in 0..20 {
            let v: Vec<f64> = (0..u.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h = 1e-5;
            let plus: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
            let minus: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - h * b).collect();
            let fd = (quotient(disc, p, &plus, None) - quotient(disc, p, &minus, None)) / (2.0 * h);
            let an: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "p={p}: {an} vs {fd}");
        }
    }
}

#[test]
fn quotient_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (hier, _) = build_hierarchy(&disc(1.0), 1, 6, None).unwrap();
    gradient_check(&P1::new(&hier.levels[0]).unwrap(), &mut rng);
    gradient_check(&Radial::new(5, RadialShape::Ball, 64).unwrap(), &mut rng);
}

#[test]
fn eigenfunction_is_normalized_and_nonnegative() {
    let domain = Domain::polygon(ConvexPolygon::regular(6, 1.0).unwrap());
    let (hier, _) = build_hierarchy(&domain, 2, 8, None).unwrap();
    for p in [1.5, 3.0] {
        let e = eigen_on_hierarchy(&hier, p, &cfg()).unwrap();
        let fine = P1::new(hier.levels.last().unwrap()).unwrap();
        let u = fine.from_nodal(&e.eigenfunction);
        assert!((lp_mass(fine.mass(), p, &u, None) - 1.0).abs() < 1e-10);
        assert!(e.eigenfunction.iter().all(|&x| x >= 0.0));
    }
}

#[test]
fn dilated_ball_follows_scaling() {
    let one = eigen(&Domain::ball(3, 1.0).unwrap(), 2.5, &cfg()).unwrap();
    let half = eigen(&Domain::ball(3, 0.5).unwrap(), 2.5, &cfg()).unwrap();
    assert_rel(half.extrapolated, one.extrapolated * 2f64.powf(2.5), 1e-12);
}

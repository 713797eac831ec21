use std::f64::consts::{FRAC_PI_2, PI, TAU};

use arcmean::curves::tennis_ball_xyz;
use arcmean::geometry::geodesic_distance_from_chord;
use arcmean::{
    geodesic_distance, mean_point_to_sphere, point_to_curve_mean, point_to_curve_min, CurveDomain, CurveSpec,
    QuadratureRule, Rotation, SpherePoint, SphericalCurve, UnitVector,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn point() -> impl Strategy<Value = SpherePoint> {
    (-1.0f64..=1.0, 0.0f64..TAU).prop_map(|(z, phi)| SpherePoint::new(z.acos(), phi).unwrap())
}

fn rotation() -> impl Strategy<Value = Rotation> {
    any::<u64>().prop_map(|s| Rotation::random(&mut ChaCha8Rng::seed_from_u64(s)))
}

fn gl() -> QuadratureRule {
    QuadratureRule::gauss_legendre(64, 1e-11).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geodesic_is_a_metric(p in point(), q in point(), r in point()) {
        let (u, v, w) = (p.to_unit_vector(), q.to_unit_vector(), r.to_unit_vector());
        let d = geodesic_distance(&u, &v);
        prop_assert!((0.0..=PI).contains(&d));
        prop_assert_eq!(d, geodesic_distance(&v, &u));
        prop_assert!(d <= geodesic_distance(&u, &w) + geodesic_distance(&w, &v) + 1e-12);
        prop_assert!((geodesic_distance(&u, &u.antipode()) - PI).abs() < 1e-7);
        prop_assert!((d - geodesic_distance_from_chord(&u, &v)).abs() < 1e-7);
    }

    #[test]
    fn geodesic_is_rotation_invariant(p in point(), q in point(), rot in rotation()) {
        let (u, v) = (p.to_unit_vector(), q.to_unit_vector());
        let d = geodesic_distance_from_chord(&u, &v);
        let dr = geodesic_distance_from_chord(&rot.apply(&u), &rot.apply(&v));
        prop_assert!((d - dr).abs() < 1e-13);
    }

    #[test]
    fn point_to_sphere_mean_is_half_pi(p in point()) {
        let r = mean_point_to_sphere(&p.to_unit_vector(), &QuadratureRule::gauss_legendre(16, 1e-8).unwrap()).unwrap();
        prop_assert!((r.value - FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn arc_length_is_additive(a in 0.2f64..1.3, split in 0.05f64..0.95) {
        let seam = SphericalCurve::tennis_ball(a).unwrap();
        let (t0, t1) = (0.3, 3.9);
        let tm = t0 + split * (t1 - t0);
        let len = |lo: f64, hi: f64| {
            seam.clone().with_domain(CurveDomain::new(lo, hi).unwrap()).arc_length(&gl()).unwrap().value
        };
        let whole = len(t0, t1);
        prop_assert!((len(t0, tm) + len(tm, t1) - whole).abs() < 1e-8 * whole.max(1.0));
    }

    #[test]
    fn doubling_the_great_circle_domain(p in point()) {
        let once = SphericalCurve::great_circle().with_domain(CurveDomain::new(0.0, 1.0).unwrap());
        let twice = SphericalCurve::great_circle();
        let rule = QuadratureRule::curve_default();
        let (l1, l2) = (once.arc_length(&rule).unwrap().value, twice.arc_length(&rule).unwrap().value);
        prop_assert!((l2 - 2.0 * l1).abs() < 1e-9);
        let (s1, s2) = (
            point_to_curve_mean(&once, &p, &rule).unwrap().value,
            point_to_curve_mean(&twice, &p, &rule).unwrap().value,
        );
        prop_assert!((s1 - s2).abs() < 1e-10);
        prop_assert!((s1 - FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn nearest_distance_bounds_every_sample(p in point(), a in 0.2f64..1.3) {
        let seam = SphericalCurve::tennis_ball(a).unwrap();
        let m = point_to_curve_min(&seam, &p, 4096).unwrap();
        let u = p.to_unit_vector();
        let brute = (0..20_000)
            .map(|i| {
                let x = tennis_ball_xyz(a, 4.0 * PI * i as f64 / 20_000.0);
                geodesic_distance_from_chord(&u, &UnitVector::new(x[0], x[1], x[2]).unwrap())
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!(m.distance <= brute + 1e-12);
        // near the curve the sampled minimum is only as good as half the
        // sample spacing (speed <= 3)
        prop_assert!(brute - m.distance < 0.5 * 3.0 * 4.0 * PI / 20_000.0, "brute {brute} min {}", m.distance);
        let at = seam.position(m.t);
        prop_assert!((geodesic_distance_from_chord(&u, &at) - m.distance).abs() < 1e-12);
    }

    #[test]
    fn rotated_curves_keep_their_length(rot in rotation(), b in 0.05f64..0.7) {
        let c = SphericalCurve::wavy_circle(b).unwrap();
        let rule = QuadratureRule::curve_default();
        let l = c.arc_length(&rule).unwrap().value;
        let lr = c.rotated(rot).arc_length(&rule).unwrap().value;
        prop_assert!((l - lr).abs() < 1e-8);
    }

    #[test]
    fn curve_spec_round_trips(a in 0.1f64..1.5, rot in rotation()) {
        let c = SphericalCurve::tennis_ball(a).unwrap().rotated(rot);
        let json = serde_json::to_string(&CurveSpec::from(&c)).unwrap();
        let back = CurveSpec::parse(&json).unwrap().build().unwrap();
        for i in 0..16 {
            let t = i as f64 * 0.77;
            let (x, y) = (c.position(t), back.position(t));
            prop_assert!(x.chord_squared(&y) < 1e-28);
        }
    }
}

#[test]
fn seam_length_is_close_to_4pi_at_published_amplitude() {
    let l = SphericalCurve::tennis_ball(0.7037).unwrap().arc_length(&QuadratureRule::curve_default()).unwrap();
    assert!((l.value - 4.0 * PI).abs() < 2e-3);
}

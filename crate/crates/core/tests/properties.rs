use std::f64::consts::PI;

use proptest::prelude::*;

use embox::geometry::{
    convex_overlap_sat, footprint_vertices, signed_outside_margin, ConvexPolygon, Point2, Pose, VehicleParams,
};
use embox::harness::experiments::growth_rate;
use embox::harness::export::{format_sig, parse_trajectory_csv, trajectory_csv};
use embox::kinematics::{advance_pose, State, TimedState};

fn polygon(cx: f64, cy: f64, r: f64, angles: &[f64]) -> ConvexPolygon {
    let mut a = angles.to_vec();
    a.sort_by(f64::total_cmp);
    a.dedup_by(|x, y| (*x - *y).abs() < 1e-2);
    ConvexPolygon::new(a.iter().map(|t| Point2::new(cx + r * t.cos(), cy + r * t.sin())).collect()).unwrap()
}

fn angles() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..2.0 * PI, 3..9).prop_filter("spread", |a| {
        let mut s = a.clone();
        s.sort_by(f64::total_cmp);
        s.dedup_by(|x, y| (*x - *y).abs() < 1e-2);
        s.len() >= 3 && s.windows(2).all(|w| w[1] - w[0] < PI - 0.1) && s[0] + 2.0 * PI - s[s.len() - 1] < PI - 0.1
    })
}

fn ray_inside(p: Point2, ring: &[Point2]) -> bool {
    let mut inside = false;
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y) {
            inside = !inside;
        }
    }
    inside
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn footprint_is_rigidly_equivariant(
        x in -50.0..50.0f64, y in -50.0..50.0f64, th in -PI..PI,
        dx in -20.0..20.0f64, dy in -20.0..20.0f64, rot in -PI..PI,
    ) {
        let car = VehicleParams::passenger_car();
        let base = footprint_vertices(Pose::new(x, y, th), &car);
        let (s, c) = rot.sin_cos();
        let moved = Pose::new(c * x - s * y + dx, s * x + c * y + dy, th + rot);
        let got = footprint_vertices(moved, &car);
        for (p, q) in base.vertices().iter().zip(got.vertices()) {
            let expect = Point2::new(c * p.x - s * p.y + dx, s * p.x + c * p.y + dy);
            prop_assert!(expect.distance(*q) < 1e-9);
        }
    }

    #[test]
    fn arcs_compose(
        th in -PI..PI, kappa in -0.4..0.4f64, s1 in 0.0..5.0f64, s2 in 0.0..5.0f64,
    ) {
        let p = Pose::new(1.0, -2.0, th);
        let two = advance_pose(advance_pose(p, kappa, s1), kappa, s2);
        let one = advance_pose(p, kappa, s1 + s2);
        prop_assert!(two.position().distance(one.position()) < 1e-9);
        prop_assert!((two.theta - one.theta).abs() < 1e-12);
        prop_assert!(one.position().distance(p.position()) <= s1 + s2 + 1e-12);
    }

    #[test]
    fn margin_sign_matches_ray_casting(
        a in angles(), r in 0.5..5.0f64, px in -6.0..6.0f64, py in -6.0..6.0f64,
    ) {
        let poly = polygon(0.0, 0.0, r, &a);
        let p = Point2::new(px, py);
        let m = signed_outside_margin(p, poly.vertices());
        if m.abs() > 1e-9 {
            prop_assert_eq!(m < 0.0, ray_inside(p, poly.vertices()));
        }
    }

    #[test]
    fn sat_is_symmetric_and_detects_shared_centres(
        a in angles(), b in angles(), ra in 0.5..3.0f64, rb in 0.5..3.0f64,
        dx in -8.0..8.0f64, dy in -8.0..8.0f64,
    ) {
        let p = polygon(0.0, 0.0, ra, &a);
        let q = polygon(dx, dy, rb, &b);
        prop_assert_eq!(convex_overlap_sat(&p, &q), convex_overlap_sat(&q, &p));
        prop_assert!(convex_overlap_sat(&p, &polygon(0.0, 0.0, rb, &b)));
        if (dx * dx + dy * dy).sqrt() > ra + rb + 1e-6 {
            prop_assert!(!convex_overlap_sat(&p, &q));
        }
    }

    #[test]
    fn nine_digit_formatting_round_trips(v in prop::num::f64::NORMAL) {
        let back: f64 = format_sig(v).parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-9 * v.abs());
    }

    #[test]
    fn csv_round_trip_is_close(rows in prop::collection::vec(prop::array::uniform6(-1e3..1e3f64), 1..20)) {
        let traj: Vec<TimedState> = rows
            .iter()
            .map(|r| TimedState::new(r[0], State::new(r[1], r[2], r[3], r[4], r[5])))
            .collect();
        let back = parse_trajectory_csv(&trajectory_csv(&traj)).unwrap();
        prop_assert_eq!(back.len(), traj.len());
        for (a, b) in traj.iter().zip(&back) {
            let pairs = [(a.t, b.t), (a.state.x, b.state.x), (a.state.phi, b.state.phi)];
            for (u, w) in pairs {
                prop_assert!((u - w).abs() <= 5e-9 * u.abs());
            }
        }
    }

    #[test]
    fn growth_rate_sign(n in 1usize..500, m in 1usize..500) {
        let r = growth_rate(n, m);
        prop_assert_eq!(r > 0.0, m > n);
        prop_assert!((r * n as f64 + n as f64 - m as f64).abs() < 1e-9);
    }
}

//! Planar primitives: vehicle footprints, embodied boxes, convex overlap
//! predicates and clearance.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::embodied_box::BoxExtents;
use crate::error::GeometryError;

/// Two polygons whose projections overlap by no more than this are treated
/// as touching, not overlapping.
pub const CONTACT_TOLERANCE: f64 = 1e-9;

const DUPLICATE_VERTEX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Self) -> Self {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Self) -> Self {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Self {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Self {
        Point2::new(-self.x, -self.y)
    }
}

/// Rear-axle midpoint position and heading.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Axis-aligned bounding box, used for cheap pre-filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point2,
    pub max: Point2,
}

impl Aabb {
    pub fn from_points(points: &[Point2]) -> Self {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Self { min, max }
    }

    pub fn inflate(self, margin: f64) -> Self {
        Self {
            min: Point2::new(self.min.x - margin, self.min.y - margin),
            max: Point2::new(self.max.x + margin, self.max.y + margin),
        }
    }

    pub fn union(self, other: Self) -> Self {
        Self {
            min: Point2::new(self.min.x.min(other.min.x), self.min.y.min(other.min.y)),
            max: Point2::new(self.max.x.max(other.max.x), self.max.y.max(other.max.y)),
        }
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// A strictly convex polygon with counter-clockwise vertex storage.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Validates and stores `vertices`. Clockwise input is reversed so that
    /// storage is always counter-clockwise.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFiniteVertex(i));
        }
        let n = vertices.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if vertices[i].distance(vertices[j]) <= DUPLICATE_VERTEX_TOLERANCE {
                    return Err(GeometryError::DuplicateVertex(i, j));
                }
            }
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) <= 0.0 {
                return Err(GeometryError::NotStrictlyConvex((i + 1) % n));
            }
        }
        Ok(Self { vertices })
    }

    /// Skips validation; the caller guarantees a CCW strictly convex ring.
    pub(crate) fn from_ccw_unchecked(vertices: Vec<Point2>) -> Self {
        debug_assert!(vertices.len() >= 3);
        Self { vertices }
    }

    pub fn rectangle(min: Point2, max: Point2) -> Result<Self, GeometryError> {
        Self::new(vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        polygon_area(self)
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.vertices.len() as f64;
        let sum = self.vertices.iter().fold(Point2::default(), |acc, p| acc + *p);
        sum * (1.0 / n)
    }

    /// Minkowski-style outward offset of each edge by `margin`, rebuilt as the
    /// intersection of the shifted edge lines.
    pub fn offset(&self, margin: f64) -> Self {
        if margin == 0.0 {
            return self.clone();
        }
        let n = self.vertices.len();
        let lines: Vec<(Point2, Point2)> = (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let d = b - a;
                let len = d.norm();
                let normal = Point2::new(d.y / len, -d.x / len);
                (a + normal * margin, d)
            })
            .collect();
        let vertices = (0..n)
            .map(|i| {
                let (p0, d0) = lines[(i + n - 1) % n];
                let (p1, d1) = lines[i];
                let denom = d0.cross(d1);
                let t = (p1 - p0).cross(d1) / denom;
                p0 + d0 * t
            })
            .collect();
        Self::from_ccw_unchecked(vertices)
    }
}

impl<'de> Deserialize<'de> for ConvexPolygon {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let vertices = Vec::<Point2>::deserialize(deserializer)?;
        ConvexPolygon::new(vertices).map_err(serde::de::Error::custom)
    }
}

/// Geometric and kinematic limits of the ego vehicle.
///
/// `front_length` is the longitudinal distance from the rear-axle midpoint to
/// the front bumper and `rear_length` the distance to the rear bumper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub front_length: f64,
    pub wheelbase: f64,
    pub rear_length: f64,
    pub width: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub v_max: f64,
    pub phi_max: f64,
    pub omega_max: f64,
}

impl VehicleParams {
    /// Full-size passenger car used in simulation.
    pub const fn passenger_car() -> Self {
        Self {
            front_length: 0.96,
            wheelbase: 2.80,
            rear_length: 0.929,
            width: 1.942,
            a_min: -0.75,
            a_max: 0.75,
            v_max: 5.0,
            phi_max: 0.7,
            omega_max: 0.5,
        }
    }

    /// Small-scale indoor test platform.
    pub const fn scale_car() -> Self {
        Self {
            front_length: 0.036,
            wheelbase: 0.143,
            rear_length: 0.032,
            width: 0.191,
            a_min: -0.02,
            a_max: 0.02,
            v_max: 0.25,
            phi_max: 0.38,
            omega_max: 0.10,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width
    }

    pub fn length(&self) -> f64 {
        self.front_length + self.rear_length
    }

    /// Largest curvature magnitude reachable at full steering lock.
    pub fn max_curvature(&self) -> f64 {
        self.phi_max.tan() / self.wheelbase
    }

    /// Checks field ranges. Admissibility of the embodied-box model is a
    /// separate question, see [`crate::embodied_box::check_vehicle_admissible`].
    pub fn validate(&self) -> Result<(), GeometryError> {
        let fields = [
            ("front_length", self.front_length),
            ("wheelbase", self.wheelbase),
            ("rear_length", self.rear_length),
            ("width", self.width),
            ("a_min", self.a_min),
            ("a_max", self.a_max),
            ("v_max", self.v_max),
            ("phi_max", self.phi_max),
            ("omega_max", self.omega_max),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(GeometryError::InvalidParameter { name, value });
            }
        }
        let positive = [
            ("front_length", self.front_length),
            ("wheelbase", self.wheelbase),
            ("rear_length", self.rear_length),
            ("width", self.width),
            ("a_max", self.a_max),
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
        ];
        for (name, value) in positive {
            if value <= 0.0 {
                return Err(GeometryError::InvalidParameter { name, value });
            }
        }
        if self.a_min >= 0.0 {
            return Err(GeometryError::InvalidParameter { name: "a_min", value: self.a_min });
        }
        if self.phi_max <= 0.0 || self.phi_max >= std::f64::consts::FRAC_PI_2 {
            return Err(GeometryError::InvalidParameter { name: "phi_max", value: self.phi_max });
        }
        Ok(())
    }
}

/// Corners of a pose-aligned rectangle in role order: front-left (A),
/// front-right (B), rear-right (C), rear-left (D).
pub type Corners = [Point2; 4];

/// Rectangle corners for a body extending `forward`/`backward` along the
/// heading and `left`/`right` across it.
pub fn oriented_rect_corners(
    pose: Pose,
    forward: f64,
    backward: f64,
    left: f64,
    right: f64,
) -> Corners {
    let (s, c) = pose.theta.sin_cos();
    let at = |lon: f64, lat: f64| Point2::new(pose.x + lon * c - lat * s, pose.y + lon * s + lat * c);
    [
        at(forward, left),
        at(forward, -right),
        at(-backward, -right),
        at(-backward, left),
    ]
}

/// Footprint corners A, B, C, D in role order.
pub fn footprint_corners(pose: Pose, params: &VehicleParams) -> Corners {
    let hw = params.half_width();
    oriented_rect_corners(pose, params.front_length, params.rear_length, hw, hw)
}

/// Embodied-box corners A′, B′, C′, D′ in role order.
pub fn embodied_corners(pose: Pose, params: &VehicleParams, ext: &BoxExtents) -> Corners {
    let hw = params.half_width();
    oriented_rect_corners(
        pose,
        params.front_length + ext.e_up,
        params.rear_length + ext.e_down,
        hw + ext.e_left,
        hw + ext.e_right,
    )
}

/// Role order A, B, C, D runs clockwise; storage order is A, D, C, B.
pub fn corners_to_polygon(corners: &Corners) -> ConvexPolygon {
    ConvexPolygon::from_ccw_unchecked(vec![corners[0], corners[3], corners[2], corners[1]])
}

pub fn footprint_vertices(pose: Pose, params: &VehicleParams) -> ConvexPolygon {
    corners_to_polygon(&footprint_corners(pose, params))
}

pub fn embodied_vertices(pose: Pose, params: &VehicleParams, ext: &BoxExtents) -> ConvexPolygon {
    corners_to_polygon(&embodied_corners(pose, params, ext))
}

fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let twice: f64 = (0..n).map(|i| vertices[i].cross(vertices[(i + 1) % n])).sum();
    0.5 * twice
}

/// Shoelace area.
pub fn polygon_area(poly: &ConvexPolygon) -> f64 {
    signed_area(&poly.vertices).abs()
}

/// Sum of the triangle areas `p` forms with every edge, minus the polygon
/// area. Zero for points inside or on the boundary, positive outside.
pub fn point_outside_margin(p: Point2, poly: &ConvexPolygon) -> f64 {
    outside_margin(p, &poly.vertices, polygon_area(poly))
}

/// Slice form of [`point_outside_margin`] for hot loops where the ring area is
/// already known.
pub fn outside_margin(p: Point2, ring: &[Point2], ring_area: f64) -> f64 {
    let n = ring.len();
    let mut twice = 0.0;
    for i in 0..n {
        let a = ring[i] - p;
        let b = ring[(i + 1) % n] - p;
        twice += a.cross(b).abs();
    }
    0.5 * twice - ring_area
}

/// [`outside_margin`] outside the ring; inside, minus twice the smallest
/// triangle `p` forms with an edge, so the value keeps a gradient through the
/// interior and is negative exactly for interior points.
pub fn signed_outside_margin(p: Point2, ring: &[Point2]) -> f64 {
    let n = ring.len();
    let orient = signed_area(ring).signum();
    let mut outside = 0.0;
    let mut smallest = f64::INFINITY;
    for i in 0..n {
        let t = orient * (ring[i] - p).cross(ring[(i + 1) % n] - p);
        if t < 0.0 {
            outside -= t;
        }
        smallest = smallest.min(t);
    }
    if outside > 0.0 {
        outside
    } else {
        -smallest
    }
}

fn projection_range(vertices: &[Point2], axis: Point2) -> (f64, f64) {
    vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

fn separated_along_edges(a: &[Point2], b: &[Point2]) -> bool {
    let n = a.len();
    (0..n).any(|i| {
        let edge = a[(i + 1) % n] - a[i];
        let len = edge.norm();
        let axis = Point2::new(edge.y / len, -edge.x / len);
        let (amin, amax) = projection_range(a, axis);
        let (bmin, bmax) = projection_range(b, axis);
        amax - bmin <= CONTACT_TOLERANCE || bmax - amin <= CONTACT_TOLERANCE
    })
}

/// Separating-axis overlap test on raw CCW rings.
pub fn rings_overlap(a: &[Point2], b: &[Point2]) -> bool {
    !(separated_along_edges(a, b) || separated_along_edges(b, a))
}

/// True iff the interiors intersect. Contact within [`CONTACT_TOLERANCE`]
/// counts as no overlap.
pub fn convex_overlap_sat(a: &ConvexPolygon, b: &ConvexPolygon) -> bool {
    rings_overlap(&a.vertices, &b.vertices)
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Boundary-to-boundary distance on raw rings; zero when they overlap.
pub fn ring_clearance(a: &[Point2], b: &[Point2]) -> f64 {
    if rings_overlap(a, b) {
        return 0.0;
    }
    let one_way = |p: &[Point2], q: &[Point2]| {
        let m = q.len();
        p.iter()
            .flat_map(|v| (0..m).map(move |j| point_segment_distance(*v, q[j], q[(j + 1) % m])))
            .fold(f64::INFINITY, f64::min)
    };
    one_way(a, b).min(one_way(b, a))
}

/// Zero when overlapping, otherwise the minimum boundary distance.
pub fn clearance(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    ring_clearance(&a.vertices, &b.vertices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit_square() -> ConvexPolygon {
        ConvexPolygon::rectangle(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap()
    }

    fn assert_point(p: Point2, x: f64, y: f64, tol: f64) {
        assert!((p.x - x).abs() <= tol && (p.y - y).abs() <= tol, "{p:?} != ({x}, {y})");
    }

    #[test]
    fn footprint_at_origin() {
        let c = footprint_corners(Pose::new(0.0, 0.0, 0.0), &VehicleParams::passenger_car());
        assert_point(c[0], 0.96, 0.971, 1e-12);
        assert_point(c[1], 0.96, -0.971, 1e-12);
        assert_point(c[2], -0.929, -0.971, 1e-12);
        assert_point(c[3], -0.929, 0.971, 1e-12);
    }

    #[test]
    fn footprint_rotated_quarter_turn() {
        let c = footprint_corners(Pose::new(0.0, 0.0, FRAC_PI_2), &VehicleParams::passenger_car());
        assert_point(c[0], -0.971, 0.96, 1e-12);
        assert_point(c[1], 0.971, 0.96, 1e-12);
        assert_point(c[2], 0.971, -0.929, 1e-12);
        assert_point(c[3], -0.971, -0.929, 1e-12);
    }

    #[test]
    fn footprint_general_pose_matches_corner_formulas() {
        let p = VehicleParams::passenger_car();
        let (x, y, th) = (1.0_f64, 2.0_f64, 0.3_f64);
        let c = footprint_corners(Pose::new(x, y, th), &p);
        // Hand-expanded corner formulas, evaluated term by term.
        let (s, co) = (th.sin(), th.cos());
        let expected = [
            (x + 0.96 * co - 0.971 * s, y + 0.96 * s + 0.971 * co),
            (x + 0.96 * co + 0.971 * s, y + 0.96 * s - 0.971 * co),
            (x - 0.929 * co + 0.971 * s, y - 0.929 * s - 0.971 * co),
            (x - 0.929 * co - 0.971 * s, y - 0.929 * s + 0.971 * co),
        ];
        for (got, (ex, ey)) in c.iter().zip(expected) {
            assert_point(*got, ex, ey, 1e-12);
        }
        // 30-digit reference values.
        let reference = [
            (1.630172908892421, 3.211331129335849),
            (2.204073150228743, 1.356067667453923),
            (0.399442522270473, 0.797829997070652),
            (-0.174457719065849, 2.653093458952579),
        ];
        for (got, (ex, ey)) in c.iter().zip(reference) {
            assert_point(*got, ex, ey, 1e-12);
        }
    }

    #[test]
    fn footprint_polygon_is_ccw() {
        let poly = footprint_vertices(Pose::new(3.0, -1.0, 2.0), &VehicleParams::passenger_car());
        assert!(signed_area(poly.vertices()) > 0.0);
        assert!(ConvexPolygon::new(poly.vertices().to_vec()).is_ok());
    }

    #[test]
    fn embodied_zero_extents_equals_footprint() {
        let p = VehicleParams::passenger_car();
        let pose = Pose::new(-4.0, 7.5, -1.1);
        assert_eq!(
            embodied_vertices(pose, &p, &BoxExtents::default()),
            footprint_vertices(pose, &p)
        );
    }

    #[test]
    fn embodied_quarter_turn_example() {
        let p = VehicleParams::passenger_car();
        let ext = BoxExtents { e_left: 0.10, e_right: 0.05, e_up: 0.8, e_down: 0.0 };
        let c = embodied_corners(Pose::new(0.0, 0.0, FRAC_PI_2), &p, &ext);
        assert_point(c[0], -1.071, 1.76, 1e-12);
        assert_point(c[1], 1.021, 1.76, 1e-12);
        assert_point(c[2], 1.021, -0.929, 1e-12);
        assert_point(c[3], -1.071, -0.929, 1e-12);
        let area = embodied_vertices(Pose::new(0.0, 0.0, FRAC_PI_2), &p, &ext).area();
        let expected = (0.96 + 0.929 + 0.8) * (1.942 + 0.15);
        assert!((area - expected).abs() < 1e-12);
    }

    #[test]
    fn areas() {
        assert!((unit_square().area() - 1.0).abs() < 1e-15);
        let fp = footprint_vertices(Pose::default(), &VehicleParams::passenger_car());
        assert!((fp.area() - 1.889 * 1.942).abs() < 1e-12);
        let tri = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(0.0, 2.0),
        ])
        .unwrap();
        assert!((tri.area() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn signed_margin_extends_inside() {
        let sq = ConvexPolygon::rectangle(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap();
        let ring = sq.vertices();
        assert!((signed_outside_margin(Point2::new(2.0, 0.5), ring) - 1.0).abs() < 1e-12);
        assert!(signed_outside_margin(Point2::new(1.0, 0.5), ring).abs() < 1e-12);
        assert!((signed_outside_margin(Point2::new(0.9, 0.5), ring) + 0.1).abs() < 1e-12);
        assert!((signed_outside_margin(Point2::new(0.5, 0.5), ring) + 0.5).abs() < 1e-12);
        let cw: Vec<Point2> = ring.iter().rev().copied().collect();
        assert!((signed_outside_margin(Point2::new(0.9, 0.5), &cw) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn outside_margin_examples() {
        let sq = unit_square();
        assert!(point_outside_margin(Point2::new(0.5, 0.5), &sq).abs() < 1e-12);
        assert!((point_outside_margin(Point2::new(2.0, 0.5), &sq) - 1.0).abs() < 1e-12);
        assert!(point_outside_margin(Point2::new(1.0, 0.5), &sq).abs() < 1e-12);
    }

    #[test]
    fn sat_examples() {
        let a = unit_square();
        let shifted = |dx: f64| {
            ConvexPolygon::rectangle(Point2::new(dx, 0.0), Point2::new(1.0 + dx, 1.0)).unwrap()
        };
        assert!(convex_overlap_sat(&a, &shifted(0.5)));
        assert!(!convex_overlap_sat(&a, &shifted(2.0)));
        // Shared edge is contact, not overlap.
        assert!(!convex_overlap_sat(&a, &shifted(1.0)));
    }

    #[test]
    fn cross_overlap_has_no_contained_vertices() {
        let wide = ConvexPolygon::rectangle(Point2::new(-2.0, -0.5), Point2::new(2.0, 0.5)).unwrap();
        let tall = ConvexPolygon::rectangle(Point2::new(-0.5, -2.0), Point2::new(0.5, 2.0)).unwrap();
        assert!(convex_overlap_sat(&wide, &tall));
        for v in wide.vertices() {
            assert!(point_outside_margin(*v, &tall) > 0.0);
        }
        for v in tall.vertices() {
            assert!(point_outside_margin(*v, &wide) > 0.0);
        }
    }

    #[test]
    fn clearance_examples() {
        let a = unit_square();
        let b = ConvexPolygon::rectangle(Point2::new(0.5, 0.0), Point2::new(1.5, 1.0)).unwrap();
        assert_eq!(clearance(&a, &b), 0.0);
        let c = ConvexPolygon::rectangle(Point2::new(2.0, 0.0), Point2::new(3.0, 1.0)).unwrap();
        assert!((clearance(&a, &c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clearance_to_small_triangle_matches_boundary_sampling() {
        let a = unit_square();
        let tri = ConvexPolygon::new(vec![
            Point2::new(3.0, 4.0),
            Point2::new(3.01, 4.0),
            Point2::new(3.0, 4.01),
        ])
        .unwrap();
        let sample = |poly: &ConvexPolygon, k: usize| -> Vec<Point2> {
            let v = poly.vertices();
            (0..v.len())
                .flat_map(|i| {
                    let a = v[i];
                    let b = v[(i + 1) % v.len()];
                    (0..k).map(move |j| a + (b - a) * (j as f64 / k as f64))
                })
                .collect()
        };
        let sa = sample(&a, 2000);
        let sb = sample(&tri, 50);
        let brute = sa
            .iter()
            .flat_map(|p| sb.iter().map(move |q| p.distance(*q)))
            .fold(f64::INFINITY, f64::min);
        // Closest points are the corner (1,1) and the vertex (3,4).
        assert!((brute - 13f64.sqrt()).abs() < 1e-9);
        assert!((clearance(&a, &tri) - brute).abs() < 1e-9);
    }

    #[test]
    fn polygon_validation() {
        assert!(matches!(
            ConvexPolygon::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)]),
            Err(GeometryError::TooFewVertices(2))
        ));
        let cw = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
        ])
        .unwrap();
        assert!(signed_area(cw.vertices()) > 0.0);
        let collinear = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(1.0, 1.0),
        ]);
        assert!(matches!(collinear, Err(GeometryError::NotStrictlyConvex(_))));
        let dup = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ]);
        assert!(matches!(dup, Err(GeometryError::DuplicateVertex(1, 2))));
    }

    #[test]
    fn offset_square() {
        let grown = unit_square().offset(0.5);
        assert!((grown.area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn vehicle_param_validation() {
        assert!(VehicleParams::passenger_car().validate().is_ok());
        assert!(VehicleParams::scale_car().validate().is_ok());
        let bad = VehicleParams { a_min: 0.1, ..VehicleParams::passenger_car() };
        assert!(bad.validate().is_err());
        let bad = VehicleParams { phi_max: 1.6, ..VehicleParams::passenger_car() };
        assert!(bad.validate().is_err());
    }
}

//! Planar primitives shared by the sensing, visibility and model code.
//!
//! Conventions:
//! - A [`HalfPlane`] is the closed set `normal · x <= offset`. The normal is
//!   not normalized; containment is decided on the signed Euclidean distance
//!   so the tolerance is in meters regardless of coefficient scale.
//! - Polygons are counterclockwise and strictly convex.
//! - Angles are radians.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Absolute tolerance (meters) for closed containment tests.
pub const CONTAIN_EPS: f64 = 1e-9;
/// Determinant magnitude below which two segments are treated as parallel.
pub const PARALLEL_EPS: f64 = 1e-12;
/// Slack on the `[0, 1]` segment parameters, and tie width for ray hits.
pub const PARAM_EPS: f64 = 1e-12;
/// Minimum segment / edge length.
pub const LENGTH_EPS: f64 = 1e-12;
/// Collinearity tolerance (meters) for polygon vertices.
pub const COLLINEAR_EPS: f64 = 1e-9;

/// A point (or free vector) in the plane, meters.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

/// Velocities and normals reuse the point type.
pub type Vec2 = Point2;

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Linear interpolation `self + t (o - self)`.
    #[inline]
    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self + (o - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// `[[cos, sin], [-sin, cos]] · p`.
///
/// Positive angles turn clockwise. This is the sensor rotation matrix used
/// throughout the planner and is kept as-is so that configured gimbal angles
/// keep their published meaning.
#[inline]
pub fn rotate(p: Point2, theta: f64) -> Point2 {
    let (s, c) = theta.sin_cos();
    Point2::new(c * p.x + s * p.y, -s * p.x + c * p.y)
}

/// Directed segment `a -> b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("segment endpoints must be finite"));
        }
        if a.distance(b) <= LENGTH_EPS {
            return Err(Error::Degenerate(format!(
                "segment ({}, {}) -> ({}, {}) has zero length",
                a.x, a.y, b.x, b.y
            )));
        }
        Ok(Self { a, b })
    }

    #[inline]
    pub fn direction(&self) -> Vec2 {
        self.b - self.a
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.direction().norm()
    }

    #[inline]
    pub fn point_at(&self, t: f64) -> Point2 {
        self.a.lerp(self.b, t)
    }

    /// Euclidean distance from `p` to the closed segment.
    pub fn distance_to(&self, p: Point2) -> f64 {
        let d = self.direction();
        let t = ((p - self.a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
        p.distance(self.point_at(t))
    }
}

#[inline]
fn in_unit(t: f64) -> bool {
    (-PARAM_EPS..=1.0 + PARAM_EPS).contains(&t)
}

/// Intersects `ray(s) = ray.a + s (ray.b - ray.a)` with
/// `seg(r) = seg.a + r (seg.b - seg.a)`.
///
/// Solves the 2x2 system
/// `[ray.b - ray.a | seg.a - seg.b] [s r]^T = seg.a - ray.a`
/// and returns `(s, r)` when both parameters lie in `[0, 1]`. Parallel pairs
/// (including collinear overlaps) never intersect.
pub fn segment_intersect(ray: &Segment, seg: &Segment) -> Option<(f64, f64)> {
    let d = ray.direction();
    let e = seg.a - seg.b;
    let rhs = seg.a - ray.a;
    let det = d.cross(e);
    if det.abs() < PARALLEL_EPS {
        return None;
    }
    let s = rhs.cross(e) / det;
    let r = d.cross(rhs) / det;
    (in_unit(s) && in_unit(r)).then_some((s, r))
}

/// Index of the segment the ray reaches first.
///
/// Hits whose ray parameters differ by less than [`PARAM_EPS`] tie, and the
/// lowest index wins.
pub fn nearest_hit(ray: &Segment, segments: &[Segment]) -> Option<usize> {
    let hits: Vec<(usize, f64)> = segments
        .iter()
        .enumerate()
        .filter_map(|(i, seg)| segment_intersect(ray, seg).map(|(s, _)| (i, s)))
        .collect();
    let best = hits.iter().map(|&(_, s)| s).fold(f64::INFINITY, f64::min);
    hits.iter()
        .find(|&&(_, s)| s <= best + PARAM_EPS)
        .map(|&(i, _)| i)
}

/// Closed half-plane `normal · x <= offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub normal: Vec2,
    pub offset: f64,
}

impl HalfPlane {
    pub fn new(normal: Vec2, offset: f64) -> Result<Self> {
        if !normal.is_finite() || !offset.is_finite() {
            return Err(Error::invalid("half-plane coefficients must be finite"));
        }
        if normal.norm() <= LENGTH_EPS {
            return Err(Error::Degenerate("half-plane normal is zero".into()));
        }
        Ok(Self { normal, offset })
    }

    /// Line through `v1` and `v2` with coefficients
    /// `a = v1.y - v2.y`, `b = v2.x - v1.x`, `c = v2.x v1.y - v1.x v2.y`.
    pub fn through(v1: Point2, v2: Point2) -> Result<Self> {
        if v1.distance(v2) <= LENGTH_EPS {
            return Err(Error::Degenerate(format!(
                "edge ({}, {}) -> ({}, {}) has zero length",
                v1.x, v1.y, v2.x, v2.y
            )));
        }
        let a = v1.y - v2.y;
        let b = v2.x - v1.x;
        let c = v2.x * v1.y - v1.x * v2.y;
        Self::new(Point2::new(a, b), c)
    }

    /// Same set with the inequality reversed (the closed complement's closure).
    pub fn flipped(self) -> Self {
        Self {
            normal: -self.normal,
            offset: -self.offset,
        }
    }

    /// `normal · p - offset`, in coefficient units.
    #[inline]
    pub fn residual(&self, p: Point2) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// Signed distance in meters; negative inside.
    #[inline]
    pub fn signed_distance(&self, p: Point2) -> f64 {
        self.residual(p) / self.normal.norm()
    }

    #[inline]
    pub fn contains(&self, p: Point2) -> bool {
        self.signed_distance(p) <= CONTAIN_EPS
    }

    /// Strict interior test: at least [`CONTAIN_EPS`] inside.
    #[inline]
    pub fn contains_strict(&self, p: Point2) -> bool {
        self.signed_distance(p) < -CONTAIN_EPS
    }

    /// The half-plane expressed for a frame shifted by `delta`
    /// (i.e. `x ∈ H` iff `x + delta ∈ H.translated(delta)`).
    pub fn translated(&self, delta: Vec2) -> Self {
        Self {
            normal: self.normal,
            offset: self.offset + self.normal.dot(delta),
        }
    }
}

/// Counterclockwise, strictly convex polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Degenerate(format!(
                "polygon needs at least 3 vertices, got {n}"
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("polygon vertices must be finite"));
        }
        let mut turning = 0.0;
        for i in 0..n {
            let prev = vertices[(i + n - 1) % n];
            let cur = vertices[i];
            let next = vertices[(i + 1) % n];
            if cur.distance(next) <= LENGTH_EPS {
                return Err(Error::Degenerate(format!(
                    "polygon edge {i} has zero length"
                )));
            }
            let chord = next - prev;
            let chord_len = chord.norm();
            // Distance of `cur` from the chord prev -> next; positive for a left turn.
            let bulge = if chord_len > LENGTH_EPS {
                (cur - prev).cross(chord) / chord_len
            } else {
                0.0
            };
            if bulge <= COLLINEAR_EPS {
                return Err(Error::Degenerate(format!(
                    "polygon is not strictly convex and counterclockwise at vertex {i}"
                )));
            }
            let e1 = cur - prev;
            let e2 = next - cur;
            turning += e1.cross(e2).atan2(e1.dot(e2));
        }
        if (turning - TAU).abs() > 1e-6 {
            return Err(Error::Degenerate("polygon is self-intersecting".into()));
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle, counterclockwise from the lower-left corner.
    pub fn from_rect(r: &Rect) -> Result<Self> {
        Self::new(r.corners().to_vec())
    }

    #[inline]
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Vertex average; an interior point of any convex polygon.
    pub fn centroid(&self) -> Point2 {
        let n = self.vertices.len() as f64;
        let sum = self.vertices.iter().fold(Point2::ORIGIN, |acc, &v| acc + v);
        sum * (1.0 / n)
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum::<f64>()
            * 0.5
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn translated(&self, delta: Vec2) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| v + delta).collect(),
        }
    }

    /// Closed containment with [`CONTAIN_EPS`].
    pub fn contains(&self, p: Point2) -> bool {
        self.edges().all(|(a, b)| {
            let e = b - a;
            // Left of every CCW edge (or within tolerance of it).
            e.cross(p - a) / e.norm() >= -CONTAIN_EPS
        })
    }
}

/// One half-plane per polygon edge, oriented so the centroid is inside.
///
/// Coefficients come from [`HalfPlane::through`] and are sign-flipped when the
/// centroid would otherwise violate them.
pub fn halfplanes(poly: &ConvexPolygon) -> Result<Vec<HalfPlane>> {
    let c = poly.centroid();
    poly.edges()
        .map(|(a, b)| {
            let hp = HalfPlane::through(a, b)?;
            Ok(if hp.residual(c) > 0.0 {
                hp.flipped()
            } else {
                hp
            })
        })
        .collect()
}

/// Convex hull (Andrew's monotone chain). Collinear boundary points are
/// dropped, so the result is strictly convex.
pub fn convex_hull(points: &[Point2]) -> Result<ConvexPolygon> {
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("hull input must be finite"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.distance(*b) <= LENGTH_EPS);
    if pts.len() < 3 {
        return Err(Error::Degenerate(format!(
            "convex hull needs 3 distinct points, got {}",
            pts.len()
        )));
    }

    // Keep `b` only if o -> b -> p turns left by more than the tolerance.
    let keeps_left = |o: Point2, b: Point2, p: Point2| {
        let chord = p - o;
        (b - o).cross(chord) / chord.norm() > COLLINEAR_EPS
    };

    let mut hull: Vec<Point2> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && !keeps_left(hull[hull.len() - 2], hull[hull.len() - 1], p)
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(Error::Degenerate("points are collinear".into()));
    }
    ConvexPolygon::new(hull)
}

/// Axis-aligned rectangle `[xmin, xmax] × [ymin, ymax]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        if ![xmin, ymin, xmax, ymax].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("rectangle bounds must be finite"));
        }
        if xmax - xmin <= LENGTH_EPS || ymax - ymin <= LENGTH_EPS {
            return Err(Error::invalid(format!(
                "rectangle [{xmin}, {xmax}] x [{ymin}, {ymax}] is empty"
            )));
        }
        Ok(Self {
            xmin,
            ymin,
            xmax,
            ymax,
        })
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    #[inline]
    pub fn center(&self) -> Point2 {
        Point2::new(0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))
    }

    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.xmin, self.ymin),
            Point2::new(self.xmax, self.ymin),
            Point2::new(self.xmax, self.ymax),
            Point2::new(self.xmin, self.ymax),
        ]
    }

    /// Closed containment with [`CONTAIN_EPS`].
    #[inline]
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.xmin - CONTAIN_EPS
            && p.x <= self.xmax + CONTAIN_EPS
            && p.y >= self.ymin - CONTAIN_EPS
            && p.y <= self.ymax + CONTAIN_EPS
    }

    /// Euclidean distance from `p` to the rectangle (zero inside).
    pub fn distance_to(&self, p: Point2) -> f64 {
        let dx = (self.xmin - p.x).max(0.0).max(p.x - self.xmax);
        let dy = (self.ymin - p.y).max(0.0).max(p.y - self.ymax);
        dx.hypot(dy)
    }

    /// Overlap of two closed rectangles, possibly degenerate (zero width).
    pub fn intersection(&self, o: &Rect) -> Option<Rect> {
        let r = Rect {
            xmin: self.xmin.max(o.xmin),
            ymin: self.ymin.max(o.ymin),
            xmax: self.xmax.min(o.xmax),
            ymax: self.ymax.min(o.ymax),
        };
        (r.xmin <= r.xmax + CONTAIN_EPS && r.ymin <= r.ymax + CONTAIN_EPS).then_some(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
        Segment::new(p(ax, ay), p(bx, by)).unwrap()
    }

    fn close(a: Point2, b: Point2, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn rotate_examples() {
        assert_eq!(rotate(p(1.0, 2.0), 0.0), p(1.0, 2.0));
        assert!(close(rotate(p(1.0, 0.0), FRAC_PI_2), p(0.0, -1.0), 1e-15));
        assert!(close(rotate(p(1.0, 0.0), PI), p(-1.0, 0.0), 1e-15));
    }

    #[test]
    fn segment_rejects_zero_length() {
        assert!(Segment::new(p(1.0, 1.0), p(1.0, 1.0)).is_err());
    }

    #[test]
    fn intersect_symmetric_crossing() {
        let (s, r) =
            segment_intersect(&seg(0.0, 0.0, 0.0, -2.0), &seg(-1.0, -1.0, 1.0, -1.0)).unwrap();
        assert!((s - 0.5).abs() < 1e-15 && (r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn intersect_parallel_is_empty() {
        assert!(segment_intersect(&seg(0.0, 0.0, 1.0, 0.0), &seg(0.0, 1.0, 1.0, 1.0)).is_none());
        // Collinear overlap counts as parallel too.
        assert!(segment_intersect(&seg(0.0, 0.0, 2.0, 0.0), &seg(1.0, 0.0, 3.0, 0.0)).is_none());
    }

    #[test]
    fn intersect_diagonals() {
        let ray = seg(0.0, 0.0, 2.0, 2.0);
        let (s, r) = segment_intersect(&ray, &seg(0.0, 2.0, 2.0, 0.0)).unwrap();
        assert!((s - 0.5).abs() < 1e-15 && (r - 0.5).abs() < 1e-15);
        assert!(close(ray.point_at(s), p(1.0, 1.0), 1e-15));
    }

    #[test]
    fn intersect_out_of_range() {
        // Lines cross at y = -3, beyond the ray end.
        assert!(
            segment_intersect(&seg(0.0, 0.0, 0.0, -2.0), &seg(-1.0, -3.0, 1.0, -3.0)).is_none()
        );
        // Crossing outside the target segment.
        assert!(segment_intersect(&seg(0.0, 0.0, 0.0, -2.0), &seg(1.0, -1.0, 2.0, -1.0)).is_none());
    }

    #[test]
    fn nearest_hit_examples() {
        let ray = seg(0.0, 0.0, 0.0, -3.0);
        let far = seg(-1.0, -2.0, 1.0, -2.0);
        let near = seg(-1.0, -1.0, 1.0, -1.0);
        assert_eq!(nearest_hit(&ray, &[far, near]), Some(1));
        assert_eq!(nearest_hit(&ray, &[seg(5.0, 5.0, 6.0, 5.0)]), None);
        assert_eq!(nearest_hit(&ray, &[]), None);
    }

    #[test]
    fn nearest_hit_tie_prefers_lower_index() {
        // Two hull edges meeting at (0, -1), which the ray passes through.
        let ray = seg(0.0, 0.0, 0.0, -3.0);
        let left = seg(-1.0, -2.0, 0.0, -1.0);
        let right = seg(0.0, -1.0, 1.0, -2.0);
        assert_eq!(nearest_hit(&ray, &[left, right]), Some(0));
        assert_eq!(nearest_hit(&ray, &[right, left]), Some(0));
        let (s0, _) = segment_intersect(&ray, &left).unwrap();
        let (s1, _) = segment_intersect(&ray, &right).unwrap();
        assert!((s0 - s1).abs() < PARAM_EPS);
    }

    #[test]
    fn unit_square_halfplanes() {
        let sq =
            ConvexPolygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]).unwrap();
        let hps = halfplanes(&sq).unwrap();
        assert_eq!(hps.len(), 4);
        // Edge-by-edge: bottom y >= 0, right x <= 1, top y <= 1, left x >= 0.
        let expected = [
            (p(0.0, -1.0), 0.0),
            (p(1.0, 0.0), 1.0),
            (p(0.0, 1.0), 1.0),
            (p(-1.0, 0.0), 0.0),
        ];
        for (hp, (n, c)) in hps.iter().zip(expected) {
            let scale = hp.normal.norm();
            assert!(close(hp.normal * (1.0 / scale), n, 1e-15));
            assert!((hp.offset / scale - c).abs() < 1e-15);
        }
        for q in [p(0.5, 0.5), p(0.0, 0.0), p(1.0, 0.3)] {
            assert!(hps.iter().all(|h| h.contains(q)));
        }
        for q in [p(-0.1, 0.5), p(0.5, 1.1), p(1.0 + 1e-6, 0.5)] {
            assert!(!hps.iter().all(|h| h.contains(q)));
        }
    }

    #[test]
    fn fov_triangle_contains_probe() {
        let tri = ConvexPolygon::new(vec![p(0.0, 0.0), p(-1.8756, -7.0), p(1.8756, -7.0)]).unwrap();
        let hps = halfplanes(&tri).unwrap();
        assert!(hps.iter().all(|h| h.contains(p(0.0, -3.0))));
        assert!(hps.iter().all(|h| h.contains(tri.centroid())));
    }

    #[test]
    fn polygon_validation() {
        assert!(ConvexPolygon::new(vec![p(0.0, 0.0), p(1.0, 0.0)]).is_err());
        // Clockwise.
        assert!(ConvexPolygon::new(vec![p(0.0, 0.0), p(0.0, 1.0), p(1.0, 0.0)]).is_err());
        // Collinear middle vertex.
        assert!(
            ConvexPolygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(1.0, 1.0)]).is_err()
        );
        // Reflex vertex.
        assert!(ConvexPolygon::new(vec![
            p(0.0, 0.0),
            p(2.0, 0.0),
            p(1.0, 0.5),
            p(2.0, 2.0),
            p(0.0, 2.0)
        ])
        .is_err());
        // Pentagram: all left turns but winds twice.
        let star: Vec<Point2> = (0..5)
            .map(|k| {
                let a = FRAC_PI_2 + (k as f64) * 4.0 * PI / 5.0;
                p(a.cos(), a.sin())
            })
            .collect();
        assert!(ConvexPolygon::new(star).is_err());
    }

    #[test]
    fn hull_drops_interior_point() {
        let h = convex_hull(&[
            p(0.0, 0.0),
            p(1.0, 0.0),
            p(0.5, 0.5),
            p(1.0, 1.0),
            p(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(
            h.vertices(),
            &[p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]
        );
    }

    #[test]
    fn hull_of_triangle_is_ccw() {
        let h = convex_hull(&[p(0.0, 0.0), p(0.0, 1.0), p(1.0, 0.0)]).unwrap();
        assert_eq!(h.vertices().len(), 3);
        assert!(h.signed_area() > 0.0);
    }

    #[test]
    fn hull_errors() {
        assert!(convex_hull(&[p(0.0, 0.0), p(1.0, 1.0)]).is_err());
        assert!(convex_hull(&[p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0), p(3.0, 3.0)]).is_err());
        assert!(convex_hull(&[p(0.0, 0.0), p(0.0, 0.0), p(1.0, 1.0)]).is_err());
    }

    #[test]
    fn hull_of_bell_samples_contains_all() {
        let bell = |x: f64| 10.0 * (-(x - 40.0).powi(2) / 8.0).exp();
        let mut pts: Vec<Point2> = (0..11)
            .map(|i| 35.0 + i as f64)
            .map(|x| p(x, bell(x)))
            .collect();
        pts.push(p(35.0, 0.0));
        pts.push(p(45.0, 0.0));
        let hull = convex_hull(&pts).unwrap();
        let hps = halfplanes(&hull).unwrap();
        for q in &pts {
            assert!(hps.iter().all(|h| h.contains(*q)), "{q:?} outside hull");
        }
    }

    fn winding_inside(poly: &[Point2], q: Point2) -> bool {
        // Crossing-number test, independent of the half-plane path.
        let n = poly.len();
        let mut inside = false;
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if (a.y > q.y) != (b.y > q.y) {
                let x = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if q.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn min_edge_distance(poly: &[Point2], q: Point2) -> f64 {
        let n = poly.len();
        (0..n)
            .map(|i| {
                Segment {
                    a: poly[i],
                    b: poly[(i + 1) % n],
                }
                .distance_to(q)
            })
            .fold(f64::INFINITY, f64::min)
    }

    proptest! {
        #[test]
        fn rotation_is_isometric(x in -100.0..100.0f64, y in -100.0..100.0f64, th in -10.0..10.0f64) {
            let q = p(x, y);
            let r = rotate(q, th);
            prop_assert!((r.norm() - q.norm()).abs() <= 1e-12);
            prop_assert!(close(rotate(r, -th), q, 1e-12));
        }

        #[test]
        fn reported_intersections_coincide(
            c in prop::array::uniform8(-10.0..10.0f64),
        ) {
            let (Ok(ray), Ok(other)) = (
                Segment::new(p(c[0], c[1]), p(c[2], c[3])),
                Segment::new(p(c[4], c[5]), p(c[6], c[7])),
            ) else { return Ok(()); };
            if let Some((s, r)) = segment_intersect(&ray, &other) {
                prop_assert!(close(ray.point_at(s), other.point_at(r), 1e-9));
            }
        }

        #[test]
        fn nearest_hit_is_minimal(
            ray_end in (-10.0..10.0f64, -10.0..10.0f64),
            segs in prop::collection::vec(prop::array::uniform4(-10.0..10.0f64), 0..12),
        ) {
            let Ok(ray) = Segment::new(Point2::ORIGIN, p(ray_end.0, ray_end.1)) else { return Ok(()); };
            let segs: Vec<Segment> = segs.iter().filter_map(|c| Segment::new(p(c[0], c[1]), p(c[2], c[3])).ok()).collect();
            match nearest_hit(&ray, &segs) {
                Some(i) => {
                    let (s_best, _) = segment_intersect(&ray, &segs[i]).unwrap();
                    let s_min = segs.iter().filter_map(|sg| segment_intersect(&ray, sg)).map(|(s, _)| s).fold(f64::INFINITY, f64::min);
                    for (j, sg) in segs.iter().enumerate() {
                        if let Some((s, _)) = segment_intersect(&ray, sg) {
                            prop_assert!(s_best <= s + PARAM_EPS);
                            if j < i { prop_assert!(s > s_min + PARAM_EPS); }
                        }
                    }
                }
                None => prop_assert!(segs.iter().all(|sg| segment_intersect(&ray, sg).is_none())),
            }
        }

        #[test]
        fn halfplanes_agree_with_crossing_number(
            cloud in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..12),
            seed in 0u64..1000,
        ) {
            let pts: Vec<Point2> = cloud.iter().map(|&(x, y)| p(x, y)).collect();
            let Ok(hull) = convex_hull(&pts) else { return Ok(()); };
            let hps = halfplanes(&hull).unwrap();
            for q in &pts {
                prop_assert!(hps.iter().all(|h| h.contains(*q)));
            }
            // Deterministic probe points from a tiny LCG.
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 24.0 - 12.0
            };
            for _ in 0..1000 {
                let q = p(next(), next());
                if min_edge_distance(hull.vertices(), q) < 1e-7 { continue; }
                let by_hp = hps.iter().all(|h| h.contains(q));
                prop_assert_eq!(by_hp, winding_inside(hull.vertices(), q));
                prop_assert_eq!(by_hp, hull.contains(q));
            }
        }
    }
}

//! Planar and 3-D vector math, heading conventions, polylines, and oriented
//! rectangle overlap.
//!
//! Headings are radians, `0` points along world `+y`, counter-clockwise is
//! positive, and stored values are normalized to `(-pi, pi]`.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
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

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        Vec3::new(self.x / n, self.y / n, self.z / n)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Normalize an angle to `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut a = a % TAU;
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

/// Unit vector a heading points along: `(-sin h, cos h)`.
pub fn heading_dir(h: f64) -> Vec2 {
    Vec2::new(-h.sin(), h.cos())
}

/// Heading of the bearing from `from` to `to`.
pub fn bearing(from: Vec2, to: Vec2) -> f64 {
    let d = to - from;
    (-d.x).atan2(d.y)
}

/// Corners of an oriented ground-plane rectangle, counter-clockwise.
pub fn rect_corners(center: Vec2, length: f64, width: f64, heading: f64) -> [Vec2; 4] {
    let f = heading_dir(heading) * (length / 2.0);
    let l = heading_dir(heading + PI / 2.0) * (width / 2.0);
    [
        center + f + l,
        center - f + l,
        center - f - l,
        center + f - l,
    ]
}

/// Separating-axis intersection test for two oriented rectangles given as
/// corner lists. Touching boundaries count as overlap.
pub fn rects_intersect(a: &[Vec2; 4], b: &[Vec2; 4]) -> bool {
    let axes = [
        a[1] - a[0],
        a[3] - a[0],
        b[1] - b[0],
        b[3] - b[0],
    ];
    for axis in axes {
        let axis = Vec2::new(-axis.y, axis.x);
        let (mut amin, mut amax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in a {
            let d = p.dot(axis);
            amin = amin.min(d);
            amax = amax.max(d);
        }
        for p in b {
            let d = p.dot(axis);
            bmin = bmin.min(d);
            bmax = bmax.max(d);
        }
        if amax < bmin || bmax < amin {
            return false;
        }
    }
    true
}

/// An open polyline with at least two points.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pts: Vec<Vec2>,
    cumulative: Vec<f64>,
}

impl Polyline {
    /// Panics if fewer than two points are given; callers validate first.
    pub fn new(pts: Vec<Vec2>) -> Self {
        assert!(pts.len() >= 2, "polyline needs at least two points");
        let mut cumulative = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in pts.windows(2) {
            acc += w[0].dist(w[1]);
            cumulative.push(acc);
        }
        Polyline { pts, cumulative }
    }

    pub fn points(&self) -> &[Vec2] {
        &self.pts
    }

    pub fn total_length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn segment_at(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.total_length());
        // Last segment owns the endpoint.
        for i in 0..self.pts.len() - 1 {
            if s <= self.cumulative[i + 1] || i == self.pts.len() - 2 {
                let seg_len = self.cumulative[i + 1] - self.cumulative[i];
                let frac = if seg_len > 0.0 {
                    (s - self.cumulative[i]) / seg_len
                } else {
                    0.0
                };
                return (i, frac);
            }
        }
        unreachable!()
    }

    /// Point at arc length `s` from the start, clamped to the ends.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let (i, frac) = self.segment_at(s);
        let a = self.pts[i];
        let b = self.pts[i + 1];
        a + (b - a) * frac
    }

    /// Tangent heading at arc length `s`.
    pub fn heading_at(&self, s: f64) -> f64 {
        let (i, _) = self.segment_at(s);
        let d = self.pts[i + 1] - self.pts[i];
        (-d.x).atan2(d.y)
    }

    /// Minimum distance from `p` to the polyline.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let mut best = f64::INFINITY;
        for w in self.pts.windows(2) {
            best = best.min(point_segment_distance(p, w[0], w[1]));
        }
        best
    }
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heading_convention() {
        // 0 = +y (north), pi/2 = -x (west), -pi/2 = +x (east).
        let n = heading_dir(0.0);
        assert!((n.x).abs() < 1e-12 && (n.y - 1.0).abs() < 1e-12);
        let w = heading_dir(PI / 2.0);
        assert!((w.x + 1.0).abs() < 1e-12 && w.y.abs() < 1e-12);
        let e = heading_dir(-PI / 2.0);
        assert!((e.x - 1.0).abs() < 1e-12 && e.y.abs() < 1e-12);
    }

    #[test]
    fn normalize_angle_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-2.5 * PI) + 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn bearing_points_north_and_west() {
        assert!((bearing(Vec2::new(0.0, 0.0), Vec2::new(0.0, 5.0))).abs() < 1e-12);
        assert!((bearing(Vec2::new(0.0, 0.0), Vec2::new(-3.0, 0.0)) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn identical_rects_overlap() {
        let a = rect_corners(Vec2::new(1.0, 2.0), 4.0, 2.0, 0.3);
        assert!(rects_intersect(&a, &a));
    }

    #[test]
    fn distant_rects_do_not_overlap() {
        let a = rect_corners(Vec2::new(0.0, 0.0), 4.0, 2.0, 0.0);
        let b = rect_corners(Vec2::new(10.0, 0.0), 4.0, 2.0, 0.0);
        assert!(!rects_intersect(&a, &b));
    }

    // Brute-force oracle: sample rectangle A on a 1 mm grid and test point
    // containment in B.
    fn rect_contains(corners: &[Vec2; 4], p: Vec2) -> bool {
        // Corners are CCW; inside means left of every edge.
        for i in 0..4 {
            let a = corners[i];
            let b = corners[(i + 1) % 4];
            let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            if cross < -1e-12 {
                return false;
            }
        }
        true
    }

    fn overlap_oracle(a: &[Vec2; 4], b: &[Vec2; 4], step: f64) -> bool {
        let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in a {
            xmin = xmin.min(p.x);
            xmax = xmax.max(p.x);
            ymin = ymin.min(p.y);
            ymax = ymax.max(p.y);
        }
        let mut x = xmin;
        while x <= xmax {
            let mut y = ymin;
            while y <= ymax {
                let p = Vec2::new(x, y);
                if rect_contains(a, p) && rect_contains(b, p) {
                    return true;
                }
                y += step;
            }
            x += step;
        }
        false
    }

    #[test]
    fn tilted_unit_squares_overlap_matches_oracle() {
        let a = rect_corners(Vec2::new(0.0, 0.0), 1.0, 1.0, 0.0);
        let b = rect_corners(Vec2::new(1.2, 0.0), 1.0, 1.0, PI / 4.0);
        assert!(overlap_oracle(&a, &b, 0.001));
        assert!(rects_intersect(&a, &b));
    }

    #[test]
    fn polyline_walk() {
        let pl = Polyline::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 10.0),
            Vec2::new(5.0, 10.0),
        ]);
        assert!((pl.total_length() - 15.0).abs() < 1e-12);
        let p = pl.point_at(5.0);
        assert!((p.x).abs() < 1e-12 && (p.y - 5.0).abs() < 1e-12);
        // Second segment heads east (+x), i.e. heading -pi/2.
        let p = pl.point_at(12.0);
        assert!((p.x - 2.0).abs() < 1e-12 && (p.y - 10.0).abs() < 1e-12);
        assert!((pl.heading_at(12.0) + PI / 2.0).abs() < 1e-12);
        assert!((pl.distance_to(Vec2::new(2.0, 0.0)) - 2.0).abs() < 1e-12);
    }
}

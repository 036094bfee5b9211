//! Upright oriented 3D boxes and the two affinities used for association:
//! exact 3D IoU and center distance.
//!
//! Canonical frame: right-handed, z up. A box is centered at its geometric
//! center and yaws about z; `length` runs along the heading, `width` across
//! it, `height` along z.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clipped footprints below this area (m²) count as no overlap.
const AREA_EPS: f64 = 1e-12;
/// Points this close (m) to a clip edge are treated as inside.
const EDGE_EPS: f64 = 1e-9;

/// Wraps an angle into `(-π, π]`. Non-finite input is passed through.
#[inline]
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Normalizes `theta` into the half-open interval `(-π, π]`.
pub fn normalize_angle(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "angle must be finite, got {theta}"
        )));
    }
    Ok(wrap_angle(theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    /// Heading about the vertical axis, kept in `(-π, π]`.
    pub yaw: f64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl Box3D {
    pub fn new(cx: f64, cy: f64, cz: f64, yaw: f64, length: f64, width: f64, height: f64) -> Self {
        Self {
            cx,
            cy,
            cz,
            yaw: wrap_angle(yaw),
            length,
            width,
            height,
        }
    }

    /// Axis-aligned cube of edge `size` centered at `(x, y, z)`.
    pub fn cube(x: f64, y: f64, z: f64, size: f64) -> Self {
        Self::new(x, y, z, 0.0, size, size, size)
    }

    pub fn is_finite(&self) -> bool {
        [
            self.cx,
            self.cy,
            self.cz,
            self.yaw,
            self.length,
            self.width,
            self.height,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// Zero (or negative) extent along some axis, or non-finite fields.
    pub fn is_degenerate(&self) -> bool {
        !self.is_finite() || self.length <= 0.0 || self.width <= 0.0 || self.height <= 0.0
    }

    pub fn volume(&self) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            self.length * self.width * self.height
        }
    }

    pub fn center(&self) -> [f64; 3] {
        [self.cx, self.cy, self.cz]
    }

    pub fn with_yaw(mut self, yaw: f64) -> Self {
        self.yaw = wrap_angle(yaw);
        self
    }

    /// Vertical extent `[bottom, top]`.
    pub fn z_range(&self) -> (f64, f64) {
        let half = 0.5 * self.height;
        (self.cz - half, self.cz + half)
    }

    /// Applies a rigid ground-plane motion: rotate by `angle` about the
    /// origin, then translate by `(dx, dy)`.
    pub fn transformed(&self, angle: f64, dx: f64, dy: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(
            c * self.cx - s * self.cy + dx,
            s * self.cx + c * self.cy + dy,
            self.cz,
            self.yaw + angle,
            self.length,
            self.width,
            self.height,
        )
    }
}

/// Counter-clockwise footprint corners, starting at front-left.
pub fn bev_polygon(b: &Box3D) -> [Point2; 4] {
    let (s, c) = b.yaw.sin_cos();
    let hl = 0.5 * b.length;
    let hw = 0.5 * b.width;
    let local = [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)];
    local.map(|(u, v)| Point2::new(b.cx + c * u - s * v, b.cy + s * u + c * v))
}

/// Fixed-capacity polygon; clipping a quad by four half-planes never yields
/// more than eight vertices.
#[derive(Clone, Copy)]
struct Poly {
    pts: [Point2; 12],
    len: usize,
}

impl Poly {
    fn empty() -> Self {
        Self {
            pts: [Point2::default(); 12],
            len: 0,
        }
    }

    fn from_quad(q: &[Point2; 4]) -> Self {
        let mut p = Self::empty();
        p.pts[..4].copy_from_slice(q);
        p.len = 4;
        p
    }

    #[inline]
    fn push(&mut self, pt: Point2) {
        self.pts[self.len] = pt;
        self.len += 1;
    }

    fn area(&self) -> f64 {
        polygon_area(&self.pts[..self.len])
    }
}

/// Shoelace area (absolute value).
pub fn polygon_area(pts: &[Point2]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        twice += a.x * b.y - b.x * a.y;
    }
    0.5 * twice.abs()
}

/// Area of the intersection of two convex counter-clockwise quads
/// (Sutherland–Hodgman clipping of `subject` against every edge of `clip`).
pub fn convex_quad_intersection_area(subject: &[Point2; 4], clip: &[Point2; 4]) -> f64 {
    let mut out = Poly::from_quad(subject);
    for k in 0..4 {
        let a = clip[k];
        let b = clip[(k + 1) % 4];
        let ex = b.x - a.x;
        let ey = b.y - a.y;
        let norm = ex.hypot(ey);
        if norm == 0.0 {
            return 0.0;
        }
        // signed distance, positive on the left (inside for CCW)
        let dist = |p: Point2| (ex * (p.y - a.y) - ey * (p.x - a.x)) / norm;

        let input = out;
        out = Poly::empty();
        if input.len == 0 {
            break;
        }
        for i in 0..input.len {
            let cur = input.pts[i];
            let prev = input.pts[(i + input.len - 1) % input.len];
            let dc = dist(cur);
            let dp = dist(prev);
            let cur_in = dc >= -EDGE_EPS;
            let prev_in = dp >= -EDGE_EPS;
            if cur_in != prev_in {
                let t = dp / (dp - dc);
                out.push(Point2::new(
                    prev.x + t * (cur.x - prev.x),
                    prev.y + t * (cur.y - prev.y),
                ));
            }
            if cur_in {
                out.push(cur);
            }
        }
    }
    let area = out.area();
    if area < AREA_EPS {
        0.0
    } else {
        area
    }
}

/// Intersection volume of two upright boxes.
pub fn intersection_volume(a: &Box3D, b: &Box3D) -> f64 {
    if a.is_degenerate() || b.is_degenerate() {
        return 0.0;
    }
    let (a0, a1) = a.z_range();
    let (b0, b1) = b.z_range();
    let dz = a1.min(b1) - a0.max(b0);
    if dz <= 0.0 {
        return 0.0;
    }
    // cheap reject on circumscribed circles
    let ra = 0.5 * a.length.hypot(a.width);
    let rb = 0.5 * b.length.hypot(b.width);
    if (a.cx - b.cx).hypot(a.cy - b.cy) > ra + rb {
        return 0.0;
    }
    convex_quad_intersection_area(&bev_polygon(a), &bev_polygon(b)) * dz
}

/// 3D intersection over union in `[0, 1]`; degenerate boxes give 0.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let inter = intersection_volume(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Which axes [`center_distance`] measures over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    /// Ground-plane (x, y) distance.
    #[default]
    Planar,
    /// Full (x, y, z) distance.
    Spatial,
}

pub fn center_distance(a: &Box3D, b: &Box3D, metric: DistanceMetric) -> f64 {
    let dx = a.cx - b.cx;
    let dy = a.cy - b.cy;
    match metric {
        DistanceMetric::Planar => dx.hypot(dy),
        DistanceMetric::Spatial => (dx * dx + dy * dy + (a.cz - b.cz).powi(2)).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;
    use std::f64::consts::FRAC_PI_4;

    fn corner_set(p: &[Point2; 4]) -> Vec<(i64, i64)> {
        let mut v: Vec<_> = p
            .iter()
            .map(|q| ((q.x * 1e6).round() as i64, (q.y * 1e6).round() as i64))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn normalize_angle_examples() {
        assert_eq!(normalize_angle(0.0).unwrap(), 0.0);
        assert!((normalize_angle(3.0 * PI).unwrap() - PI).abs() < 1e-12);
        assert_eq!(normalize_angle(-PI).unwrap(), PI);
        assert_eq!(normalize_angle(PI).unwrap(), PI);
        assert!(normalize_angle(f64::NAN).is_err());
        assert!(normalize_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn box_new_normalizes_yaw() {
        let b = Box3D::new(0.0, 0.0, 0.0, -PI, 1.0, 1.0, 1.0);
        assert_eq!(b.yaw, PI);
        assert!(Box3D::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0).is_degenerate());
    }

    #[test]
    fn bev_polygon_examples() {
        let unit = Box3D::cube(0.0, 0.0, 0.0, 1.0);
        let expected = corner_set(&[
            Point2::new(0.5, 0.5),
            Point2::new(-0.5, 0.5),
            Point2::new(-0.5, -0.5),
            Point2::new(0.5, -0.5),
        ]);
        assert_eq!(corner_set(&bev_polygon(&unit)), expected);
        assert_eq!(
            corner_set(&bev_polygon(&unit.with_yaw(FRAC_PI_2))),
            expected
        );

        let long = Box3D::new(0.0, 0.0, 0.0, FRAC_PI_2, 2.0, 1.0, 1.0);
        assert_eq!(
            corner_set(&bev_polygon(&long)),
            corner_set(&[
                Point2::new(0.5, 1.0),
                Point2::new(-0.5, 1.0),
                Point2::new(-0.5, -1.0),
                Point2::new(0.5, -1.0),
            ])
        );
    }

    #[test]
    fn bev_polygon_is_counter_clockwise() {
        let b = Box3D::new(3.0, -2.0, 0.0, 2.3, 4.0, 1.8, 1.5);
        let p = bev_polygon(&b);
        let mut twice = 0.0;
        for i in 0..4 {
            let (a, c) = (p[i], p[(i + 1) % 4]);
            twice += a.x * c.y - c.x * a.y;
        }
        assert!(twice > 0.0);
        assert!((0.5 * twice - 4.0 * 1.8).abs() < 1e-9);
    }

    #[test]
    fn iou_examples() {
        let a = Box3D::cube(0.0, 0.0, 0.0, 1.0);
        assert!((iou_3d(&a, &a) - 1.0).abs() < 1e-12);
        assert_eq!(iou_3d(&a, &Box3D::cube(10.0, 0.0, 0.0, 1.0)), 0.0);

        let c = Box3D::cube(0.0, 0.0, 0.0, 2.0);
        let d = Box3D::cube(1.0, 0.0, 0.0, 2.0);
        assert!((iou_3d(&c, &d) - 4.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn iou_rotated_square_is_octagon() {
        // unit square ∩ its π/4 rotation is a regular octagon with area 2(√2 − 1)
        let a = Box3D::cube(0.0, 0.0, 0.0, 1.0);
        let b = a.with_yaw(FRAC_PI_4);
        let octagon = 2.0 * (2f64.sqrt() - 1.0);
        let expected = octagon / (2.0 - octagon);
        assert!((iou_3d(&a, &b) - expected).abs() < 1e-12);
    }

    #[test]
    fn iou_degenerate_and_vertical_disjoint() {
        let a = Box3D::cube(0.0, 0.0, 0.0, 1.0);
        let flat = Box3D::new(0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0);
        assert_eq!(iou_3d(&a, &flat), 0.0);
        assert_eq!(iou_3d(&a, &Box3D::cube(0.0, 0.0, 1.0, 1.0)), 0.0);
        let half_up = Box3D::cube(0.0, 0.0, 0.5, 1.0);
        assert!((iou_3d(&a, &half_up) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn touching_boxes_have_zero_iou() {
        let a = Box3D::cube(0.0, 0.0, 0.0, 1.0);
        let b = Box3D::cube(1.0, 0.0, 0.0, 1.0);
        assert_eq!(iou_3d(&a, &b), 0.0);
    }

    #[test]
    fn center_distance_examples() {
        let o = Box3D::cube(0.0, 0.0, 0.0, 1.0);
        assert_eq!(center_distance(&o, &o, DistanceMetric::Planar), 0.0);
        let p = Box3D::cube(3.0, 4.0, 0.0, 1.0);
        assert_eq!(center_distance(&o, &p, DistanceMetric::Planar), 5.0);
        let a = Box3D::cube(1.0, 1.0, 1.0, 1.0);
        let b = Box3D::cube(2.0, 2.0, 2.0, 1.0);
        assert!((center_distance(&a, &b, DistanceMetric::Planar) - 2f64.sqrt()).abs() < 1e-12);
        assert!((center_distance(&a, &b, DistanceMetric::Spatial) - 3f64.sqrt()).abs() < 1e-12);
    }
}

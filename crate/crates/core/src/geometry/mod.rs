//! Planar geometry for building footprints and the SAR layover model.
//!
//! Coordinates are meters in a local planar frame, `x` east and `y` north.
//! Azimuths are compass-style: degrees clockwise from north, in `[0, 360)`.

mod collection;
mod footprint;
mod hull;
mod layover;
mod orbit;
mod rect;

pub use collection::FootprintCollection;
pub use footprint::{polygon_distance, segment_intersects_polygon, Footprint};
pub use hull::convex_hull;
pub use layover::{height_from_boxes, project_bbb, HeightEstimate, ProjectionFactor};
pub use orbit::{ground_track_heading, range_azimuth, AcquisitionGeometry, LookSide, OrbitPass};
pub use rect::{heading_aligned_bbox, min_enclosing_rect, min_enclosing_rect_points, OrientedRect};

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// Absolute tolerance used for containment checks, in meters.
pub const CONTAINMENT_TOL_M: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotates clockwise (compass sense) by `deg` about the origin.
    pub fn rotated_cw(self, deg: f64) -> Point {
        let (s, c) = deg.to_radians().sin_cos();
        Point::new(self.x * c + self.y * s, -self.x * s + self.y * c)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// Maps any angle in degrees into `[0, 360)`.
pub fn normalize_azimuth(deg: f64) -> f64 {
    let a = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

/// Unit vector pointing along a compass azimuth.
pub fn azimuth_unit(deg: f64) -> Point {
    let (s, c) = deg.to_radians().sin_cos();
    Point::new(s, c)
}

/// Compass azimuth of a (non-zero) direction vector.
pub fn azimuth_of(d: Point) -> f64 {
    normalize_azimuth(d.x.atan2(d.y).to_degrees())
}

/// Smallest absolute circular difference between two azimuths, in degrees.
pub fn azimuth_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn azimuth_unit_vectors() {
        let east = azimuth_unit(90.0);
        assert!((east.x - 1.0).abs() < 1e-15 && east.y.abs() < 1e-15);
        let south = azimuth_unit(180.0);
        assert!((south.y + 1.0).abs() < 1e-15);
        assert!((azimuth_of(Point::new(-1.0, 0.0)) - 270.0).abs() < 1e-12);
        assert_eq!(normalize_azimuth(-90.0), 270.0);
        assert_eq!(normalize_azimuth(720.0), 0.0);
        assert!((azimuth_difference(359.0, 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn clockwise_rotation_moves_north_to_east() {
        let p = Point::new(0.0, 1.0).rotated_cw(90.0);
        assert!((p.x - 1.0).abs() < 1e-15 && p.y.abs() < 1e-15);
    }
}

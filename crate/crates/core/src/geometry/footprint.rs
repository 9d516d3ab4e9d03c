use serde::{Deserialize, Serialize};

use super::Point;
use crate::error::{Error, Result};

/// A building outline: a simple polygon stored counter-clockwise, with its
/// reference height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFootprint", into = "RawFootprint")]
pub struct Footprint {
    id: String,
    vertices: Vec<Point>,
    height_m: f64,
}

#[derive(Serialize, Deserialize)]
struct RawFootprint {
    id: String,
    polygon: Vec<Point>,
    height_m: f64,
}

impl TryFrom<RawFootprint> for Footprint {
    type Error = Error;
    fn try_from(raw: RawFootprint) -> Result<Self> {
        Footprint::new(raw.id, raw.polygon, raw.height_m)
    }
}

impl From<Footprint> for RawFootprint {
    fn from(f: Footprint) -> Self {
        RawFootprint {
            id: f.id,
            polygon: f.vertices,
            height_m: f.height_m,
        }
    }
}

impl Footprint {
    /// Validates and normalizes an open ring. A repeated closing vertex and
    /// consecutive duplicates are dropped; clockwise rings are reversed.
    pub fn new(id: impl Into<String>, vertices: Vec<Point>, height_m: f64) -> Result<Self> {
        let id = id.into();
        if !(height_m.is_finite() && height_m >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "footprint {id}: height {height_m} must be finite and non-negative"
            )));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "footprint {id}: non-finite vertex"
            )));
        }
        let mut ring: Vec<Point> = Vec::with_capacity(vertices.len());
        for p in vertices {
            if ring.last() != Some(&p) {
                ring.push(p);
            }
        }
        while ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "footprint {id}: needs at least 3 distinct vertices, got {}",
                ring.len()
            )));
        }
        let area = signed_area(&ring);
        let hull_len = super::hull::convex_hull(&ring)?.len();
        if hull_len < 3 {
            return Err(Error::DegenerateGeometry(format!(
                "footprint {id}: vertices are collinear"
            )));
        }
        if !is_simple(&ring) {
            return Err(Error::InvalidInput(format!(
                "footprint {id}: polygon self-intersects"
            )));
        }
        let scale = bbox_diagonal(&ring);
        if area.abs() <= 1e-12 * scale * scale {
            return Err(Error::DegenerateGeometry(format!(
                "footprint {id}: zero enclosed area"
            )));
        }
        if area < 0.0 {
            ring.reverse();
        }
        Ok(Footprint {
            id,
            vertices: ring,
            height_m,
        })
    }

    /// Axis-aligned rectangle with its south-west corner at `origin`.
    pub fn rectangle(
        id: impl Into<String>,
        origin: Point,
        width_m: f64,
        depth_m: f64,
        height_m: f64,
    ) -> Result<Self> {
        let Point { x, y } = origin;
        Footprint::new(
            id,
            vec![
                Point::new(x, y),
                Point::new(x + width_m, y),
                Point::new(x + width_m, y + depth_m),
                Point::new(x, y + depth_m),
            ],
            height_m,
        )
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn height_m(&self) -> f64 {
        self.height_m
    }

    pub fn with_height(mut self, height_m: f64) -> Result<Self> {
        if !(height_m.is_finite() && height_m >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "footprint {}: height {height_m} must be finite and non-negative",
                self.id
            )));
        }
        self.height_m = height_m;
        Ok(self)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Area-weighted centroid.
    pub fn centroid(&self) -> Point {
        let v = &self.vertices;
        let a = signed_area(v);
        let (mut cx, mut cy) = (0.0, 0.0);
        // offsets from the first vertex keep the sums well conditioned
        let o = v[0];
        for i in 0..v.len() {
            let p = v[i] - o;
            let q = v[(i + 1) % v.len()] - o;
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point::new(o.x + cx / (6.0 * a), o.y + cy / (6.0 * a))
    }

    /// Returns `(min, max)` corners of the axis-aligned bounding box.
    pub fn aabb(&self) -> (Point, Point) {
        aabb(&self.vertices)
    }

    /// Even-odd point-in-polygon test. Points exactly on an edge may fall
    /// either way.
    pub fn contains(&self, p: Point) -> bool {
        point_in_polygon(&self.vertices, p)
    }

    pub fn translated(&self, d: Point) -> Footprint {
        Footprint {
            id: self.id.clone(),
            vertices: self.vertices.iter().map(|&p| p + d).collect(),
            height_m: self.height_m,
        }
    }

    /// Rotates clockwise by `deg` about `pivot`. Orientation is preserved.
    pub fn rotated_cw(&self, deg: f64, pivot: Point) -> Footprint {
        Footprint {
            id: self.id.clone(),
            vertices: self
                .vertices
                .iter()
                .map(|&p| (p - pivot).rotated_cw(deg) + pivot)
                .collect(),
            height_m: self.height_m,
        }
    }
}

pub(crate) fn signed_area(ring: &[Point]) -> f64 {
    let o = ring[0];
    let mut twice = 0.0;
    for i in 1..ring.len().saturating_sub(1) {
        twice += (ring[i] - o).cross(ring[i + 1] - o);
    }
    twice / 2.0
}

pub(crate) fn aabb(points: &[Point]) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

fn bbox_diagonal(points: &[Point]) -> f64 {
    let (lo, hi) = aabb(points);
    (hi - lo).norm()
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub(crate) fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn is_simple(ring: &[Point]) -> bool {
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if adjacent {
                // adjacent edges may only share their common vertex
                let shared = if j == i + 1 { b } else { a };
                let other = if j == i + 1 { d } else { c };
                let far = if j == i + 1 { a } else { b };
                if orient(far, shared, other) == 0.0 && (other - shared).dot(far - shared) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

pub(crate) fn point_in_polygon(ring: &[Point], p: Point) -> bool {
    let mut inside = false;
    let n = ring.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// True if the closed segment `[a, b]` touches the polygon's interior or
/// boundary.
pub fn segment_intersects_polygon(a: Point, b: Point, ring: &[Point]) -> bool {
    if point_in_polygon(ring, a) || point_in_polygon(ring, b) {
        return true;
    }
    let n = ring.len();
    (0..n).any(|i| segments_intersect(a, b, ring[i], ring[(i + 1) % n]))
}

/// Euclidean distance between two simple polygons; zero when they overlap.
pub fn polygon_distance(a: &[Point], b: &[Point]) -> f64 {
    let (na, nb) = (a.len(), b.len());
    for i in 0..na {
        for j in 0..nb {
            if segments_intersect(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb]) {
                return 0.0;
            }
        }
    }
    if point_in_polygon(a, b[0]) || point_in_polygon(b, a[0]) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for &p in a {
        for j in 0..nb {
            best = best.min(point_segment_distance(p, b[j], b[(j + 1) % nb]));
        }
    }
    for &p in b {
        for i in 0..na {
            best = best.min(point_segment_distance(p, a[i], a[(i + 1) % na]));
        }
    }
    best
}

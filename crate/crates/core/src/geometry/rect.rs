use serde::{Deserialize, Serialize};

use super::hull::convex_hull;
use super::{azimuth_of, azimuth_unit, normalize_azimuth, Footprint, Point, CONTAINMENT_TOL_M};
use crate::error::{Error, Result};

/// Oriented rectangle: center, extents along its `u` and `v` axes, and the
/// compass azimuth of `u`. The `v` axis points to `u_azimuth_deg + 90°`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedRect {
    pub center: Point,
    pub extent_u_m: f64,
    pub extent_v_m: f64,
    pub u_azimuth_deg: f64,
}

impl OrientedRect {
    pub fn u_axis(&self) -> Point {
        azimuth_unit(self.u_azimuth_deg)
    }

    pub fn v_axis(&self) -> Point {
        azimuth_unit(self.u_azimuth_deg + 90.0)
    }

    pub fn area(&self) -> f64 {
        self.extent_u_m * self.extent_v_m
    }

    /// Coordinates of `p` in the rectangle frame, relative to its center.
    pub fn local(&self, p: Point) -> (f64, f64) {
        let d = p - self.center;
        (d.dot(self.u_axis()), d.dot(self.v_axis()))
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let (u, v) = self.local(p);
        u.abs() <= self.extent_u_m / 2.0 + tol && v.abs() <= self.extent_v_m / 2.0 + tol
    }

    /// The four corners, starting at the north-west-most corner and running
    /// clockwise.
    pub fn corners(&self) -> [Point; 4] {
        let hu = self.u_axis() * (self.extent_u_m / 2.0);
        let hv = self.v_axis() * (self.extent_v_m / 2.0);
        let c = self.center;
        // u then v is a clockwise turn in compass terms, so this cycle is
        // clockwise when both extents are positive.
        let cycle = [c - hu - hv, c + hu - hv, c + hu + hv, c - hu + hv];
        let nw_score = |p: Point| p.y - p.x;
        let start = (0..4)
            .max_by(|&a, &b| {
                nw_score(cycle[a])
                    .total_cmp(&nw_score(cycle[b]))
                    .then(cycle[a].y.total_cmp(&cycle[b].y))
                    .then(b.cmp(&a))
            })
            .unwrap_or(0);
        std::array::from_fn(|i| cycle[(start + i) % 4])
    }
}

fn frame_extents(points: &[Point], u: Point, v: Point) -> ((f64, f64), (f64, f64)) {
    let mut ur = (f64::INFINITY, f64::NEG_INFINITY);
    let mut vr = (f64::INFINITY, f64::NEG_INFINITY);
    for &p in points {
        let (pu, pv) = (p.dot(u), p.dot(v));
        ur = (ur.0.min(pu), ur.1.max(pu));
        vr = (vr.0.min(pv), vr.1.max(pv));
    }
    (ur, vr)
}

fn rect_from_ranges(u_az: f64, ur: (f64, f64), vr: (f64, f64)) -> OrientedRect {
    let u = azimuth_unit(u_az);
    let v = azimuth_unit(u_az + 90.0);
    OrientedRect {
        center: u * ((ur.0 + ur.1) / 2.0) + v * ((vr.0 + vr.1) / 2.0),
        extent_u_m: ur.1 - ur.0,
        extent_v_m: vr.1 - vr.0,
        u_azimuth_deg: u_az,
    }
}

/// Minimum-area enclosing rectangle of a point set (rotating calipers).
///
/// The optimum has a side collinear with a hull edge, so every edge
/// direction is tried. The `u` axis follows that edge, folded into
/// `[0°, 180°)`.
pub fn min_enclosing_rect_points(points: &[Point]) -> Result<OrientedRect> {
    let hull = convex_hull(points)?;
    if hull.len() < 3 {
        return Err(Error::DegenerateGeometry(
            "points are collinear; no enclosing rectangle of positive area".into(),
        ));
    }
    let mut best: Option<(f64, OrientedRect)> = None;
    for i in 0..hull.len() {
        let edge = hull[(i + 1) % hull.len()] - hull[i];
        let u_az = azimuth_of(edge).rem_euclid(180.0);
        let u = azimuth_unit(u_az);
        let v = azimuth_unit(u_az + 90.0);
        let (ur, vr) = frame_extents(&hull, u, v);
        let area = (ur.1 - ur.0) * (vr.1 - vr.0);
        if best.as_ref().is_none_or(|(a, _)| area < *a * (1.0 - 1e-12)) {
            best = Some((area, rect_from_ranges(u_az, ur, vr)));
        }
    }
    best.map(|(_, r)| r)
        .ok_or_else(|| Error::DegenerateGeometry("empty hull".into()))
}

pub fn min_enclosing_rect(footprint: &Footprint) -> Result<OrientedRect> {
    min_enclosing_rect_points(footprint.vertices())
}

/// Smallest rectangle with its `u` axis fixed at the range azimuth that
/// covers the footprint.
pub fn heading_aligned_bbox(footprint: &Footprint, range_az_deg: f64) -> Result<OrientedRect> {
    if !range_az_deg.is_finite() {
        return Err(Error::InvalidInput("range azimuth must be finite".into()));
    }
    let u_az = normalize_azimuth(range_az_deg);
    let (ur, vr) = frame_extents(
        footprint.vertices(),
        azimuth_unit(u_az),
        azimuth_unit(u_az + 90.0),
    );
    if ur.1 - ur.0 <= 0.0 && vr.1 - vr.0 <= 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "footprint {} collapses to a point",
            footprint.id()
        )));
    }
    let rect = rect_from_ranges(u_az, ur, vr);
    debug_assert!(footprint
        .vertices()
        .iter()
        .all(|&p| rect.contains(p, CONTAINMENT_TOL_M.max(1e-12 * p.norm()))));
    Ok(rect)
}

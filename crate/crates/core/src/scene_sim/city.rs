use std::collections::HashMap;

use rand::Rng;

use super::SceneSpec;
use crate::error::{Error, Result};
use crate::geometry::{polygon_distance, Footprint, Point};
use crate::rng::substream;

const ATTEMPTS_PER_BUILDING: usize = 1000;

/// Places `spec.n_buildings` rectangular footprints by seeded rejection
/// sampling so that every pair is at least `min_spacing_m` apart (and never
/// touching), then draws heights from the scene's height distribution.
///
/// Placement uses one sequential stream; each building's height comes from
/// its own `(seed, index)` stream.
pub fn generate_city(spec: &SceneSpec) -> Result<Vec<Footprint>> {
    spec.validate()?;
    let n = spec.n_buildings;
    if n == 0 {
        return Ok(Vec::new());
    }
    let [side_lo, side_hi] = spec.footprint_side_range_m;
    let [width, height] = spec.extent_m;
    let max_diag = side_hi * std::f64::consts::SQRT_2;
    let cell = max_diag + spec.min_spacing_m;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut placed: Vec<Vec<Point>> = Vec::with_capacity(n);
    let mut rng = substream(spec.seed, "placement", 0);
    let cell_of = |p: Point| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut accepted = None;
        for _ in 0..ATTEMPTS_PER_BUILDING {
            let w = sample_side(&mut rng, side_lo, side_hi);
            let d = sample_side(&mut rng, side_lo, side_hi);
            let angle = if spec.random_orientation {
                rng.random_range(0.0..90.0)
            } else {
                0.0
            };
            let corners = [
                Point::new(-w / 2.0, -d / 2.0),
                Point::new(w / 2.0, -d / 2.0),
                Point::new(w / 2.0, d / 2.0),
                Point::new(-w / 2.0, d / 2.0),
            ]
            .map(|p| p.rotated_cw(angle));
            let half_x = corners.iter().map(|p| p.x.abs()).fold(0.0, f64::max);
            let half_y = corners.iter().map(|p| p.y.abs()).fold(0.0, f64::max);
            if 2.0 * half_x > width || 2.0 * half_y > height {
                continue;
            }
            let c = Point::new(
                rng.random_range(half_x..=width - half_x),
                rng.random_range(half_y..=height - half_y),
            );
            let poly: Vec<Point> = corners.iter().map(|&p| p + c).collect();
            let (cx, cy) = cell_of(c);
            let clash = (cx - 1..=cx + 1)
                .flat_map(|gx| (cy - 1..=cy + 1).map(move |gy| (gx, gy)))
                .filter_map(|k| grid.get(&k))
                .flatten()
                .any(|&j| {
                    let dist = polygon_distance(&poly, &placed[j]);
                    dist < spec.min_spacing_m || dist == 0.0
                });
            if !clash {
                accepted = Some((c, poly));
                break;
            }
        }
        let Some((c, poly)) = accepted else {
            return Err(Error::Capacity {
                achieved: i,
                requested: n,
            });
        };
        let h = spec
            .height_distribution
            .sample(&mut substream(spec.seed, "height", i as u64));
        grid.entry(cell_of(c)).or_default().push(i);
        out.push(Footprint::new(format!("b{i:06}"), poly.clone(), h)?);
        placed.push(poly);
    }
    Ok(out)
}

fn sample_side(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

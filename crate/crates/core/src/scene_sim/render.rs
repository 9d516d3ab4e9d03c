use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use super::{Raster, SceneSpec, Speckle};
use crate::error::{Error, Result};
use crate::geometry::{azimuth_unit, range_azimuth, segment_intersects_polygon, Footprint, Point};
use crate::rng::substream;

const ROOF: u8 = 1;
const LAYOVER: u8 = 2;
const SHADOW: u8 = 4;

/// Empty raster covering the scene extent, origin at the north-west corner
/// and the south edge on `y = 0`.
pub fn scene_raster(spec: &SceneSpec, band: &str, fill: f32) -> Raster {
    let (w, h) = spec.raster_dims();
    Raster::filled(
        w,
        h,
        spec.pixel_size_m,
        Point::new(0.0, h as f64 * spec.pixel_size_m),
        band,
        fill,
    )
}

fn check_extent(buildings: &[Footprint], raster: &Raster) -> Result<()> {
    let (lo, hi) = raster.bounds();
    let tol = 1e-9;
    let outside: Vec<String> = buildings
        .iter()
        .filter(|b| {
            let (blo, bhi) = b.aabb();
            blo.x < lo.x - tol || blo.y < lo.y - tol || bhi.x > hi.x + tol || bhi.y > hi.y + tol
        })
        .map(|b| b.id().to_owned())
        .collect();
    if outside.is_empty() {
        Ok(())
    } else {
        Err(Error::OutOfExtent { ids: outside })
    }
}

/// Pixel index window `(row0, row1, col0, col1)`, end-exclusive, whose
/// centers may fall inside the ground box.
fn pixel_window(raster: &Raster, lo: Point, hi: Point) -> Option<(usize, usize, usize, usize)> {
    let p = raster.pixel_size_m;
    let col0 = ((lo.x - raster.origin.x) / p - 0.5).ceil().max(0.0);
    let col1 = ((hi.x - raster.origin.x) / p - 0.5).floor() + 1.0;
    let row0 = ((raster.origin.y - hi.y) / p - 0.5).ceil().max(0.0);
    let row1 = ((raster.origin.y - lo.y) / p - 0.5).floor() + 1.0;
    let col1 = col1.min(raster.width_px as f64);
    let row1 = row1.min(raster.height_px as f64);
    if col1 <= col0 || row1 <= row0 {
        return None;
    }
    Some((row0 as usize, row1 as usize, col0 as usize, col1 as usize))
}

fn classify(buildings: &[Footprint], spec: &SceneSpec, raster: &Raster) -> Result<Vec<u8>> {
    let range_az = range_azimuth(&spec.geom)?;
    let u = azimuth_unit(range_az);
    let theta = spec.geom.incidence_deg.to_radians();
    let lay_per_m = spec.projection_factor.value(spec.geom.incidence_deg);
    let mut classes = vec![0u8; raster.values.len()];
    for b in buildings {
        let lay = u * (-b.height_m() * lay_per_m);
        let shadow = u * (b.height_m() * theta.tan());
        let (mut lo, mut hi) = b.aabb();
        for d in [lay, shadow] {
            lo = Point::new(lo.x.min(lo.x + d.x), lo.y.min(lo.y + d.y));
            hi = Point::new(hi.x.max(hi.x + d.x), hi.y.max(hi.y + d.y));
        }
        let Some((r0, r1, c0, c1)) = pixel_window(raster, lo, hi) else {
            continue;
        };
        let verts = b.vertices();
        for row in r0..r1 {
            for col in c0..c1 {
                let q = raster.pixel_center(row as i64, col as i64);
                let idx = row * raster.width_px + col;
                if b.contains(q) {
                    classes[idx] |= ROOF;
                    continue;
                }
                // q is in the layover band when moving it away from the
                // sensor by up to the layover length hits the footprint
                if b.height_m() > 0.0 && segment_intersects_polygon(q, q - lay, verts) {
                    classes[idx] |= LAYOVER;
                }
                if b.height_m() > 0.0 && segment_intersects_polygon(q, q - shadow, verts) {
                    classes[idx] |= SHADOW;
                }
            }
        }
    }
    Ok(classes)
}

/// Renders the amplitude image. Precedence is layover > roof > shadow >
/// background; single-look speckle multiplies each pixel by an independent
/// unit-mean exponential draw from a per-row stream.
pub fn render_amplitude(buildings: &[Footprint], spec: &SceneSpec) -> Result<Raster> {
    spec.validate()?;
    let mut raster = scene_raster(spec, "amplitude", spec.background_amp);
    check_extent(buildings, &raster)?;
    let classes = classify(buildings, spec, &raster)?;
    for (v, &c) in raster.values.iter_mut().zip(&classes) {
        *v = if c & LAYOVER != 0 {
            spec.layover_amp
        } else if c & ROOF != 0 {
            spec.roof_amp
        } else if c & SHADOW != 0 {
            spec.shadow_amp
        } else {
            spec.background_amp
        };
    }
    if spec.speckle == Speckle::SingleLook {
        let width = raster.width_px;
        raster
            .values
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(row, values)| {
                let mut rng = substream(spec.seed, "speckle", row as u64);
                for v in values {
                    let m: f64 = rng.sample(Exp1);
                    *v = (f64::from(*v) * m) as f32;
                }
            });
    }
    Ok(raster)
}

/// Per-pixel reference height: the tallest building whose footprint
/// contains the pixel center, zero elsewhere.
pub fn render_height_truth(buildings: &[Footprint], spec: &SceneSpec) -> Result<Raster> {
    spec.validate()?;
    let mut raster = scene_raster(spec, "height", 0.0);
    check_extent(buildings, &raster)?;
    for b in buildings {
        let (lo, hi) = b.aabb();
        let Some((r0, r1, c0, c1)) = pixel_window(&raster, lo, hi) else {
            continue;
        };
        let h = b.height_m() as f32;
        for row in r0..r1 {
            for col in c0..c1 {
                if b.contains(raster.pixel_center(row as i64, col as i64)) {
                    let v = &mut raster.values[row * raster.width_px + col];
                    *v = v.max(h);
                }
            }
        }
    }
    Ok(raster)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AcquisitionGeometry, LookSide};

    fn spec_1m(theta: f64) -> SceneSpec {
        SceneSpec {
            extent_m: [100.0, 60.0],
            pixel_size_m: 1.0,
            speckle: Speckle::Off,
            // heading north, right looking: range azimuth east, sensor west
            geom: AcquisitionGeometry::with_heading(theta, 0.0, LookSide::Right),
            ..SceneSpec::default()
        }
    }

    fn count(r: &Raster, v: f32) -> usize {
        r.values.iter().filter(|&&x| x == v).count()
    }

    #[test]
    fn empty_scene_is_constant_background() {
        let spec = spec_1m(30.0);
        let r = render_amplitude(&[], &spec).unwrap();
        assert!(r.values.iter().all(|&v| v == spec.background_amp));
        let t = render_height_truth(&[], &spec).unwrap();
        assert!(t.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_height_building_is_only_its_footprint() {
        let spec = spec_1m(30.0);
        let b = Footprint::rectangle("a", Point::new(40.2, 20.2), 10.0, 10.0, 0.0).unwrap();
        let r = render_amplitude(&[b.clone()], &spec).unwrap();
        for row in 0..r.height_px {
            for col in 0..r.width_px {
                let inside = b.contains(r.pixel_center(row as i64, col as i64));
                let v = r.get(row, col);
                assert_eq!(v != spec.background_amp, inside);
                if inside {
                    assert_eq!(v, spec.roof_amp);
                }
            }
        }
        assert_eq!(count(&r, spec.roof_amp), 100);
    }

    #[test]
    fn layover_band_depth_matches_geometry() {
        let spec = spec_1m(45.0);
        let b = Footprint::rectangle("a", Point::new(50.0, 20.0), 10.0, 10.0, 20.0).unwrap();
        let r = render_amplitude(&[b], &spec).unwrap();
        // the sensor is west, so layover extends west of x = 50
        let row = r.to_pixel(Point::new(0.0, 25.0)).0 as usize;
        let band = (0..r.width_px)
            .filter(|&c| r.get(row, c) == spec.layover_amp)
            .count();
        let analytic = 20.0 * 45f64.to_radians().cos();
        assert!((band as f64 - 14.0).abs() <= 1.0, "{band}");
        assert!((band as f64 - analytic).abs() <= 1.0);
        // shadow on the far (east) side
        let shadow: Vec<usize> = (0..r.width_px)
            .filter(|&c| r.get(row, c) == spec.shadow_amp)
            .collect();
        assert!(!shadow.is_empty() && shadow.iter().all(|&c| c >= 60));
        let layover: Vec<usize> = (0..r.width_px)
            .filter(|&c| r.get(row, c) == spec.layover_amp)
            .collect();
        assert!(layover.iter().all(|&c| c < 50));
    }

    #[test]
    fn height_truth_overlap_takes_max() {
        let spec = spec_1m(30.0);
        let a = Footprint::rectangle("a", Point::new(10.0, 10.0), 10.0, 10.0, 5.0).unwrap();
        let b = Footprint::rectangle("b", Point::new(15.0, 15.0), 10.0, 10.0, 9.0).unwrap();
        let t = render_height_truth(&[a.clone(), b.clone()], &spec).unwrap();
        let q = t.to_pixel(Point::new(17.5, 17.5));
        assert_eq!(t.get(q.0 as usize, q.1 as usize), 9.0);
        let only_a = t.to_pixel(Point::new(11.5, 11.5));
        assert_eq!(t.get(only_a.0 as usize, only_a.1 as usize), 5.0);
        let single = render_height_truth(
            &[Footprint::rectangle("c", Point::new(30.0, 30.0), 4.0, 4.0, 12.5).unwrap()],
            &spec,
        )
        .unwrap();
        assert_eq!(count(&single, 12.5), 16);
        assert_eq!(count(&single, 0.0), single.values.len() - 16);
    }

    #[test]
    fn outside_building_is_reported() {
        let spec = spec_1m(30.0);
        let b = Footprint::rectangle("far", Point::new(95.0, 10.0), 10.0, 10.0, 5.0).unwrap();
        match render_amplitude(&[b], &spec) {
            Err(Error::OutOfExtent { ids }) => assert_eq!(ids, vec!["far".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn speckle_is_unit_mean_and_deterministic() {
        let spec = SceneSpec {
            extent_m: [400.0, 400.0],
            pixel_size_m: 1.0,
            speckle: Speckle::SingleLook,
            seed: 4,
            ..SceneSpec::default()
        };
        let a = render_amplitude(&[], &spec).unwrap();
        let b = render_amplitude(&[], &spec).unwrap();
        assert_eq!(a, b);
        let mean = a.values.iter().map(|&v| f64::from(v)).sum::<f64>() / a.values.len() as f64;
        assert!(a.values.len() >= 100_000);
        assert!((mean - f64::from(spec.background_amp)).abs() / f64::from(spec.background_amp) < 0.02);
    }
}

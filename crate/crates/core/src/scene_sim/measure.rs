use std::collections::VecDeque;

use super::Raster;
use crate::geometry::{OrientedRect, Point};

/// Settings for the non-learned range-extent measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureParams {
    /// Pixels at or above this (optionally smoothed) amplitude count as
    /// building returns.
    pub threshold: f32,
    /// Longest layover searched for, toward the sensor from the footprint box.
    pub max_layover_m: f64,
    /// Half-width of the box filter applied before thresholding; 0 disables it.
    pub smooth_radius_px: usize,
}

/// Measures the ground-range extent of a building's imaged return (roof plus
/// layover) directly from an amplitude raster.
///
/// Bright pixels inside a strip along the footprint box's `u` axis are
/// grown from seed pixels (the footprint mask when given, otherwise bright
/// pixels inside `fbb`) by 4-connectivity. The extent is the spread of the
/// grown pixels' centers along `u` plus one pixel. Returns `None` when no
/// seed is found.
pub fn measure_range_extent(
    raster: &Raster,
    mask: Option<&[f32]>,
    fbb: &OrientedRect,
    params: &MeasureParams,
) -> Option<f64> {
    let p = raster.pixel_size_m;
    let u_lo = -fbb.extent_u_m / 2.0 - params.max_layover_m - p;
    let u_hi = fbb.extent_u_m / 2.0 + p;
    let v_half = fbb.extent_v_m / 2.0 + p;
    let (u, v) = (fbb.u_axis(), fbb.v_axis());
    let corners = [
        fbb.center + u * u_lo + v * v_half,
        fbb.center + u * u_lo - v * v_half,
        fbb.center + u * u_hi + v * v_half,
        fbb.center + u * u_hi - v * v_half,
    ];
    let (mut rmin, mut rmax, mut cmin, mut cmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for c in corners {
        let (r, col) = raster.to_pixel(c);
        rmin = rmin.min(r);
        rmax = rmax.max(r);
        cmin = cmin.min(col);
        cmax = cmax.max(col);
    }
    let r0 = (rmin.floor() as i64).max(0);
    let r1 = (rmax.ceil() as i64).min(raster.height_px as i64);
    let c0 = (cmin.floor() as i64).max(0);
    let c1 = (cmax.ceil() as i64).min(raster.width_px as i64);
    if r1 <= r0 || c1 <= c0 {
        return None;
    }
    let (h, w) = ((r1 - r0) as usize, (c1 - c0) as usize);

    let smoothed = |row: i64, col: i64| -> f32 {
        let k = params.smooth_radius_px as i64;
        if k == 0 {
            return raster.get(row as usize, col as usize);
        }
        let (mut sum, mut n) = (0.0f64, 0u32);
        for dr in -k..=k {
            for dc in -k..=k {
                if let Some(x) = raster.get_signed(row + dr, col + dc) {
                    sum += f64::from(x);
                    n += 1;
                }
            }
        }
        (sum / f64::from(n)) as f32
    };

    let mut local_u = vec![0.0f64; h * w];
    let mut candidate = vec![false; h * w];
    let mut seeds = Vec::new();
    for i in 0..h {
        for j in 0..w {
            let (row, col) = (r0 + i as i64, c0 + j as i64);
            let q: Point = raster.pixel_center(row, col);
            let (lu, lv) = fbb.local(q);
            if lu < u_lo || lu > u_hi || lv.abs() > v_half {
                continue;
            }
            let idx = i * w + j;
            let flat = row as usize * raster.width_px + col as usize;
            let in_mask = mask.is_some_and(|m| m[flat] > 0.5);
            let bright = smoothed(row, col) >= params.threshold;
            candidate[idx] = bright || in_mask;
            local_u[idx] = lu;
            let seed = match mask {
                Some(_) => in_mask,
                None => bright && fbb.contains(q, 0.0),
            };
            if seed {
                seeds.push(idx);
            }
        }
    }
    if seeds.is_empty() {
        return None;
    }

    let mut seen = vec![false; h * w];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for s in seeds {
        seen[s] = true;
        queue.push_back(s);
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    while let Some(idx) = queue.pop_front() {
        lo = lo.min(local_u[idx]);
        hi = hi.max(local_u[idx]);
        let (i, j) = (idx / w, idx % w);
        let neighbors = [
            (i > 0).then(|| idx - w),
            (i + 1 < h).then(|| idx + w),
            (j > 0).then(|| idx - 1),
            (j + 1 < w).then(|| idx + 1),
        ];
        for n in neighbors.into_iter().flatten() {
            if candidate[n] && !seen[n] {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    Some(hi - lo + p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{heading_aligned_bbox, project_bbb, range_azimuth, AcquisitionGeometry, Footprint, LookSide};
    use crate::scene_sim::{render_amplitude, SceneSpec, Speckle};

    #[test]
    fn noiseless_isolated_building() {
        let spec = SceneSpec {
            extent_m: [200.0, 200.0],
            pixel_size_m: 1.0,
            speckle: Speckle::Off,
            geom: AcquisitionGeometry::with_heading(30.0, 190.0, LookSide::Right),
            ..SceneSpec::default()
        };
        let b = Footprint::rectangle("a", Point::new(90.0, 90.0), 16.0, 12.0, 25.0).unwrap();
        let r = render_amplitude(&[b.clone()], &spec).unwrap();
        let fbb = heading_aligned_bbox(&b, range_azimuth(&spec.geom).unwrap()).unwrap();
        let bbb = project_bbb(&fbb, 25.0, &spec.geom, spec.projection_factor).unwrap();
        let params = MeasureParams {
            threshold: (spec.background_amp + spec.roof_amp) / 2.0,
            max_layover_m: 60.0,
            smooth_radius_px: 0,
        };
        let got = measure_range_extent(&r, None, &fbb, &params).unwrap();
        assert!((got - bbb.extent_u_m).abs() <= 2.0, "{got} vs {}", bbb.extent_u_m);
    }
}

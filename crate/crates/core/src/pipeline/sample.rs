use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Patch;
use crate::error::{Error, Result};
use crate::geometry::{
    heading_aligned_bbox, project_bbb, range_azimuth, AcquisitionGeometry, Footprint, OrientedRect,
    Point, ProjectionFactor,
};
use crate::scene_sim::Raster;

/// Upper clip for median-normalized chip amplitudes.
pub const AMP_CLIP: f32 = 8.0;

/// One building's training/inference record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingSample {
    pub building_id: String,
    pub city_id: String,
    pub chip_px: usize,
    /// Median-normalized amplitude chip, row-major, `chip_px²` values.
    #[serde(skip)]
    pub chip_amp: Vec<f32>,
    /// Rasterized footprint (0 or 1), row-major, `chip_px²` values.
    #[serde(skip)]
    pub chip_mask: Vec<f32>,
    pub fbb_extent_u_m: f64,
    pub fbb_extent_v_m: f64,
    pub cos_theta: f64,
    pub target_lbbb_m: f64,
    pub ref_height_m: f64,

    pub patch_origin_px: (usize, usize),
    /// Ground coordinates of the chip's top-left corner.
    pub chip_origin_m: Point,
    pub pixel_size_m: f64,
    pub fbb_center: Point,
    pub range_azimuth_deg: f64,
    pub centroid: Point,
    pub footprint_area_m2: f64,
    pub mask_pixels: usize,
    /// The footprint extends beyond the chip.
    pub truncated: bool,
}

impl BuildingSample {
    /// Geometric features fed to the regressor next to the image.
    pub fn features(&self) -> [f64; 3] {
        [self.fbb_extent_u_m, self.fbb_extent_v_m, self.cos_theta]
    }

    pub fn fbb(&self) -> OrientedRect {
        OrientedRect {
            center: self.fbb_center,
            extent_u_m: self.fbb_extent_u_m,
            extent_v_m: self.fbb_extent_v_m,
            u_azimuth_deg: self.range_azimuth_deg,
        }
    }

    /// The amplitude chip as a georeferenced raster.
    pub fn amp_raster(&self) -> Raster {
        Raster {
            width_px: self.chip_px,
            height_px: self.chip_px,
            pixel_size_m: self.pixel_size_m,
            origin: self.chip_origin_m,
            band: "amplitude".into(),
            values: self.chip_amp.clone(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub samples: Vec<BuildingSample>,
    /// Footprints whose mask rasterized to zero pixels.
    pub skipped_empty: usize,
}

/// Divides by the chip median (taken over in-source pixels) and clips to
/// `[0, AMP_CLIP]`. Pixels outside the source stay zero.
pub fn normalize_chip(values: &mut [f32], in_source: &[bool]) {
    let mut inside: Vec<f32> = values
        .iter()
        .zip(in_source)
        .filter(|(_, &s)| s)
        .map(|(&v, _)| v)
        .collect();
    if inside.is_empty() {
        return;
    }
    let mid = inside.len() / 2;
    let (_, median, _) = inside.select_nth_unstable_by(mid, f32::total_cmp);
    let median = *median;
    let scale = if median > 0.0 { 1.0 / median } else { 1.0 };
    for (v, &s) in values.iter_mut().zip(in_source) {
        *v = if s { (*v * scale).clamp(0.0, AMP_CLIP) } else { 0.0 };
    }
}

struct Entry {
    footprint: usize,
    fbb: OrientedRect,
    center_px: (f64, f64),
}

const BUCKET_PX: f64 = 64.0;

/// Precomputes footprint boxes and a coarse spatial index for one raster so
/// that many patches can be processed cheaply.
pub struct SampleExtractor<'a> {
    raster: &'a Raster,
    footprints: &'a [Footprint],
    city_id: String,
    chip_px: usize,
    cos_theta: f64,
    layover_per_m: f64,
    range_az: f64,
    geom: AcquisitionGeometry,
    factor: ProjectionFactor,
    entries: Vec<Entry>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    skipped_degenerate: usize,
}

impl<'a> SampleExtractor<'a> {
    pub fn new(
        raster: &'a Raster,
        footprints: &'a [Footprint],
        geom: &AcquisitionGeometry,
        factor: ProjectionFactor,
        city_id: &str,
        chip_px: usize,
    ) -> Result<Self> {
        if chip_px == 0 {
            return Err(Error::InvalidInput("chip size must be positive".into()));
        }
        raster.validate()?;
        let range_az = range_azimuth(geom)?;
        let mut entries = Vec::with_capacity(footprints.len());
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut skipped_degenerate = 0;
        for (i, f) in footprints.iter().enumerate() {
            let fbb = match heading_aligned_bbox(f, range_az) {
                Ok(b) if b.extent_u_m > 0.0 && b.extent_v_m > 0.0 => b,
                Ok(_) | Err(Error::DegenerateGeometry(_)) => {
                    skipped_degenerate += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let center_px = raster.to_pixel(fbb.center);
            let key = (
                (center_px.0 / BUCKET_PX).floor() as i64,
                (center_px.1 / BUCKET_PX).floor() as i64,
            );
            buckets.entry(key).or_default().push(entries.len());
            entries.push(Entry {
                footprint: i,
                fbb,
                center_px,
            });
        }
        Ok(SampleExtractor {
            raster,
            footprints,
            city_id: city_id.to_owned(),
            chip_px,
            cos_theta: geom.cos_incidence(),
            layover_per_m: factor.value(geom.incidence_deg),
            range_az,
            geom: *geom,
            factor,
            entries,
            buckets,
            skipped_degenerate,
        })
    }

    pub fn skipped_degenerate(&self) -> usize {
        self.skipped_degenerate
    }

    /// One sample per footprint whose box center falls inside the patch.
    pub fn extract(&self, patch: &Patch) -> Result<Extraction> {
        let (r0, c0) = (patch.origin_px.0 as f64, patch.origin_px.1 as f64);
        let s = patch.size_px as f64;
        let b_lo = ((r0 / BUCKET_PX).floor() as i64, (c0 / BUCKET_PX).floor() as i64);
        let b_hi = (
            ((r0 + s) / BUCKET_PX).floor() as i64,
            ((c0 + s) / BUCKET_PX).floor() as i64,
        );
        let mut hits: Vec<usize> = Vec::new();
        for br in b_lo.0..=b_hi.0 {
            for bc in b_lo.1..=b_hi.1 {
                if let Some(v) = self.buckets.get(&(br, bc)) {
                    hits.extend(v.iter().copied().filter(|&e| {
                        let (r, c) = self.entries[e].center_px;
                        patch.contains_px(r, c)
                    }));
                }
            }
        }
        hits.sort_unstable();

        let mut out = Extraction::default();
        for e in hits {
            match self.build(&self.entries[e], patch)? {
                Some(s) => out.samples.push(s),
                None => out.skipped_empty += 1,
            }
        }
        Ok(out)
    }

    fn build(&self, entry: &Entry, patch: &Patch) -> Result<Option<BuildingSample>> {
        let f = &self.footprints[entry.footprint];
        let r = self.raster;
        let n = self.chip_px;
        let top = entry.center_px.0.floor() as i64 - (n / 2) as i64;
        let left = entry.center_px.1.floor() as i64 - (n / 2) as i64;

        let mut amp = vec![0.0f32; n * n];
        let mut in_source = vec![false; n * n];
        let mut mask = vec![0.0f32; n * n];
        let mut mask_pixels = 0;
        for i in 0..n {
            for j in 0..n {
                let (row, col) = (top + i as i64, left + j as i64);
                let k = i * n + j;
                if let Some(v) = r.get_signed(row, col) {
                    amp[k] = v;
                    in_source[k] = true;
                }
                if f.contains(r.pixel_center(row, col)) {
                    mask[k] = 1.0;
                    mask_pixels += 1;
                }
            }
        }
        if mask_pixels == 0 {
            return Ok(None);
        }
        normalize_chip(&mut amp, &in_source);

        let (lo, hi) = f.aabb();
        let (rmin, cmin) = r.to_pixel(Point::new(lo.x, hi.y));
        let (rmax, cmax) = r.to_pixel(Point::new(hi.x, lo.y));
        let truncated = rmin < top as f64
            || cmin < left as f64
            || rmax > (top + n as i64) as f64
            || cmax > (left + n as i64) as f64;

        let bbb = project_bbb(&entry.fbb, f.height_m(), &self.geom, self.factor)?;
        debug_assert!(
            (bbb.extent_u_m - entry.fbb.extent_u_m - f.height_m() * self.layover_per_m).abs()
                < 1e-9
        );
        Ok(Some(BuildingSample {
            building_id: f.id().to_owned(),
            city_id: self.city_id.clone(),
            chip_px: n,
            chip_amp: amp,
            chip_mask: mask,
            fbb_extent_u_m: entry.fbb.extent_u_m,
            fbb_extent_v_m: entry.fbb.extent_v_m,
            cos_theta: self.cos_theta,
            target_lbbb_m: bbb.extent_u_m,
            ref_height_m: f.height_m(),
            patch_origin_px: patch.origin_px,
            chip_origin_m: Point::new(
                r.origin.x + left as f64 * r.pixel_size_m,
                r.origin.y - top as f64 * r.pixel_size_m,
            ),
            pixel_size_m: r.pixel_size_m,
            fbb_center: entry.fbb.center,
            range_azimuth_deg: self.range_az,
            centroid: f.centroid(),
            footprint_area_m2: f.area(),
            mask_pixels,
            truncated,
        }))
    }
}

/// Single-patch convenience wrapper around [`SampleExtractor`].
pub fn extract_samples(
    raster: &Raster,
    patch: &Patch,
    footprints: &[Footprint],
    geom: &AcquisitionGeometry,
    factor: ProjectionFactor,
    city_id: &str,
    chip_px: usize,
) -> Result<Extraction> {
    SampleExtractor::new(raster, footprints, geom, factor, city_id, chip_px)?.extract(patch)
}

use std::cmp::Ordering;
use std::collections::HashMap;

use super::BuildingSample;

const CENTROID_QUANTUM_M: f64 = 0.5;
const AREA_QUANTUM_M2: f64 = 0.5;

/// Geometric identity of a building: city, centroid on a 0.5 m grid and
/// footprint area in 0.5 m² steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DedupKey {
    pub city_id: String,
    pub centroid_q: (i64, i64),
    pub area_q: i64,
}

pub fn dedup_key(s: &BuildingSample) -> DedupKey {
    DedupKey {
        city_id: s.city_id.clone(),
        centroid_q: (
            (s.centroid.x / CENTROID_QUANTUM_M).round() as i64,
            (s.centroid.y / CENTROID_QUANTUM_M).round() as i64,
        ),
        area_q: (s.footprint_area_m2 / AREA_QUANTUM_M2).round() as i64,
    }
}

/// Ordering of duplicates: `Less` means `a` is the better copy.
fn preference(a: &BuildingSample, b: &BuildingSample) -> Ordering {
    a.truncated
        .cmp(&b.truncated)
        .then(b.mask_pixels.cmp(&a.mask_pixels))
        .then(a.patch_origin_px.cmp(&b.patch_origin_px))
}

/// Keeps one sample per [`DedupKey`]: the one whose footprint fits inside
/// its chip, then the one with more mask pixels, then the one from the
/// lexicographically first patch. Output is ordered by `(city_id,
/// building_id)`.
pub fn deduplicate(samples: Vec<BuildingSample>) -> Vec<BuildingSample> {
    let mut best: HashMap<DedupKey, BuildingSample> = HashMap::with_capacity(samples.len());
    for s in samples {
        let key = dedup_key(&s);
        match best.get(&key) {
            Some(kept) if preference(kept, &s) != Ordering::Greater => {}
            _ => {
                best.insert(key, s);
            }
        }
    }
    let mut out: Vec<BuildingSample> = best.into_values().collect();
    out.sort_by(|a, b| {
        (a.city_id.as_str(), a.building_id.as_str(), a.patch_origin_px)
            .cmp(&(b.city_id.as_str(), b.building_id.as_str(), b.patch_origin_px))
    });
    out
}

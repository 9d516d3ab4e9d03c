use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene_sim::Raster;

pub const DEFAULT_PATCH_PX: usize = 256;
pub const DEFAULT_OVERLAP: f64 = 0.2;

/// A square window into a source raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    /// `(row, col)` of the top-left pixel in the source raster.
    pub origin_px: (usize, usize),
    pub size_px: usize,
    /// The source is smaller than the patch along some axis; the window is
    /// zero-filled beyond the source's south/east edges.
    pub padded: bool,
}

impl Patch {
    pub fn contains_px(&self, row: f64, col: f64) -> bool {
        let (r0, c0) = (self.origin_px.0 as f64, self.origin_px.1 as f64);
        let s = self.size_px as f64;
        row >= r0 && row < r0 + s && col >= c0 && col < c0 + s
    }

    /// Copies the window out of `raster`, zero-filling outside it.
    pub fn window(&self, raster: &Raster) -> Vec<f32> {
        let s = self.size_px;
        let mut out = vec![0.0; s * s];
        for i in 0..s {
            let row = self.origin_px.0 + i;
            if row >= raster.height_px {
                break;
            }
            for j in 0..s {
                let col = self.origin_px.1 + j;
                if col >= raster.width_px {
                    break;
                }
                out[i * s + j] = raster.get(row, col);
            }
        }
        out
    }
}

/// Patch start offsets along one axis of length `dim`.
///
/// The stride is `floor(patch_px · (1 − overlap))`, so neighbouring patches
/// overlap by at least the requested fraction. A final position clamped to
/// `dim − patch_px` is appended when the regular grid stops short of the
/// edge.
pub fn tile_positions(dim: usize, patch_px: usize, overlap: f64) -> Result<Vec<usize>> {
    if patch_px == 0 {
        return Err(Error::InvalidInput("patch size must be positive".into()));
    }
    if !(overlap.is_finite() && (0.0..1.0).contains(&overlap)) {
        return Err(Error::InvalidInput(format!(
            "overlap {overlap} must lie in [0, 1)"
        )));
    }
    if dim <= patch_px {
        return Ok(vec![0]);
    }
    let stride = ((patch_px as f64 * (1.0 - overlap)).floor() as usize).max(1);
    let last = dim - patch_px;
    let mut positions: Vec<usize> = (0..=last).step_by(stride).collect();
    if positions.last() != Some(&last) {
        positions.push(last);
    }
    Ok(positions)
}

pub fn tile(raster: &Raster, patch_px: usize, overlap: f64) -> Result<Vec<Patch>> {
    let rows = tile_positions(raster.height_px, patch_px, overlap)?;
    let cols = tile_positions(raster.width_px, patch_px, overlap)?;
    let padded = raster.height_px < patch_px || raster.width_px < patch_px;
    Ok(rows
        .iter()
        .flat_map(|&r| {
            cols.iter().map(move |&c| Patch {
                origin_px: (r, c),
                size_px: patch_px,
                padded,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use proptest::prelude::*;

    fn raster(w: usize, h: usize) -> Raster {
        Raster::filled(w, h, 2.5, Point::new(0.0, 0.0), "amplitude", 1.0)
    }

    #[test]
    fn positions_examples() {
        assert_eq!(tile_positions(256, 256, 0.2).unwrap(), vec![0]);
        assert_eq!(tile_positions(460, 256, 0.2).unwrap(), vec![0, 204]);
        assert_eq!(tile_positions(500, 256, 0.2).unwrap(), vec![0, 204, 244]);
    }

    #[test]
    fn patch_counts() {
        assert_eq!(tile(&raster(256, 256), 256, 0.2).unwrap().len(), 1);
        assert_eq!(tile(&raster(460, 460), 256, 0.2).unwrap().len(), 4);
        let p = tile(&raster(256, 500), 256, 0.2).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(
            p.iter().map(|p| p.origin_px.0).collect::<Vec<_>>(),
            vec![0, 204, 244]
        );
    }

    #[test]
    fn small_raster_is_padded() {
        let r = raster(100, 300);
        let patches = tile(&r, 256, 0.2).unwrap();
        assert!(patches.iter().all(|p| p.padded));
        assert_eq!(patches.len(), 2);
        let w = patches[0].window(&r);
        assert_eq!(w[0], 1.0);
        assert_eq!(w[150], 0.0);
    }

    #[test]
    fn bad_parameters() {
        assert!(tile_positions(10, 0, 0.2).is_err());
        assert!(tile_positions(10, 4, 1.0).is_err());
        assert!(tile_positions(10, 4, -0.1).is_err());
    }

    proptest! {
        #[test]
        fn every_pixel_is_covered(dim in 1usize..3000, patch in 1usize..300, overlap in 0.0f64..0.9) {
            let pos = tile_positions(dim, patch, overlap).unwrap();
            let mut covered = vec![false; dim];
            for &p in &pos {
                for c in covered.iter_mut().skip(p).take(patch) {
                    *c = true;
                }
            }
            prop_assert!(covered.iter().all(|&c| c));
            prop_assert!(pos.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

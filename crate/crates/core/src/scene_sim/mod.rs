//! Synthetic cities and SAR-like amplitude rendering.
//!
//! The amplitude model is a four-level cartoon (shadow < background < roof <
//! layover) on a north-up ground-range grid, optionally multiplied by
//! single-look speckle. It is enough to exercise the bounding-box geometry
//! end to end without real satellite products.

mod city;
mod measure;
pub(crate) mod raster;
mod render;
mod spec;

pub use city::generate_city;
pub use measure::{measure_range_extent, MeasureParams};
pub use raster::{read_raster, read_raster_header, write_raster, write_raster_tagged, Raster, RasterHeader};
pub use render::{render_amplitude, render_height_truth, scene_raster};
pub use spec::{HeightDistribution, SceneSpec, Speckle};

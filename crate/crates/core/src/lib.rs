//! Object-based building height estimation from single very-high-resolution
//! SAR amplitude images.
//!
//! A building's footprint and its imaged extent in ground range differ by the
//! layover of the facade. Measuring (or regressing) the range extent of the
//! imaged building and subtracting the footprint's range extent yields the
//! layover length, which converts to height through the incidence angle.
//!
//! Modules:
//!
//! - [`geometry`]: footprints, oriented rectangles, hulls, orbit heading and
//!   the layover forward/inverse model.
//! - [`scene_sim`]: synthetic cities and SAR-like amplitude rasters with
//!   layover, shadow and speckle, plus height truth rasters.
//! - [`pipeline`]: raster tiling, per-building samples, deduplication and
//!   dataset splits.
//! - [`regressor`]: a compact convolutional regressor trained from scratch.
//! - [`eval`]: stratified MAE/RMSE reports, tables and CSV exports.

pub mod error;
pub mod eval;
pub mod geometry;
pub mod pipeline;
pub mod regressor;
pub mod rng;
pub mod scene_sim;

pub use error::{Error, Result};

pub use geometry::{
    AcquisitionGeometry, Footprint, LookSide, OrbitPass, OrientedRect, Point, ProjectionFactor,
};



pub use eval::{EvalPair, MetricsReport};
pub use pipeline::{BuildingSample, Patch};
pub use regressor::{ModelConfig, TrainState};
pub use scene_sim::{Raster, SceneSpec};

//! From rasters and footprints to per-building training samples.
//!
//! The flow is [`tile`] → [`SampleExtractor::extract`] per patch →
//! [`deduplicate`] → [`subsample_city`] → a split ([`split_loco`] or
//! [`split_ratio`]).

mod dedup;
mod io;
mod sample;
mod split;
mod tile;

pub use dedup::{dedup_key, deduplicate, DedupKey};
pub use io::{read_sample_set, write_sample_set, SampleSet};
pub use sample::{extract_samples, normalize_chip, BuildingSample, Extraction, SampleExtractor, AMP_CLIP};
pub use split::{split_loco, split_ratio, subsample_city, subsample_city_stratified};
pub use tile::{tile, tile_positions, Patch, DEFAULT_OVERLAP, DEFAULT_PATCH_PX};

/// Default per-building chip size in pixels.
pub const DEFAULT_CHIP_PX: usize = 128;

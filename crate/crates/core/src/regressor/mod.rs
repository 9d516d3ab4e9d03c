//! Compact convolutional regressor for the building bounding-box range
//! extent.
//!
//! Input is a two-channel chip (normalized amplitude and footprint mask).
//! A stack of strided convolutions with rectifiers is globally average
//! pooled, concatenated with the footprint box features and passed through a
//! fully connected head that outputs one scalar, the predicted range extent
//! of the building bounding box. Height follows from the difference to the
//! footprint box extent.

mod checkpoint;
mod config;
mod model;
mod tensor;
mod train;

#[cfg(test)]
mod tests;

pub use checkpoint::{load_checkpoint, read_loss_csv, save_checkpoint, write_loss_csv, CheckpointHeader};
pub use config::{Activation, ConvSpec, Layout, ModelConfig, Normalization, N_FEATURES};
pub use model::{
    backward, forward, forward_with_precision, mse_loss, predict_height, predict_heights, Gradients,
    HeightPrediction, Precision, TrainState,
};
pub use tensor::Tensor;
pub use train::{train, TrainHyper};

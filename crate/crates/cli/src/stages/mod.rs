//! Pipeline stages. Each reads only the files written by earlier stages
//! and checks that they carry the current config hash.

mod dataset;
mod evaluate;
mod predict;
mod report;
mod simulate;
mod train;

pub use dataset::build_dataset;
pub use evaluate::evaluate;
pub use predict::{predict, read_predictions, PredictionRow};
pub use report::report;
pub use simulate::simulate;
pub use train::{load_samples, train, SampleKey, SplitRecord};

use anyhow::Result;

use crate::layout::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    BuildDataset,
    Train,
    Predict,
    Evaluate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Simulate,
        Stage::BuildDataset,
        Stage::Train,
        Stage::Predict,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::BuildDataset => "build-dataset",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }

    /// Runs the stage and returns human-readable summary lines.
    pub fn run(self, run: &Run) -> Result<Vec<String>> {
        match self {
            Stage::Simulate => simulate(run),
            Stage::BuildDataset => build_dataset(run),
            Stage::Train => train(run),
            Stage::Predict => predict(run),
            Stage::Evaluate => evaluate(run),
            Stage::Report => report(run),
        }
    }
}

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use sarheight_core::regressor::{load_checkpoint, predict_heights};
use sarheight_core::BuildingSample;
use serde::{Deserialize, Serialize};

use super::train::{load_samples, SampleKey, SplitRecord};
use crate::failure::Failure;
use crate::layout::{read_json, Run};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub building_id: String,
    pub city_id: String,
    pub pred_height_m: f64,
    /// Regressed bounding-box range extent.
    pub lbbb_m: f64,
    /// The regressed extent was shorter than the footprint box.
    pub clamped: bool,
}

fn write_predictions(path: &Path, rows: &[PredictionRow], hash: &str) -> Result<()> {
    let mut file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "# config_hash={hash}")?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => anyhow::Error::new(Failure::MissingInput(path.to_owned())),
        _ => anyhow::Error::new(e),
    })?;
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file)
        .deserialize()
        .collect::<Result<_, _>>()
        .with_context(|| format!("reading {}", path.display()))
}

pub fn predict(run: &Run) -> Result<Vec<String>> {
    let all = load_samples(run)?;
    let index: HashMap<SampleKey, &BuildingSample> = all.iter().map(|s| (SampleKey::of(s), s)).collect();
    let mut summary = Vec::new();
    for exp in run.config.experiments() {
        let split_path = run.layout.split(&exp.name);
        let record: SplitRecord = read_json(&split_path)?;
        run.check(&split_path, Some(&record.config_hash))?;
        let ckpt = run.layout.checkpoint(&exp.name);
        let (state, header) = load_checkpoint(&ckpt)?;
        run.check(&ckpt.with_extension("json"), header.config_hash.as_deref())?;

        let test: Vec<&BuildingSample> = record
            .test
            .iter()
            .map(|k| {
                index.get(k).copied().ok_or_else(|| {
                    anyhow::Error::new(Failure::Config(format!(
                        "{}: sample {}/{} is not in the datasets",
                        split_path.display(),
                        k.city_id,
                        k.building_id
                    )))
                })
            })
            .collect::<Result<_>>()?;
        let preds = predict_heights(&state, &test, run.config.projection_factor)
            .with_context(|| format!("predicting {}", exp.name))?;
        let rows: Vec<PredictionRow> = test
            .iter()
            .zip(&preds)
            .map(|(s, p)| PredictionRow {
                building_id: s.building_id.clone(),
                city_id: s.city_id.clone(),
                pred_height_m: p.height_m,
                lbbb_m: p.lbbb_m,
                clamped: p.clamped,
            })
            .collect();
        write_predictions(&run.layout.predictions(&exp.name), &rows, &run.hash)?;
        let clamped = rows.iter().filter(|r| r.clamped).count();
        summary.push(format!(
            "{}: {} predictions, {clamped} clamped to zero height",
            exp.name,
            rows.len()
        ));
    }
    Ok(summary)
}

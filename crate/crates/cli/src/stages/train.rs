use anyhow::{Context, Result};
use sarheight_core::pipeline::{read_sample_set, split_loco, split_ratio};
use sarheight_core::regressor::{save_checkpoint, train as fit, write_loss_csv, Normalization, TrainState};
use sarheight_core::BuildingSample;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentSplit};
use crate::layout::{ensure_dir, write_json, Run};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleKey {
    pub city_id: String,
    pub building_id: String,
}

impl SampleKey {
    pub fn of(s: &BuildingSample) -> Self {
        SampleKey {
            city_id: s.city_id.clone(),
            building_id: s.building_id.clone(),
        }
    }
}

/// Which samples an experiment trained and tested on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub config_hash: String,
    pub experiment: Experiment,
    pub train_cities: Vec<String>,
    pub test_cities: Vec<String>,
    pub train: Vec<SampleKey>,
    pub test: Vec<SampleKey>,
}

/// All cities' sample sets in config order, hash-checked.
pub fn load_samples(run: &Run) -> Result<Vec<BuildingSample>> {
    let mut all = Vec::new();
    for city in &run.config.cities {
        let stem = run.layout.dataset(&city.name);
        let manifest = stem.with_extension("json");
        run.require(&manifest)?;
        let set = read_sample_set(&stem)?;
        run.check(&manifest, set.config_hash.as_deref())?;
        all.extend(set.samples);
    }
    Ok(all)
}

fn cities_of(samples: &[&BuildingSample], order: &[String]) -> Vec<String> {
    order
        .iter()
        .filter(|c| samples.iter().any(|s| &s.city_id == *c))
        .cloned()
        .collect()
}

pub(crate) fn split<'a>(
    run: &Run,
    exp: &Experiment,
    all: &'a [BuildingSample],
) -> Result<(Vec<&'a BuildingSample>, Vec<&'a BuildingSample>)> {
    let (train, test) = match &exp.split {
        ExperimentSplit::Loco { held_out } => split_loco(all, held_out),
        ExperimentSplit::Ratio { train_frac } => split_ratio(all, *train_frac, run.config.split_seed()),
    }
    .with_context(|| format!("splitting samples for {}", exp.name))?;
    if train.is_empty() || test.is_empty() {
        anyhow::bail!(crate::failure::Failure::Config(format!(
            "experiment {} has {} training and {} test samples",
            exp.name,
            train.len(),
            test.len()
        )));
    }
    Ok((train, test))
}

pub fn train(run: &Run) -> Result<Vec<String>> {
    let cfg = &run.config;
    let all = load_samples(run)?;
    let names: Vec<String> = cfg.cities.iter().map(|c| c.name.clone()).collect();
    let mut summary = Vec::new();
    for exp in cfg.experiments() {
        let (train_set, test_set) = split(run, &exp, &all)?;
        let mut model = cfg.model.clone();
        if cfg.normalize {
            model.normalization = Some(Normalization::fit(&train_set)?);
        }
        let mut state = TrainState::new(model)?;
        fit(&mut state, &train_set, &cfg.training)
            .with_context(|| format!("training {}", exp.name))?;

        ensure_dir(&run.layout.experiment_dir(&exp.name))?;
        let hash = Some(run.hash.as_str());
        save_checkpoint(&run.layout.checkpoint(&exp.name), &state, hash)?;
        write_loss_csv(&run.layout.loss(&exp.name), &state.loss_history, hash)?;
        let record = SplitRecord {
            config_hash: run.hash.clone(),
            experiment: exp.clone(),
            train_cities: cities_of(&train_set, &names),
            test_cities: cities_of(&test_set, &names),
            train: train_set.iter().map(|s| SampleKey::of(s)).collect(),
            test: test_set.iter().map(|s| SampleKey::of(s)).collect(),
        };
        write_json(&run.layout.split(&exp.name), &record)?;
        let last = state.loss_history.last().copied().unwrap_or(f64::NAN);
        summary.push(format!(
            "{}: {} train / {} test samples, {} steps, final batch loss {last:.4}",
            exp.name,
            train_set.len(),
            test_set.len(),
            state.step
        ));
    }
    Ok(summary)
}

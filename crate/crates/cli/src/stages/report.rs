use std::fmt::Write as _;
use std::fs;

use anyhow::{Context, Result};
use sarheight_core::eval::{format_table, read_metrics_csv, MetricsReport};
use serde::Serialize;

use super::evaluate::label_header;
use super::train::SplitRecord;
use crate::config::ExperimentSplit;
use crate::layout::{csv_config_hash, read_json, write_json, Run};

#[derive(Serialize)]
struct ExperimentSummary {
    name: String,
    label: String,
    mode: &'static str,
    train_cities: Vec<String>,
    test_cities: Vec<String>,
    n_train: usize,
    n_test: usize,
    metrics: Vec<MetricsReport>,
}

#[derive(Serialize)]
struct Report {
    config_hash: String,
    seed: u64,
    cities: Vec<String>,
    experiments: Vec<ExperimentSummary>,
}

pub fn report(run: &Run) -> Result<Vec<String>> {
    let cfg = &run.config;
    let mut experiments = Vec::new();
    for exp in cfg.experiments() {
        let split_path = run.layout.split(&exp.name);
        let record: SplitRecord = read_json(&split_path)?;
        run.check(&split_path, Some(&record.config_hash))?;
        let metrics_path = run.layout.metrics(&exp.name);
        run.check(&metrics_path, csv_config_hash(&metrics_path)?.as_deref())?;
        let mut metrics = read_metrics_csv(&metrics_path)?;
        for m in &mut metrics {
            m.threshold_m = cfg.eval.threshold_m;
        }
        experiments.push(ExperimentSummary {
            name: exp.name.clone(),
            label: exp.label.clone(),
            mode: match exp.split {
                ExperimentSplit::Loco { .. } => "loco",
                ExperimentSplit::Ratio { .. } => "ratio",
            },
            train_cities: record.train_cities,
            test_cities: record.test_cities,
            n_train: record.train.len(),
            n_test: record.test.len(),
            metrics,
        });
    }

    let mut text = String::new();
    let _ = writeln!(text, "# config_hash={}", run.hash);
    let _ = writeln!(text, "Building height estimation run (seed {})", cfg.seed);
    let _ = writeln!(
        text,
        "Cities: {}",
        cfg.cities.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ")
    );
    for (mode, title) in [
        ("loco", "Out-of-distribution: leave one city out"),
        ("ratio", "In-distribution: pooled random split"),
    ] {
        let group: Vec<&ExperimentSummary> = experiments.iter().filter(|e| e.mode == mode).collect();
        if group.is_empty() {
            continue;
        }
        let rows: Vec<MetricsReport> = group.iter().map(|e| e.metrics[0].clone()).collect();
        let header = if mode == "loco" {
            label_header(&ExperimentSplit::Loco {
                held_out: String::new(),
            })
        } else {
            label_header(&ExperimentSplit::Ratio { train_frac: 0.0 })
        };
        let _ = writeln!(text, "\n{title}\n");
        text.push_str(&format_table(&rows, header)?);
        let _ = writeln!(text);
        for e in &group {
            let _ = writeln!(
                text,
                "{}: trained on {} ({} samples), tested on {} ({} samples)",
                e.label,
                e.train_cities.join(", "),
                e.n_train,
                e.test_cities.join(", "),
                e.n_test
            );
        }
    }

    let path = run.layout.report();
    fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
    write_json(
        &run.layout.report_json(),
        &Report {
            config_hash: run.hash.clone(),
            seed: cfg.seed,
            cities: cfg.cities.iter().map(|c| c.name.clone()).collect(),
            experiments,
        },
    )?;
    Ok(vec![format!("report written to {}", path.display())])
}

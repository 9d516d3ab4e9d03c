use std::collections::HashMap;
use std::fs;

use anyhow::{Context, Result};
use sarheight_core::eval::{
    export_height_density, export_scatter, format_table, stratified_report, write_metrics_csv, EvalPair,
    MetricsReport,
};
use sarheight_core::geometry::FootprintCollection;

use super::predict::read_predictions;
use crate::config::ExperimentSplit;
use crate::failure::Failure;
use crate::layout::{csv_config_hash, Run};

fn reference_heights(run: &Run) -> Result<(HashMap<(String, String), f64>, Vec<(String, Vec<f64>)>)> {
    let mut refs = HashMap::new();
    let mut per_city = Vec::new();
    for city in &run.config.cities {
        let path = run.layout.footprints(&city.name);
        let (coll, h) = FootprintCollection::read(&path)?;
        run.check(&path, h.as_deref())?;
        for b in &coll.buildings {
            refs.insert((city.name.clone(), b.id().to_owned()), b.height_m());
        }
        per_city.push((city.name.clone(), coll.heights()));
    }
    Ok((refs, per_city))
}

/// Table label column header for an experiment kind.
pub(crate) fn label_header(split: &ExperimentSplit) -> &'static str {
    match split {
        ExperimentSplit::Loco { .. } => "City",
        ExperimentSplit::Ratio { .. } => "Test",
    }
}

pub fn evaluate(run: &Run) -> Result<Vec<String>> {
    let cfg = &run.config;
    let (refs, per_city) = reference_heights(run)?;
    let threshold = cfg.eval.threshold_m;
    let hash = Some(run.hash.as_str());
    let mut summary = Vec::new();
    for exp in cfg.experiments() {
        let pred_path = run.layout.predictions(&exp.name);
        run.check(&pred_path, csv_config_hash(&pred_path)?.as_deref())?;
        let rows = read_predictions(&pred_path)?;
        let pairs: Vec<EvalPair> = rows
            .iter()
            .map(|r| {
                let href = refs
                    .get(&(r.city_id.clone(), r.building_id.clone()))
                    .ok_or_else(|| {
                        Failure::Config(format!(
                            "{}: no reference height for {}/{}",
                            pred_path.display(),
                            r.city_id,
                            r.building_id
                        ))
                    })?;
                Ok(EvalPair::new(&r.building_id, &r.city_id, *href, r.pred_height_m)?)
            })
            .collect::<Result<_>>()?;

        // The first row carries the experiment label; cities follow when
        // the test set spans several.
        let mut reports = vec![stratified_report(&exp.label, &pairs, threshold)];
        let mut cities: Vec<&str> = pairs.iter().map(|p| p.city_id.as_str()).collect();
        cities.sort_unstable();
        cities.dedup();
        if cities.len() > 1 || cities.first() != Some(&exp.label.as_str()) {
            for c in cities {
                let sub: Vec<EvalPair> = pairs.iter().filter(|p| p.city_id == c).cloned().collect();
                reports.push(stratified_report(c, &sub, threshold));
            }
        }
        write_metrics_csv(&run.layout.metrics(&exp.name), &reports, hash)?;
        let table = format_table(&reports[..1], label_header(&exp.split))?;
        let table_path = run.layout.table(&exp.name);
        fs::write(&table_path, &table).with_context(|| format!("writing {}", table_path.display()))?;
        export_scatter(&pairs, &run.layout.scatter(&exp.name), hash)?;
        summary.push(table_row_line(&exp.name, &reports[0]));
    }
    export_height_density(&per_city, cfg.eval.density_bin_m, &run.layout.density(), hash)?;
    Ok(summary)
}

fn table_row_line(name: &str, r: &MetricsReport) -> String {
    let f = |v: Option<f64>| v.map_or_else(|| "—".to_owned(), |x| format!("{x:.2}"));
    format!(
        "{name}: n={} MAE {} / {} / {}, RMSE {} / {} / {}",
        r.all.n,
        f(r.all.mae),
        f(r.lt.mae),
        f(r.ge.mae),
        f(r.all.rmse),
        f(r.lt.rmse),
        f(r.ge.rmse)
    )
}

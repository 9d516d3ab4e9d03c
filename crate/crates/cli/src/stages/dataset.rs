use anyhow::{Context, Result};
use rayon::prelude::*;
use sarheight_core::geometry::FootprintCollection;
use sarheight_core::pipeline::{
    deduplicate, subsample_city, subsample_city_stratified, tile, write_sample_set, SampleExtractor,
    SampleSet,
};
use sarheight_core::scene_sim::{read_raster, read_raster_header};

use crate::layout::{ensure_dir, Run};

pub fn build_dataset(run: &Run) -> Result<Vec<String>> {
    let cfg = &run.config;
    let p = &cfg.pipeline;
    ensure_dir(&run.layout.root.join("datasets"))?;
    let mut summary = Vec::new();
    for (i, city) in cfg.cities.iter().enumerate() {
        let fp_path = run.layout.footprints(&city.name);
        let (coll, h) = FootprintCollection::read(&fp_path)?;
        run.check(&fp_path, h.as_deref())?;
        let amp_path = run.layout.amplitude(&city.name);
        let header = read_raster_header(&amp_path)?;
        run.check(&amp_path, header.config_hash.as_deref())?;
        let raster = read_raster(&amp_path)?;

        let geom = cfg.scene(i).geom;
        let patches = tile(&raster, p.patch_px, p.overlap)?;
        let extractor = SampleExtractor::new(
            &raster,
            &coll.buildings,
            &geom,
            cfg.projection_factor,
            &city.name,
            p.chip_px,
        )
        .with_context(|| format!("preparing samples for {}", city.name))?;
        let extractions = patches
            .par_iter()
            .map(|patch| extractor.extract(patch))
            .collect::<sarheight_core::Result<Vec<_>>>()?;
        let raw: usize = extractions.iter().map(|e| e.samples.len()).sum();
        let empty: usize = extractions.iter().map(|e| e.skipped_empty).sum();
        let samples = deduplicate(extractions.into_iter().flat_map(|e| e.samples).collect());
        let unique = samples.len();
        let samples = match p.stratify_bin_m {
            Some(bin) => subsample_city_stratified(samples, p.subsample_n, cfg.seed, bin)?,
            None => subsample_city(samples, p.subsample_n, cfg.seed),
        };
        let kept = samples.len();
        write_sample_set(
            &run.layout.dataset(&city.name),
            &SampleSet {
                city_id: city.name.clone(),
                chip_px: p.chip_px,
                projection_factor: cfg.projection_factor,
                config_hash: Some(run.hash.clone()),
                samples,
            },
        )?;
        summary.push(format!(
            "{}: {} patches, {raw} raw samples, {unique} unique, {kept} kept; {} degenerate footprints, {empty} empty-mask skips",
            city.name,
            patches.len(),
            extractor.skipped_degenerate(),
        ));
    }
    Ok(summary)
}

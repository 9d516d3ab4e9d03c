use anyhow::{Context, Result};
use sarheight_core::geometry::FootprintCollection;
use sarheight_core::scene_sim::{generate_city, render_amplitude, render_height_truth, write_raster_tagged};

use crate::layout::{ensure_dir, Run};

pub fn simulate(run: &Run) -> Result<Vec<String>> {
    let cfg = &run.config;
    let mut summary = Vec::new();
    for (i, city) in cfg.cities.iter().enumerate() {
        let spec = cfg.scene(i);
        let buildings =
            generate_city(&spec).with_context(|| format!("placing buildings for {}", city.name))?;
        let amplitude = render_amplitude(&buildings, &spec)
            .with_context(|| format!("rendering amplitude for {}", city.name))?;
        let height = render_height_truth(&buildings, &spec)
            .with_context(|| format!("rendering heights for {}", city.name))?;

        ensure_dir(&run.layout.city_dir(&city.name))?;
        let hash = Some(run.hash.as_str());
        let n = buildings.len();
        FootprintCollection::new(city.name.clone(), buildings)?
            .write(&run.layout.footprints(&city.name), hash)?;
        write_raster_tagged(&amplitude, &run.layout.amplitude(&city.name), hash)?;
        write_raster_tagged(&height, &run.layout.height(&city.name), hash)?;
        summary.push(format!(
            "{}: {n} buildings, {}x{} px at {} m",
            city.name, amplitude.width_px, amplitude.height_px, spec.pixel_size_m
        ));
    }
    Ok(summary)
}

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{BucketMetrics, EvalPair, MetricsReport};
use super::DEFAULT_THRESHOLD_M;
use crate::error::{Error, Result};

/// Opens a CSV writer, preceded by a `# config_hash=...` line when given.
fn csv_writer(path: &Path, config_hash: Option<&str>, header: &[&str]) -> Result<csv::Writer<File>> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    if let Some(h) = config_hash {
        writeln!(file, "# config_hash={h}").map_err(|e| Error::io(path, e))?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    Ok(w)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

const METRICS_HEADER: [&str; 10] = [
    "city_id", "n_all", "mae_all", "rmse_all", "n_lt40", "mae_lt40", "rmse_lt40", "n_ge40",
    "mae_ge40", "rmse_ge40",
];

#[derive(Serialize, Deserialize)]
struct MetricsRow {
    city_id: String,
    n_all: usize,
    mae_all: Option<f64>,
    rmse_all: Option<f64>,
    n_lt40: usize,
    mae_lt40: Option<f64>,
    rmse_lt40: Option<f64>,
    n_ge40: usize,
    mae_ge40: Option<f64>,
    rmse_ge40: Option<f64>,
}

/// One row per report; absent metrics are empty cells.
pub fn write_metrics_csv(path: &Path, reports: &[MetricsReport], config_hash: Option<&str>) -> Result<()> {
    let mut w = csv_writer(path, config_hash, &METRICS_HEADER)?;
    for r in reports {
        let row = MetricsRow {
            city_id: r.city_id.clone(),
            n_all: r.all.n,
            mae_all: r.all.mae,
            rmse_all: r.all.rmse,
            n_lt40: r.lt.n,
            mae_lt40: r.lt.mae,
            rmse_lt40: r.lt.rmse,
            n_ge40: r.ge.n,
            mae_ge40: r.ge.mae,
            rmse_ge40: r.ge.rmse,
        };
        w.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    finish(w, path)
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsReport>> {
    let mut rd = csv_reader(path)?;
    rd.deserialize::<MetricsRow>()
        .map(|row| {
            let r = row.map_err(|e| Error::csv(path, e))?;
            Ok(MetricsReport {
                city_id: r.city_id,
                threshold_m: DEFAULT_THRESHOLD_M,
                all: BucketMetrics {
                    n: r.n_all,
                    mae: r.mae_all,
                    rmse: r.rmse_all,
                },
                lt: BucketMetrics {
                    n: r.n_lt40,
                    mae: r.mae_lt40,
                    rmse: r.rmse_lt40,
                },
                ge: BucketMetrics {
                    n: r.n_ge40,
                    mae: r.mae_ge40,
                    rmse: r.rmse_ge40,
                },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub building_id: String,
    pub city_id: String,
    pub ref_height_m: f64,
    pub abs_error_m: f64,
}

/// Absolute error per building, ordered by city then building id.
pub fn export_scatter(pairs: &[EvalPair], path: &Path, config_hash: Option<&str>) -> Result<()> {
    let mut rows: Vec<ScatterRow> = pairs
        .iter()
        .map(|p| ScatterRow {
            building_id: p.building_id.clone(),
            city_id: p.city_id.clone(),
            ref_height_m: p.ref_height_m,
            abs_error_m: p.abs_error(),
        })
        .collect();
    rows.sort_by(|a, b| (&a.city_id, &a.building_id).cmp(&(&b.city_id, &b.building_id)));
    let mut w = csv_writer(
        path,
        config_hash,
        &["building_id", "city_id", "ref_height_m", "abs_error_m"],
    )?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    finish(w, path)
}

pub fn read_scatter(path: &Path) -> Result<Vec<ScatterRow>> {
    csv_reader(path)?
        .deserialize()
        .map(|r| r.map_err(|e| Error::csv(path, e)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityBin {
    pub city_id: String,
    pub bin_start_m: f64,
    pub count: usize,
    /// Normalized so that densities times the bin width sum to one.
    pub density: f64,
}

/// Histogram of heights in bins `[k·bin_m, (k+1)·bin_m)` from zero up to
/// the bin holding the tallest building.
pub fn height_density(city_id: &str, heights: &[f64], bin_m: f64) -> Result<Vec<DensityBin>> {
    if !(bin_m.is_finite() && bin_m > 0.0) {
        return Err(Error::InvalidInput(format!("bin width {bin_m} must be positive")));
    }
    if heights.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "{city_id}: heights must be finite and non-negative"
        )));
    }
    let Some(max) = heights.iter().copied().reduce(f64::max) else {
        return Ok(Vec::new());
    };
    let mut counts = vec![0usize; (max / bin_m).floor() as usize + 1];
    for h in heights {
        let k = ((h / bin_m).floor() as usize).min(counts.len() - 1);
        counts[k] += 1;
    }
    let norm = heights.len() as f64 * bin_m;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| DensityBin {
            city_id: city_id.to_owned(),
            bin_start_m: k as f64 * bin_m,
            count,
            density: count as f64 / norm,
        })
        .collect())
}

/// Per-city height histograms, cities in the given order.
pub fn export_height_density(
    cities: &[(String, Vec<f64>)],
    bin_m: f64,
    path: &Path,
    config_hash: Option<&str>,
) -> Result<()> {
    let mut bins = Vec::new();
    for (city, heights) in cities {
        bins.extend(height_density(city, heights, bin_m)?);
    }
    let mut w = csv_writer(path, config_hash, &["city_id", "bin_start_m", "count", "density"])?;
    for b in bins {
        w.serialize(b).map_err(|e| Error::csv(path, e))?;
    }
    finish(w, path)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::eval::{mae, stratified_report};

    #[test]
    fn scatter_rows_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scatter.csv");
        let pairs = vec![
            EvalPair::new("b2", "zeta", 30.0, 25.0).unwrap(),
            EvalPair::new("b9", "alpha", 10.0, 12.0).unwrap(),
            EvalPair::new("b1", "zeta", 50.0, 50.5).unwrap(),
        ];
        export_scatter(&pairs, &p, Some("xyz")).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# config_hash=xyz\nbuilding_id,city_id,ref_height_m,abs_error_m\n"));
        let rows = read_scatter(&p).unwrap();
        let ids: Vec<&str> = rows.iter().map(|r| r.building_id.as_str()).collect();
        assert_eq!(ids, ["b9", "b1", "b2"]);
        assert_eq!(rows[0].abs_error_m, 2.0);
        let total: f64 = rows.iter().map(|r| r.abs_error_m).sum();
        assert!((total - 3.0 * mae(&pairs).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn empty_scatter_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        export_scatter(&[], &p, None).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "building_id,city_id,ref_height_m,abs_error_m\n"
        );
        assert!(read_scatter(&p).unwrap().is_empty());
    }

    #[test]
    fn metrics_csv_round_trip_with_absent_cells() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let pairs = vec![EvalPair::new("a", "c", 10.0, 12.5).unwrap()];
        let r = stratified_report("c", &pairs, 40.0);
        write_metrics_csv(&p, &[r.clone()], Some("h")).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), METRICS_HEADER.join(","));
        assert!(text.lines().nth(2).unwrap().ends_with(",0,,"));
        assert_eq!(read_metrics_csv(&p).unwrap(), vec![r]);
    }

    #[test]
    fn single_building_density() {
        let bins = height_density("c", &[10.0], 5.0).unwrap();
        let nonzero: Vec<&DensityBin> = bins.iter().filter(|b| b.count > 0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].bin_start_m, 10.0);
        assert!(height_density("c", &[1.0], 0.0).is_err());
        assert!(height_density("c", &[], 2.0).unwrap().is_empty());
    }

    #[test]
    fn density_normalization_and_flatness() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let heights: Vec<f64> = (0..200_000).map(|_| rng.random_range(0.0..50.0)).collect();
        let bins = height_density("u", &heights, 5.0).unwrap();
        let sum: f64 = bins.iter().map(|b| b.density * 5.0).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        for b in &bins {
            assert!((b.density - 0.02).abs() < 0.02 * 0.05, "{b:?}");
        }

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let cities = vec![("a".to_owned(), vec![3.0, 7.5, 7.9]), ("b".to_owned(), vec![12.0])];
        export_height_density(&cities, 2.5, &p, None).unwrap();
        let rows: Vec<DensityBin> = csv_reader(&p)
            .unwrap()
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .unwrap();
        for city in ["a", "b"] {
            let s: f64 = rows.iter().filter(|r| r.city_id == city).map(|r| r.density * 2.5).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}

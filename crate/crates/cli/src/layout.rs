//! Output directory layout and provenance checks.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::config::RunConfig;
use crate::failure::Failure;

#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn city_dir(&self, city: &str) -> PathBuf {
        self.root.join("cities").join(city)
    }

    pub fn footprints(&self, city: &str) -> PathBuf {
        self.city_dir(city).join("footprints.json")
    }

    /// Raster stem; the files are `amplitude.hdr.json` and `amplitude.bin`.
    pub fn amplitude(&self, city: &str) -> PathBuf {
        self.city_dir(city).join("amplitude")
    }

    pub fn height(&self, city: &str) -> PathBuf {
        self.city_dir(city).join("height")
    }

    pub fn dataset(&self, city: &str) -> PathBuf {
        self.root.join("datasets").join(city)
    }

    pub fn experiment_dir(&self, exp: &str) -> PathBuf {
        self.root.join("experiments").join(exp)
    }

    pub fn checkpoint(&self, exp: &str) -> PathBuf {
        self.experiment_dir(exp).join("model")
    }

    pub fn loss(&self, exp: &str) -> PathBuf {
        self.experiment_dir(exp).join("loss.csv")
    }

    pub fn split(&self, exp: &str) -> PathBuf {
        self.experiment_dir(exp).join("split.json")
    }

    pub fn predictions(&self, exp: &str) -> PathBuf {
        self.experiment_dir(exp).join("predictions.csv")
    }

    pub fn metrics(&self, exp: &str) -> PathBuf {
        self.experiment_dir(exp).join("metrics.csv")
    }

    pub fn table(&self, exp: &str) -> PathBuf {
        self.experiment_dir(exp).join("table.txt")
    }

    pub fn scatter(&self, exp: &str) -> PathBuf {
        self.experiment_dir(exp).join("scatter.csv")
    }

    pub fn density(&self) -> PathBuf {
        self.root.join("height_density.csv")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.txt")
    }

    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }
}

/// A loaded configuration with its hash and output layout.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: RunConfig,
    pub hash: String,
    pub layout: Layout,
}

impl Run {
    pub fn new(config: RunConfig) -> Self {
        Run {
            hash: config.hash(),
            layout: Layout {
                root: config.output_dir.clone(),
            },
            config,
        }
    }

    /// Fails with a stale-artifact error unless `found` is this run's hash.
    pub fn check(&self, path: &Path, found: Option<&str>) -> Result<()> {
        if found == Some(self.hash.as_str()) {
            return Ok(());
        }
        Err(Failure::Stale {
            path: path.to_owned(),
            expected: self.hash.clone(),
            found: found.map(str::to_owned),
        }
        .into())
    }

    /// Fails with a missing-input error naming `path` if it does not exist.
    pub fn require(&self, path: &Path) -> Result<()> {
        if path.exists() {
            Ok(())
        } else {
            Err(Failure::MissingInput(path.to_owned()).into())
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Config hash from a leading `# config_hash=...` line of a CSV file.
pub fn csv_config_hash(path: &Path) -> Result<Option<String>> {
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => anyhow::Error::new(Failure::MissingInput(path.to_owned())),
        _ => anyhow::Error::new(e).context(format!("opening {}", path.display())),
    })?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(first
        .trim_end()
        .strip_prefix("# config_hash=")
        .map(str::to_owned))
}

/// Reads a JSON file, reporting a missing file by name.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => anyhow::Error::new(Failure::MissingInput(path.to_owned())),
        _ => anyhow::Error::new(e).context(format!("reading {}", path.display())),
    })?;
    serde_json::from_str(&text)
        .map_err(|e| anyhow::Error::new(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
        .with_context(|| format!("parsing {}", path.display()))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

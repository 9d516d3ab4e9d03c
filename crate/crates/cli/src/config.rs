//! Run configuration: one JSON document, optionally patched from the
//! command line and the environment, hashed for provenance.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sarheight_core::geometry::ProjectionFactor;
use sarheight_core::regressor::{ModelConfig, TrainHyper};
use sarheight_core::rng::derive_seed;
use sarheight_core::SceneSpec;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::failure::Failure;

pub const SEED_ENV: &str = "SARHEIGHT_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Shared by simulation and height inversion; overrides the per-scene
    /// setting.
    pub projection_factor: ProjectionFactor,
    pub cities: Vec<CityConfig>,
    pub pipeline: PipelineConfig,
    pub model: ModelConfig,
    pub training: TrainHyper,
    /// Standardize features and target with training-set statistics.
    pub normalize: bool,
    pub splits: Vec<SplitSpec>,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            output_dir: PathBuf::from("out"),
            projection_factor: ProjectionFactor::Cos,
            cities: Vec::new(),
            pipeline: PipelineConfig::default(),
            model: ModelConfig::default(),
            training: TrainHyper::default(),
            normalize: true,
            splits: vec![
                SplitSpec::Loco { held_out: None },
                SplitSpec::Ratio { train_frac: 0.7 },
            ],
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CityConfig {
    pub name: String,
    /// Scene and acquisition geometry. The scene seed is derived from the
    /// run seed and the city's position.
    #[serde(default)]
    pub scene: SceneSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub patch_px: usize,
    pub overlap: f64,
    /// Also sets the model input size.
    pub chip_px: usize,
    pub subsample_n: usize,
    /// Subsample stratified by height bins of this width instead of
    /// uniformly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stratify_bin_m: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            patch_px: sarheight_core::pipeline::DEFAULT_PATCH_PX,
            overlap: sarheight_core::pipeline::DEFAULT_OVERLAP,
            chip_px: sarheight_core::pipeline::DEFAULT_CHIP_PX,
            subsample_n: 20_000,
            stratify_bin_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum SplitSpec {
    /// Leave one city out; without `held_out`, every city takes a turn.
    Loco {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        held_out: Option<String>,
    },
    /// Pooled random split of all cities.
    Ratio { train_frac: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub threshold_m: f64,
    pub density_bin_m: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            threshold_m: sarheight_core::eval::DEFAULT_THRESHOLD_M,
            density_bin_m: 2.5,
        }
    }
}

/// One train/test experiment expanded from the split list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    /// Directory name.
    pub name: String,
    /// Row label in tables.
    pub label: String,
    pub split: ExperimentSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ExperimentSplit {
    Loco { held_out: String },
    Ratio { train_frac: f64 },
}

impl RunConfig {
    /// Scene of city `index` with the derived seed and the run's projection
    /// factor.
    pub fn scene(&self, index: usize) -> SceneSpec {
        let mut s = self.cities[index].scene.clone();
        s.seed = derive_seed(self.seed, "scene", index as u64);
        s.projection_factor = self.projection_factor;
        s
    }

    pub fn city_index(&self, name: &str) -> Option<usize> {
        self.cities.iter().position(|c| c.name == name)
    }

    pub fn model_seed(&self) -> u64 {
        derive_seed(self.seed, "model", 0)
    }

    pub fn training_seed(&self) -> u64 {
        derive_seed(self.seed, "training", 0)
    }

    pub fn split_seed(&self) -> u64 {
        derive_seed(self.seed, "split", 0)
    }

    pub fn experiments(&self) -> Vec<Experiment> {
        let mut out = Vec::new();
        for s in &self.splits {
            match s {
                SplitSpec::Loco { held_out: Some(c) } => out.push(loco(c)),
                SplitSpec::Loco { held_out: None } => {
                    out.extend(self.cities.iter().map(|c| loco(&c.name)))
                }
                SplitSpec::Ratio { train_frac } => {
                    let pct = (train_frac * 100.0).round() as u32;
                    out.push(Experiment {
                        name: format!("ratio-{pct}"),
                        label: format!("In-Distribution ({pct}-{})", 100 - pct),
                        split: ExperimentSplit::Ratio {
                            train_frac: *train_frac,
                        },
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> std::result::Result<(), Failure> {
        let bad = |m: String| Err(Failure::Config(m));
        if self.cities.is_empty() {
            return bad("no cities configured".into());
        }
        let mut names = HashSet::new();
        for (i, c) in self.cities.iter().enumerate() {
            let safe = !c.name.is_empty()
                && c.name
                    .chars()
                    .all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_');
            if !safe {
                return bad(format!(
                    "city name `{}` must be non-empty ASCII letters, digits, `-` or `_`",
                    c.name
                ));
            }
            if !names.insert(c.name.as_str()) {
                return bad(format!("duplicate city name `{}`", c.name));
            }
            self.scene(i)
                .validate()
                .map_err(|e| Failure::Config(format!("city {}: {e}", c.name)))?;
            self.scene(i)
                .geom
                .validate()
                .map_err(|e| Failure::Config(format!("city {}: {e}", c.name)))?;
        }
        let p = &self.pipeline;
        if p.patch_px == 0 || p.chip_px == 0 || p.subsample_n == 0 {
            return bad("patch_px, chip_px and subsample_n must be positive".into());
        }
        if !(0.0..1.0).contains(&p.overlap) {
            return bad(format!("overlap {} must lie in [0, 1)", p.overlap));
        }
        if let Some(b) = p.stratify_bin_m {
            if !(b.is_finite() && b > 0.0) {
                return bad(format!("stratify_bin_m {b} must be positive"));
            }
        }
        self.model
            .layout()
            .map_err(|e| Failure::Config(format!("model: {e}")))?;
        if self.training.batch_size == 0 || !(self.training.learning_rate >= 0.0) {
            return bad("training needs a positive batch size and non-negative learning rate".into());
        }
        if self.splits.is_empty() {
            return bad("no splits configured".into());
        }
        let mut exp_names = HashSet::new();
        for e in self.experiments() {
            match &e.split {
                ExperimentSplit::Loco { held_out } => {
                    if self.city_index(held_out).is_none() {
                        return bad(format!("held-out city `{held_out}` is not configured"));
                    }
                    if self.cities.len() < 2 {
                        return bad("leave-one-city-out needs at least two cities".into());
                    }
                }
                ExperimentSplit::Ratio { train_frac } => {
                    if !(*train_frac > 0.0 && *train_frac < 1.0) {
                        return bad(format!("train_frac {train_frac} must lie in (0, 1)"));
                    }
                }
            }
            if !exp_names.insert(e.name.clone()) {
                return bad(format!("experiment `{}` is listed twice", e.name));
            }
        }
        if !(self.eval.threshold_m.is_finite() && self.eval.density_bin_m > 0.0) {
            return bad("eval threshold must be finite and density bin positive".into());
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of the resolved configuration,
    /// excluding the output directory.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(m) = &mut v {
            m.remove("output_dir");
        }
        let bytes = serde_json::to_vec(&canonical(v)).expect("value serializes");
        format!("{:x}", Sha256::digest(bytes))
    }
}

fn loco(city: &str) -> Experiment {
    Experiment {
        name: format!("loco-{city}"),
        label: city.to_owned(),
        split: ExperimentSplit::Loco {
            held_out: city.to_owned(),
        },
    }
}

/// Recursively sorts object keys.
fn canonical(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let sorted: BTreeMap<String, Value> = m.into_iter().map(|(k, v)| (k, canonical(v))).collect();
            Value::Object(sorted.into_iter().collect())
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        other => other,
    }
}

/// Sets `path` (dot-separated, numeric segments index arrays) to `raw`,
/// parsed as JSON when possible and taken as a string otherwise.
pub fn apply_override(doc: &mut Value, path: &str, raw: &str) -> std::result::Result<(), Failure> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut cur = doc;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Failure::Config(format!("malformed override path `{path}`")));
    }
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        cur = match cur {
            Value::Array(a) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| Failure::Config(format!("`{seg}` in `{path}` is not an index")))?;
                a.get_mut(idx)
                    .ok_or_else(|| Failure::Config(format!("index {idx} out of range in `{path}`")))?
            }
            Value::Object(m) => m
                .entry(seg.to_string())
                .or_insert_with(|| if last { Value::Null } else { Value::Object(Default::default()) }),
            Value::Null => {
                *cur = Value::Object(Default::default());
                let Value::Object(m) = cur else { unreachable!() };
                m.entry(seg.to_string()).or_insert(Value::Null)
            }
            _ => {
                return Err(Failure::Config(format!(
                    "`{path}` descends into a scalar at `{seg}`"
                )))
            }
        };
    }
    *cur = value;
    Ok(())
}

/// Loads a run configuration. Order of precedence: `--out`, then the seed
/// environment variable, then `--set` overrides, then the file.
pub fn load(path: &Path, sets: &[String], out: Option<&Path>) -> Result<RunConfig> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Failure::MissingInput(path.to_owned()).into())
        }
        Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
    };
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("override `{s}` is not key=value")))?;
        apply_override(&mut doc, k.trim(), v.trim())?;
    }
    let mut cfg: RunConfig = serde_json::from_value(doc)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if let Ok(seed) = std::env::var(SEED_ENV) {
        cfg.seed = seed
            .trim()
            .parse()
            .map_err(|_| Failure::Config(format!("{SEED_ENV}=`{seed}` is not an unsigned integer")))?;
    }
    if let Some(o) = out {
        cfg.output_dir = o.to_owned();
    }
    cfg.model.chip_px = cfg.pipeline.chip_px;
    cfg.model.seed = cfg.model_seed();
    cfg.training.seed = cfg.training_seed();
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_and_replace() {
        let mut v = serde_json::json!({"training": {"epochs": 3}, "cities": [{"name": "a"}]});
        apply_override(&mut v, "training.learning_rate", "0.01").unwrap();
        apply_override(&mut v, "training.epochs", "7").unwrap();
        apply_override(&mut v, "cities.0.name", "b").unwrap();
        apply_override(&mut v, "pipeline.chip_px", "32").unwrap();
        assert_eq!(v["training"]["learning_rate"], 0.01);
        assert_eq!(v["training"]["epochs"], 7);
        assert_eq!(v["cities"][0]["name"], "b");
        assert_eq!(v["pipeline"]["chip_px"], 32);
        assert!(apply_override(&mut v, "cities.5.name", "x").is_err());
        assert!(apply_override(&mut v, "training.epochs.x", "1").is_err());
    }

    #[test]
    fn hash_ignores_output_dir_and_key_order() {
        let mut a = RunConfig::default();
        a.cities.push(CityConfig {
            name: "A".into(),
            scene: SceneSpec::default(),
        });
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn experiment_expansion() {
        let mut c = RunConfig::default();
        for n in ["A", "B", "C"] {
            c.cities.push(CityConfig {
                name: n.into(),
                scene: SceneSpec::default(),
            });
        }
        let names: Vec<String> = c.experiments().into_iter().map(|e| e.name).collect();
        assert_eq!(names, ["loco-A", "loco-B", "loco-C", "ratio-70"]);
        assert_eq!(c.experiments()[3].label, "In-Distribution (70-30)");
        c.validate().unwrap();
        c.splits = vec![SplitSpec::Loco {
            held_out: Some("D".into()),
        }];
        assert!(c.validate().is_err());
    }
}

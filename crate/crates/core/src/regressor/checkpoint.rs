use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::model::TrainState;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scene_sim::raster::json_error_offset;

const FORMAT: &str = "sarheight-checkpoint/1";

/// JSON half of a checkpoint. The `.bin` half holds, as little-endian
/// `f64`, all parameter tensors, then the first and second Adam moments in
/// the same order, then the loss history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub config: ModelConfig,
    pub step: u64,
    /// Initialization seed of the model.
    pub seed: u64,
    pub shapes: Vec<Vec<usize>>,
    pub loss_history_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut s = stem.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".json"), with(".bin"))
}

pub fn save_checkpoint(stem: &Path, state: &TrainState, config_hash: Option<&str>) -> Result<()> {
    state.check_params()?;
    let header = CheckpointHeader {
        format: FORMAT.into(),
        config: state.config.clone(),
        step: state.step,
        seed: state.config.seed,
        shapes: state.params.iter().map(|t| t.shape().to_vec()).collect(),
        loss_history_len: state.loss_history.len(),
        config_hash: config_hash.map(str::to_owned),
    };
    let mut bin = Vec::new();
    let tensors = state.params.iter().chain(&state.moment1).chain(&state.moment2);
    for v in tensors.flat_map(|t| t.data()).chain(&state.loss_history) {
        bin.extend_from_slice(&v.to_le_bytes());
    }
    let (json_path, bin_path) = paths(stem);
    let text = serde_json::to_string_pretty(&header)
        .map_err(|e| Error::InvalidInput(format!("cannot serialize checkpoint: {e}")))?;
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    fs::write(&bin_path, bin).map_err(|e| Error::io(&bin_path, e))
}

pub fn load_checkpoint(stem: &Path) -> Result<(TrainState, CheckpointHeader)> {
    let (json_path, bin_path) = paths(stem);
    let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let header: CheckpointHeader = serde_json::from_str(&text).map_err(|e| Error::Format {
        offset: json_error_offset(&text, &e),
        reason: format!("{}: {e}", json_path.display()),
    })?;
    if header.format != FORMAT {
        return Err(Error::Format {
            offset: 0,
            reason: format!("{}: unknown format `{}`", json_path.display(), header.format),
        });
    }
    let expected_shapes = header.config.param_shapes()?;
    if expected_shapes != header.shapes {
        return Err(Error::Shape {
            layer: "checkpoint".into(),
            detail: format!("{}: tensor shapes disagree with the config", json_path.display()),
        });
    }
    let bytes = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let n_params: usize = header.shapes.iter().map(|s| s.iter().product::<usize>()).sum();
    let expected = (3 * n_params + header.loss_history_len) * 8;
    if bytes.len() != expected {
        return Err(Error::Format {
            offset: bytes.len().min(expected) as u64,
            reason: format!(
                "{}: {} bytes, header implies {expected}",
                bin_path.display(),
                bytes.len()
            ),
        });
    }
    let mut values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let mut read_set = || -> Result<Vec<Tensor>> {
        header
            .shapes
            .iter()
            .map(|s| {
                let n = s.iter().product();
                Tensor::from_vec(s, values.by_ref().take(n).collect())
            })
            .collect()
    };
    let params = read_set()?;
    let moment1 = read_set()?;
    let moment2 = read_set()?;
    let loss_history: Vec<f64> = values.collect();
    let state = TrainState {
        config: header.config.clone(),
        params,
        moment1,
        moment2,
        step: header.step,
        loss_history,
    };
    if state.params.iter().any(|t| !t.is_finite()) {
        return Err(Error::Numeric {
            layer: "checkpoint".into(),
        });
    }
    Ok((state, header))
}

/// `step,loss` with steps counted from 1, optionally preceded by a
/// `# config_hash=...` line.
pub fn write_loss_csv(path: &Path, losses: &[f64], config_hash: Option<&str>) -> Result<()> {
    let mut out = String::new();
    if let Some(h) = config_hash {
        let _ = writeln!(out, "# config_hash={h}");
    }
    out.push_str("step,loss\n");
    for (i, l) in losses.iter().enumerate() {
        let _ = writeln!(out, "{},{l}", i + 1);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_loss_csv(path: &Path) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    struct Row {
        #[allow(dead_code)]
        step: u64,
        loss: f64,
    }
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file)
        .deserialize::<Row>()
        .map(|r| r.map(|r| r.loss).map_err(|e| Error::csv(path, e)))
        .collect()
}

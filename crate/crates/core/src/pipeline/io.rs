use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BuildingSample;
use crate::error::{Error, Result};
use crate::geometry::ProjectionFactor;
use crate::scene_sim::raster::json_error_offset;

/// A city's samples as stored on disk: `<stem>.json` manifest plus
/// `<stem>.bin` holding each sample's amplitude chip then mask chip as
/// little-endian `f32`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub city_id: String,
    pub chip_px: usize,
    pub projection_factor: ProjectionFactor,
    pub config_hash: Option<String>,
    pub samples: Vec<BuildingSample>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    city_id: String,
    chip_px: usize,
    #[serde(default)]
    projection_factor: ProjectionFactor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
    samples: Vec<Record>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    #[serde(flatten)]
    sample: BuildingSample,
    /// Byte offset of this sample's amplitude chip in the `.bin` file.
    chip_offset: u64,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut s = stem.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".json"), with(".bin"))
}

pub fn write_sample_set(stem: &Path, set: &SampleSet) -> Result<()> {
    let n2 = set.chip_px * set.chip_px;
    let mut bin = Vec::with_capacity(set.samples.len() * n2 * 8);
    let mut records = Vec::with_capacity(set.samples.len());
    for s in &set.samples {
        if s.city_id != set.city_id || s.chip_px != set.chip_px {
            return Err(Error::InvalidInput(format!(
                "sample {} ({}, {} px) does not belong to set {} ({} px)",
                s.building_id, s.city_id, s.chip_px, set.city_id, set.chip_px
            )));
        }
        if s.chip_amp.len() != n2 || s.chip_mask.len() != n2 {
            return Err(Error::InvalidInput(format!(
                "sample {}: chip length mismatch",
                s.building_id
            )));
        }
        records.push(Record {
            sample: s.clone(),
            chip_offset: bin.len() as u64,
        });
        for v in s.chip_amp.iter().chain(&s.chip_mask) {
            bin.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = Manifest {
        city_id: set.city_id.clone(),
        chip_px: set.chip_px,
        projection_factor: set.projection_factor,
        config_hash: set.config_hash.clone(),
        samples: records,
    };
    let (json_path, bin_path) = paths(stem);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    fs::write(&bin_path, bin).map_err(|e| Error::io(&bin_path, e))?;
    Ok(())
}

pub fn read_sample_set(stem: &Path) -> Result<SampleSet> {
    let (json_path, bin_path) = paths(stem);
    let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Format {
        offset: json_error_offset(&text, &e),
        reason: format!("{}: {e}", json_path.display()),
    })?;
    let bin = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let n2 = manifest.chip_px * manifest.chip_px;
    let chip_bytes = (n2 * 4) as u64;
    let read_chip = |offset: u64| -> Result<Vec<f32>> {
        let end = offset + chip_bytes;
        if end > bin.len() as u64 {
            return Err(Error::Format {
                offset: bin.len() as u64,
                reason: format!(
                    "{}: chip at byte {offset} runs past the end of the file",
                    bin_path.display()
                ),
            });
        }
        Ok(bin[offset as usize..end as usize]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    };
    let mut samples = Vec::with_capacity(manifest.samples.len());
    for r in manifest.samples {
        let mut s = r.sample;
        s.chip_amp = read_chip(r.chip_offset)?;
        s.chip_mask = read_chip(r.chip_offset + chip_bytes)?;
        samples.push(s);
    }
    Ok(SampleSet {
        city_id: manifest.city_id,
        chip_px: manifest.chip_px,
        projection_factor: manifest.projection_factor,
        config_hash: manifest.config_hash,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::dedup::tests::sample;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = sample("c", "b1", (1.0, 2.0), 30.0);
        a.chip_amp = vec![0.5, 1.5, 2.5, 3.5];
        let b = sample("c", "b2", (5.0, 2.0), 30.0);
        let set = SampleSet {
            city_id: "c".into(),
            chip_px: 2,
            projection_factor: ProjectionFactor::Cot,
            config_hash: Some("abc".into()),
            samples: vec![a, b],
        };
        let stem = dir.path().join("c");
        write_sample_set(&stem, &set).unwrap();
        assert_eq!(read_sample_set(&stem).unwrap(), set);
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
        assert_eq!(manifest["samples"][1]["chip_offset"], 32);
        assert_eq!(manifest["samples"][0]["target_lbbb_m"], 19.0);
    }

    #[test]
    fn truncated_bin_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let set = SampleSet {
            city_id: "c".into(),
            chip_px: 2,
            projection_factor: ProjectionFactor::Cos,
            config_hash: None,
            samples: vec![sample("c", "b1", (1.0, 2.0), 30.0)],
        };
        let stem = dir.path().join("c");
        write_sample_set(&stem, &set).unwrap();
        fs::write(dir.path().join("c.bin"), [0u8; 20]).unwrap();
        assert!(matches!(read_sample_set(&stem), Err(Error::Format { offset: 20, .. })));
    }

    #[test]
    fn mixed_city_is_rejected() {
        let set = SampleSet {
            city_id: "c".into(),
            chip_px: 2,
            projection_factor: ProjectionFactor::Cos,
            config_hash: None,
            samples: vec![sample("d", "b1", (1.0, 2.0), 30.0)],
        };
        let dir = tempfile::tempdir().unwrap();
        assert!(write_sample_set(&dir.path().join("x"), &set).is_err());
    }
}

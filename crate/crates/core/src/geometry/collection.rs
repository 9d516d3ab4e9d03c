use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Footprint;
use crate::error::{Error, Result};
use crate::scene_sim::raster::json_error_offset;

const CRS: &str = "local-meters";

/// A city's footprints as stored on disk: JSON with the local planar CRS
/// tag, the city name and one `{id, polygon, height_m}` object per
/// building.
#[derive(Debug, Clone, PartialEq)]
pub struct FootprintCollection {
    pub city: String,
    pub buildings: Vec<Footprint>,
}

#[derive(Serialize, Deserialize)]
struct Document {
    crs: String,
    city: String,
    buildings: Vec<Footprint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
}

impl FootprintCollection {
    pub fn new(city: impl Into<String>, buildings: Vec<Footprint>) -> Result<Self> {
        let city = city.into();
        let mut seen = HashSet::new();
        for b in &buildings {
            if !seen.insert(b.id()) {
                return Err(Error::InvalidInput(format!(
                    "{city}: duplicate building id `{}`",
                    b.id()
                )));
            }
        }
        Ok(FootprintCollection { city, buildings })
    }

    pub fn write(&self, path: &Path, config_hash: Option<&str>) -> Result<()> {
        let doc = Document {
            crs: CRS.into(),
            city: self.city.clone(),
            buildings: self.buildings.clone(),
            config_hash: config_hash.map(str::to_owned),
        };
        let text = serde_json::to_string_pretty(&doc)
            .map_err(|e| Error::InvalidInput(format!("cannot serialize footprints: {e}")))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Reads a collection and the config hash it was written with, if any.
    pub fn read(path: &Path) -> Result<(Self, Option<String>)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: Document = serde_json::from_str(&text).map_err(|e| Error::Format {
            offset: json_error_offset(&text, &e),
            reason: format!("{}: {e}", path.display()),
        })?;
        if doc.crs != CRS {
            return Err(Error::Format {
                offset: 0,
                reason: format!("{}: unsupported crs `{}`", path.display(), doc.crs),
            });
        }
        Ok((Self::new(doc.city, doc.buildings)?, doc.config_hash))
    }

    pub fn heights(&self) -> Vec<f64> {
        self.buildings.iter().map(Footprint::height_m).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fp.json");
        let c = FootprintCollection::new(
            "Alpha",
            vec![
                Footprint::rectangle("b1", Point::new(0.0, 0.0), 10.0, 5.0, 12.5).unwrap(),
                Footprint::new(
                    "b2",
                    vec![Point::new(20.0, 0.0), Point::new(30.0, 0.0), Point::new(25.0, 8.0)],
                    40.0,
                )
                .unwrap(),
            ],
        )
        .unwrap();
        c.write(&p, Some("abc")).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("\"crs\": \"local-meters\""));
        let (back, hash) = FootprintCollection::read(&p).unwrap();
        assert_eq!(back, c);
        assert_eq!(hash.as_deref(), Some("abc"));
    }

    #[test]
    fn rejects_bad_documents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fp.json");
        std::fs::write(&p, r#"{"crs":"wgs84","city":"a","buildings":[]}"#).unwrap();
        assert!(matches!(FootprintCollection::read(&p), Err(Error::Format { .. })));
        std::fs::write(
            &p,
            r#"{"crs":"local-meters","city":"a","buildings":[{"id":"x","polygon":[[0,0],[1,1],[2,2]],"height_m":3}]}"#,
        )
        .unwrap();
        assert!(matches!(FootprintCollection::read(&p), Err(Error::Format { .. })));
        let b = Footprint::rectangle("same", Point::new(0.0, 0.0), 1.0, 1.0, 1.0).unwrap();
        assert!(FootprintCollection::new("a", vec![b.clone(), b]).is_err());
    }
}

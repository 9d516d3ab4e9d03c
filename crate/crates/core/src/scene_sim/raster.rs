use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// A single-band, north-up raster of 32-bit reals. Row 0 is the northernmost.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width_px: usize,
    pub height_px: usize,
    pub pixel_size_m: f64,
    /// Top-left corner of the top-left pixel, meters.
    pub origin: Point,
    pub band: String,
    pub values: Vec<f32>,
}

impl Raster {
    pub fn filled(
        width_px: usize,
        height_px: usize,
        pixel_size_m: f64,
        origin: Point,
        band: impl Into<String>,
        value: f32,
    ) -> Self {
        Raster {
            width_px,
            height_px,
            pixel_size_m,
            origin,
            band: band.into(),
            values: vec![value; width_px * height_px],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::InvalidInput("raster dimensions must be positive".into()));
        }
        if !(self.pixel_size_m.is_finite() && self.pixel_size_m > 0.0) {
            return Err(Error::InvalidInput("pixel size must be positive".into()));
        }
        if self.values.len() != self.width_px * self.height_px {
            return Err(Error::InvalidInput(format!(
                "raster has {} values, expected {}",
                self.values.len(),
                self.width_px * self.height_px
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("raster contains non-finite values".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width_px + col]
    }

    /// Value at a signed pixel index, or `None` outside the grid.
    #[inline]
    pub fn get_signed(&self, row: i64, col: i64) -> Option<f32> {
        if row < 0 || col < 0 || row as usize >= self.height_px || col as usize >= self.width_px {
            None
        } else {
            Some(self.get(row as usize, col as usize))
        }
    }

    pub fn pixel_center(&self, row: i64, col: i64) -> Point {
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.pixel_size_m,
            self.origin.y - (row as f64 + 0.5) * self.pixel_size_m,
        )
    }

    /// Continuous `(row, col)` coordinates of a ground point; pixel `(r, c)`
    /// spans `[r, r + 1) × [c, c + 1)`.
    pub fn to_pixel(&self, p: Point) -> (f64, f64) {
        (
            (self.origin.y - p.y) / self.pixel_size_m,
            (p.x - self.origin.x) / self.pixel_size_m,
        )
    }

    /// Ground-space bounds `(min, max)`.
    pub fn bounds(&self) -> (Point, Point) {
        let w = self.width_px as f64 * self.pixel_size_m;
        let h = self.height_px as f64 * self.pixel_size_m;
        (
            Point::new(self.origin.x, self.origin.y - h),
            Point::new(self.origin.x + w, self.origin.y),
        )
    }
}

/// Sidecar header of the on-disk raster format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterHeader {
    pub width: usize,
    pub height: usize,
    pub pixel_size_m: f64,
    pub origin: [f64; 2],
    pub band: String,
    pub dtype: String,
    pub order: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

const DTYPE: &str = "f32le";
const ORDER: &str = "row-major-north-up";

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// `<path>.hdr.json` and `<path>.bin`.
pub fn raster_paths(path: &Path) -> (PathBuf, PathBuf) {
    (with_suffix(path, ".hdr.json"), with_suffix(path, ".bin"))
}

pub fn write_raster(r: &Raster, path: &Path) -> Result<()> {
    write_raster_tagged(r, path, None)
}

pub fn write_raster_tagged(r: &Raster, path: &Path, config_hash: Option<&str>) -> Result<()> {
    r.validate()?;
    let (hdr_path, bin_path) = raster_paths(path);
    let header = RasterHeader {
        width: r.width_px,
        height: r.height_px,
        pixel_size_m: r.pixel_size_m,
        origin: r.origin.into(),
        band: r.band.clone(),
        dtype: DTYPE.into(),
        order: ORDER.into(),
        config_hash: config_hash.map(str::to_owned),
    };
    let text = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(&hdr_path, text).map_err(|e| Error::io(&hdr_path, e))?;
    let mut bytes = Vec::with_capacity(r.values.len() * 4);
    for v in &r.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(&bin_path, e))?;
    Ok(())
}

/// Converts a serde_json line/column pair into a byte offset.
pub(crate) fn json_error_offset(text: &str, err: &serde_json::Error) -> u64 {
    let line = err.line().max(1);
    let before: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (before + err.column().saturating_sub(1)) as u64
}

pub fn read_raster_header(path: &Path) -> Result<RasterHeader> {
    let (hdr_path, _) = raster_paths(path);
    let text = fs::read_to_string(&hdr_path).map_err(|e| Error::io(&hdr_path, e))?;
    let header: RasterHeader = serde_json::from_str(&text).map_err(|e| Error::Format {
        offset: json_error_offset(&text, &e),
        reason: format!("{}: {e}", hdr_path.display()),
    })?;
    if header.dtype != DTYPE || header.order != ORDER {
        return Err(Error::Format {
            offset: 0,
            reason: format!(
                "{}: unsupported dtype/order {}/{}",
                hdr_path.display(),
                header.dtype,
                header.order
            ),
        });
    }
    if header.width == 0 || header.height == 0 || !(header.pixel_size_m > 0.0) {
        return Err(Error::Format {
            offset: 0,
            reason: format!("{}: non-positive dimensions", hdr_path.display()),
        });
    }
    Ok(header)
}

pub fn read_raster(path: &Path) -> Result<Raster> {
    let header = read_raster_header(path)?;
    let (_, bin_path) = raster_paths(path);
    let bytes = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let expected = header
        .width
        .checked_mul(header.height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format {
            offset: 0,
            reason: "raster size overflows".into(),
        })?;
    if bytes.len() < expected {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            reason: format!(
                "{}: payload truncated, {} of {expected} bytes",
                bin_path.display(),
                bytes.len()
            ),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Format {
            offset: expected as u64,
            reason: format!(
                "{}: payload has {} bytes, header implies {expected}",
                bin_path.display(),
                bytes.len()
            ),
        });
    }
    let mut values = Vec::with_capacity(expected / 4);
    for (i, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(Error::Format {
                offset: (i * 4) as u64,
                reason: format!("{}: non-finite value", bin_path.display()),
            });
        }
        values.push(v);
    }
    Ok(Raster {
        width_px: header.width,
        height_px: header.height,
        pixel_size_m: header.pixel_size_m,
        origin: header.origin.into(),
        band: header.band,
        values,
    })
}

use serde::{Deserialize, Serialize};

use super::normalize_azimuth;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitPass {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LookSide {
    Left,
    Right,
}

/// Everything needed to fix the ground-range direction and the incidence
/// angle for a scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionGeometry {
    pub incidence_deg: f64,
    pub orbit_inclination_deg: f64,
    pub pass: OrbitPass,
    pub look_side: LookSide,
    pub latitude_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading_override_deg: Option<f64>,
}

impl AcquisitionGeometry {
    /// A geometry whose ground track heading is given directly.
    pub fn with_heading(incidence_deg: f64, heading_deg: f64, look_side: LookSide) -> Self {
        AcquisitionGeometry {
            incidence_deg,
            orbit_inclination_deg: 97.86,
            pass: OrbitPass::Descending,
            look_side,
            latitude_deg: 0.0,
            heading_override_deg: Some(heading_deg),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open = |v: f64, lo: f64, hi: f64| v.is_finite() && v > lo && v < hi;
        if !open(self.incidence_deg, 0.0, 90.0) {
            return Err(Error::InvalidInput(format!(
                "incidence angle {}° must lie strictly inside (0, 90)",
                self.incidence_deg
            )));
        }
        if !open(self.orbit_inclination_deg, 0.0, 180.0) {
            return Err(Error::InvalidInput(format!(
                "orbit inclination {}° must lie strictly inside (0, 180)",
                self.orbit_inclination_deg
            )));
        }
        if !open(self.latitude_deg, -90.0, 90.0) {
            return Err(Error::InvalidInput(format!(
                "latitude {}° must lie strictly inside (-90, 90)",
                self.latitude_deg
            )));
        }
        if let Some(h) = self.heading_override_deg {
            if !(h.is_finite() && (0.0..360.0).contains(&h)) {
                return Err(Error::InvalidInput(format!(
                    "heading override {h}° must lie in [0, 360)"
                )));
            }
        }
        Ok(())
    }

    pub fn cos_incidence(&self) -> f64 {
        self.incidence_deg.to_radians().cos()
    }
}

/// Ground track heading on a spherical, non-rotating Earth.
///
/// With `sin α = cos i / cos φ`, the ascending heading is `α` and the
/// descending heading is `180° − α` (both compass azimuths).
pub fn ground_track_heading(geom: &AcquisitionGeometry) -> Result<f64> {
    geom.validate()?;
    if let Some(h) = geom.heading_override_deg {
        return Ok(h);
    }
    let cos_i = geom.orbit_inclination_deg.to_radians().cos();
    let cos_lat = geom.latitude_deg.to_radians().cos();
    let ratio = cos_i / cos_lat;
    if ratio.abs() > 1.0 {
        return Err(Error::GeometryInfeasible {
            inclination_deg: geom.orbit_inclination_deg,
            latitude_deg: geom.latitude_deg,
        });
    }
    let alpha = ratio.asin().to_degrees();
    Ok(match geom.pass {
        OrbitPass::Ascending => normalize_azimuth(360.0 + alpha),
        OrbitPass::Descending => normalize_azimuth(180.0 - alpha),
    })
}

/// Azimuth of increasing ground range, i.e. pointing away from the track.
pub fn range_azimuth(geom: &AcquisitionGeometry) -> Result<f64> {
    let heading = ground_track_heading(geom)?;
    Ok(match geom.look_side {
        LookSide::Right => normalize_azimuth(heading + 90.0),
        LookSide::Left => normalize_azimuth(heading - 90.0),
    })
}

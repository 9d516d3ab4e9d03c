use serde::{Deserialize, Serialize};

use super::{azimuth_difference, range_azimuth, AcquisitionGeometry, OrientedRect};
use crate::error::{Error, Result};

const AXIS_TOL_DEG: f64 = 1e-6;

/// Ground-range layover length per meter of building height.
///
/// `Cos` gives `L = h·cos θ`, inverted as `h = L / cos θ`. `Cot` is the
/// classical ground-range layover `h / tan θ`. Simulation and estimation must
/// share the same factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionFactor {
    #[default]
    Cos,
    Cot,
}

impl ProjectionFactor {
    pub fn value(self, incidence_deg: f64) -> f64 {
        let t = incidence_deg.to_radians();
        match self {
            ProjectionFactor::Cos => t.cos(),
            ProjectionFactor::Cot => t.cos() / t.sin(),
        }
    }

    /// Height for a layover length `l_m`.
    pub fn height_from_layover(self, l_m: f64, incidence_deg: f64) -> f64 {
        l_m / self.value(incidence_deg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightEstimate {
    pub height_m: f64,
    /// The measured range-length difference was negative and got clamped.
    pub clamped: bool,
}

fn check_axis(rect: &OrientedRect, range_az: f64) -> Result<()> {
    if azimuth_difference(rect.u_azimuth_deg, range_az) > AXIS_TOL_DEG {
        return Err(Error::AxisMismatch {
            first_deg: rect.u_azimuth_deg,
            second_deg: range_az,
        });
    }
    Ok(())
}

/// Forward layover model: grows the footprint box toward the sensor by the
/// layover length of a building of `height_m`.
pub fn project_bbb(
    fbb: &OrientedRect,
    height_m: f64,
    geom: &AcquisitionGeometry,
    factor: ProjectionFactor,
) -> Result<OrientedRect> {
    if !(height_m.is_finite() && height_m >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "height {height_m} must be finite and non-negative"
        )));
    }
    check_axis(fbb, range_azimuth(geom)?)?;
    let layover = height_m * factor.value(geom.incidence_deg);
    Ok(OrientedRect {
        center: fbb.center - fbb.u_axis() * (layover / 2.0),
        extent_u_m: fbb.extent_u_m + layover,
        ..*fbb
    })
}

/// Inverse model: `L = L_BBB − L_FBB`, then height from `L` and the
/// incidence angle. Negative `L` is clamped to zero height.
pub fn height_from_boxes(
    fbb: &OrientedRect,
    bbb: &OrientedRect,
    geom: &AcquisitionGeometry,
    factor: ProjectionFactor,
) -> Result<HeightEstimate> {
    geom.validate()?;
    if azimuth_difference(fbb.u_azimuth_deg, bbb.u_azimuth_deg) > AXIS_TOL_DEG {
        return Err(Error::AxisMismatch {
            first_deg: fbb.u_azimuth_deg,
            second_deg: bbb.u_azimuth_deg,
        });
    }
    let l = bbb.extent_u_m - fbb.extent_u_m;
    if l < 0.0 {
        return Ok(HeightEstimate {
            height_m: 0.0,
            clamped: true,
        });
    }
    Ok(HeightEstimate {
        height_m: factor.height_from_layover(l, geom.incidence_deg),
        clamped: false,
    })
}

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AcquisitionGeometry, LookSide, OrbitPass, ProjectionFactor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeightDistribution {
    Lognormal { mu: f64, sigma: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl HeightDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            HeightDistribution::Lognormal { mu, sigma } if mu.is_finite() && sigma.is_finite() && sigma >= 0.0 => Ok(()),
            HeightDistribution::Uniform { lo, hi } if lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi => Ok(()),
            other => Err(Error::InvalidInput(format!("bad height distribution {other:?}"))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            HeightDistribution::Lognormal { mu, sigma } => LogNormal::new(mu, sigma)
                .map(|d| d.sample(rng))
                .unwrap_or(mu.exp()),
            HeightDistribution::Uniform { lo, hi } if hi > lo => rng.random_range(lo..hi),
            HeightDistribution::Uniform { lo, .. } => lo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speckle {
    Off,
    #[default]
    SingleLook,
}

/// Parameters of one synthetic scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub seed: u64,
    /// Scene width and height in meters.
    pub extent_m: [f64; 2],
    pub pixel_size_m: f64,
    pub n_buildings: usize,
    pub footprint_side_range_m: [f64; 2],
    pub height_distribution: HeightDistribution,
    pub min_spacing_m: f64,
    /// Rotate each footprint by a random angle instead of keeping it axis aligned.
    pub random_orientation: bool,
    pub background_amp: f32,
    pub roof_amp: f32,
    pub layover_amp: f32,
    pub shadow_amp: f32,
    pub speckle: Speckle,
    pub geom: AcquisitionGeometry,
    pub projection_factor: ProjectionFactor,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            seed: 0,
            extent_m: [1000.0, 1000.0],
            pixel_size_m: 2.5,
            n_buildings: 100,
            footprint_side_range_m: [8.0, 30.0],
            height_distribution: HeightDistribution::Lognormal { mu: 2.3, sigma: 0.6 },
            min_spacing_m: 5.0,
            random_orientation: false,
            background_amp: 1.0,
            roof_amp: 1.6,
            layover_amp: 4.0,
            shadow_amp: 0.15,
            speckle: Speckle::SingleLook,
            geom: AcquisitionGeometry {
                incidence_deg: 30.55,
                orbit_inclination_deg: 97.86,
                pass: OrbitPass::Descending,
                look_side: LookSide::Right,
                latitude_deg: 45.46,
                heading_override_deg: None,
            },
            projection_factor: ProjectionFactor::Cos,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.pixel_size_m.is_finite() && self.pixel_size_m > 0.0) {
            return bad(format!("pixel size {} must be positive", self.pixel_size_m));
        }
        if !self.extent_m.iter().all(|e| e.is_finite() && *e > 0.0) {
            return bad(format!("extent {:?} must be positive", self.extent_m));
        }
        let [lo, hi] = self.footprint_side_range_m;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return bad(format!("footprint side range {lo}..{hi} is invalid"));
        }
        if !(self.min_spacing_m.is_finite() && self.min_spacing_m >= 0.0) {
            return bad(format!("min spacing {} must be non-negative", self.min_spacing_m));
        }
        let levels = [self.shadow_amp, self.background_amp, self.roof_amp, self.layover_amp];
        if !levels.iter().all(|v| v.is_finite()) || self.shadow_amp < 0.0 {
            return bad("amplitude levels must be finite and non-negative".into());
        }
        if !(self.shadow_amp < self.background_amp
            && self.background_amp < self.roof_amp
            && self.roof_amp < self.layover_amp)
        {
            return bad(format!(
                "amplitude levels must satisfy shadow < background < roof < layover, got {levels:?}"
            ));
        }
        self.height_distribution.validate()?;
        self.geom.validate()
    }

    pub fn raster_dims(&self) -> (usize, usize) {
        let w = (self.extent_m[0] / self.pixel_size_m).ceil() as usize;
        let h = (self.extent_m[1] / self.pixel_size_m).ceil() as usize;
        (w.max(1), h.max(1))
    }
}

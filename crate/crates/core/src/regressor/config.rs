use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::BuildingSample;

/// Geometric features per sample: FBB range extent, FBB azimuth extent and
/// the cosine of the incidence angle.
pub const N_FEATURES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl ConvSpec {
    pub const fn new(out_channels: usize, kernel: usize, stride: usize) -> Self {
        ConvSpec {
            out_channels,
            kernel,
            stride,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
}

/// Fixed affine standardization of features and target, fitted on the
/// training set. Without it, raw meters go in and come out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

impl Normalization {
    pub fn fit(samples: &[&BuildingSample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("cannot fit normalization on zero samples".into()));
        }
        let n = samples.len() as f64;
        let stats = |vals: &mut dyn Iterator<Item = f64>| {
            let v: Vec<f64> = vals.collect();
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            (mean, if std > 1e-9 { std } else { 1.0 })
        };
        let mut feature_mean = Vec::with_capacity(N_FEATURES);
        let mut feature_std = Vec::with_capacity(N_FEATURES);
        for k in 0..N_FEATURES {
            let (m, s) = stats(&mut samples.iter().map(|s| s.features()[k]));
            feature_mean.push(m);
            feature_std.push(s);
        }
        let (target_mean, target_std) = stats(&mut samples.iter().map(|s| s.target_lbbb_m));
        Ok(Normalization {
            feature_mean,
            feature_std,
            target_mean,
            target_std,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub chip_px: usize,
    pub conv_layers: Vec<ConvSpec>,
    pub fc_widths: Vec<usize>,
    pub extra_features: usize,
    pub activation: Activation,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            chip_px: 128,
            conv_layers: vec![ConvSpec::new(8, 5, 2), ConvSpec::new(16, 3, 2), ConvSpec::new(32, 3, 2)],
            fc_widths: vec![64, 1],
            extra_features: N_FEATURES,
            activation: Activation::Relu,
            seed: 0,
            normalization: None,
        }
    }
}

/// Resolved shapes of every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub convs: Vec<ConvLayout>,
    /// `(in, out)` per fully connected layer.
    pub fcs: Vec<(usize, usize)>,
    pub pooled: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvLayout {
    pub in_c: usize,
    pub in_hw: usize,
    pub out_c: usize,
    pub out_hw: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

/// Input channels: normalized amplitude and footprint mask.
pub const IN_CHANNELS: usize = 2;

impl ModelConfig {
    pub fn layout(&self) -> Result<Layout> {
        let bad = |m: String| Err(Error::Config(m));
        if self.chip_px == 0 {
            return bad("chip_px must be positive".into());
        }
        if self.extra_features != N_FEATURES {
            return bad(format!(
                "extra_features is {}, samples carry {N_FEATURES}",
                self.extra_features
            ));
        }
        if self.fc_widths.last() != Some(&1) {
            return bad(format!("final fc width must be 1, got {:?}", self.fc_widths));
        }
        if self.fc_widths.contains(&0) {
            return bad("fc widths must be positive".into());
        }
        if let Some(n) = &self.normalization {
            if n.feature_mean.len() != N_FEATURES
                || n.feature_std.len() != N_FEATURES
                || n.feature_std.iter().any(|s| !(s.is_finite() && *s > 0.0))
                || !(n.target_std.is_finite() && n.target_std > 0.0)
            {
                return bad("normalization statistics are malformed".into());
            }
        }
        let mut convs = Vec::with_capacity(self.conv_layers.len());
        let (mut c, mut hw) = (IN_CHANNELS, self.chip_px);
        for (i, l) in self.conv_layers.iter().enumerate() {
            if l.out_channels == 0 || l.kernel == 0 || l.stride == 0 {
                return bad(format!("conv layer {i} has a zero dimension: {l:?}"));
            }
            let pad = l.kernel / 2;
            if hw + 2 * pad < l.kernel {
                return bad(format!("conv layer {i}: kernel {} exceeds input {hw}", l.kernel));
            }
            let out_hw = (hw + 2 * pad - l.kernel) / l.stride + 1;
            convs.push(ConvLayout {
                in_c: c,
                in_hw: hw,
                out_c: l.out_channels,
                out_hw,
                kernel: l.kernel,
                stride: l.stride,
                pad,
            });
            c = l.out_channels;
            hw = out_hw;
        }
        let mut fcs = Vec::with_capacity(self.fc_widths.len());
        let mut width = c + self.extra_features;
        for &w in &self.fc_widths {
            fcs.push((width, w));
            width = w;
        }
        Ok(Layout {
            convs,
            fcs,
            pooled: c,
        })
    }

    /// Parameter tensor shapes in declaration order: per conv layer weight
    /// `[out, in, k, k]` then bias `[out]`, then per fc layer weight
    /// `[out, in]` then bias `[out]`.
    pub fn param_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let layout = self.layout()?;
        let mut shapes = Vec::new();
        for c in &layout.convs {
            shapes.push(vec![c.out_c, c.in_c, c.kernel, c.kernel]);
            shapes.push(vec![c.out_c]);
        }
        for &(i, o) in &layout.fcs {
            shapes.push(vec![o, i]);
            shapes.push(vec![o]);
        }
        Ok(shapes)
    }
}

use num_traits::Float;
use rand::Rng;
use rayon::prelude::*;

use super::config::{ConvLayout, Layout, ModelConfig, IN_CHANNELS, N_FEATURES};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::geometry::ProjectionFactor;
use crate::pipeline::BuildingSample;
use crate::rng::substream;

/// Model parameters plus optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub config: ModelConfig,
    pub params: Vec<Tensor>,
    /// Adam first and second moment estimates, shaped like `params`.
    pub moment1: Vec<Tensor>,
    pub moment2: Vec<Tensor>,
    pub step: u64,
    /// Mini-batch loss per optimizer step.
    pub loss_history: Vec<f64>,
}

impl TrainState {
    /// Glorot-uniform weights, zero biases. Each layer draws from its own
    /// substream of the config seed.
    pub fn new(config: ModelConfig) -> Result<Self> {
        let shapes = config.param_shapes()?;
        let mut params = Vec::with_capacity(shapes.len());
        for (layer, pair) in shapes.chunks(2).enumerate() {
            let (ws, bs) = (&pair[0], &pair[1]);
            let receptive: usize = ws[2..].iter().product();
            let fan_in = ws[1] * receptive;
            let fan_out = ws[0] * receptive;
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut rng = substream(config.seed, "init", layer as u64);
            let mut w = Tensor::zeros(ws);
            for v in w.data_mut() {
                *v = rng.random_range(-bound..bound);
            }
            params.push(w);
            params.push(Tensor::zeros(bs));
        }
        let zeros: Vec<Tensor> = shapes.iter().map(|s| Tensor::zeros(s)).collect();
        Ok(TrainState {
            config,
            params,
            moment1: zeros.clone(),
            moment2: zeros,
            step: 0,
            loss_history: Vec::new(),
        })
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub(crate) fn check_params(&self) -> Result<()> {
        let shapes = self.config.param_shapes()?;
        for (i, (p, s)) in self.params.iter().zip(&shapes).enumerate() {
            if p.shape() != s.as_slice() {
                return Err(Error::Shape {
                    layer: format!("param{i}"),
                    detail: format!("expected {s:?}, found {:?}", p.shape()),
                });
            }
        }
        if self.params.len() != shapes.len() {
            return Err(Error::Shape {
                layer: "params".into(),
                detail: format!("expected {} tensors, found {}", shapes.len(), self.params.len()),
            });
        }
        Ok(())
    }
}

/// Gradients of the batch-mean squared error, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    pub tensors: Vec<Tensor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    F64,
    F32,
}

/// Intermediate values kept for backpropagation.
struct Trace<T> {
    /// Zero-padded input of every conv layer.
    conv_in: Vec<Vec<T>>,
    /// Rectified output of every conv layer.
    conv_out: Vec<Vec<T>>,
    /// Input of every fc layer.
    fc_in: Vec<Vec<T>>,
    /// Final linear output before de-normalization.
    z: T,
}

fn numeric(layer: String) -> Error {
    Error::Numeric { layer }
}

fn all_finite<T: Float>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn pad_input<T: Float>(c: &ConvLayout, x: &[T]) -> Vec<T> {
    let (hw, p) = (c.in_hw, c.pad);
    let phw = hw + 2 * p;
    let mut out = vec![T::zero(); c.in_c * phw * phw];
    for ch in 0..c.in_c {
        for r in 0..hw {
            let src = &x[(ch * hw + r) * hw..(ch * hw + r + 1) * hw];
            let start = (ch * phw + r + p) * phw + p;
            out[start..start + hw].copy_from_slice(src);
        }
    }
    out
}

fn conv_forward<T: Float>(c: &ConvLayout, w: &[T], b: &[T], padded: &[T]) -> Vec<T> {
    let (k, s, ohw) = (c.kernel, c.stride, c.out_hw);
    let phw = c.in_hw + 2 * c.pad;
    let mut out = vec![T::zero(); c.out_c * ohw * ohw];
    for (oc, plane) in out.chunks_exact_mut(ohw * ohw).enumerate() {
        plane.fill(b[oc]);
        for ic in 0..c.in_c {
            for ky in 0..k {
                for kx in 0..k {
                    let wv = w[((oc * c.in_c + ic) * k + ky) * k + kx];
                    for (oy, orow) in plane.chunks_exact_mut(ohw).enumerate() {
                        let row = &padded[(ic * phw + oy * s + ky) * phw + kx..];
                        for (ox, o) in orow.iter_mut().enumerate() {
                            *o = *o + wv * row[ox * s];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Accumulates weight and bias gradients and, when `dpad` is given, the
/// gradient with respect to the padded input.
fn conv_backward(
    c: &ConvLayout,
    w: &[f64],
    padded: &[f64],
    dz: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    mut dpad: Option<&mut [f64]>,
) {
    let (k, s, ohw) = (c.kernel, c.stride, c.out_hw);
    let phw = c.in_hw + 2 * c.pad;
    for (oc, plane) in dz.chunks_exact(ohw * ohw).enumerate() {
        db[oc] += plane.iter().sum::<f64>();
        for ic in 0..c.in_c {
            for ky in 0..k {
                for kx in 0..k {
                    let wi = ((oc * c.in_c + ic) * k + ky) * k + kx;
                    let mut acc = 0.0;
                    for (oy, drow) in plane.chunks_exact(ohw).enumerate() {
                        let base = (ic * phw + oy * s + ky) * phw + kx;
                        let row = &padded[base..];
                        for (ox, d) in drow.iter().enumerate() {
                            acc += d * row[ox * s];
                        }
                        if let Some(dp) = dpad.as_deref_mut() {
                            let wv = w[wi];
                            let drow_in = &mut dp[base..];
                            for (ox, d) in drow.iter().enumerate() {
                                drow_in[ox * s] += wv * d;
                            }
                        }
                    }
                    dw[wi] += acc;
                }
            }
        }
    }
}

fn sample_input<T: Float>(chip_px: usize, s: &BuildingSample) -> Result<Vec<T>> {
    let n = chip_px * chip_px;
    if s.chip_amp.len() != n || s.chip_mask.len() != n {
        return Err(Error::Shape {
            layer: "input".into(),
            detail: format!(
                "sample {} has {}/{} chip values, model expects {chip_px}x{chip_px}",
                s.building_id,
                s.chip_amp.len(),
                s.chip_mask.len()
            ),
        });
    }
    let mut x = Vec::with_capacity(IN_CHANNELS * n);
    x.extend(s.chip_amp.iter().map(|&v| T::from(v).unwrap()));
    x.extend(s.chip_mask.iter().map(|&v| T::from(v).unwrap()));
    if !all_finite(&x) {
        return Err(numeric("input".into()));
    }
    Ok(x)
}

fn sample_features(config: &ModelConfig, s: &BuildingSample) -> Result<[f64; N_FEATURES]> {
    let mut f = s.features();
    if let Some(n) = &config.normalization {
        for (k, v) in f.iter_mut().enumerate() {
            *v = (*v - n.feature_mean[k]) / n.feature_std[k];
        }
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(numeric("features".into()));
    }
    Ok(f)
}

fn run<T: Float>(
    config: &ModelConfig,
    layout: &Layout,
    params: &[Vec<T>],
    sample: &BuildingSample,
) -> Result<Trace<T>> {
    let mut x: Vec<T> = sample_input(config.chip_px, sample)?;
    let mut conv_in = Vec::with_capacity(layout.convs.len());
    let mut conv_out = Vec::with_capacity(layout.convs.len());
    for (l, c) in layout.convs.iter().enumerate() {
        let padded = pad_input(c, &x);
        let mut out = conv_forward(c, &params[2 * l], &params[2 * l + 1], &padded);
        for v in &mut out {
            *v = v.max(T::zero());
        }
        if !all_finite(&out) {
            return Err(numeric(format!("conv{l}")));
        }
        conv_in.push(padded);
        x = out.clone();
        conv_out.push(out);
    }
    let plane = x.len() / layout.pooled;
    let inv = T::from(plane).unwrap().recip();
    let mut h: Vec<T> = x
        .chunks_exact(plane)
        .map(|p| p.iter().fold(T::zero(), |a, &v| a + v) * inv)
        .collect();
    h.extend(sample_features(config, sample)?.iter().map(|&v| T::from(v).unwrap()));

    let off = 2 * layout.convs.len();
    let mut fc_in = Vec::with_capacity(layout.fcs.len());
    for (l, &(ni, no)) in layout.fcs.iter().enumerate() {
        let (w, b) = (&params[off + 2 * l], &params[off + 2 * l + 1]);
        let last = l + 1 == layout.fcs.len();
        let out: Vec<T> = (0..no)
            .map(|o| {
                let z = w[o * ni..(o + 1) * ni]
                    .iter()
                    .zip(&h)
                    .fold(b[o], |a, (&wv, &hv)| a + wv * hv);
                if last {
                    z
                } else {
                    z.max(T::zero())
                }
            })
            .collect();
        if !all_finite(&out) {
            return Err(numeric(format!("fc{l}")));
        }
        fc_in.push(std::mem::replace(&mut h, out));
    }
    Ok(Trace {
        conv_in,
        conv_out,
        fc_in,
        z: h[0],
    })
}

fn denormalize(config: &ModelConfig, z: f64) -> f64 {
    match &config.normalization {
        Some(n) => z * n.target_std + n.target_mean,
        None => z,
    }
}

fn params_as<T: Float>(state: &TrainState) -> Vec<Vec<T>> {
    state
        .params
        .iter()
        .map(|p| p.data().iter().map(|&v| T::from(v).unwrap()).collect())
        .collect()
}

/// Predicted bounding-box range extent in meters, one per sample.
pub fn forward(state: &TrainState, samples: &[&BuildingSample]) -> Result<Vec<f64>> {
    forward_with_precision(state, samples, Precision::F64)
}

pub fn forward_with_precision(
    state: &TrainState,
    samples: &[&BuildingSample],
    precision: Precision,
) -> Result<Vec<f64>> {
    state.check_params()?;
    let layout = state.config.layout()?;
    let cfg = &state.config;
    match precision {
        Precision::F64 => {
            let params = params_as::<f64>(state);
            samples
                .par_iter()
                .map(|s| run(cfg, &layout, &params, s).map(|t| denormalize(cfg, t.z)))
                .collect()
        }
        Precision::F32 => {
            let params = params_as::<f32>(state);
            samples
                .par_iter()
                .map(|s| run(cfg, &layout, &params, s).map(|t| denormalize(cfg, t.z as f64)))
                .collect()
        }
    }
}

/// Mean squared error.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} targets",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("mse of an empty batch".into()));
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(sum / pred.len() as f64)
}

/// Prediction and parameter gradients of a single sample, scaled so that
/// summing over the batch gives the gradient of the batch-mean loss.
fn sample_gradient(
    state: &TrainState,
    layout: &Layout,
    params: &[Vec<f64>],
    sample: &BuildingSample,
    batch: usize,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let cfg = &state.config;
    let trace = run(cfg, layout, params, sample)?;
    let pred = denormalize(cfg, trace.z);
    let tstd = cfg.normalization.as_ref().map_or(1.0, |n| n.target_std);
    let err = pred - sample.target_lbbb_m;
    let mut grads: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.len()]).collect();

    let off = 2 * layout.convs.len();
    let mut dz = vec![2.0 * err / batch as f64 * tstd];
    for (l, &(ni, _)) in layout.fcs.iter().enumerate().rev() {
        let h = &trace.fc_in[l];
        let w = &params[off + 2 * l];
        let mut dh = vec![0.0; ni];
        {
            let (gw, gb) = {
                let (a, b) = grads.split_at_mut(off + 2 * l + 1);
                (&mut a[off + 2 * l], &mut b[0])
            };
            for (o, &d) in dz.iter().enumerate() {
                gb[o] += d;
                let row = &mut gw[o * ni..(o + 1) * ni];
                for i in 0..ni {
                    row[i] += d * h[i];
                    dh[i] += w[o * ni + i] * d;
                }
            }
        }
        if l > 0 {
            for (d, &hv) in dh.iter_mut().zip(h) {
                if hv <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        dz = dh;
    }

    if let Some(last) = trace.conv_out.last() {
        let plane = last.len() / layout.pooled;
        let inv = 1.0 / plane as f64;
        let mut da: Vec<f64> = Vec::with_capacity(last.len());
        for c in 0..layout.pooled {
            da.extend(std::iter::repeat_n(dz[c] * inv, plane));
        }
        for (l, c) in layout.convs.iter().enumerate().rev() {
            for (d, &a) in da.iter_mut().zip(&trace.conv_out[l]) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }
            let mut dpad = (l > 0).then(|| vec![0.0; trace.conv_in[l].len()]);
            let (gw, gb) = {
                let (a, b) = grads.split_at_mut(2 * l + 1);
                (&mut a[2 * l], &mut b[0])
            };
            conv_backward(
                c,
                &params[2 * l],
                &trace.conv_in[l],
                &da,
                gw,
                gb,
                dpad.as_deref_mut(),
            );
            if let Some(dp) = dpad {
                let (hw, p) = (c.in_hw, c.pad);
                let phw = hw + 2 * p;
                da = Vec::with_capacity(c.in_c * hw * hw);
                for ch in 0..c.in_c {
                    for r in 0..hw {
                        let start = (ch * phw + r + p) * phw + p;
                        da.extend_from_slice(&dp[start..start + hw]);
                    }
                }
            }
        }
    }
    Ok((pred, grads))
}

/// Batch-mean squared error and its gradient with respect to every
/// parameter. Per-sample work runs in parallel; the reduction is sequential
/// in sample order so results do not depend on the thread count.
pub fn backward(state: &TrainState, samples: &[&BuildingSample]) -> Result<Gradients> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("backward on an empty batch".into()));
    }
    state.check_params()?;
    let layout = state.config.layout()?;
    let params = params_as::<f64>(state);
    let n = samples.len();
    let per_sample: Vec<(f64, Vec<Vec<f64>>)> = samples
        .par_iter()
        .map(|s| sample_gradient(state, &layout, &params, s, n))
        .collect::<Result<_>>()?;

    let mut tensors: Vec<Tensor> = state.params.iter().map(|p| Tensor::zeros(p.shape())).collect();
    let mut preds = Vec::with_capacity(n);
    for (pred, g) in per_sample {
        preds.push(pred);
        for (t, gv) in tensors.iter_mut().zip(&g) {
            for (a, b) in t.data_mut().iter_mut().zip(gv) {
                *a += b;
            }
        }
    }
    let targets: Vec<f64> = samples.iter().map(|s| s.target_lbbb_m).collect();
    let loss = mse_loss(&preds, &targets)?;
    if !loss.is_finite() || tensors.iter().any(|t| !t.is_finite()) {
        return Err(numeric("backward".into()));
    }
    Ok(Gradients { loss, tensors })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightPrediction {
    /// Predicted bounding-box range extent.
    pub lbbb_m: f64,
    pub height_m: f64,
    /// The predicted extent fell short of the footprint box and the height
    /// was clamped to zero.
    pub clamped: bool,
}

fn to_height(sample: &BuildingSample, lbbb: f64, factor: ProjectionFactor) -> HeightPrediction {
    let incidence = sample.cos_theta.clamp(-1.0, 1.0).acos().to_degrees();
    let l = lbbb - sample.fbb_extent_u_m;
    let clamped = l < 0.0;
    HeightPrediction {
        lbbb_m: lbbb,
        height_m: if clamped {
            0.0
        } else {
            factor.height_from_layover(l, incidence)
        },
        clamped,
    }
}

pub fn predict_height(
    state: &TrainState,
    sample: &BuildingSample,
    factor: ProjectionFactor,
) -> Result<HeightPrediction> {
    let lbbb = forward(state, &[sample])?[0];
    Ok(to_height(sample, lbbb, factor))
}

pub fn predict_heights(
    state: &TrainState,
    samples: &[&BuildingSample],
    factor: ProjectionFactor,
) -> Result<Vec<HeightPrediction>> {
    let lbbb = forward(state, samples)?;
    Ok(samples
        .iter()
        .zip(lbbb)
        .map(|(s, l)| to_height(s, l, factor))
        .collect())
}

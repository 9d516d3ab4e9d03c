use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{backward, TrainState};
use crate::error::{Error, Result};
use crate::pipeline::BuildingSample;
use crate::rng::substream;

/// Adam mini-batch training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    /// Stop after this many optimizer steps even mid-epoch.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            learning_rate: 1e-3,
            batch_size: 32,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 10,
            max_steps: None,
            seed: 0,
        }
    }
}

impl TrainHyper {
    fn validate(&self) -> Result<()> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate >= 0.0
            && self.batch_size > 0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training settings: {self:?}")))
        }
    }
}

/// Trains in place. Every epoch visits the samples in a permutation drawn
/// from the epoch's own substream; the last batch of an epoch may be short.
/// Training continues from `state.step`, so a resumed state produces the
/// same sequence as an uninterrupted run.
pub fn train(state: &mut TrainState, samples: &[&BuildingSample], hyper: &TrainHyper) -> Result<()> {
    hyper.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidInput("no training samples".into()));
    }
    state.check_params()?;
    let per_epoch = samples.len().div_ceil(hyper.batch_size) as u64;
    let total = per_epoch * hyper.epochs as u64;
    let total = hyper.max_steps.map_or(total, |m| m.min(total));
    let mut batch: Vec<&BuildingSample> = Vec::with_capacity(hyper.batch_size);

    while state.step < total {
        let epoch = state.step / per_epoch;
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.shuffle(&mut substream(hyper.seed, "epoch", epoch));
        let first = (state.step % per_epoch) as usize;
        for chunk in order.chunks(hyper.batch_size).skip(first) {
            if state.step >= total {
                break;
            }
            batch.clear();
            batch.extend(chunk.iter().map(|&i| samples[i]));
            let grads = backward(state, &batch).map_err(|e| match e {
                Error::Numeric { layer } if layer != "input" && layer != "features" => {
                    Error::Divergence {
                        step: state.step + 1,
                        loss: f64::NAN,
                    }
                }
                e => e,
            })?;
            adam_step(state, &grads.tensors, hyper);
            state.step += 1;
            state.loss_history.push(grads.loss);
            if !grads.loss.is_finite() || state.params.iter().any(|p| !p.is_finite()) {
                return Err(Error::Divergence {
                    step: state.step,
                    loss: grads.loss,
                });
            }
        }
    }
    Ok(())
}

fn adam_step(state: &mut TrainState, grads: &[super::Tensor], h: &TrainHyper) {
    let t = (state.step + 1) as i32;
    let c1 = 1.0 - h.beta1.powi(t);
    let c2 = 1.0 - h.beta2.powi(t);
    for (((p, m), v), g) in state
        .params
        .iter_mut()
        .zip(&mut state.moment1)
        .zip(&mut state.moment2)
        .zip(grads)
    {
        let (p, m, v) = (p.data_mut(), m.data_mut(), v.data_mut());
        for i in 0..p.len() {
            let gi = g.data()[i];
            m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * gi;
            v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * gi * gi;
            p[i] -= h.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + h.epsilon);
        }
    }
}

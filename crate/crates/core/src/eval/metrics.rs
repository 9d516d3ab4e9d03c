use serde::{Deserialize, Serialize};

use super::DEFAULT_THRESHOLD_M;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub building_id: String,
    pub city_id: String,
    pub ref_height_m: f64,
    pub pred_height_m: f64,
}

impl EvalPair {
    pub fn new(
        building_id: impl Into<String>,
        city_id: impl Into<String>,
        ref_height_m: f64,
        pred_height_m: f64,
    ) -> Result<Self> {
        let ok = |h: f64| h.is_finite() && h >= 0.0;
        if !ok(ref_height_m) || !ok(pred_height_m) {
            return Err(Error::InvalidInput(format!(
                "heights must be finite and non-negative, got ref {ref_height_m}, pred {pred_height_m}"
            )));
        }
        Ok(EvalPair {
            building_id: building_id.into(),
            city_id: city_id.into(),
            ref_height_m,
            pred_height_m,
        })
    }

    pub fn abs_error(&self) -> f64 {
        (self.pred_height_m - self.ref_height_m).abs()
    }
}

/// Running sums for MAE and RMSE. Partial accumulators merge exactly as if
/// the errors had been pushed in sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorAccumulator {
    pub n: usize,
    sum_abs: f64,
    sum_sq: f64,
}

impl ErrorAccumulator {
    pub fn push(&mut self, error: f64) {
        self.n += 1;
        self.sum_abs += error.abs();
        self.sum_sq += error * error;
    }

    pub fn merge(&mut self, other: &ErrorAccumulator) {
        self.n += other.n;
        self.sum_abs += other.sum_abs;
        self.sum_sq += other.sum_sq;
    }

    pub fn mae(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum_abs / self.n as f64)
    }

    pub fn rmse(&self) -> Option<f64> {
        (self.n > 0).then(|| (self.sum_sq / self.n as f64).sqrt())
    }

    pub fn metrics(&self) -> BucketMetrics {
        BucketMetrics {
            n: self.n,
            mae: self.mae(),
            rmse: self.rmse(),
        }
    }
}

/// `None` for an empty input.
pub fn mae(pairs: &[EvalPair]) -> Option<f64> {
    accumulate(pairs).mae()
}

pub fn rmse(pairs: &[EvalPair]) -> Option<f64> {
    accumulate(pairs).rmse()
}

fn accumulate(pairs: &[EvalPair]) -> ErrorAccumulator {
    let mut acc = ErrorAccumulator::default();
    for p in pairs {
        acc.push(p.pred_height_m - p.ref_height_m);
    }
    acc
}

/// Count and metrics of one height bucket; metrics are absent when empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketMetrics {
    pub n: usize,
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// City name, or a run label such as `ALL`.
    pub city_id: String,
    pub threshold_m: f64,
    pub all: BucketMetrics,
    /// Reference height strictly below the threshold.
    pub lt: BucketMetrics,
    /// Reference height at or above the threshold.
    pub ge: BucketMetrics,
}

impl MetricsReport {
    pub fn buckets(&self) -> [&BucketMetrics; 3] {
        [&self.all, &self.lt, &self.ge]
    }
}

/// Buckets on the reference height, never the prediction.
pub fn stratified_report(city_id: &str, pairs: &[EvalPair], threshold_m: f64) -> MetricsReport {
    let (mut lt, mut ge) = (ErrorAccumulator::default(), ErrorAccumulator::default());
    for p in pairs {
        let e = p.pred_height_m - p.ref_height_m;
        if p.ref_height_m < threshold_m {
            lt.push(e);
        } else {
            ge.push(e);
        }
    }
    let mut all = lt;
    all.merge(&ge);
    MetricsReport {
        city_id: city_id.to_owned(),
        threshold_m,
        all: all.metrics(),
        lt: lt.metrics(),
        ge: ge.metrics(),
    }
}

impl Default for MetricsReport {
    fn default() -> Self {
        stratified_report("ALL", &[], DEFAULT_THRESHOLD_M)
    }
}

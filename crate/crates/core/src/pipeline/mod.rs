//! Supervised selection of the covariance exponent: confusion metrics, the
//! S₃ score, a class-weighted logistic classifier, leak-free splits and the
//! grid search over `β` and window length.

mod classifier;
mod dataset;
mod select;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use classifier::{
    logistic_objective, train_linear_classifier, train_on_vectors, vectorize, ClassifierConfig,
    LinearClassifier,
};
pub use dataset::{
    synthetic_two_class, DataSplit, Dataset, Part, Segment, SplitSpec, SyntheticData, SyntheticSpec,
};
pub use select::{
    default_beta_grid, evaluate, extract_features, fit_at, select_beta, CandidateRow, FeatureSet,
    SelectionConfig, SelectionResult,
};

/// `4·(spec_t·spec_v·sen_t·sen_v)/(spec_t + spec_v + sen_t + sen_v)`, 0 when
/// the sum is 0. Arguments are sorted first so the value is exactly
/// symmetric.
pub fn s3_score(spec_t: f64, spec_v: f64, sen_t: f64, sen_v: f64) -> f64 {
    let mut v = [spec_t, spec_v, sen_t, sen_v];
    v.sort_by(f64::total_cmp);
    let sum = v[0] + v[1] + v[2] + v[3];
    if sum <= 0.0 {
        return 0.0;
    }
    4.0 * (v[0] * v[1] * v[2] * v[3]) / sum
}

/// Confusion counts with class 1 as the event. Rates whose denominator is
/// zero are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
}

fn ratio(a: usize, b: usize) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let sensitivity = ratio(tp, tp + fn_);
        Metrics {
            tp,
            fp,
            tn,
            fn_,
            sensitivity,
            specificity: ratio(tn, tn + fp),
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            recall: sensitivity,
            precision: ratio(tp, tp + fp),
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn classification_metrics(predictions: &[u8], labels: &[u8]) -> Result<Metrics> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::invalid("metrics need at least one example"));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p == 1, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, tn, fn_))
}

/// S₃ from train and validation metrics; any undefined rate gives 0.
pub fn s3_from_metrics(train: &Metrics, val: &Metrics) -> f64 {
    match (
        train.specificity,
        val.specificity,
        train.sensitivity,
        val.sensitivity,
    ) {
        (Some(a), Some(b), Some(c), Some(d)) => s3_score(a, b, c, d),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s3_examples() {
        assert_eq!(s3_score(1.0, 1.0, 1.0, 1.0), 1.0);
        assert_eq!(s3_score(0.0, 0.7, 0.9, 1.0), 0.0);
        assert_eq!(s3_score(0.5, 0.5, 0.5, 0.5), 0.125);
        assert_eq!(s3_score(0.0, 0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn metric_examples() {
        let m = classification_metrics(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!(
            (m.sensitivity, m.specificity, m.accuracy),
            (Some(1.0), Some(1.0), Some(1.0))
        );
        let m = classification_metrics(&[0, 0, 0, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!(m.sensitivity, Some(0.0));
        assert_eq!(m.precision, None);
        let m = classification_metrics(&[1, 0, 0], &[0, 0, 0]).unwrap();
        assert_eq!(m.sensitivity, None);
        assert_eq!(m.specificity, Some(2.0 / 3.0));
        assert!(classification_metrics(&[1], &[1, 0]).is_err());
        assert!(classification_metrics(&[], &[]).is_err());
    }

    #[test]
    fn undefined_rates_zero_the_score() {
        let good = Metrics::from_counts(5, 0, 5, 0);
        let no_pos = Metrics::from_counts(0, 0, 5, 0);
        assert_eq!(s3_from_metrics(&good, &good), 1.0);
        assert_eq!(s3_from_metrics(&good, &no_pos), 0.0);
    }
}

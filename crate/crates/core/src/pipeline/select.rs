use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifier::{train_linear_classifier, ClassifierConfig, LinearClassifier};
use super::dataset::{DataSplit, Dataset, Part};
use super::{classification_metrics, s3_from_metrics, Metrics};
use crate::error::{Error, Result};
use crate::features::{
    power_features, window_covariances, FeatureMatrix, Ridge, WindowCovariance, WindowSpec,
};

/// Features of one split part, tagged with that part's token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub part: Part,
    pub token: String,
    pub features: Vec<FeatureMatrix>,
}

impl FeatureSet {
    pub fn labels(&self) -> Vec<u8> {
        self.features.iter().map(|f| f.label).collect()
    }
}

/// 33 points evenly spaced on `[−4, 4]` (step 0.25). The point `β = 0`
/// yields identity features and therefore never wins selection.
pub fn default_beta_grid() -> Vec<f64> {
    (0..33).map(|i| -4.0 + 0.25 * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub beta_grid: Vec<f64>,
    pub window_grid: Vec<WindowSpec>,
    pub ridge: Ridge,
    pub classifier: ClassifierConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            beta_grid: default_beta_grid(),
            window_grid: vec![WindowSpec {
                length: 64,
                overlap: 0.75,
            }],
            ridge: Ridge::default(),
            classifier: ClassifierConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub beta: f64,
    pub window: WindowSpec,
    pub s3: f64,
    pub train: Metrics,
    pub val: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub beta_star: f64,
    pub s3: f64,
    pub window_spec_star: Option<WindowSpec>,
    pub per_beta_table: Vec<CandidateRow>,
    /// Tokens of the parts used during selection.
    pub seen_tokens: Vec<String>,
}

impl SelectionResult {
    /// One row per candidate.
    pub fn table_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "beta",
            "window_length",
            "overlap",
            "s3",
            "train_sensitivity",
            "train_specificity",
            "val_sensitivity",
            "val_specificity",
            "train_accuracy",
            "val_accuracy",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.per_beta_table {
            w.write_record([
                r.beta.to_string(),
                r.window.length.to_string(),
                r.window.overlap.to_string(),
                r.s3.to_string(),
                opt(r.train.sensitivity),
                opt(r.train.specificity),
                opt(r.val.sensitivity),
                opt(r.val.specificity),
                opt(r.train.accuracy),
                opt(r.val.accuracy),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Numerical(format!("csv flush failed: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Numerical(e.to_string()))
    }
}

fn part_covariances(
    ds: &Dataset,
    split: &DataSplit,
    part: Part,
    window: &WindowSpec,
    ridge: Ridge,
) -> Result<Vec<WindowCovariance>> {
    let mut out = Vec::new();
    for seg in split.segments_of(part) {
        if seg.range.len() < window.length {
            continue;
        }
        let rec = ds
            .recordings
            .get(seg.recording)
            .ok_or_else(|| Error::invalid("split refers to a missing recording"))?;
        let piece = rec.slice(seg.range.clone())?;
        for mut wc in window_covariances(&piece, window, ridge, seg.recording)? {
            wc.window = wc.window.start + seg.range.start..wc.window.end + seg.range.start;
            out.push(wc);
        }
    }
    Ok(out)
}

fn power_all(covs: &[WindowCovariance], beta: f64) -> Result<Vec<FeatureMatrix>> {
    covs.par_iter()
        .map(|c| power_features(&c.cov, beta, c.label, c.window.clone(), c.recording))
        .collect()
}

pub fn extract_features(
    ds: &Dataset,
    split: &DataSplit,
    part: Part,
    window: &WindowSpec,
    ridge: Ridge,
    beta: f64,
) -> Result<FeatureSet> {
    let covs = part_covariances(ds, split, part, window, ridge)?;
    Ok(FeatureSet {
        part,
        token: split.token(part).to_string(),
        features: power_all(&covs, beta)?,
    })
}

fn predict_metrics(clf: &LinearClassifier, features: &[FeatureMatrix]) -> Result<Metrics> {
    let pred = clf.predict_features(features)?;
    let labels: Vec<u8> = features.iter().map(|f| f.label).collect();
    classification_metrics(&pred, &labels)
}

fn require_both_classes(covs: &[WindowCovariance], part: Part) -> Result<()> {
    for c in [0u8, 1] {
        if !covs.iter().any(|w| w.label == c) {
            return Err(Error::InsufficientData(format!(
                "{} split has no windows of class {c}",
                part.name()
            )));
        }
    }
    Ok(())
}

/// Trains one classifier per `(window, β)` candidate on the training part and
/// scores it by S₃ from training and validation metrics. The best candidate
/// maximizes S₃; ties go to the smallest `|β|`, then to grid order.
pub fn select_beta(
    ds: &Dataset,
    split: &DataSplit,
    cfg: &SelectionConfig,
) -> Result<SelectionResult> {
    if cfg.beta_grid.is_empty() || cfg.window_grid.is_empty() {
        return Err(Error::invalid("beta and window grids must be non-empty"));
    }
    if cfg.beta_grid.iter().any(|b| !b.is_finite()) {
        return Err(Error::invalid("beta grid must be finite"));
    }
    let mut rows = Vec::new();
    for window in &cfg.window_grid {
        window.validate()?;
        let train = part_covariances(ds, split, Part::Train, window, cfg.ridge)?;
        let val = part_covariances(ds, split, Part::Val, window, cfg.ridge)?;
        require_both_classes(&train, Part::Train)?;
        require_both_classes(&val, Part::Val)?;
        let block: Vec<CandidateRow> = cfg
            .beta_grid
            .par_iter()
            .map(|&beta| {
                let tr = power_all(&train, beta)?;
                let va = power_all(&val, beta)?;
                let clf = train_linear_classifier(&tr, &cfg.classifier)?;
                let train_m = predict_metrics(&clf, &tr)?;
                let val_m = predict_metrics(&clf, &va)?;
                Ok(CandidateRow {
                    beta,
                    window: *window,
                    s3: s3_from_metrics(&train_m, &val_m),
                    train: train_m,
                    val: val_m,
                })
            })
            .collect::<Result<_>>()?;
        rows.extend(block);
    }
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        let b = &rows[best];
        if r.s3 > b.s3 || (r.s3 == b.s3 && r.beta.abs() < b.beta.abs()) {
            best = i;
        }
    }
    Ok(SelectionResult {
        beta_star: rows[best].beta,
        s3: rows[best].s3,
        window_spec_star: Some(rows[best].window),
        per_beta_table: rows,
        seen_tokens: vec![
            split.token(Part::Train).to_string(),
            split.token(Part::Val).to_string(),
        ],
    })
}

/// The classifier for one candidate, trained on the training part.
pub fn fit_at(
    ds: &Dataset,
    split: &DataSplit,
    beta: f64,
    window: &WindowSpec,
    cfg: &SelectionConfig,
) -> Result<LinearClassifier> {
    let train = extract_features(ds, split, Part::Train, window, cfg.ridge, beta)?;
    let mut clf = train_linear_classifier(&train.features, &cfg.classifier)?;
    clf.seen_tokens = vec![
        split.token(Part::Train).to_string(),
        split.token(Part::Val).to_string(),
    ];
    Ok(clf)
}

/// Metrics on a held-out set. Fails if a test set's token was seen while the
/// classifier was selected or trained.
pub fn evaluate(clf: &LinearClassifier, set: &FeatureSet) -> Result<Metrics> {
    if set.features.is_empty() {
        return Err(Error::InsufficientData("evaluation set is empty".into()));
    }
    if set.part == Part::Test && clf.seen_tokens.iter().any(|t| t == &set.token) {
        return Err(Error::SplitLeak(format!(
            "test token {} was visible during selection",
            set.token
        )));
    }
    predict_metrics(clf, &set.features)
}

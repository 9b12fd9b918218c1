//! From raw multichannel recordings to covariance-power feature matrices:
//! windowing, window labels, covariance estimates, rank-one test covariances
//! and mutual-information channel ranking.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spd_power_eig, SpdMatrix, SymMatrix};

/// A `T × channels` recording with one binary label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    samples: DMatrix<f64>,
    labels: Vec<u8>,
}

impl LabeledSeries {
    pub fn new(samples: DMatrix<f64>, labels: Vec<u8>) -> Result<Self> {
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(Error::invalid(
                "series needs at least one sample and one channel",
            ));
        }
        if labels.len() != samples.nrows() {
            return Err(Error::DimensionMismatch {
                expected: samples.nrows(),
                found: labels.len(),
            });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::invalid("labels must be 0 or 1"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(LabeledSeries { samples, labels })
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> usize {
        self.samples.ncols()
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Keeps only `channels`, in the given order.
    pub fn select_channels(&self, channels: &[usize]) -> Result<LabeledSeries> {
        if channels.is_empty() || channels.iter().any(|&c| c >= self.channels()) {
            return Err(Error::invalid("channel selection out of range"));
        }
        let samples = DMatrix::from_fn(self.len(), channels.len(), |t, j| {
            self.samples[(t, channels[j])]
        });
        LabeledSeries::new(samples, self.labels.clone())
    }

    /// Contiguous sub-recording.
    pub fn slice(&self, range: Range<usize>) -> Result<LabeledSeries> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::invalid("slice outside the series"));
        }
        LabeledSeries::new(
            self.samples.rows(range.start, range.len()).into_owned(),
            self.labels[range].to_vec(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub length: usize,
    pub overlap: f64,
}

impl WindowSpec {
    pub fn new(length: usize, overlap: f64) -> Result<Self> {
        let w = WindowSpec { length, overlap };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::invalid("window length must be positive"));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::invalid("window overlap must lie in [0,1)"));
        }
        if self.stride() == 0 {
            return Err(Error::invalid("window stride rounds to zero"));
        }
        Ok(())
    }

    /// `round(length·(1 − overlap))`.
    pub fn stride(&self) -> usize {
        (self.length as f64 * (1.0 - self.overlap)).round() as usize
    }

    /// `floor((T − length)/stride) + 1`, or 0 when `T < length`.
    pub fn count(&self, len: usize) -> usize {
        if len < self.length {
            0
        } else {
            (len - self.length) / self.stride() + 1
        }
    }
}

/// Window index ranges over a series of length `len`.
pub fn sliding_windows(len: usize, spec: &WindowSpec) -> Result<Vec<Range<usize>>> {
    spec.validate()?;
    if spec.length > len {
        return Err(Error::invalid(format!(
            "window length {} exceeds series length {len}",
            spec.length
        )));
    }
    let stride = spec.stride();
    Ok((0..spec.count(len))
        .map(|k| k * stride..k * stride + spec.length)
        .collect())
}

/// Majority class; ties go to the event class 1.
pub fn majority_vote_label(labels: &[u8]) -> Result<u8> {
    if labels.is_empty() {
        return Err(Error::invalid("cannot vote on an empty window"));
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    Ok(u8::from(2 * ones >= labels.len()))
}

/// Diagonal loading added to window covariances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Ridge {
    Absolute(f64),
    /// `value · trace(Ĉ)/k`.
    TraceScaled(f64),
}

impl Default for Ridge {
    fn default() -> Self {
        Ridge::TraceScaled(1e-6)
    }
}

fn centered_covariance(window: &DMatrix<f64>) -> DMatrix<f64> {
    let n = window.nrows() as f64;
    let mean = window.row_mean();
    let mut centered = window.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    centered.transpose() * &centered / n
}

/// `(1/n) Σ (row − mean)(row − mean)ᵀ + ridge·I`.
pub fn empirical_covariance(window: &DMatrix<f64>, ridge: f64) -> Result<SpdMatrix> {
    if window.nrows() == 0 || window.ncols() == 0 {
        return Err(Error::invalid("empty window"));
    }
    if !(ridge >= 0.0) {
        return Err(Error::invalid("ridge must be nonnegative"));
    }
    let k = window.ncols();
    let c = centered_covariance(window) + DMatrix::identity(k, k) * ridge;
    SpdMatrix::new(SymMatrix::symmetrize(c))
}

/// [`empirical_covariance`] with a [`Ridge`] rule.
pub fn regularized_covariance(window: &DMatrix<f64>, ridge: Ridge) -> Result<SpdMatrix> {
    let value = match ridge {
        Ridge::Absolute(r) => r,
        Ridge::TraceScaled(f) => {
            if window.nrows() == 0 || window.ncols() == 0 {
                return Err(Error::invalid("empty window"));
            }
            let c = centered_covariance(window);
            let r = f * c.trace() / window.ncols() as f64;
            if r > 0.0 {
                r
            } else {
                f
            }
        }
    };
    empirical_covariance(window, value)
}

/// `x xᵀ + ridge·I`.
pub fn rank_one_covariance(x: &DVector<f64>, ridge: f64) -> Result<SpdMatrix> {
    if !(ridge > 0.0 && ridge.is_finite()) {
        return Err(Error::invalid("rank-one covariance needs ridge > 0"));
    }
    if x.is_empty() {
        return Err(Error::invalid("empty vector"));
    }
    let k = x.len();
    SpdMatrix::new(SymMatrix::symmetrize(
        x * x.transpose() + DMatrix::identity(k, k) * ridge,
    ))
}

/// A powered covariance with its class label and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub matrix: SpdMatrix,
    pub label: u8,
    pub beta: f64,
    pub source_window: Range<usize>,
    /// Index of the recording (or segment) the window came from.
    pub recording: usize,
}

/// `cov^β`.
pub fn power_features(
    cov: &SpdMatrix,
    beta: f64,
    label: u8,
    source_window: Range<usize>,
    recording: usize,
) -> Result<FeatureMatrix> {
    Ok(FeatureMatrix {
        matrix: spd_power_eig(cov, beta)?,
        label,
        beta,
        source_window,
        recording,
    })
}

/// A window covariance before powering.
#[derive(Debug, Clone)]
pub struct WindowCovariance {
    pub cov: SpdMatrix,
    pub label: u8,
    pub window: Range<usize>,
    pub recording: usize,
}

/// Covariances of every window of `series`, in window order.
pub fn window_covariances(
    series: &LabeledSeries,
    spec: &WindowSpec,
    ridge: Ridge,
    recording: usize,
) -> Result<Vec<WindowCovariance>> {
    sliding_windows(series.len(), spec)?
        .into_par_iter()
        .map(|w| {
            let block = series.samples().rows(w.start, w.len()).into_owned();
            Ok(WindowCovariance {
                cov: regularized_covariance(&block, ridge)?,
                label: majority_vote_label(&series.labels()[w.clone()])?,
                window: w,
                recording,
            })
        })
        .collect()
}

/// Histogram estimate of `I(X; Y)` in nats with `bins` equal-width bins over
/// the range of `values`. Constant inputs give 0.
pub fn mutual_information(values: &[f64], labels: &[u8], bins: usize) -> Result<f64> {
    if values.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: values.len(),
        });
    }
    if bins < 2 {
        return Err(Error::invalid("need at least two bins"));
    }
    let n = values.len();
    if n == 0 {
        return Ok(0.0);
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if !(hi > lo) {
        return Ok(0.0);
    }
    let width = (hi - lo) / bins as f64;
    let mut joint = vec![[0usize; 2]; bins];
    for (&v, &y) in values.iter().zip(labels) {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        joint[b][usize::from(y.min(1))] += 1;
    }
    let py = [0, 1].map(|c| joint.iter().map(|row| row[c]).sum::<usize>() as f64 / n as f64);
    let mut mi = 0.0;
    for row in &joint {
        let pb = (row[0] + row[1]) as f64 / n as f64;
        for c in 0..2 {
            if row[c] > 0 {
                let pj = row[c] as f64 / n as f64;
                mi += pj * (pj / (pb * py[c])).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// The `k_keep` channels with highest mutual information with the labels,
/// in decreasing order; ties keep the lower index first.
pub fn mutual_info_select(
    series: &LabeledSeries,
    k_keep: usize,
    bins: usize,
) -> Result<Vec<usize>> {
    if k_keep == 0 || k_keep > series.channels() {
        return Err(Error::invalid(format!(
            "k_keep must lie in 1..={}",
            series.channels()
        )));
    }
    let scores = (0..series.channels())
        .map(|c| {
            let col: Vec<f64> = series.samples().column(c).iter().copied().collect();
            mutual_information(&col, series.labels(), bins)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k_keep);
    Ok(order)
}

/// Training covariances over per-label cohorts of `cohort_size` rows of
/// `samples`. Rows of each label are shuffled with `seed` and cut into
/// consecutive cohorts; a trailing partial cohort is dropped.
pub fn cohort_covariances(
    samples: &DMatrix<f64>,
    labels: &[u8],
    cohort_size: usize,
    ridge: Ridge,
    seed: u64,
) -> Result<Vec<(SpdMatrix, u8)>> {
    if labels.len() != samples.nrows() {
        return Err(Error::DimensionMismatch {
            expected: samples.nrows(),
            found: labels.len(),
        });
    }
    if cohort_size < 2 {
        return Err(Error::invalid("cohorts need at least two rows"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rows.shuffle(&mut rng);
        for chunk in rows.chunks_exact(cohort_size) {
            let block =
                DMatrix::from_fn(chunk.len(), samples.ncols(), |i, j| samples[(chunk[i], j)]);
            out.push((regularized_covariance(&block, ridge)?, class));
        }
    }
    Ok(out)
}

//! Affine-invariant Riemannian distance on SPD matrices and class-level
//! distance statistics.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{sym_eigen, SpdMatrix, SymMatrix};

fn inv_sqrt(x: &SpdMatrix) -> DMatrix<f64> {
    x.eigen().map(|l| l.powf(-0.5))
}

fn distance_from_inv_sqrt(xi: &DMatrix<f64>, y: &SpdMatrix) -> Result<f64> {
    let inner = SymMatrix::new(xi * y.matrix() * xi)?;
    let e = sym_eigen(&inner)?;
    if !(e.lambda_min() > 0.0) {
        return Err(Error::Numerical(
            "congruence lost positive definiteness".into(),
        ));
    }
    Ok(e.values.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

/// `‖log(X^{−1/2} Y X^{−1/2})‖_F`.
pub fn air_distance(x: &SpdMatrix, y: &SpdMatrix) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    distance_from_inv_sqrt(&inv_sqrt(x), y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    pub n_pairs: usize,
    pub mean: f64,
    /// Population variance of the pair distances.
    pub variance: f64,
}

impl BucketStats {
    fn of(d: &[f64]) -> Self {
        let n = d.len();
        let mean = d.iter().sum::<f64>() / n as f64;
        let variance = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        BucketStats {
            n_pairs: n,
            mean,
            variance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    /// Indexed by class label.
    pub intra: [BucketStats; 2],
    pub inter: BucketStats,
    /// `inter.mean` exceeds every intra-class mean beyond round-off.
    pub separated: bool,
    /// `inter.variance` exceeds every intra-class variance beyond round-off.
    pub variance_dominant: bool,
}

/// All pairwise distances, in the order `(0,1), (0,2), …, (1,2), …`.
pub fn pairwise_distances(mats: &[&SpdMatrix]) -> Result<Vec<f64>> {
    let inv: Vec<DMatrix<f64>> = mats.par_iter().map(|m| inv_sqrt(m)).collect();
    let pairs: Vec<(usize, usize)> = (0..mats.len())
        .flat_map(|i| ((i + 1)..mats.len()).map(move |j| (i, j)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            if mats[i].dim() != mats[j].dim() {
                return Err(Error::DimensionMismatch {
                    expected: mats[i].dim(),
                    found: mats[j].dim(),
                });
            }
            distance_from_inv_sqrt(&inv[i], mats[j])
        })
        .collect()
}

/// Exhaustive pairwise distances bucketed by class pair.
pub fn class_distance_stats(features: &[FeatureMatrix]) -> Result<IdentifiabilityReport> {
    let counts = [0u8, 1].map(|c| features.iter().filter(|f| f.label == c).count());
    if counts.iter().any(|&n| n < 2) {
        return Err(Error::InsufficientData(
            "need at least two matrices per class".into(),
        ));
    }
    if features.iter().any(|f| f.label > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    let mats: Vec<&SpdMatrix> = features.iter().map(|f| &f.matrix).collect();
    let d = pairwise_distances(&mats)?;
    let mut buckets: [Vec<f64>; 3] = Default::default();
    let mut k = 0;
    for i in 0..features.len() {
        for j in (i + 1)..features.len() {
            let (a, b) = (features[i].label, features[j].label);
            let slot = if a != b { 2 } else { a as usize };
            buckets[slot].push(d[k]);
            k += 1;
        }
    }
    let intra = [BucketStats::of(&buckets[0]), BucketStats::of(&buckets[1])];
    let inter = BucketStats::of(&buckets[2]);
    Ok(IdentifiabilityReport {
        separated: intra
            .iter()
            .all(|s| inter.mean > s.mean + 1e-12 * (1.0 + s.mean)),
        variance_dominant: intra
            .iter()
            .all(|s| inter.variance > s.variance + 1e-12 * (1.0 + s.variance)),
        intra,
        inter,
    })
}

/// Full distance matrix as CSV rows (no header).
pub fn distance_matrix_csv(mats: &[&SpdMatrix]) -> Result<String> {
    let n = mats.len();
    let d = pairwise_distances(mats)?;
    let mut full = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            full[(i, j)] = d[k];
            full[(j, i)] = d[k];
            k += 1;
        }
    }
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| full[(i, j)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}
